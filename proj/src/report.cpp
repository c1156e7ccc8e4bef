#include "countspec/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace countspec {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

constexpr const char* kDash = "—";

std::string grid_line(const std::vector<std::size_t>& widths, char fill) {
  std::string out = "+";
  for (std::size_t w : widths) {
    out.append(w + 2, fill);
    out += '+';
  }
  return out;
}

std::string grid_row(const std::vector<std::size_t>& widths,
                     const std::vector<std::string>& cells) {
  std::string out = "|";
  for (std::size_t c = 0; c < cells.size(); ++c) {
    out += ' ';
    out += cells[c];
    out.append(widths[c] - cells[c].size() + 1, ' ');
    out += '|';
  }
  return out;
}

}  // namespace

std::string render_fit_table(const FitResult& fit, double bic) {
  std::ostringstream os;
  const std::string rule(80, '-');
  os << rule << '\n';
  os << "Log-Likelihood: " << fmt("%.12g", fit.loglik) << '\n';
  os << rule << '\n';
  os << "bic: " << fmt("%.2f", bic) << '\n';
  os << rule << '\n';

  std::vector<std::string> header = {"Effect", "tau", "Coeff", "Std. Err",
                                     "z-values", "Prob |z|>Z"};
  std::vector<std::vector<std::string>> rows;
  for (const CoefRow& r : fit.rows) {
    std::vector<std::string> cells(6);
    cells[0] = r.effect;
    cells[1] = r.tau;
    cells[2] = fmt("%.4f", r.estimate);
    cells[3] = r.std_err ? fmt("%.2f", *r.std_err) : kDash;
    cells[4] = r.z ? fmt("%.2f", *r.z) : kDash;
    cells[5] = r.p ? fmt("%.2f", *r.p) + r.stars : kDash;
    rows.push_back(std::move(cells));
  }

  std::vector<std::size_t> widths(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) widths[c] = header[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c)
      widths[c] = std::max(widths[c], row[c].size());

  os << grid_line(widths, '-') << '\n';
  os << grid_row(widths, header) << '\n';
  os << grid_line(widths, '=') << '\n';
  for (const auto& row : rows) {
    os << grid_row(widths, row) << '\n';
    os << grid_line(widths, '-') << '\n';
  }
  if (!fit.converged) os << "warning: estimation did not converge (" << fit.message << ")\n";
  return os.str();
}

void write_archive_csv(const std::string& path,
                       const std::vector<ArchiveEntry>& entries,
                       const std::vector<std::string>& objective_names) {
  std::ofstream out(path);
  out << "spec";
  for (const auto& n : objective_names) out << ',' << n;
  out << ",loglik,converged\n";
  for (const ArchiveEntry& e : entries) {
    out << e.encoding;
    for (double v : e.objectives) out << ',' << fmt("%.6f", v);
    out << ',' << fmt("%.6f", e.loglik) << ',' << (e.converged ? 1 : 0) << '\n';
  }
}

void write_pareto_plot(const std::string& path,
                       const std::vector<ArchiveEntry>& entries,
                       const std::vector<std::string>& objective_names) {
  std::ofstream out(path);
  for (std::size_t j = 0; j < objective_names.size(); ++j) {
    if (j) out << ',';
    out << objective_names[j];
  }
  out << '\n';
  for (const ArchiveEntry& e : entries) {
    for (std::size_t j = 0; j < e.objectives.size(); ++j) {
      if (j) out << ',';
      out << fmt("%.6f", e.objectives[j]);
    }
    out << '\n';
  }
}

void write_pareto_svg(const std::string& path,
                      const std::vector<ArchiveEntry>& entries,
                      const std::vector<std::string>& objective_names) {
  const double W = 480, H = 360, m = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& e : entries) {
    if (e.objectives.empty() || !std::isfinite(e.objectives[0])) continue;
    double x = e.objectives[0];
    double y = e.objectives.size() > 1 && std::isfinite(e.objectives[1])
                   ? e.objectives[1]
                   : 0.0;
    xmin = std::min(xmin, x); xmax = std::max(xmax, x);
    ymin = std::min(ymin, y); ymax = std::max(ymax, y);
  }
  if (xmin > xmax) { xmin = 0; xmax = 1; }
  if (ymin > ymax) { ymin = 0; ymax = 1; }
  if (xmax == xmin) { xmax += 1; xmin -= 1; }
  if (ymax == ymin) { ymax += 1; ymin -= 1; }

  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
      << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << m << "\" y1=\"" << H - m << "\" x2=\"" << W - m
      << "\" y2=\"" << H - m << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m << "\" y2=\""
      << H - m << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\" font-size=\"12\">" << objective_names[0]
      << "</text>\n";
  if (objective_names.size() > 1)
    out << "<text x=\"14\" y=\"" << H / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
        << H / 2 << ")\">" << objective_names[1] << "</text>\n";
  for (const auto& e : entries) {
    if (e.objectives.empty() || !std::isfinite(e.objectives[0])) continue;
    double xv = e.objectives[0];
    double yv = e.objectives.size() > 1 && std::isfinite(e.objectives[1])
                    ? e.objectives[1]
                    : 0.0;
    double px = m + (xv - xmin) / (xmax - xmin) * (W - 2 * m);
    double py = H - m - (yv - ymin) / (ymax - ymin) * (H - 2 * m);
    out << "<circle cx=\"" << fmt("%.2f", px) << "\" cy=\"" << fmt("%.2f", py)
        << "\" r=\"4\" fill=\"steelblue\"/>\n";
  }
  out << "</svg>\n";
}

std::string format_elapsed(double seconds) {
  long long total_us = static_cast<long long>(seconds * 1e6 + 0.5);
  long long us = total_us % 1000000;
  long long total_s = total_us / 1000000;
  long long s = total_s % 60;
  long long min = (total_s / 60) % 60;
  long long h = total_s / 3600;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%lld:%02lld:%02lld.%06lld", h, min, s, us);
  return buf;
}

}  // namespace countspec
