#include "countspec/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace countspec {

std::string to_string(ColumnRole role) {
  switch (role) {
    case ColumnRole::Response: return "response";
    case ColumnRole::Offset: return "offset";
    case ColumnRole::Group: return "group";
    case ColumnRole::Panel: return "panel";
    case ColumnRole::Candidate: return "candidate";
    case ColumnRole::Excluded: return "excluded";
  }
  return "?";
}

std::string to_string(Transform t) {
  switch (t) {
    case Transform::No: return "no";
    case Transform::Sqrt: return "sqrt";
    case Transform::Log: return "log";
    case Transform::Arcsinh: return "arcsinh";
    case Transform::Exp: return "exp";
  }
  return "?";
}

Transform transform_from_string(const std::string& s) {
  if (s == "no" || s == "nil") return Transform::No;
  if (s == "sqrt") return Transform::Sqrt;
  if (s == "log") return Transform::Log;
  if (s == "arcsinh") return Transform::Arcsinh;
  if (s == "exp") return Transform::Exp;
  throw std::invalid_argument("unknown transformation '" + s + "'");
}

namespace {

// Splits one CSV record, honouring quoted fields with embedded commas and
// doubled quotes. Returns false on an unterminated quote.
bool split_csv_record(const std::string& line, std::vector<std::string>& out) {
  out.clear();
  std::string field;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      out.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  out.push_back(field);
  return !in_quotes;
}

bool parse_double(const std::string& s, double& value) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end != begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
  if (begin == end) return false;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const Vec& Dataset::y() const {
  if (response_col < 0) throw std::logic_error("response role not assigned");
  return columns[static_cast<std::size_t>(response_col)].values;
}

Vec Dataset::offset_or_zero() const {
  if (offset_col < 0) return Vec::Zero(n_obs());
  return columns[static_cast<std::size_t>(offset_col)].values;
}

std::vector<int> Dataset::candidate_columns() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].role == ColumnRole::Candidate) out.push_back(static_cast<int>(i));
  return out;
}

int Dataset::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == name) return static_cast<int>(i);
  return -1;
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw data_error("file '" + path + "' is empty");

  std::vector<std::string> header;
  if (!split_csv_record(line, header))
    throw data_error("unterminated quote in header of '" + path + "'");
  for (auto& h : header) h = trim(h);

  const std::size_t ncol = header.size();
  std::vector<std::vector<std::string>> cells(ncol);

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() && in.eof()) break;
    ++row;
    std::vector<std::string> fields;
    if (!split_csv_record(line, fields))
      throw data_error("unterminated quote at data row " + std::to_string(row));
    if (fields.size() != ncol)
      throw data_error("ragged row " + std::to_string(row) + ": has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(ncol));
    for (std::size_t c = 0; c < ncol; ++c) cells[c].push_back(fields[c]);
  }
  const std::size_t nrow = row;
  if (nrow == 0) throw data_error("file '" + path + "' has no data rows");

  Dataset ds;
  ds.columns.resize(ncol);
  for (std::size_t c = 0; c < ncol; ++c) {
    Column& col = ds.columns[c];
    col.name = header[c];

    // Missing values are rejected with the cell named; imputation is the
    // analyst's job.
    for (std::size_t r = 0; r < nrow; ++r) {
      if (trim(cells[c][r]).empty())
        throw data_error("missing value at row " + std::to_string(r + 1) +
                         ", column " + col.name);
    }

    double first;
    if (parse_double(cells[c][0], first)) {
      col.values.resize(static_cast<Index>(nrow));
      for (std::size_t r = 0; r < nrow; ++r) {
        double v;
        if (!parse_double(cells[c][r], v))
          throw data_error("parse error at row " + std::to_string(r + 1) +
                           ", column " + col.name + ": '" + cells[c][r] +
                           "' is not numeric");
        col.values[static_cast<Index>(r)] = v;
      }
    } else {
      col.labels.reserve(nrow);
      for (std::size_t r = 0; r < nrow; ++r) col.labels.push_back(trim(cells[c][r]));
    }

    if (col.name == "Offset") {
      if (col.categorical())
        throw data_error("column 'Offset' must be numeric");
      col.role = ColumnRole::Offset;
      ds.offset_col = static_cast<int>(c);
    }
  }
  return ds;
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write file '" + path + "'");
  for (std::size_t c = 0; c < ds.columns.size(); ++c) {
    if (c) out << ',';
    out << ds.columns[c].name;
  }
  out << '\n';
  const Index n = ds.n_obs();
  char buf[40];
  for (Index r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < ds.columns.size(); ++c) {
      if (c) out << ',';
      const Column& col = ds.columns[c];
      if (col.categorical()) {
        out << col.labels[static_cast<std::size_t>(r)];
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", col.values[r]);
        out << buf;
      }
    }
    out << '\n';
  }
}

namespace {

// Dense ids in order of first appearance.
void densify(const Column& col, std::vector<int>& ids, std::vector<std::string>& labels) {
  const Index n = col.categorical() ? static_cast<Index>(col.labels.size())
                                    : col.values.size();
  ids.clear();
  labels.clear();
  std::map<std::string, int> seen;
  char buf[40];
  for (Index r = 0; r < n; ++r) {
    std::string key;
    if (col.categorical()) {
      key = col.labels[static_cast<std::size_t>(r)];
    } else {
      std::snprintf(buf, sizeof buf, "%.17g", col.values[r]);
      key = buf;
    }
    auto it = seen.find(key);
    if (it == seen.end()) {
      it = seen.emplace(key, static_cast<int>(labels.size())).first;
      labels.push_back(key);
    }
    ids.push_back(it->second);
  }
}

}  // namespace

void assign_roles(Dataset& ds, const ModelTerms& terms) {
  std::set<std::string> used;
  auto resolve = [&](const std::string& name, const char* what) {
    int idx = ds.column_index(name);
    if (idx < 0)
      throw data_error(std::string(what) + " column not found: '" + name + "'");
    if (!used.insert(name).second)
      throw data_error("column '" + name + "' assigned to more than one role");
    return idx;
  };

  int yc = resolve(terms.y, "response");
  const Column& ycol = ds.columns[static_cast<std::size_t>(yc)];
  if (ycol.categorical())
    throw data_error("response column '" + terms.y + "' is not numeric");
  for (Index i = 0; i < ycol.values.size(); ++i) {
    double v = ycol.values[i];
    if (v < 0 || v != std::floor(v))
      throw data_error("response must be a non-negative integer; row " +
                       std::to_string(i + 1) + " has value " + std::to_string(v));
  }
  ds.response_col = yc;
  ds.columns[static_cast<std::size_t>(yc)].role = ColumnRole::Response;

  if (terms.offset) {
    int oc = resolve(*terms.offset, "offset");
    if (ds.columns[static_cast<std::size_t>(oc)].categorical())
      throw data_error("offset column '" + *terms.offset + "' is not numeric");
    ds.offset_col = oc;
    ds.columns[static_cast<std::size_t>(oc)].role = ColumnRole::Offset;
  } else if (ds.offset_col >= 0) {
    used.insert(ds.columns[static_cast<std::size_t>(ds.offset_col)].name);
  }

  if (terms.group) {
    int gc = resolve(*terms.group, "group");
    ds.group_col = gc;
    ds.columns[static_cast<std::size_t>(gc)].role = ColumnRole::Group;
    densify(ds.columns[static_cast<std::size_t>(gc)], ds.group_ids, ds.group_labels);
  }
  if (terms.panels) {
    int pc = resolve(*terms.panels, "panel");
    ds.panel_col = pc;
    ds.columns[static_cast<std::size_t>(pc)].role = ColumnRole::Panel;
    densify(ds.columns[static_cast<std::size_t>(pc)], ds.panel_ids, ds.panel_labels);
  }

  // Everything else becomes a candidate factor and must be numeric.
  std::set<std::string> names;
  for (std::size_t c = 0; c < ds.columns.size(); ++c) {
    Column& col = ds.columns[c];
    if (col.role != ColumnRole::Candidate && col.role != ColumnRole::Excluded) continue;
    if (col.categorical())
      throw data_error("candidate column '" + col.name +
                       "' is not numeric; exclude or pre-encode it");
    col.role = ColumnRole::Candidate;
    if (!names.insert(col.name).second)
      throw data_error("duplicate candidate column name '" + col.name + "'");
  }
}

SplitIndices split_indices(const Dataset& ds, const SplitPlan& plan) {
  if (plan.test_fraction < 0.0 || plan.test_fraction >= 1.0)
    throw std::invalid_argument("test_fraction must be in [0, 1)");

  const Index n = ds.n_obs();
  SplitIndices out;

  const std::vector<int>* unit_ids = nullptr;
  int n_units = 0;
  switch (plan.unit) {
    case SplitUnit::Observation:
      n_units = static_cast<int>(n);
      break;
    case SplitUnit::Panel:
      if (!ds.has_panel()) throw data_error("split by panel requires a panel column");
      unit_ids = &ds.panel_ids;
      n_units = ds.n_panels();
      break;
    case SplitUnit::Group:
      if (!ds.has_group()) throw data_error("split by group requires a group column");
      unit_ids = &ds.group_ids;
      n_units = ds.n_groups();
      break;
  }

  std::vector<int> order(static_cast<std::size_t>(n_units));
  for (int i = 0; i < n_units; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(plan.seed);
  rng.shuffle(order);

  auto n_test = static_cast<std::size_t>(
      std::llround(plan.test_fraction * static_cast<double>(n_units)));
  std::vector<char> in_test(static_cast<std::size_t>(n_units), 0);
  for (std::size_t i = 0; i < n_test; ++i) in_test[static_cast<std::size_t>(order[i])] = 1;

  for (Index r = 0; r < n; ++r) {
    int unit = unit_ids ? (*unit_ids)[static_cast<std::size_t>(r)] : static_cast<int>(r);
    if (in_test[static_cast<std::size_t>(unit)])
      out.test.push_back(r);
    else
      out.train.push_back(r);
  }
  return out;
}

Dataset subset(const Dataset& ds, const std::vector<Index>& rows) {
  Dataset out;
  out.columns.resize(ds.columns.size());
  for (std::size_t c = 0; c < ds.columns.size(); ++c) {
    const Column& src = ds.columns[c];
    Column& dst = out.columns[c];
    dst.name = src.name;
    dst.role = src.role;
    if (src.categorical()) {
      dst.labels.reserve(rows.size());
      for (Index r : rows) dst.labels.push_back(src.labels[static_cast<std::size_t>(r)]);
    } else {
      dst.values.resize(static_cast<Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) dst.values[static_cast<Index>(i)] = src.values[rows[i]];
    }
  }
  out.response_col = ds.response_col;
  out.offset_col = ds.offset_col;
  out.group_col = ds.group_col;
  out.panel_col = ds.panel_col;
  out.group_labels = ds.group_labels;  // ids stay valid across subsets
  out.panel_labels = ds.panel_labels;
  if (!ds.group_ids.empty())
    for (Index r : rows) out.group_ids.push_back(ds.group_ids[static_cast<std::size_t>(r)]);
  if (!ds.panel_ids.empty())
    for (Index r : rows) out.panel_ids.push_back(ds.panel_ids[static_cast<std::size_t>(r)]);
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitPlan& plan) {
  SplitIndices idx = split_indices(ds, plan);
  return {subset(ds, idx.train), subset(ds, idx.test)};
}

Vec apply_transformation(const Vec& x, Transform t) {
  switch (t) {
    case Transform::No: return x;
    case Transform::Sqrt: return x.array().sqrt().matrix();
    case Transform::Log: return x.array().log().matrix();
    case Transform::Arcsinh: {
      Vec out(x.size());
      for (Index i = 0; i < x.size(); ++i) out[i] = std::asinh(x[i]);
      return out;
    }
    case Transform::Exp: return x.array().exp().matrix();
  }
  throw std::logic_error("unreachable");
}

bool transformation_feasible(const Vec& x, Transform t) {
  switch (t) {
    case Transform::No:
    case Transform::Arcsinh:
      return x.allFinite();
    case Transform::Sqrt:
      return x.allFinite() && (x.array() >= 0.0).all();
    case Transform::Log:
      return x.allFinite() && (x.array() > 0.0).all();
    case Transform::Exp:
      return x.allFinite() && apply_transformation(x, t).allFinite();
  }
  return false;
}

}  // namespace countspec
