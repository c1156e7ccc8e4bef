#pragma once

#include <string>

#include "countspec/estimator.hpp"
#include "countspec/pareto.hpp"

namespace countspec {

/// Coefficient table in the console style: a Log-Likelihood / bic header
/// followed by an ASCII grid with Effect, tau, Coeff, Std. Err, z-values
/// and Prob |z|>Z columns. Unavailable cells render as an em dash.
std::string render_fit_table(const FitResult& fit, double bic);

/// One CSV row per archive member: encoding, objectives, log-likelihood,
/// convergence flag.
void write_archive_csv(const std::string& path,
                       const std::vector<ArchiveEntry>& entries,
                       const std::vector<std::string>& objective_names);

/// Two-column data file (objective pairs) for plotting the front.
void write_pareto_plot(const std::string& path,
                       const std::vector<ArchiveEntry>& entries,
                       const std::vector<std::string>& objective_names);

/// Small self-contained scatter of the front.
void write_pareto_svg(const std::string& path,
                      const std::vector<ArchiveEntry>& entries,
                      const std::vector<std::string>& objective_names);

/// "H:MM:SS.ffffff", timedelta style.
std::string format_elapsed(double seconds);

}  // namespace countspec
