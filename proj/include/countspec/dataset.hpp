#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "countspec/common.hpp"

namespace countspec {

enum class ColumnRole { Response, Offset, Group, Panel, Candidate, Excluded };

enum class Transform { No, Sqrt, Log, Arcsinh, Exp };

std::string to_string(ColumnRole role);
std::string to_string(Transform t);
Transform transform_from_string(const std::string& s);

/// Raised for unreadable/malformed input files. Maps to CLI exit code 2.
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Column {
  std::string name;
  ColumnRole role = ColumnRole::Candidate;
  Vec values;                        // numeric payload; empty if categorical
  std::vector<std::string> labels;   // raw strings; non-empty iff categorical

  bool categorical() const { return !labels.empty(); }
};

/// Immutable after construction; shared freely across concurrent
/// evaluations. The response is a non-negative integer vector, the offset
/// enters the linear predictor with coefficient fixed at 1, and group/panel
/// columns are mapped to dense integer ids (label tables kept for output).
struct Dataset {
  std::vector<Column> columns;

  int response_col = -1;
  int offset_col = -1;
  int group_col = -1;
  int panel_col = -1;

  std::vector<int> group_ids;               // per-obs dense id, empty if none
  std::vector<int> panel_ids;
  std::vector<std::string> group_labels;    // id -> original label
  std::vector<std::string> panel_labels;

  Index n_obs() const {
    if (columns.empty()) return 0;
    return columns[0].categorical()
               ? static_cast<Index>(columns[0].labels.size())
               : columns[0].values.size();
  }

  bool has_group() const { return group_col >= 0; }
  bool has_panel() const { return panel_col >= 0; }
  bool has_offset() const { return offset_col >= 0; }

  const Vec& y() const;
  /// Offset on the log-mean scale; zeros when no offset column is set.
  Vec offset_or_zero() const;

  std::vector<int> candidate_columns() const;
  int column_index(const std::string& name) const;  // -1 if absent

  int n_groups() const { return static_cast<int>(group_labels.size()); }
  int n_panels() const { return static_cast<int>(panel_labels.size()); }
};

/// Column-name bindings mirroring the `model_terms` config block.
struct ModelTerms {
  std::string y;
  std::optional<std::string> group;
  std::optional<std::string> panels;
  std::optional<std::string> offset;
};

enum class SplitUnit { Observation, Panel, Group };

struct SplitPlan {
  double test_fraction = 0.3;
  std::uint64_t seed = 1;
  SplitUnit unit = SplitUnit::Observation;
};

struct SplitIndices {
  std::vector<Index> train;
  std::vector<Index> test;
};

/// Parse an RFC-4180-style CSV with a header row. Column types are inferred
/// from the first data row; a later value that disagrees is a parse error
/// naming the cell. A column literally named "Offset" is pre-assigned the
/// Offset role.
Dataset load_csv(const std::string& path);

void write_csv(const Dataset& ds, const std::string& path);

/// Set the response/group/panel/offset roles by column name and rebuild the
/// candidate pool. Group/panel labels are mapped to dense ids here.
void assign_roles(Dataset& ds, const ModelTerms& terms);

SplitIndices split_indices(const Dataset& ds, const SplitPlan& plan);
std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitPlan& plan);
Dataset subset(const Dataset& ds, const std::vector<Index>& rows);

Vec apply_transformation(const Vec& x, Transform t);

/// A transformation is feasible for a column iff every transformed value is
/// finite (log needs x > 0, sqrt needs x >= 0, exp must not overflow).
bool transformation_feasible(const Vec& x, Transform t);

}  // namespace countspec
