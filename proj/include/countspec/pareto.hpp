#pragma once

#include <string>
#include <vector>

#include "countspec/spec_space.hpp"

namespace countspec {

/// Objective vector under minimization; one or two components. +inf entries
/// are the estimation-failure sentinel.
using ObjVec = std::vector<double>;

/// a dominates b: no worse in every component, strictly better in one.
bool dominates(const ObjVec& a, const ObjVec& b);

/// Indices of the non-dominated members, preserving input order; exact ties
/// keep the first occurrence.
std::vector<int> non_dominated_indices(const std::vector<ObjVec>& points);

/// SPEA2 fitness: raw fitness (sum of the strengths of all dominators) plus
/// the density term 1/(sigma_k + 2), sigma_k the distance to the k-th
/// nearest neighbour with k = ceil(sqrt(N)). Lower is better.
std::vector<double> spea2_fitness(const std::vector<ObjVec>& points);

/// Permutation sorting by SPEA2 fitness ascending; ties broken by the
/// objective vector lexicographically, then by index.
std::vector<int> spea2_order(const std::vector<ObjVec>& points);

struct ArchiveEntry {
  ModelSpecification spec;
  std::string encoding;
  ObjVec objectives;
  double loglik = -std::numeric_limits<double>::infinity();
  bool converged = false;
};

/// Mutually non-dominated set of evaluated specifications. Inserting a
/// dominated candidate is a no-op; a dominating candidate evicts everything
/// it dominates. Duplicates (same encoding) are kept once.
class ParetoArchive {
 public:
  /// Returns true when the candidate joined the archive.
  bool insert(ArchiveEntry entry);

  const std::vector<ArchiveEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Smallest value of objective `j` in the archive (+inf if empty).
  double best(std::size_t j) const;

 private:
  std::vector<ArchiveEntry> entries_;
};

}  // namespace countspec
