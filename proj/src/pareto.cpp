#include "countspec/pareto.hpp"

#include <algorithm>
#include <cmath>

namespace countspec {

bool dominates(const ObjVec& a, const ObjVec& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("objective vectors differ in length");
  bool strictly = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strictly = true;
  }
  return strictly;
}

std::vector<int> non_dominated_indices(const std::vector<ObjVec>& points) {
  std::vector<int> out;
  const int n = static_cast<int>(points.size());
  for (int i = 0; i < n; ++i) {
    bool keep = true;
    for (int j = 0; j < n && keep; ++j) {
      if (j == i) continue;
      if (dominates(points[static_cast<std::size_t>(j)], points[static_cast<std::size_t>(i)]))
        keep = false;
      // Equal vectors: only the first occurrence survives.
      if (j < i && points[static_cast<std::size_t>(j)] == points[static_cast<std::size_t>(i)])
        keep = false;
    }
    if (keep) out.push_back(i);
  }
  return out;
}

namespace {

// Sentinel +inf objectives are clamped for distance arithmetic only.
double clamped(double v) {
  const double big = 1e15;
  if (v > big) return big;
  if (v < -big) return -big;
  return v;
}

double distance(const ObjVec& a, const ObjVec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = clamped(a[i]) - clamped(b[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

std::vector<double> spea2_fitness(const std::vector<ObjVec>& points) {
  const int n = static_cast<int>(points.size());
  std::vector<int> strength(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && dominates(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]))
        ++strength[static_cast<std::size_t>(i)];

  std::vector<double> fitness(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double raw = 0.0;
    for (int j = 0; j < n; ++j)
      if (i != j && dominates(points[static_cast<std::size_t>(j)], points[static_cast<std::size_t>(i)]))
        raw += strength[static_cast<std::size_t>(j)];
    fitness[static_cast<std::size_t>(i)] = raw;
  }

  if (n > 1) {
    int k = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    k = std::min(k, n - 1);
    std::vector<double> dist(static_cast<std::size_t>(n - 1));
    for (int i = 0; i < n; ++i) {
      std::size_t m = 0;
      for (int j = 0; j < n; ++j)
        if (j != i)
          dist[m++] = distance(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]);
      std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
      fitness[static_cast<std::size_t>(i)] += 1.0 / (dist[static_cast<std::size_t>(k - 1)] + 2.0);
    }
  } else if (n == 1) {
    fitness[0] = 0.5;  // density with no neighbour: 1 / (0 + 2)
  }
  return fitness;
}

std::vector<int> spea2_order(const std::vector<ObjVec>& points) {
  std::vector<double> fit = spea2_fitness(points);
  std::vector<int> idx(points.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    double fa = fit[static_cast<std::size_t>(a)];
    double fb = fit[static_cast<std::size_t>(b)];
    if (fa != fb) return fa < fb;
    const ObjVec& pa = points[static_cast<std::size_t>(a)];
    const ObjVec& pb = points[static_cast<std::size_t>(b)];
    if (pa != pb) return std::lexicographical_compare(pa.begin(), pa.end(),
                                                      pb.begin(), pb.end());
    return a < b;
  });
  return idx;
}

bool ParetoArchive::insert(ArchiveEntry entry) {
  for (const ArchiveEntry& e : entries_) {
    if (dominates(e.objectives, entry.objectives)) return false;
    if (e.objectives == entry.objectives && e.encoding == entry.encoding)
      return false;  // revisit of an archived point
    if (e.objectives == entry.objectives) return false;  // tie: first stays
  }
  entries_.erase(std::remove_if(entries_.begin(), entries_.end(),
                                [&](const ArchiveEntry& e) {
                                  return dominates(entry.objectives, e.objectives);
                                }),
                 entries_.end());
  entries_.push_back(std::move(entry));
  return true;
}

double ParetoArchive::best(std::size_t j) const {
  double b = std::numeric_limits<double>::infinity();
  for (const auto& e : entries_)
    if (e.objectives[j] < b) b = e.objectives[j];
  return b;
}

}  // namespace countspec
