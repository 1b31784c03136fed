#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "semignn/error.hpp"

namespace semignn {

// Scores are predicted fraud-class probabilities, labels are 0/1.
struct ScoredSet {
  std::vector<std::pair<double, int>> items;

  void add(double score, int label) { items.emplace_back(score, label); }
  std::size_t size() const { return items.size(); }

  std::size_t positives() const {
    std::size_t p = 0;
    for (const auto& [s, y] : items) p += y == 1;
    return p;
  }

  void validate_two_class() const {
    if (items.empty()) fail(ErrorCode::ValidationError, "empty scored set");
    for (const auto& [s, y] : items)
      if (y != 0 && y != 1) fail(ErrorCode::ValidationError, "labels must be 0/1");
    const std::size_t p = positives();
    if (p == 0 || p == items.size()) fail(ErrorCode::SingleClass, "metric needs both classes present");
  }
};

// Mann-Whitney AUC with ties counted one half, via average ranks. Exactly
// equal to brute-force pairwise counting: rank sums stay on the half-integer
// grid, so no rounding enters before the final division.
inline double auc(const ScoredSet& s) {
  s.validate_two_class();
  const std::size_t n = s.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s.items[a].first < s.items[b].first; });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && s.items[order[j]].first == s.items[order[i]].first) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (std::size_t t = i; t < j; ++t)
      if (s.items[order[t]].second == 1) rank_sum_pos += avg_rank;
    i = j;
  }
  const double p = static_cast<double>(s.positives());
  const double neg = static_cast<double>(n) - p;
  return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * neg);
}

// Kolmogorov-Smirnov statistic: max over thresholds t of |TPR(t) - FPR(t)|
// with prediction = (score >= t), evaluated at every distinct score and at
// +/- infinity (both of which give zero gap). The gap is maximized on the
// integer numerator |tp*N - fp*P| and divided once at the end, which keeps
// the result exactly equal to an equivalent CDF-distance computation.
inline double ks(const ScoredSet& s) {
  s.validate_two_class();
  const std::size_t n = s.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s.items[a].first > s.items[b].first; });
  const std::int64_t p = static_cast<std::int64_t>(s.positives());
  const std::int64_t neg = static_cast<std::int64_t>(n) - p;
  std::int64_t best = 0;
  std::int64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && s.items[order[j]].first == s.items[order[i]].first) ++j;
    for (std::size_t t = i; t < j; ++t) (s.items[order[t]].second == 1 ? tp : fp)++;
    best = std::max(best, std::abs(tp * neg - fp * p));
    i = j;
  }
  return static_cast<double>(best) / static_cast<double>(p * neg);
}

struct Prf1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool no_positive_predictions = false;
};

// Standard precision/recall/F1 at `threshold`; zero positive predictions
// return zeros with the flag set rather than dividing by zero.
inline Prf1 prf1(const ScoredSet& s, double threshold = 0.5) {
  if (s.items.empty()) fail(ErrorCode::ValidationError, "empty scored set");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& [score, y] : s.items) {
    const bool pred = score >= threshold;
    if (pred && y == 1) ++tp;
    if (pred && y == 0) ++fp;
    if (!pred && y == 1) ++fn;
  }
  Prf1 out;
  if (tp + fp == 0) {
    out.no_positive_predictions = true;
    return out;
  }
  out.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  out.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  out.f1 = out.precision + out.recall == 0.0 ? 0.0
                                             : 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

// Positive rate within the ceil(fraction * n) highest-scored items; ties are
// broken by stable input order.
inline double topk_precision(const ScoredSet& s, double fraction) {
  if (s.items.empty()) fail(ErrorCode::ValidationError, "empty scored set");
  if (fraction <= 0.0 || fraction > 1.0) fail(ErrorCode::InvalidConfig, "fraction must be in (0,1]");
  const std::size_t n = s.size();
  // Guard against 0.01 * 200 = 2.0000000000000004 style artifacts.
  std::size_t k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  k = std::max<std::size_t>(1, std::min(n, k));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s.items[a].first > s.items[b].first; });
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) hits += s.items[order[i]].second == 1;
  return static_cast<double>(hits) / static_cast<double>(k);
}

struct EvalReport {
  double auc = 0.0;
  double ks = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double topk = 0.0;
  std::size_t n = 0;
  std::size_t positives = 0;
};

inline EvalReport evaluate(const ScoredSet& s, double threshold = 0.5, double topk_fraction = 0.01) {
  EvalReport rep;
  rep.n = s.size();
  rep.positives = s.positives();
  rep.auc = auc(s);
  rep.ks = ks(s);
  const Prf1 cls = prf1(s, threshold);
  rep.f1 = cls.f1;
  rep.precision = cls.precision;
  rep.recall = cls.recall;
  rep.topk = topk_precision(s, topk_fraction);
  return rep;
}

inline std::string format_report(const EvalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "auc=%.6f ks=%.6f f1=%.6f precision=%.6f recall=%.6f topk=%.6f n=%zu positives=%zu",
                r.auc, r.ks, r.f1, r.precision, r.recall, r.topk, r.n, r.positives);
  return buf;
}

inline void write_report(const EvalReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::MissingArtifact, "cannot write report " + path);
  out << format_report(r) << '\n';
}

}  // namespace semignn
