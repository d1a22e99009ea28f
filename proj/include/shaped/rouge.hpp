// ROUGE-1/2/L with clipped n-gram counts and sentence-level LCS, plus a
// seeded bootstrap for interval half-widths.
#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "shaped/rng.hpp"

namespace shaped {

struct RougeComponent {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline RougeComponent make_prf(double overlap, double cand_total, double ref_total) {
  RougeComponent c;
  c.precision = cand_total > 0 ? overlap / cand_total : 0.0;
  c.recall = ref_total > 0 ? overlap / ref_total : 0.0;
  c.f1 = (c.precision + c.recall) > 0 ? 2.0 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
  return c;
}

inline RougeComponent rouge_n(const std::vector<std::string>& candidate,
                              const std::vector<std::string>& reference, std::size_t n) {
  if (n < 1) throw std::invalid_argument("rouge_n: n must be at least 1");
  auto count = [n](const std::vector<std::string>& toks) {
    std::map<std::vector<std::string>, int> m;
    if (toks.size() >= n)
      for (std::size_t i = 0; i + n <= toks.size(); ++i)
        ++m[std::vector<std::string>(toks.begin() + i, toks.begin() + i + n)];
    return m;
  };
  auto cand = count(candidate);
  auto ref = count(reference);
  double overlap = 0, cand_total = 0, ref_total = 0;
  for (const auto& [k, v] : cand) cand_total += v;
  for (const auto& [k, v] : ref) {
    ref_total += v;
    auto it = cand.find(k);
    if (it != cand.end()) overlap += std::min(v, it->second);  // clipped
  }
  return make_prf(overlap, cand_total, ref_total);
}

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline RougeComponent rouge_l(const std::vector<std::string>& candidate,
                              const std::vector<std::string>& reference) {
  const double l = static_cast<double>(lcs_length(candidate, reference));
  return make_prf(l, static_cast<double>(candidate.size()), static_cast<double>(reference.size()));
}

struct RougeTriple {
  RougeComponent r1, r2, rl;
};

inline RougeTriple rouge_all(const std::vector<std::string>& candidate,
                             const std::vector<std::string>& reference) {
  return RougeTriple{rouge_n(candidate, reference, 1), rouge_n(candidate, reference, 2),
                     rouge_l(candidate, reference)};
}

// Percentile-bootstrap half-width of the mean (central 95%).
inline double bootstrap_half_width(const std::vector<double>& values, std::size_t resamples,
                                   std::uint64_t seed) {
  if (values.size() < 2 || resamples == 0) return 0.0;
  Rng rng(seed);
  std::vector<double> means(resamples);
  for (std::size_t r = 0; r < resamples; ++r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) acc += values[rng.below(values.size())];
    means[r] = acc / static_cast<double>(values.size());
  }
  std::sort(means.begin(), means.end());
  const std::size_t lo = static_cast<std::size_t>(0.025 * static_cast<double>(resamples - 1));
  const std::size_t hi = static_cast<std::size_t>(0.975 * static_cast<double>(resamples - 1));
  return (means[hi] - means[lo]) / 2.0;
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace shaped
