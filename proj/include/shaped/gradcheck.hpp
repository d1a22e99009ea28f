// Central-difference verification of the reverse pass.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "shaped/rng.hpp"
#include "shaped/tensor.hpp"

namespace shaped {

struct GradCheckResult {
  // max over sampled coordinates of |analytic-numeric| / max(|analytic|, |numeric|, 1e-8)
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_coord = 0;
  // max over parameter tensors of ||a-n|| / max(||a||, ||n||, 1e-8) over the
  // sampled coordinates; robust to difference-quotient rounding noise on
  // near-zero coordinates
  double max_group_rel_err = 0.0;
  std::string worst_group;
  std::size_t checked = 0;
};

// Rebuilds the loss through `loss_builder` (which must read the params at
// build time) twice per sampled coordinate and compares the central
// difference against the analytic gradient. sample_cap = 0 checks every
// coordinate of every listed parameter.
inline GradCheckResult grad_check(const std::function<Var(Graph&)>& loss_builder,
                                  std::span<Param* const> params, double eps,
                                  std::size_t sample_cap = 0, std::uint64_t seed = 0,
                                  const std::function<void()>& after_backward = {}) {
  if (!(eps > 0.0 && eps <= 1e-3)) throw std::invalid_argument("grad_check: eps must be in (0, 1e-3]");

  auto eval = [&]() {
    Graph g;
    Var loss = loss_builder(g);
    double v = g.scalar(loss);
    if (!std::isfinite(v)) throw std::runtime_error("grad_check: non-finite loss");
    return v;
  };

  for (Param* p : params) p->zero_grad();
  {
    Graph g;
    Var loss = loss_builder(g);
    if (!std::isfinite(g.scalar(loss))) throw std::runtime_error("grad_check: non-finite loss");
    g.backward(loss);
  }
  if (after_backward) after_backward();

  Rng rng(seed);
  GradCheckResult res;
  for (Param* p : params) {
    std::vector<std::size_t> coords;
    const std::size_t n = p->value.size();
    if (sample_cap == 0 || n <= sample_cap) {
      coords.resize(n);
      for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    } else {
      for (std::size_t k = 0; k < sample_cap; ++k) coords.push_back(rng.below(n));
    }
    double diff_sq = 0.0, a_sq = 0.0, n_sq = 0.0;
    for (std::size_t c : coords) {
      const double saved = p->value.v[c];
      p->value.v[c] = saved + eps;
      double up;
      try {
        up = eval();
      } catch (const std::runtime_error&) {
        p->value.v[c] = saved;
        throw std::runtime_error("grad_check: non-finite loss perturbing " + p->name + "[" + std::to_string(c) + "]");
      }
      p->value.v[c] = saved - eps;
      double down;
      try {
        down = eval();
      } catch (const std::runtime_error&) {
        p->value.v[c] = saved;
        throw std::runtime_error("grad_check: non-finite loss perturbing " + p->name + "[" + std::to_string(c) + "]");
      }
      p->value.v[c] = saved;

      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p->grad[c];
      const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
      const double rel = std::fabs(analytic - numeric) / denom;
      ++res.checked;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_param = p->name;
        res.worst_coord = c;
      }
      diff_sq += (analytic - numeric) * (analytic - numeric);
      a_sq += analytic * analytic;
      n_sq += numeric * numeric;
    }
    if (!coords.empty()) {
      const double group = std::sqrt(diff_sq) / std::max({std::sqrt(a_sq), std::sqrt(n_sq), 1e-8});
      if (group > res.max_group_rel_err) {
        res.max_group_rel_err = group;
        res.worst_group = p->name;
      }
    }
  }
  return res;
}

}  // namespace shaped
