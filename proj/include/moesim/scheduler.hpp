#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "moesim/cost_model.hpp"
#include "moesim/tolerance.hpp"

namespace moesim {

// Why no feasible order exists: either even the best prefix cannot cover the
// remaining loads, or one expert dominates so much that every order breaks a
// bound somewhere.
enum class Diagnosis { Feasible, TooLittleCompute, Imbalanced };

enum class ScheduleMethod { Greedy, ExactFallback, Naive };

enum class BoundSide { Lower, Upper };

struct ConstraintViolation {
  int position = 0;  // prefix length m at which the band is first broken
  BoundSide bound = BoundSide::Lower;
  double prefix_sum = 0.0;
  double limit = 0.0;
};

struct ConstraintReport {
  bool feasible = false;
  // slack[m] = P_m - m*beta for m = 0..T-1: surplus over the lower bound.
  std::vector<double> slack;
  std::optional<ConstraintViolation> first_violation;
};

struct Schedule {
  std::vector<int> order;  // permutation of 0..T-1
  bool feasible = false;
  std::vector<double> slack;
  std::optional<Diagnosis> diagnosis;  // set when infeasible
  ScheduleMethod method = ScheduleMethod::Greedy;
};

namespace detail {

inline void require_permutation(std::span<const int> order, int T) {
  if (static_cast<int>(order.size()) != T) {
    throw std::invalid_argument("order size " + std::to_string(order.size()) +
                                " != expert count " + std::to_string(T));
  }
  std::vector<bool> seen(T, false);
  for (int e : order) {
    if (e < 0 || e >= T || seen[e]) {
      throw std::invalid_argument("order is not a permutation of 0.." +
                                  std::to_string(T - 1));
    }
    seen[e] = true;
  }
}

}  // namespace detail

// Verifies the two prefix bands for every prefix length m in 0..T-1:
//   m*beta <= P_m <= (m+K)*beta, P_m = sum of the first m scheduled alphas.
// The lower band keeps compute ahead of the load stream; the upper band caps
// how many loaded experts can pile up waiting for compute.
inline ConstraintReport check_constraints(std::span<const int> order,
                                          const CostVector& costs, int K) {
  const int T = costs.size();
  detail::require_permutation(order, T);
  if (K < 1) throw std::invalid_argument("K must be >= 1");

  ConstraintReport r;
  r.feasible = true;
  r.slack.reserve(T);
  double prefix = 0.0;
  for (int m = 0; m < T; ++m) {
    const double lo = m * costs.beta;
    const double hi = (m + K) * costs.beta;
    r.slack.push_back(prefix - lo);
    if (r.feasible && !approx_geq(prefix, lo)) {
      r.feasible = false;
      r.first_violation = ConstraintViolation{m, BoundSide::Lower, prefix, lo};
    }
    if (r.feasible && !approx_leq(prefix, hi)) {
      r.feasible = false;
      r.first_violation = ConstraintViolation{m, BoundSide::Upper, prefix, hi};
    }
    prefix += costs.alphas[order[m]];
  }
  return r;
}

namespace detail {

// Instance-level classification used when no feasible order is known. The
// largest achievable P_{T-1} is the alpha sum minus the smallest alpha; when
// even that misses (T-1)*beta, no order can cover the loads.
inline Diagnosis classify_infeasible(const CostVector& costs) {
  const int T = costs.size();
  const double min_alpha = *std::min_element(costs.alphas.begin(), costs.alphas.end());
  const double best_prefix = costs.total_alpha() - min_alpha;
  const double need = (T - 1) * costs.beta;
  return definitely_lt(best_prefix, need) ? Diagnosis::TooLittleCompute
                                          : Diagnosis::Imbalanced;
}

inline Schedule finish_schedule(std::vector<int> order, const CostVector& costs, int K,
                                ScheduleMethod method, bool set_diagnosis) {
  ConstraintReport chk = check_constraints(order, costs, K);
  Schedule s;
  s.order = std::move(order);
  s.feasible = chk.feasible;
  s.slack = std::move(chk.slack);
  s.method = method;
  if (!s.feasible && set_diagnosis) s.diagnosis = classify_infeasible(costs);
  return s;
}

}  // namespace detail

// Identity order, as a naive baseline. No diagnosis: an infeasible identity
// order says nothing about the instance.
inline Schedule naive_order(const CostVector& costs, int K) {
  std::vector<int> order(costs.size());
  std::iota(order.begin(), order.end(), 0);
  return detail::finish_schedule(std::move(order), costs, K, ScheduleMethod::Naive,
                                 /*set_diagnosis=*/false);
}

// Position-by-position greedy. At position m (prefix length m after the
// pick) it takes the smallest remaining alpha that lands the prefix inside
// [m*beta, (m+K)*beta] — small alphas are spent as soon as they suffice, so
// the large ones stay available for later positions where the lower bound
// has grown. When nothing reaches the lower bound it takes the largest alpha
// still under the upper bound; when everything would breach the upper bound
// it takes the smallest alpha and accepts the violation. Ties break toward
// the lower expert index. The last position is unconstrained (only prefixes
// 0..T-1 are banded).
inline Schedule greedy_order(const CostVector& costs, int K) {
  validate(costs);
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  const int T = costs.size();

  std::vector<int> remaining(T);
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<int> order;
  order.reserve(T);
  double prefix = 0.0;

  for (int m = 1; m < T; ++m) {
    const double lo = m * costs.beta;
    const double hi = (m + K) * costs.beta;
    int best_in_band = -1, best_under_hi = -1, best_smallest = -1;
    for (int e : remaining) {
      const double p = prefix + costs.alphas[e];
      const bool under_hi = approx_leq(p, hi);
      const bool in_band = under_hi && approx_geq(p, lo);
      if (in_band && (best_in_band < 0 || costs.alphas[e] < costs.alphas[best_in_band]))
        best_in_band = e;
      if (under_hi &&
          (best_under_hi < 0 || costs.alphas[e] > costs.alphas[best_under_hi]))
        best_under_hi = e;
      if (best_smallest < 0 || costs.alphas[e] < costs.alphas[best_smallest])
        best_smallest = e;
    }
    const int pick = best_in_band >= 0    ? best_in_band
                     : best_under_hi >= 0 ? best_under_hi
                                          : best_smallest;
    order.push_back(pick);
    prefix += costs.alphas[pick];
    remaining.erase(std::find(remaining.begin(), remaining.end(), pick));
  }
  order.push_back(remaining.front());  // T >= 1; final prefix is unchecked
  return detail::finish_schedule(std::move(order), costs, K, ScheduleMethod::Greedy,
                                 /*set_diagnosis=*/true);
}

// Branch-and-bound over permutations with prefix-band pruning. Feasibility
// of a partial order depends only on the set of used experts, so subsets
// proven dead are memoised; worst case O(2^T * T) instead of O(T!).
// Children are explored in ascending expert index, which makes the first
// complete order found the lexicographically smallest feasible one.
inline Schedule exact_order(const CostVector& costs, int K, int max_T = 12) {
  validate(costs);
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  const int T = costs.size();
  if (max_T > 24) max_T = 24;  // mask table size guard
  if (T > max_T) {
    throw std::invalid_argument("exact_order: T = " + std::to_string(T) +
                                " exceeds max_T = " + std::to_string(max_T));
  }

  std::vector<char> dead(std::size_t{1} << T, 0);
  std::vector<int> order;
  order.reserve(T);

  // DFS; returns true when a feasible completion was appended to `order`.
  auto dfs = [&](auto&& self, std::uint32_t mask, int m, double prefix) -> bool {
    if (m == T) return true;
    if (dead[mask]) return false;
    // Band for the prefix after placing position m+1 (prefix length m+1),
    // checked only while m+1 <= T-1.
    for (int e = 0; e < T; ++e) {
      if (mask & (1u << e)) continue;
      const double p = prefix + costs.alphas[e];
      if (m + 1 <= T - 1) {
        const double lo = (m + 1) * costs.beta;
        const double hi = (m + 1 + K) * costs.beta;
        if (!approx_geq(p, lo) || !approx_leq(p, hi)) continue;
      }
      order.push_back(e);
      if (self(self, mask | (1u << e), m + 1, p)) return true;
      order.pop_back();
    }
    dead[mask] = 1;
    return false;
  };

  if (dfs(dfs, 0, 0, 0.0)) {
    return detail::finish_schedule(std::move(order), costs, K,
                                   ScheduleMethod::ExactFallback,
                                   /*set_diagnosis=*/false);
  }
  Schedule s;
  s.order.resize(T);
  std::iota(s.order.begin(), s.order.end(), 0);
  ConstraintReport chk = check_constraints(s.order, costs, K);
  s.feasible = false;
  s.slack = std::move(chk.slack);
  s.method = ScheduleMethod::ExactFallback;
  s.diagnosis = detail::classify_infeasible(costs);
  return s;
}

// Greedy first; on greedy failure and T <= exact_fallback_max_T, the exact
// search decides. A feasible exact result where greedy failed is a
// completeness counterexample for the greedy rule (method tells callers
// which path produced the order).
inline Schedule auto_order(const CostVector& costs, int K,
                           int exact_fallback_max_T = 12) {
  Schedule g = greedy_order(costs, K);
  if (g.feasible || costs.size() > exact_fallback_max_T) return g;
  return exact_order(costs, K, exact_fallback_max_T);
}

// Classifies an instance. Feasible when some order passes the bands (greedy,
// else the exact search for small T). Otherwise: too little total compute,
// or an extreme imbalance no order can fix.
inline Diagnosis diagnose(const CostVector& costs, int K,
                          int exact_fallback_max_T = 12) {
  Schedule s = auto_order(costs, K, exact_fallback_max_T);
  if (s.feasible) return Diagnosis::Feasible;
  return detail::classify_infeasible(costs);
}

inline std::string to_string(Diagnosis d) {
  switch (d) {
    case Diagnosis::Feasible: return "feasible";
    case Diagnosis::TooLittleCompute: return "too_little_compute";
    case Diagnosis::Imbalanced: return "imbalanced";
  }
  return "?";
}

inline std::string to_string(ScheduleMethod m) {
  switch (m) {
    case ScheduleMethod::Greedy: return "greedy";
    case ScheduleMethod::ExactFallback: return "exact_fallback";
    case ScheduleMethod::Naive: return "naive";
  }
  return "?";
}

}  // namespace moesim
