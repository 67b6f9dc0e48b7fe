#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "moesim/errors.hpp"
#include "moesim/gating.hpp"
#include "moesim/model_config.hpp"

namespace moesim {

struct CostDerivation {
  std::string geometry_id;
  std::string hardware_id;
  std::string workload_id;
};

// The scheduler's inputs: per-expert compute times and the uniform load
// time. alphas[i] scales linearly with token_counts[i]; beta is one value
// for the whole layer because every expert has the same parameter size.
struct CostVector {
  std::vector<double> alphas;  // seconds, one per expert
  double beta = 0.0;           // seconds
  CostDerivation derivation;

  int size() const { return static_cast<int>(alphas.size()); }
  double total_alpha() const {
    return std::accumulate(alphas.begin(), alphas.end(), 0.0);
  }
};

inline void validate(const CostVector& c) {
  if (c.alphas.empty()) throw ConfigError("costs: need at least one expert");
  if (!(c.beta > 0.0)) throw ConfigError("costs: beta must be > 0");
  for (double a : c.alphas) {
    if (!(a >= 0.0)) throw ConfigError("costs: alphas must be >= 0");
  }
}

// alpha_i = FLOPs(tokens_i) / peak_flops; beta = expert bytes / bandwidth.
// Both are idealised ratios; see with_event_overhead for sensitivity runs.
inline CostVector compute_costs(const ExpertWorkload& workload,
                                const ModelGeometry& geometry,
                                const HardwareProfile& hw) {
  if (!(hw.peak_flops > 0.0)) throw ConfigError("costs: peak_flops must be > 0");
  if (!(hw.h2d_bandwidth > 0.0)) throw ConfigError("costs: h2d_bandwidth must be > 0");
  if (workload.token_counts.size() !=
      static_cast<std::size_t>(geometry.n_experts_per_layer)) {
    throw ConfigError("costs: workload has " +
                      std::to_string(workload.token_counts.size()) +
                      " experts, geometry says " +
                      std::to_string(geometry.n_experts_per_layer));
  }
  CostVector c;
  c.alphas.reserve(workload.token_counts.size());
  for (std::uint64_t n : workload.token_counts) {
    c.alphas.push_back(static_cast<double>(expert_flops(geometry, n)) / hw.peak_flops);
  }
  c.beta = static_cast<double>(expert_param_bytes(geometry)) / hw.h2d_bandwidth;
  return c;
}

// How many experts fit in device memory next to everything else.
inline int resident_capacity(const ModelGeometry& geometry, const HardwareProfile& hw) {
  if (hw.device_memory <= hw.reserved_memory) {
    throw ConfigError("capacity: device_memory must exceed reserved_memory");
  }
  const std::uint64_t free_bytes = hw.device_memory - hw.reserved_memory;
  const std::uint64_t per_expert = expert_param_bytes(geometry);
  const std::uint64_t k = free_bytes / per_expert;
  if (k < 1) {
    throw CapacityError("expert does not fit in device memory: needs " +
                        std::to_string(per_expert) + " bytes, free " +
                        std::to_string(free_bytes));
  }
  return static_cast<int>(k);
}

// An explicit K never exceeds what the capacity formula allows; the clamp is
// reported through the warning out-param.
inline int clamp_explicit_capacity(int explicit_k, int capacity,
                                   std::vector<std::string>& warnings) {
  if (explicit_k < 1) throw CapacityError("explicit K must be >= 1");
  if (explicit_k > capacity) {
    warnings.push_back("K clamped from " + std::to_string(explicit_k) + " to capacity " +
                       std::to_string(capacity));
    return capacity;
  }
  return explicit_k;
}

// Fixed overhead added to every load and compute event (kernel launch, copy
// setup). Default pipelines use 0; nonzero values probe how far from the
// idealised model a schedule stays gapless.
inline CostVector with_event_overhead(CostVector c, double eps) {
  if (eps < 0.0) throw ConfigError("event_overhead must be >= 0");
  for (double& a : c.alphas) a += eps;
  c.beta += eps;
  return c;
}

}  // namespace moesim
