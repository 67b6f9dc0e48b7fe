#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "moesim/scheduler.hpp"
#include "moesim/simulator.hpp"
#include "moesim/tolerance.hpp"

namespace moesim {

// Ground-truth feasibility by trying every permutation through
// check_constraints. O(T!) — guarded, and meant for audits and tests, which
// is why it ships in the library rather than test code. It never looks at
// how the greedy rule chose; the greedy verdict is recorded purely for the
// mismatch comparison.
struct OracleResult {
  std::string instance_digest;
  bool oracle_feasible = false;
  std::optional<std::vector<int>> witness_order;  // lexicographically smallest
  bool greedy_feasible = false;
  bool mismatch = false;
};

inline std::string instance_digest(const CostVector& costs, int K) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ull;
    }
  };
  mix(static_cast<std::uint64_t>(costs.size()));
  mix(static_cast<std::uint64_t>(K));
  mix(std::bit_cast<std::uint64_t>(costs.beta));
  for (double a : costs.alphas) mix(std::bit_cast<std::uint64_t>(a));
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

inline OracleResult enumerate_feasibility(const CostVector& costs, int K,
                                          int max_T = 9) {
  validate(costs);
  const int T = costs.size();
  if (T > max_T) {
    throw std::invalid_argument("enumerate_feasibility: T = " + std::to_string(T) +
                                " exceeds max_T = " + std::to_string(max_T));
  }
  OracleResult r;
  r.instance_digest = instance_digest(costs, K);
  std::vector<int> perm(T);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    if (check_constraints(perm, costs, K).feasible) {
      r.oracle_feasible = true;
      r.witness_order = perm;  // first in lexicographic enumeration
      break;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  r.greedy_feasible = greedy_order(costs, K).feasible;
  r.mismatch = r.oracle_feasible != r.greedy_feasible;
  return r;
}

enum class ViolationKind {
  StreamOverlap,
  Causality,          // compute starts before its load completes
  ResidencyExceeded,  // more than K loaded-and-not-evicted experts in a layer
  DurationMismatch,   // event length != alpha or beta
  MakespanMismatch,
  MalformedEvent,
};

struct Violation {
  ViolationKind kind = ViolationKind::MalformedEvent;
  int layer_id = -1;
  int expert_id = -1;
  std::string detail;
};

inline std::string to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::StreamOverlap: return "stream_overlap";
    case ViolationKind::Causality: return "causality";
    case ViolationKind::ResidencyExceeded: return "residency_exceeded";
    case ViolationKind::DurationMismatch: return "duration_mismatch";
    case ViolationKind::MakespanMismatch: return "makespan_mismatch";
    case ViolationKind::MalformedEvent: return "malformed_event";
  }
  return "?";
}

// Re-verifies a timeline against the cost model alone, without trusting any
// simulator bookkeeping: per-stream exclusivity, load-before-compute per
// expert, per-layer residency within K (an expert is resident from load end
// to compute end, evictions before arrivals at ties), event durations equal
// to beta / alpha, and — when a reported makespan is supplied — that it
// equals max(end) exactly. Violations are data, not errors.
inline std::vector<Violation> replay_check(
    std::span<const TimelineEvent> events, std::span<const CostVector> layer_costs,
    int K, std::optional<double> reported_makespan = std::nullopt) {
  std::vector<Violation> out;
  auto add = [&out](ViolationKind k, int layer, int expert, std::string detail) {
    out.push_back({k, layer, expert, std::move(detail)});
  };

  const int n_layers = static_cast<int>(layer_costs.size());
  double max_end = 0.0;

  // Malformed events and durations.
  for (const TimelineEvent& ev : events) {
    max_end = std::max(max_end, ev.end);
    if (ev.end < ev.start) {
      add(ViolationKind::MalformedEvent, ev.layer_id, ev.expert_id, "end < start");
      continue;
    }
    if (ev.layer_id < 0 || ev.layer_id >= n_layers) {
      add(ViolationKind::MalformedEvent, ev.layer_id, ev.expert_id, "layer out of range");
      continue;
    }
    const CostVector& c = layer_costs[ev.layer_id];
    if (ev.expert_id < 0 || ev.expert_id >= c.size()) {
      add(ViolationKind::MalformedEvent, ev.layer_id, ev.expert_id, "expert out of range");
      continue;
    }
    const double want =
        ev.stream == StreamKind::Load ? c.beta : c.alphas[ev.expert_id];
    const double got = ev.end - ev.start;
    if (!approx_eq(got, want)) {
      add(ViolationKind::DurationMismatch, ev.layer_id, ev.expert_id,
          to_string(ev.stream) + " duration " + std::to_string(got) + " != " +
              std::to_string(want));
    }
  }

  // Stream exclusivity, one lane per stream across all layers.
  for (StreamKind s : {StreamKind::Load, StreamKind::Compute}) {
    std::vector<const TimelineEvent*> lane;
    for (const TimelineEvent& ev : events) {
      if (ev.stream == s) lane.push_back(&ev);
    }
    std::stable_sort(lane.begin(), lane.end(),
                     [](const auto* a, const auto* b) { return a->start < b->start; });
    for (std::size_t i = 1; i < lane.size(); ++i) {
      if (!approx_leq(lane[i - 1]->end, lane[i]->start)) {
        add(ViolationKind::StreamOverlap, lane[i]->layer_id, lane[i]->expert_id,
            to_string(s) + " events overlap at t=" + std::to_string(lane[i]->start));
      }
    }
  }

  // Causality per (layer, expert) and residency per layer.
  std::map<std::pair<int, int>, std::pair<const TimelineEvent*, const TimelineEvent*>>
      per_expert;  // (load, compute)
  for (const TimelineEvent& ev : events) {
    if (ev.layer_id < 0 || ev.layer_id >= n_layers) continue;
    auto& slot = per_expert[{ev.layer_id, ev.expert_id}];
    (ev.stream == StreamKind::Load ? slot.first : slot.second) = &ev;
  }
  std::map<int, std::vector<std::pair<double, double>>> residency;
  for (const auto& [key, pair] : per_expert) {
    const auto [load, compute] = pair;
    if (load == nullptr || compute == nullptr) {
      add(ViolationKind::Causality, key.first, key.second,
          load == nullptr ? "compute without load" : "load without compute");
      continue;
    }
    if (!approx_geq(compute->start, load->end)) {
      add(ViolationKind::Causality, key.first, key.second,
          "compute starts at " + std::to_string(compute->start) + " before load ends at " +
              std::to_string(load->end));
    }
    residency[key.first].emplace_back(load->end, compute->end);
  }
  for (const auto& [layer, intervals] : residency) {
    const int peak = detail::peak_residency(intervals);
    if (peak > K) {
      add(ViolationKind::ResidencyExceeded, layer, -1,
          "peak residency " + std::to_string(peak) + " > K = " + std::to_string(K));
    }
  }

  if (reported_makespan && *reported_makespan != max_end) {
    add(ViolationKind::MakespanMismatch, -1, -1,
        "reported " + std::to_string(*reported_makespan) + " != max(end) " +
            std::to_string(max_end));
  }
  return out;
}

inline std::vector<Violation> replay_check(std::span<const TimelineEvent> events,
                                           const CostVector& costs, int K,
                                           std::optional<double> reported_makespan =
                                               std::nullopt) {
  return replay_check(events, std::span<const CostVector>(&costs, 1), K,
                      reported_makespan);
}

}  // namespace moesim
