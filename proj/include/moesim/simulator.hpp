#pragma once

#include <algorithm>
#include <span>
#include <utility>
#include <vector>

#include "moesim/cost_model.hpp"
#include "moesim/scheduler.hpp"

namespace moesim {

enum class StreamKind { Load, Compute };

enum class SimMode { Overlapped, Serial };

enum class OrderPolicy { Greedy, Naive, Exact };

struct TimelineEvent {
  StreamKind stream = StreamKind::Load;
  int layer_id = 0;
  int expert_id = 0;
  double start = 0.0;  // seconds
  double end = 0.0;
};

struct LayerReport {
  int layer_id = 0;
  int n_experts = 0;
  double start = 0.0;
  double end = 0.0;
  double compute_busy = 0.0;
  double load_busy = 0.0;
  double compute_stall = 0.0;  // gaps between this layer's compute events
  int peak_resident = 0;
  double lower_bound = 0.0;
  Schedule schedule;
};

struct SimReport {
  double makespan = 0.0;
  double compute_busy = 0.0;
  double load_busy = 0.0;
  double compute_stall = 0.0;  // idle between first compute start and last compute end
  int peak_resident_experts = 0;  // max over layers; each layer has its own K budget
  double overlap_efficiency = 0.0;  // compute_busy / makespan
  std::vector<LayerReport> per_layer;
};

// Floor on any overlapped makespan: the compute stream cannot finish before
// beta + sum(alpha) (first load is never hidden), and the load stream alone
// needs T*beta.
inline double lower_bound(const CostVector& costs) {
  return std::max(costs.beta + costs.total_alpha(),
                  static_cast<double>(costs.size()) * costs.beta);
}

namespace detail {

// Residency of one layer: an expert holds a memory slot from load completion
// until its compute completes, at which point it is evicted immediately. The
// sweep orders evictions before arrivals at equal timestamps.
inline int peak_residency(std::span<const std::pair<double, double>> intervals) {
  std::vector<std::pair<double, int>> edges;
  edges.reserve(intervals.size() * 2);
  for (const auto& [arrive, evict] : intervals) {
    edges.emplace_back(arrive, +1);
    edges.emplace_back(evict, -1);
  }
  std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;  // -1 before +1
  });
  int cur = 0, peak = 0;
  for (const auto& [t, d] : edges) {
    cur += d;
    peak = std::max(peak, cur);
  }
  return peak;
}

struct LayerInput {
  const Schedule* schedule;
  const CostVector* costs;
};

// Event-time recurrence shared by simulate and simulate_model. One load lane
// and one compute lane, both sequential across all layers.
//
// Overlapped rules per layer, positions j = 0..T-1 of the layer's order:
//   load_end(j)    = max(previous load_end + beta, compute_end(j-K))
//   compute_end(j) = max(load_end(j), previous compute_end) + alpha
// The residency gate is on load *completion*: a copy may be in flight while
// K experts are resident, but it cannot deliver the (j)th expert before the
// (j-K)th has been evicted. This keeps at most K completed experts in memory
// at every instant, and lets a feasible order run the compute lane without
// gaps. Serial mode runs load+compute back to back in a single lane.
//
// With continuous_load_stream the load lane flows straight into the next
// layer (each layer has its own K slots); otherwise it drains: layer l+1's
// first load waits for layer l's last compute.
inline std::pair<std::vector<TimelineEvent>, SimReport> run_layers(
    std::span<const LayerInput> layers, int K, SimMode mode,
    bool continuous_load_stream) {
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  std::vector<TimelineEvent> events;
  SimReport rep;
  rep.per_layer.reserve(layers.size());

  double load_free = 0.0;
  double compute_free = 0.0;
  double prev_compute_end = -1.0;  // for global stall accounting

  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Schedule& sched = *layers[l].schedule;
    const CostVector& costs = *layers[l].costs;
    const int T = costs.size();
    detail::require_permutation(sched.order, T);

    LayerReport lr;
    lr.layer_id = static_cast<int>(l);
    lr.n_experts = T;
    lr.lower_bound = lower_bound(costs);
    lr.schedule = sched;

    std::vector<double> compute_end_at(T);
    std::vector<std::pair<double, double>> residency(T);
    double layer_prev_compute_end = -1.0;
    double layer_start = -1.0, layer_end = 0.0;

    if (mode == SimMode::Overlapped && !continuous_load_stream && l > 0) {
      load_free = std::max(load_free, compute_free);
    }

    for (int j = 0; j < T; ++j) {
      const int e = sched.order[j];
      const double alpha = costs.alphas[e];
      double ls, le, cs, ce;
      if (mode == SimMode::Serial) {
        ls = std::max(load_free, compute_free);
        le = ls + costs.beta;
        cs = le;
        ce = cs + alpha;
        load_free = le;
        compute_free = ce;
      } else {
        const double gate = j >= K ? compute_end_at[j - K] : 0.0;
        const double natural_end = load_free + costs.beta;
        if (gate > natural_end) {
          le = gate;
          ls = gate - costs.beta;
        } else {
          ls = load_free;
          le = natural_end;
        }
        load_free = le;
        cs = std::max(le, compute_free);
        ce = cs + alpha;
        compute_free = ce;
      }
      compute_end_at[j] = ce;
      residency[j] = {le, ce};

      events.push_back({StreamKind::Load, lr.layer_id, e, ls, le});
      events.push_back({StreamKind::Compute, lr.layer_id, e, cs, ce});

      lr.load_busy += le - ls;
      lr.compute_busy += ce - cs;
      if (layer_prev_compute_end >= 0.0 && cs > layer_prev_compute_end) {
        lr.compute_stall += cs - layer_prev_compute_end;
      }
      layer_prev_compute_end = ce;
      if (prev_compute_end >= 0.0 && cs > prev_compute_end) {
        rep.compute_stall += cs - prev_compute_end;
      }
      prev_compute_end = ce;

      layer_start = layer_start < 0.0 ? ls : std::min(layer_start, ls);
      layer_end = std::max(layer_end, ce);
    }

    lr.start = layer_start;
    lr.end = layer_end;
    lr.peak_resident = peak_residency(residency);
    rep.load_busy += lr.load_busy;
    rep.compute_busy += lr.compute_busy;
    rep.peak_resident_experts = std::max(rep.peak_resident_experts, lr.peak_resident);
    rep.makespan = std::max(rep.makespan, layer_end);
    rep.per_layer.push_back(std::move(lr));
  }

  rep.overlap_efficiency = rep.makespan > 0.0 ? rep.compute_busy / rep.makespan : 0.0;
  return {std::move(events), std::move(rep)};
}

}  // namespace detail

// Single layer under a given schedule.
inline std::pair<std::vector<TimelineEvent>, SimReport> simulate(
    const Schedule& schedule, const CostVector& costs, int K,
    SimMode mode = SimMode::Overlapped) {
  validate(costs);
  detail::LayerInput in{&schedule, &costs};
  return detail::run_layers({&in, 1}, K, mode, false);
}

// Single layer under an explicit permutation; the order is checked and
// labelled as externally supplied.
inline std::pair<std::vector<TimelineEvent>, SimReport> simulate(
    std::span<const int> order, const CostVector& costs, int K,
    SimMode mode = SimMode::Overlapped) {
  validate(costs);
  ConstraintReport chk = check_constraints(order, costs, K);
  Schedule s;
  s.order.assign(order.begin(), order.end());
  s.feasible = chk.feasible;
  s.slack = std::move(chk.slack);
  s.method = ScheduleMethod::Naive;
  return simulate(s, costs, K, mode);
}

struct ModelSimOptions {
  SimMode mode = SimMode::Overlapped;
  OrderPolicy policy = OrderPolicy::Greedy;
  bool continuous_load_stream = false;
  int exact_max_T = 12;
};

inline Schedule order_for_policy(const CostVector& costs, int K, OrderPolicy policy,
                                 int exact_max_T = 12) {
  switch (policy) {
    case OrderPolicy::Greedy: return auto_order(costs, K, exact_max_T);
    case OrderPolicy::Naive: return naive_order(costs, K);
    case OrderPolicy::Exact: return exact_order(costs, K, exact_max_T);
  }
  throw std::invalid_argument("unknown policy");
}

// Whole-model run: layers execute in sequence on the compute lane, each MoE
// layer scheduled independently by the chosen policy.
inline std::pair<std::vector<TimelineEvent>, SimReport> simulate_model(
    std::span<const CostVector> layer_costs, int K, const ModelSimOptions& opt) {
  if (layer_costs.empty()) throw std::invalid_argument("simulate_model: no layers");
  std::vector<Schedule> schedules;
  schedules.reserve(layer_costs.size());
  for (const CostVector& c : layer_costs) {
    validate(c);
    schedules.push_back(order_for_policy(c, K, opt.policy, opt.exact_max_T));
  }
  std::vector<detail::LayerInput> ins(layer_costs.size());
  for (std::size_t l = 0; l < layer_costs.size(); ++l) {
    ins[l] = {&schedules[l], &layer_costs[l]};
  }
  return detail::run_layers(ins, K, opt.mode, opt.continuous_load_stream);
}

inline std::pair<std::vector<TimelineEvent>, SimReport> simulate_model(
    std::span<const ExpertWorkload> workloads, const ModelGeometry& geometry,
    const HardwareProfile& hw, int K, const ModelSimOptions& opt) {
  std::vector<CostVector> costs;
  costs.reserve(workloads.size());
  for (const ExpertWorkload& w : workloads) costs.push_back(compute_costs(w, geometry, hw));
  return simulate_model(costs, K, opt);
}

inline std::string to_string(StreamKind s) {
  return s == StreamKind::Load ? "load" : "compute";
}

inline std::string to_string(SimMode m) {
  return m == SimMode::Overlapped ? "overlapped" : "serial";
}

}  // namespace moesim
