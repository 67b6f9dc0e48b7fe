#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "moesim/cost_model.hpp"
#include "moesim/errors.hpp"
#include "moesim/gating.hpp"
#include "moesim/model_config.hpp"

namespace moesim {

using json = nlohmann::json;

enum class Policy { Greedy, Naive, Serial, Exact };

inline std::string to_string(Policy p) {
  switch (p) {
    case Policy::Greedy: return "greedy";
    case Policy::Naive: return "naive";
    case Policy::Serial: return "serial";
    case Policy::Exact: return "exact";
  }
  return "?";
}

inline Policy policy_from_string(const std::string& s) {
  if (s == "greedy") return Policy::Greedy;
  if (s == "naive") return Policy::Naive;
  if (s == "serial") return Policy::Serial;
  if (s == "exact") return Policy::Exact;
  throw ConfigError("policies: unknown policy '" + s + "'");
}

enum class WorkloadKind { Gating, Uniform, Zipf, Balanced, Explicit, Csv };

inline std::string to_string(WorkloadKind k) {
  switch (k) {
    case WorkloadKind::Gating: return "gating";
    case WorkloadKind::Uniform: return "uniform";
    case WorkloadKind::Zipf: return "zipf";
    case WorkloadKind::Balanced: return "balanced";
    case WorkloadKind::Explicit: return "explicit";
    case WorkloadKind::Csv: return "csv";
  }
  return "?";
}

inline WorkloadKind workload_kind_from_string(const std::string& s) {
  if (s == "gating") return WorkloadKind::Gating;
  if (s == "uniform") return WorkloadKind::Uniform;
  if (s == "zipf") return WorkloadKind::Zipf;
  if (s == "balanced") return WorkloadKind::Balanced;
  if (s == "explicit") return WorkloadKind::Explicit;
  if (s == "csv") return WorkloadKind::Csv;
  throw ConfigError("workload.kind: unknown kind '" + s + "'");
}

struct GatingSpec {
  int n_hash_bits = 5;
  int hidden_dim = 0;  // 0 = use d_model
};

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::Balanced;
  std::uint64_t total_tokens = 0;
  double zipf_s = 1.0;
  std::vector<std::uint64_t> counts;  // kind == explicit
  std::string csv_path;               // kind == csv
  GatingSpec gating;                  // kind == gating
};

// Direct alphas/beta, bypassing geometry. For unit studies.
struct ExplicitCosts {
  std::vector<double> alphas;
  double beta = 0.0;
};

struct Scenario {
  std::string name = "scenario";
  std::optional<ModelGeometry> geometry;
  std::string geometry_preset;  // informational: preset the geometry came from
  std::optional<HardwareProfile> hardware;
  std::optional<WorkloadSpec> workload;
  std::optional<ExplicitCosts> costs;
  std::optional<int> k_explicit;  // nullopt = "auto" (capacity formula)
  std::vector<Policy> policies;
  std::uint64_t seed = 0;
  int n_moe_layers = 1;
  bool continuous_load_stream = false;
  bool skip_empty_experts = false;
  double event_overhead_s = 0.0;
  std::string output_dir = "out";
};

using PresetMap = std::map<std::string, ModelGeometry>;

namespace detail {

inline void require_keys(const json& j, const char* where,
                         std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      if (key == a) { ok = true; break; }
    }
    if (!ok) throw ConfigError(std::string(where) + ": unknown field '" + key + "'");
  }
}

template <typename T>
T get_field(const json& j, const char* where, const char* key) {
  if (!j.contains(key)) {
    throw ConfigError(std::string(where) + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(where) + "." + key + ": " + e.what());
  }
}

template <typename T>
T get_field_or(const json& j, const char* where, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(where) + "." + key + ": " + e.what());
  }
}

inline ModelGeometry parse_geometry_object(const json& j) {
  require_keys(j, "geometry",
               {"n_layers", "n_heads", "d_head", "d_model", "d_ff",
                "n_experts_per_layer", "bytes_per_param"});
  ModelGeometry g;
  g.n_layers = get_field<int>(j, "geometry", "n_layers");
  g.n_heads = get_field<int>(j, "geometry", "n_heads");
  g.d_head = get_field<int>(j, "geometry", "d_head");
  g.d_model = get_field<int>(j, "geometry", "d_model");
  g.d_ff = get_field<int>(j, "geometry", "d_ff");
  g.n_experts_per_layer = get_field<int>(j, "geometry", "n_experts_per_layer");
  // No silent default: the byte width decides beta, so it must be spelled out.
  g.bytes_per_param = get_field<int>(j, "geometry", "bytes_per_param");
  return g;
}

}  // namespace detail

inline PresetMap load_presets_from_dir(const std::filesystem::path& dir) {
  PresetMap out;
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("preset dir does not exist: " + dir.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("preset " + entry.path().string() + ": " + e.what());
    }
    out[entry.path().stem().string()] = detail::parse_geometry_object(j);
  }
  return out;
}

// Built-ins plus anything in the MOE_SIM_PRESETS directory (extra presets
// shadow built-ins of the same name).
inline PresetMap effective_presets() {
  PresetMap presets = builtin_geometry_presets();
  if (const char* dir = std::getenv("MOE_SIM_PRESETS")) {
    for (auto& [name, g] : load_presets_from_dir(dir)) presets[name] = g;
  }
  return presets;
}

inline Scenario parse_scenario(const json& j, const PresetMap& presets) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  detail::require_keys(
      j, "config",
      {"name", "seed", "geometry", "geometry_preset", "hardware", "workload", "costs",
       "K", "policies", "n_moe_layers", "continuous_load_stream", "skip_empty_experts",
       "event_overhead_s", "output_dir"});

  Scenario s;
  s.name = detail::get_field_or<std::string>(j, "config", "name", "scenario");
  if (s.name.empty()) throw ConfigError("name: must be non-empty");

  if (j.contains("geometry")) {
    const json& g = j.at("geometry");
    if (g.is_string()) {
      const std::string preset = g.get<std::string>();
      const auto it = presets.find(preset);
      if (it == presets.end()) {
        throw ConfigError("geometry: unknown preset '" + preset + "'");
      }
      s.geometry = it->second;
      s.geometry_preset = preset;
    } else if (g.is_object()) {
      s.geometry = detail::parse_geometry_object(g);
      s.geometry_preset = detail::get_field_or<std::string>(j, "config", "geometry_preset", "");
    } else {
      throw ConfigError("geometry: must be a preset name or an object");
    }
    validate(*s.geometry);  // throws on hard errors; warnings re-derived by callers
  }

  if (j.contains("hardware")) {
    const json& h = j.at("hardware");
    detail::require_keys(h, "hardware",
                         {"peak_flops", "h2d_bandwidth", "device_memory", "reserved_memory"});
    HardwareProfile hw;
    hw.peak_flops = detail::get_field<double>(h, "hardware", "peak_flops");
    hw.h2d_bandwidth = detail::get_field<double>(h, "hardware", "h2d_bandwidth");
    hw.device_memory = detail::get_field<std::uint64_t>(h, "hardware", "device_memory");
    hw.reserved_memory =
        detail::get_field_or<std::uint64_t>(h, "hardware", "reserved_memory", 0);
    validate(hw);
    s.hardware = hw;
  }

  if (j.contains("workload")) {
    const json& w = j.at("workload");
    detail::require_keys(w, "workload",
                         {"kind", "total_tokens", "zipf_s", "counts", "csv_path",
                          "n_hash_bits", "hidden_dim"});
    WorkloadSpec ws;
    ws.kind = workload_kind_from_string(
        detail::get_field<std::string>(w, "workload", "kind"));
    switch (ws.kind) {
      case WorkloadKind::Explicit:
        ws.counts = detail::get_field<std::vector<std::uint64_t>>(w, "workload", "counts");
        if (ws.counts.empty()) throw ConfigError("workload.counts: must be non-empty");
        break;
      case WorkloadKind::Csv:
        ws.csv_path = detail::get_field<std::string>(w, "workload", "csv_path");
        break;
      case WorkloadKind::Zipf:
        ws.zipf_s = detail::get_field_or<double>(w, "workload", "zipf_s", 1.0);
        if (!(ws.zipf_s > 0.0)) throw ConfigError("workload.zipf_s: must be > 0");
        [[fallthrough]];
      case WorkloadKind::Uniform:
      case WorkloadKind::Balanced:
        ws.total_tokens = detail::get_field<std::uint64_t>(w, "workload", "total_tokens");
        break;
      case WorkloadKind::Gating:
        ws.total_tokens = detail::get_field<std::uint64_t>(w, "workload", "total_tokens");
        ws.gating.n_hash_bits = detail::get_field_or<int>(w, "workload", "n_hash_bits", 5);
        ws.gating.hidden_dim = detail::get_field_or<int>(w, "workload", "hidden_dim", 0);
        break;
    }
    s.workload = std::move(ws);
  }

  if (j.contains("costs")) {
    const json& c = j.at("costs");
    detail::require_keys(c, "costs", {"alphas", "beta"});
    ExplicitCosts ec;
    ec.alphas = detail::get_field<std::vector<double>>(c, "costs", "alphas");
    ec.beta = detail::get_field<double>(c, "costs", "beta");
    if (ec.alphas.empty()) throw ConfigError("costs.alphas: must be non-empty");
    if (!(ec.beta > 0.0)) throw ConfigError("costs.beta: must be > 0");
    for (double a : ec.alphas) {
      if (!(a >= 0.0)) throw ConfigError("costs.alphas: entries must be >= 0");
    }
    s.costs = std::move(ec);
  }

  // Either direct costs or the geometry+hardware+workload pipeline.
  if (s.costs.has_value()) {
    if (s.workload.has_value()) {
      throw ConfigError("config: 'costs' and 'workload' are mutually exclusive");
    }
  } else {
    if (!s.geometry) throw ConfigError("config: missing 'geometry' (or supply 'costs')");
    if (!s.hardware) throw ConfigError("config: missing 'hardware' (or supply 'costs')");
    if (!s.workload) throw ConfigError("config: missing 'workload' (or supply 'costs')");
  }

  if (j.contains("K")) {
    const json& k = j.at("K");
    if (k.is_string()) {
      if (k.get<std::string>() != "auto") {
        throw ConfigError("K: must be an integer or \"auto\"");
      }
    } else if (k.is_number_integer()) {
      s.k_explicit = k.get<int>();
      if (*s.k_explicit < 1) throw CapacityError("K: must be >= 1");
    } else {
      throw ConfigError("K: must be an integer or \"auto\"");
    }
  }
  if (s.costs.has_value() && !s.k_explicit.has_value()) {
    throw ConfigError("K: explicit costs require an explicit K");
  }

  const auto policy_names =
      detail::get_field<std::vector<std::string>>(j, "config", "policies");
  if (policy_names.empty()) throw ConfigError("policies: at least one policy required");
  for (const std::string& p : policy_names) s.policies.push_back(policy_from_string(p));

  if (j.contains("seed")) {
    s.seed = detail::get_field<std::uint64_t>(j, "config", "seed");
  } else {
    std::random_device rd;
    s.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }

  const int default_layers = s.costs.has_value() ? 1 : s.geometry->n_layers;
  s.n_moe_layers = detail::get_field_or<int>(j, "config", "n_moe_layers", default_layers);
  if (s.n_moe_layers < 1) throw ConfigError("n_moe_layers: must be >= 1");

  s.continuous_load_stream =
      detail::get_field_or<bool>(j, "config", "continuous_load_stream", false);
  s.skip_empty_experts =
      detail::get_field_or<bool>(j, "config", "skip_empty_experts", false);
  s.event_overhead_s = detail::get_field_or<double>(j, "config", "event_overhead_s", 0.0);
  if (s.event_overhead_s < 0.0) throw ConfigError("event_overhead_s: must be >= 0");
  s.output_dir = detail::get_field_or<std::string>(j, "config", "output_dir", "out");
  return s;
}

inline Scenario parse_scenario_file(const std::filesystem::path& path,
                                    const PresetMap& presets) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_scenario(j, presets);
}

// Self-contained resolved form: presets expanded, seed and K concrete. Its
// JSON re-parses to an equivalent scenario (and re-serialises to identical
// bytes), which is what makes runs replayable from the artifact alone.
inline json to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  if (s.geometry) {
    const ModelGeometry& g = *s.geometry;
    j["geometry"] = {{"n_layers", g.n_layers},
                     {"n_heads", g.n_heads},
                     {"d_head", g.d_head},
                     {"d_model", g.d_model},
                     {"d_ff", g.d_ff},
                     {"n_experts_per_layer", g.n_experts_per_layer},
                     {"bytes_per_param", g.bytes_per_param}};
    if (!s.geometry_preset.empty()) j["geometry_preset"] = s.geometry_preset;
  }
  if (s.hardware) {
    j["hardware"] = {{"peak_flops", s.hardware->peak_flops},
                     {"h2d_bandwidth", s.hardware->h2d_bandwidth},
                     {"device_memory", s.hardware->device_memory},
                     {"reserved_memory", s.hardware->reserved_memory}};
  }
  if (s.workload) {
    json w;
    w["kind"] = to_string(s.workload->kind);
    switch (s.workload->kind) {
      case WorkloadKind::Explicit: w["counts"] = s.workload->counts; break;
      case WorkloadKind::Csv: w["csv_path"] = s.workload->csv_path; break;
      case WorkloadKind::Zipf:
        w["zipf_s"] = s.workload->zipf_s;
        w["total_tokens"] = s.workload->total_tokens;
        break;
      case WorkloadKind::Uniform:
      case WorkloadKind::Balanced:
        w["total_tokens"] = s.workload->total_tokens;
        break;
      case WorkloadKind::Gating:
        w["total_tokens"] = s.workload->total_tokens;
        w["n_hash_bits"] = s.workload->gating.n_hash_bits;
        w["hidden_dim"] = s.workload->gating.hidden_dim;
        break;
    }
    j["workload"] = std::move(w);
  }
  if (s.costs) {
    j["costs"] = {{"alphas", s.costs->alphas}, {"beta", s.costs->beta}};
  }
  j["K"] = s.k_explicit.has_value() ? json(*s.k_explicit) : json("auto");
  json policies = json::array();
  for (Policy p : s.policies) policies.push_back(to_string(p));
  j["policies"] = std::move(policies);
  j["n_moe_layers"] = s.n_moe_layers;
  j["continuous_load_stream"] = s.continuous_load_stream;
  j["skip_empty_experts"] = s.skip_empty_experts;
  j["event_overhead_s"] = s.event_overhead_s;
  j["output_dir"] = s.output_dir;
  return j;
}

}  // namespace moesim
