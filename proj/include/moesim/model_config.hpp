#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "moesim/errors.hpp"

namespace moesim {

// Transformer/MoE dimensions. One expert is one feed-forward block:
// two projection matrices d_model x d_ff and d_ff x d_model.
struct ModelGeometry {
  int n_layers = 0;
  int n_heads = 0;
  int d_head = 0;
  int d_model = 0;
  int d_ff = 0;
  int n_experts_per_layer = 0;
  int bytes_per_param = 0;  // e.g. 2 for half precision; never defaulted
};

// Device description. Only three numbers matter to the cost model: peak
// throughput, host-to-device bandwidth, and how much memory is left for
// expert weights after everything else (attention blocks, activations, KV).
struct HardwareProfile {
  double peak_flops = 0.0;          // FLOP/s
  double h2d_bandwidth = 0.0;       // bytes/s
  std::uint64_t device_memory = 0;  // bytes
  std::uint64_t reserved_memory = 0;
};

// Throws ConfigError on invariant breaches; returns non-fatal warnings.
// d_model != n_heads * d_head is a warning only: the cost model never uses
// the attention dimensions.
inline std::vector<std::string> validate(const ModelGeometry& g) {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw ConfigError(std::string("geometry.") + name + " must be > 0");
  };
  positive(g.n_layers, "n_layers");
  positive(g.n_heads, "n_heads");
  positive(g.d_head, "d_head");
  positive(g.d_model, "d_model");
  positive(g.d_ff, "d_ff");
  positive(g.n_experts_per_layer, "n_experts_per_layer");
  positive(g.bytes_per_param, "bytes_per_param");
  std::vector<std::string> warnings;
  if (g.d_model != g.n_heads * g.d_head) {
    warnings.push_back("geometry: d_model (" + std::to_string(g.d_model) +
                       ") != n_heads * d_head (" +
                       std::to_string(g.n_heads * g.d_head) + ")");
  }
  return warnings;
}

inline std::vector<std::string> validate(const HardwareProfile& hw) {
  if (hw.peak_flops <= 0.0) throw ConfigError("hardware.peak_flops must be > 0");
  if (hw.h2d_bandwidth <= 0.0) throw ConfigError("hardware.h2d_bandwidth must be > 0");
  if (hw.device_memory <= hw.reserved_memory) {
    throw ConfigError("hardware.device_memory must exceed reserved_memory");
  }
  return {};
}

// Parameter bytes of one expert: two projection matrices. Biases and layer
// norms are below 0.1% of the weight and are excluded to keep the load-time
// derivation auditable.
inline std::uint64_t expert_param_bytes(const ModelGeometry& g) {
  return 2ull * static_cast<std::uint64_t>(g.d_model) *
         static_cast<std::uint64_t>(g.d_ff) *
         static_cast<std::uint64_t>(g.bytes_per_param);
}

// FLOPs for one expert processing n_tokens. Two matmuls, one multiply-add
// counted as 2 FLOPs. Exactly linear in n_tokens.
inline std::uint64_t expert_flops(const ModelGeometry& g, std::uint64_t n_tokens) {
  return 4ull * n_tokens * static_cast<std::uint64_t>(g.d_model) *
         static_cast<std::uint64_t>(g.d_ff);
}

// Built-in geometry presets. "cpm2" is the 24-layer bilingual MoE
// configuration (32 experts per layer, half precision); "cpm-small" is the
// 12-layer configuration in single precision.
inline const std::map<std::string, ModelGeometry>& builtin_geometry_presets() {
  static const std::map<std::string, ModelGeometry> presets = {
      {"cpm2",
       {.n_layers = 24,
        .n_heads = 64,
        .d_head = 64,
        .d_model = 4096,
        .d_ff = 10240,
        .n_experts_per_layer = 32,
        .bytes_per_param = 2}},
      {"cpm-small",
       {.n_layers = 12,
        .n_heads = 12,
        .d_head = 64,
        .d_model = 768,
        .d_ff = 3072,
        .n_experts_per_layer = 32,
        .bytes_per_param = 4}},
  };
  return presets;
}

}  // namespace moesim
