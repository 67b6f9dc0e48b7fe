#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "moesim/errors.hpp"
#include "moesim/prng.hpp"

namespace moesim {

// Per-expert routed token counts for one MoE layer.
struct ExpertWorkload {
  int layer_id = 0;
  std::vector<std::uint64_t> token_counts;
  std::uint64_t total_tokens = 0;
};

inline void validate(const ExpertWorkload& w) {
  const std::uint64_t sum =
      std::accumulate(w.token_counts.begin(), w.token_counts.end(), std::uint64_t{0});
  if (sum != w.total_tokens) {
    throw ConfigError("workload: token_counts sum to " + std::to_string(sum) +
                      ", expected total_tokens = " + std::to_string(w.total_tokens));
  }
  if (w.token_counts.empty()) throw ConfigError("workload: no experts");
}

// Untrained random-projection LSH gate: a fixed Gaussian matrix
// (hidden_dim x n_hash_bits) drawn once from projection_seed; the sign bits
// of a token's projection form its hash code.
struct GatingModel {
  std::uint64_t projection_seed = 0;
  int n_hash_bits = 5;
  int hidden_dim = 0;
};

// Projection matrix entries in bit-major order: all hidden_dim entries of
// bit 0's hyperplane normal first, then bit 1, ... This order is part of the
// stream contract (kPrngName).
inline std::vector<double> gating_projection(const GatingModel& m) {
  if (m.n_hash_bits < 1 || m.n_hash_bits > 31) {
    throw ConfigError("gating: n_hash_bits must be in [1, 31]");
  }
  if (m.hidden_dim < 1) throw ConfigError("gating: hidden_dim must be >= 1");
  GaussianStream gauss(m.projection_seed);
  std::vector<double> proj(static_cast<std::size_t>(m.n_hash_bits) * m.hidden_dim);
  for (double& v : proj) v = gauss.next();
  return proj;
}

// Hash codes for a flat row-major batch of hidden states
// (n_tokens x hidden_dim). Bit j of the code is set when the dot product
// with hyperplane j is >= 0.
inline std::vector<std::uint32_t> lsh_codes(const GatingModel& m,
                                            std::span<const double> hidden_states,
                                            std::size_t n_tokens) {
  if (hidden_states.size() != n_tokens * static_cast<std::size_t>(m.hidden_dim)) {
    throw std::invalid_argument("lsh_codes: hidden_states size != n_tokens * hidden_dim");
  }
  const std::vector<double> proj = gating_projection(m);
  std::vector<std::uint32_t> codes(n_tokens, 0);
  const int dim = m.hidden_dim;
  for (std::size_t t = 0; t < n_tokens; ++t) {
    const double* row = hidden_states.data() + t * dim;
    std::uint32_t code = 0;
    for (int j = 0; j < m.n_hash_bits; ++j) {
      const double* hp = proj.data() + static_cast<std::size_t>(j) * dim;
      double dot = 0.0;
      for (int d = 0; d < dim; ++d) dot += row[d] * hp[d];
      if (dot >= 0.0) code |= (1u << j);
    }
    codes[t] = code;
  }
  return codes;
}

// Route each token to expert = code mod n_experts. The mod folds 2^n_hash_bits
// codes onto n_experts; when n_experts is not a power of two the low experts
// receive one extra code each (aliasing bias of at most one code's mass).
inline ExpertWorkload route_tokens(const GatingModel& m,
                                   std::span<const double> hidden_states,
                                   std::size_t n_tokens, int n_experts,
                                   int layer_id = 0) {
  if (n_experts < 1) throw std::invalid_argument("route_tokens: n_experts must be >= 1");
  if ((1u << std::min(m.n_hash_bits, 31)) < static_cast<std::uint32_t>(n_experts)) {
    throw ConfigError("gating: 2^n_hash_bits must be >= n_experts");
  }
  const std::vector<std::uint32_t> codes = lsh_codes(m, hidden_states, n_tokens);
  ExpertWorkload w;
  w.layer_id = layer_id;
  w.token_counts.assign(static_cast<std::size_t>(n_experts), 0);
  for (std::uint32_t code : codes) {
    w.token_counts[code % static_cast<std::uint32_t>(n_experts)]++;
  }
  w.total_tokens = n_tokens;
  return w;
}

// I.i.d. standard-Gaussian hidden states, flat row-major. The stand-in for
// real activations when simulating the LSH gate.
inline std::vector<double> gaussian_tokens(std::uint64_t seed, std::size_t n_tokens,
                                           int dim) {
  GaussianStream gauss(seed);
  std::vector<double> out(n_tokens * static_cast<std::size_t>(dim));
  for (double& v : out) v = gauss.next();
  return out;
}

enum class SyntheticKind { Uniform, Zipf, Balanced };

// Parametric workload generators. "balanced" reproduces the fully balanced
// limit (counts differ by at most one, remainder to the lowest indices);
// "zipf" routes each token to an expert with probability proportional to
// rank^(-s), rank being 1 + expert index.
inline ExpertWorkload synthetic_workload(SyntheticKind kind, std::uint64_t total_tokens,
                                         int n_experts, std::uint64_t seed,
                                         double zipf_s = 1.0, int layer_id = 0) {
  if (n_experts < 1) throw ConfigError("workload: n_experts must be >= 1");
  ExpertWorkload w;
  w.layer_id = layer_id;
  w.total_tokens = total_tokens;
  w.token_counts.assign(static_cast<std::size_t>(n_experts), 0);
  switch (kind) {
    case SyntheticKind::Balanced: {
      const std::uint64_t base = total_tokens / n_experts;
      const std::uint64_t rem = total_tokens % n_experts;
      for (int e = 0; e < n_experts; ++e) {
        w.token_counts[e] = base + (static_cast<std::uint64_t>(e) < rem ? 1 : 0);
      }
      break;
    }
    case SyntheticKind::Uniform: {
      std::mt19937_64 rng(seed);
      for (std::uint64_t t = 0; t < total_tokens; ++t) {
        w.token_counts[uniform_below(rng, static_cast<std::uint64_t>(n_experts))]++;
      }
      break;
    }
    case SyntheticKind::Zipf: {
      if (!(zipf_s > 0.0)) throw ConfigError("workload: zipf exponent must be > 0");
      std::vector<double> cum(static_cast<std::size_t>(n_experts));
      double acc = 0.0;
      for (int e = 0; e < n_experts; ++e) {
        acc += std::pow(static_cast<double>(e + 1), -zipf_s);
        cum[e] = acc;
      }
      std::mt19937_64 rng(seed);
      for (std::uint64_t t = 0; t < total_tokens; ++t) {
        const double u = uniform01(rng) * acc;
        const auto it = std::lower_bound(cum.begin(), cum.end(), u);
        const auto e = std::min<std::size_t>(it - cum.begin(), n_experts - 1);
        w.token_counts[e]++;
      }
      break;
    }
  }
  return w;
}

inline ExpertWorkload explicit_workload(std::vector<std::uint64_t> counts,
                                        int layer_id = 0) {
  ExpertWorkload w;
  w.layer_id = layer_id;
  w.total_tokens = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  w.token_counts = std::move(counts);
  validate(w);
  return w;
}

// CSV ingestion: columns expert_id,token_count, one row per expert, optional
// header. Expert count is max id + 1; ids may arrive in any order; an id
// listed twice is an error.
inline ExpertWorkload workload_from_csv(const std::filesystem::path& path,
                                        int layer_id = 0) {
  std::ifstream in(path);
  if (!in) throw ConfigError("workload csv: cannot open " + path.string());
  std::vector<std::pair<std::uint64_t, std::uint64_t>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b)) {
      throw ConfigError("workload csv: line " + std::to_string(lineno) +
                        ": expected expert_id,token_count");
    }
    if (lineno == 1 && a.find_first_not_of("0123456789 ") != std::string::npos) {
      continue;  // header row
    }
    try {
      rows.emplace_back(std::stoull(a), std::stoull(b));
    } catch (const std::exception&) {
      throw ConfigError("workload csv: line " + std::to_string(lineno) +
                        ": not a number: " + line);
    }
  }
  if (rows.empty()) throw ConfigError("workload csv: no rows in " + path.string());
  std::uint64_t max_id = 0;
  for (const auto& [id, n] : rows) max_id = std::max(max_id, id);
  std::vector<std::uint64_t> counts(max_id + 1, 0);
  std::vector<bool> seen(max_id + 1, false);
  for (const auto& [id, n] : rows) {
    if (seen[id]) {
      throw ConfigError("workload csv: duplicate expert_id " + std::to_string(id));
    }
    seen[id] = true;
    counts[id] = n;
  }
  return explicit_workload(std::move(counts), layer_id);
}

}  // namespace moesim
