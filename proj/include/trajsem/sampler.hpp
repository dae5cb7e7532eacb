#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "trajsem/profile.hpp"
#include "trajsem/rng.hpp"
#include "trajsem/util.hpp"

namespace trajsem {

// ---------------- group-based sampling ----------------

struct SamplerConfig {
  int draws_per_group = 3;  // K
  std::uint64_t seed = 0;
  std::array<FunctionGroup, kGroupCount> group_order = all_groups();
};

/// Softmax over raw weights, max-shifted for stability. Every finite
/// weight maps to a strictly positive probability.
inline std::vector<double> softmax_group(const std::vector<double>& weights) {
  if (weights.empty()) throw EmptyGroup("softmax over an empty group");
  double max_w = weights[0];
  for (double w : weights) max_w = std::max(max_w, w);
  std::vector<double> probs(weights.size());
  double sum = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    probs[i] = std::exp(weights[i] - max_w);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

/// K categorical draws with replacement; duplicates preserved, draw order
/// kept. probs must sum to 1 within 1e-9.
inline std::vector<int> sample_group(const std::vector<double>& probs,
                                     const std::vector<int>& category_ids, int k,
                                     SplitMix64& rng) {
  if (k < 1) throw ConfigError("sample_group: K must be >= 1");
  if (probs.size() != category_ids.size()) {
    throw ConfigError("sample_group: probs and category_ids sizes differ");
  }
  if (probs.empty()) throw EmptyGroup("sample_group over an empty group");
  double sum = 0.0;
  for (double p : probs) sum += p;
  if (std::fabs(sum - 1.0) > 1e-9) {
    throw ConfigError("sample_group: probabilities sum to " + std::to_string(sum));
  }
  std::vector<int> out;
  out.reserve(static_cast<size_t>(k));
  for (int d = 0; d < k; ++d) {
    const double u = rng.next_double();
    double cum = 0.0;
    size_t pick = probs.size() - 1;  // fp slack lands on the last bucket
    for (size_t i = 0; i < probs.size(); ++i) {
      cum += probs[i];
      if (u < cum) {
        pick = i;
        break;
      }
    }
    out.push_back(category_ids[pick]);
  }
  return out;
}

/// S_r for one region: per-group softmax + K draws, concatenated in the
/// fixed group order.
struct RegionSample {
  RegionId region_id = 0;
  std::array<std::vector<int>, kGroupCount> per_group;
  std::array<bool, kGroupCount> group_empty{};  // taxonomy has no category there
  std::vector<int> flat;                        // concatenation in group order
};

/// Samples one region. The RNG stream is keyed by
/// (config.seed, trajectory_id, region_id, group index), so repeat calls
/// reproduce byte-identical samples and regions may be sampled in
/// parallel. Groups with zero categories contribute nothing and are
/// flagged; all-zero weight groups go through the uniform softmax.
inline RegionSample sample_region(const GroupedWeights& grouped, const SamplerConfig& config,
                                  std::string_view trajectory_id, RegionId region_id) {
  RegionSample sample;
  sample.region_id = region_id;
  for (FunctionGroup g : config.group_order) {
    const size_t gi = static_cast<size_t>(g);
    const std::vector<WeightedCategory>& cats = grouped.per_group[gi];
    if (cats.empty()) {
      sample.group_empty[gi] = true;
      continue;
    }
    std::vector<double> weights;
    std::vector<int> ids;
    weights.reserve(cats.size());
    ids.reserve(cats.size());
    for (const WeightedCategory& wc : cats) {
      weights.push_back(wc.weight);
      ids.push_back(wc.category_id);
    }
    SplitMix64 rng(derive_stream_seed(config.seed, trajectory_id, region_id,
                                      static_cast<int>(gi)));
    sample.per_group[gi] =
        sample_group(softmax_group(weights), ids, config.draws_per_group, rng);
    sample.flat.insert(sample.flat.end(), sample.per_group[gi].begin(),
                       sample.per_group[gi].end());
  }
  return sample;
}

}  // namespace trajsem
