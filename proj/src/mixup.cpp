#include "framemix/mixup.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace framemix {

bool MixMask::degenerate() const {
  const bool any_one = std::any_of(bits.begin(), bits.end(), [](int b) { return b == 1; });
  const bool any_zero = std::any_of(bits.begin(), bits.end(), [](int b) { return b == 0; });
  return !(any_one && any_zero);
}

MixMask MixMask::complement() const {
  MixMask out = *this;
  for (int& b : out.bits) b = 1 - b;
  return out;
}

std::uint64_t derive_pair_seed(std::uint64_t global_seed, const FrameId& a,
                               const FrameId& b) {
  std::uint64_t h = 1469598103934665603ull ^ global_seed;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0x1f;
    h *= 1099511628211ull;
  };
  mix(a.value);
  mix(b.value);
  return h;
}

namespace {

double uniform01(std::mt19937_64& rng) {
  // 53-bit mantissa draw; avoids implementation-defined distributions.
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

}  // namespace

MixMask sample_mask(const std::vector<FeatureVector>& x1,
                    const std::vector<FeatureVector>& x2, double gamma,
                    std::uint64_t seed) {
  if (x1.size() != x2.size() || x1.empty())
    throw std::invalid_argument("sample_mask: arity mismatch");
  const std::size_t k_arity = x1.size();

  std::vector<double> delta(k_arity);
  std::vector<double> keep_prob(k_arity);
  for (std::size_t k = 0; k < k_arity; ++k) {
    delta[k] = cosine_distance(x1[k], x2[k]);
    keep_prob[k] = std::exp(-gamma * delta[k]);
  }

  std::mt19937_64 rng(seed);
  MixMask mask;
  mask.seed = seed;
  mask.bits.assign(k_arity, 0);
  for (int attempt = 0; attempt < 17; ++attempt) {
    for (std::size_t k = 0; k < k_arity; ++k)
      mask.bits[k] = uniform01(rng) < keep_prob[k] ? 1 : 0;
    if (!mask.degenerate()) return mask;
  }
  // Still degenerate: flip the least similar element.
  std::size_t flip = 0;
  for (std::size_t k = 1; k < k_arity; ++k)
    if (delta[k] > delta[flip]) flip = k;
  mask.bits[flip] = 1 - mask.bits[flip];
  return mask;
}

std::pair<MinedFrame, MinedFrame> mix_frames(const Frame& e1, const Frame& e2,
                                             const MixMask& mask,
                                             const FrameSchema& schema) {
  if (e1.elements.size() != schema.arity() || e2.elements.size() != schema.arity())
    throw std::invalid_argument("mix_frames: schema mismatch");
  if (mask.bits.size() != schema.arity())
    throw std::invalid_argument("mix_frames: mask arity mismatch");
  if (mask.degenerate())
    throw std::invalid_argument("mix_frames: degenerate mask");

  MinedFrame first, second;
  first.parent1 = e1.frame_id;
  first.parent2 = e2.frame_id;
  first.mask = mask;
  second.parent1 = e1.frame_id;
  second.parent2 = e2.frame_id;
  second.mask = mask;

  first.frame.frame_id.value = "mix:" + e1.frame_id.value + "+" + e2.frame_id.value + ":a";
  second.frame.frame_id.value = "mix:" + e1.frame_id.value + "+" + e2.frame_id.value + ":b";
  first.frame.document_id = e1.document_id;
  second.frame.document_id = e2.document_id;
  first.frame.time_index = e1.time_index;
  second.frame.time_index = e2.time_index;

  for (std::size_t k = 0; k < schema.arity(); ++k) {
    if (mask.bits[k] == 1) {
      first.frame.elements.push_back(e1.elements[k]);
      second.frame.elements.push_back(e2.elements[k]);
    } else {
      first.frame.elements.push_back(e2.elements[k]);
      second.frame.elements.push_back(e1.elements[k]);
    }
  }
  return {first, second};
}

std::vector<MinedFrame> augment(Hypergraph& g, const std::vector<MixPair>& pairs) {
  std::vector<MinedFrame> mined;
  mined.reserve(pairs.size() * 2);
  for (const auto& p : pairs) {
    const Frame& e1 = g.edge(g.edge_index(p.source));
    const Frame& e2 = g.edge(g.edge_index(p.candidate));
    auto [a, b] = mix_frames(e1, e2, p.mask, g.schema());
    mined.push_back(a);
    mined.push_back(b);
  }
  // Insert after all lookups; insertion is a single serialized step.
  for (const auto& m : mined)
    g.add_mined(m.frame, m.parent1, m.parent2);
  return mined;
}

}  // namespace framemix
