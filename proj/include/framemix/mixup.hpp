#pragma once
// Binary mixing masks over element-wise similarity and the combination of
// intimate hyperedge pairs into new mined frames.

#include <cstdint>
#include <utility>
#include <vector>

#include "framemix/hypergraph.hpp"

namespace framemix {

struct MixMask {
  std::vector<int> bits;  // K values in {0, 1}; never all-0 or all-1
  std::uint64_t seed = 0;

  bool degenerate() const;
  MixMask complement() const;
};

struct MinedFrame {
  Frame frame;
  FrameId parent1;
  FrameId parent2;
  MixMask mask;
};

// Splittable per-pair seed so pairs can be sampled concurrently with
// deterministic results.
std::uint64_t derive_pair_seed(std::uint64_t global_seed, const FrameId& a,
                               const FrameId& b);

// Bit k is Bernoulli with p_k = exp(-gamma * delta(x1_k, x2_k)). Degenerate
// draws (all-equal) are resampled up to 16 times, then the bit with the
// largest element distance is force-flipped.
MixMask sample_mask(const std::vector<FeatureVector>& x1,
                    const std::vector<FeatureVector>& x2, double gamma,
                    std::uint64_t seed);

// First output takes element k from e1 where bits[k] = 1, else from e2; the
// second output is the complement. Together they repartition the parents'
// elements exactly, one per role.
std::pair<MinedFrame, MinedFrame> mix_frames(const Frame& e1, const Frame& e2,
                                             const MixMask& mask,
                                             const FrameSchema& schema);

struct MixPair {
  FrameId source;
  FrameId candidate;
  MixMask mask;
};

// Inserts both mined frames of every pair; |E| grows by 2 per pair and the
// vertex set is unchanged. Returns the mined frames in insertion order.
std::vector<MinedFrame> augment(Hypergraph& g, const std::vector<MixPair>& pairs);

}  // namespace framemix
