// SPDX-License-Identifier: Apache-2.0
//
// Uniform sampling of anchor frame placements under a minimum-gap constraint.
//
// Placing `count` anchors in a sequence of `frames` frames with every pair of
// consecutive anchors at least `minGap + 1` frames apart leaves
//   slack = frames - (count + (count - 1) * minGap)
// free frames. Each valid placement corresponds to exactly one `count`-subset
// of the "virtual" positions {1, ..., slack + count}: the j-th chosen virtual
// position p_j maps to frame (p_j - 1) + (j - 1) * minGap. Sampling a uniform
// subset therefore samples a uniform valid placement.
#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace promogen {

struct FilterParams {
  int frames = 0;  // sequence length N
  int count = 0;   // temporal density, anchors per sequence
  int minGap = 0;  // interval elasticity; consecutive anchors differ by > minGap

  /// frames - (count + (count - 1) * minGap); negative when infeasible.
  long slack() const;
  /// slack + count: size of the virtual position pool.
  long virtualPoolSize() const;
  bool feasible() const;
};

/// Strictly increasing 1-based virtual positions drawn from [1, poolSize].
struct VirtualSelection {
  std::vector<int> positions;
  int poolSize = 0;
};

/// Number of valid placements, C(slack + count, count); 0 when infeasible.
/// Throws std::overflow_error if the count does not fit in 64 bits.
std::uint64_t countValid(const FilterParams& params);

/// Slack distributed before each anchor: d_0 = p_1 - 1, d_i = p_{i+1} - p_i - 1.
std::vector<int> intervalIncrements(const VirtualSelection& selection);

/// Closed form: frame_j = (p_j - 1) + (j - 1) * minGap, 0-based.
std::vector<int> mapVirtual(const VirtualSelection& selection, int minGap);

/// Recurrence: frame_1 = d_0, frame_j = frame_{j-1} + minGap + d_{j-1} + 1.
std::vector<int> mapVirtualRecurrence(const VirtualSelection& selection, int minGap);

/// Uniform `count`-subset of [1, poolSize] via partial Fisher-Yates, sorted.
VirtualSelection sampleVirtual(const FilterParams& params, std::mt19937_64& rng);

/// Uniform valid placement, 0-based. Throws Infeasible when slack < 0, Error on bad params.
std::vector<int> sampleAnchors(const FilterParams& params, std::mt19937_64& rng);

/// True iff positions are strictly increasing, inside [0, frames) and spaced > minGap apart.
bool satisfiesGap(const std::vector<int>& positions, int frames, int minGap);

} // namespace promogen
