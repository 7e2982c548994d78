// SPDX-License-Identifier: Apache-2.0
#include "promogen/anchor_filter.h"

#include "promogen/errors.h"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace promogen {

namespace {

void checkParams(const FilterParams& p) {
  if (p.frames < 1 || p.count < 1 || p.minGap < 0) {
    throw Error("filter params need frames >= 1, count >= 1, minGap >= 0 (got " + std::to_string(p.frames) + ", " +
                std::to_string(p.count) + ", " + std::to_string(p.minGap) + ")");
  }
}

} // namespace

long FilterParams::slack() const {
  return static_cast<long>(frames) - (static_cast<long>(count) + static_cast<long>(count - 1) * minGap);
}

long FilterParams::virtualPoolSize() const {
  return slack() + count;
}

bool FilterParams::feasible() const {
  return frames >= 1 && count >= 1 && minGap >= 0 && slack() >= 0;
}

std::uint64_t countValid(const FilterParams& params) {
  if (!params.feasible()) {
    return 0;
  }
  const std::uint64_t n = static_cast<std::uint64_t>(params.virtualPoolSize());
  std::uint64_t k = static_cast<std::uint64_t>(params.count);
  k = std::min(k, n - k);
  unsigned __int128 c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // c * (n - k + i) / i stays integral at every step.
    c = c * (n - k + i) / i;
    if (c > std::numeric_limits<std::uint64_t>::max()) {
      throw std::overflow_error("placement count exceeds 64 bits");
    }
  }
  return static_cast<std::uint64_t>(c);
}

std::vector<int> intervalIncrements(const VirtualSelection& selection) {
  const auto& p = selection.positions;
  std::vector<int> deltas(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    deltas[i] = i == 0 ? p[0] - 1 : p[i] - p[i - 1] - 1;
  }
  return deltas;
}

std::vector<int> mapVirtual(const VirtualSelection& selection, int minGap) {
  const auto& p = selection.positions;
  std::vector<int> out(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    out[j] = (p[j] - 1) + static_cast<int>(j) * minGap;
  }
  return out;
}

std::vector<int> mapVirtualRecurrence(const VirtualSelection& selection, int minGap) {
  const std::vector<int> deltas = intervalIncrements(selection);
  std::vector<int> out(deltas.size());
  for (std::size_t j = 0; j < deltas.size(); ++j) {
    out[j] = j == 0 ? deltas[0] : out[j - 1] + minGap + deltas[j] + 1;
  }
  return out;
}

VirtualSelection sampleVirtual(const FilterParams& params, std::mt19937_64& rng) {
  checkParams(params);
  if (!params.feasible()) {
    throw Infeasible("no placement of " + std::to_string(params.count) + " anchors with gap > " +
                     std::to_string(params.minGap) + " fits in " + std::to_string(params.frames) + " frames");
  }
  const int pool = static_cast<int>(params.virtualPoolSize());
  std::vector<int> values(static_cast<std::size_t>(pool));
  std::iota(values.begin(), values.end(), 1);
  for (int i = 0; i < params.count; ++i) {
    std::uniform_int_distribution<int> pick(i, pool - 1);
    std::swap(values[static_cast<std::size_t>(i)], values[static_cast<std::size_t>(pick(rng))]);
  }
  values.resize(static_cast<std::size_t>(params.count));
  std::sort(values.begin(), values.end());
  return VirtualSelection{std::move(values), pool};
}

std::vector<int> sampleAnchors(const FilterParams& params, std::mt19937_64& rng) {
  return mapVirtual(sampleVirtual(params, rng), params.minGap);
}

bool satisfiesGap(const std::vector<int>& positions, int frames, int minGap) {
  for (std::size_t k = 0; k < positions.size(); ++k) {
    if (positions[k] < 0 || positions[k] >= frames) {
      return false;
    }
    if (k > 0 && positions[k] - positions[k - 1] < minGap + 1) {
      return false;
    }
  }
  return true;
}

} // namespace promogen
