// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "promogen/config.h"
#include "promogen/parameters.h"

#include <filesystem>

namespace promogen {

inline constexpr int kCheckpointVersion = 1;

enum class TensorPrecision { kFloat32, kFloat64 };

struct Checkpoint {
  Config config;
  ParameterSet model;
  ParameterSet discriminator;
};

/// One JSON manifest line (config, tensor table, payload CRC-32) followed by the
/// little-endian tensor payload. Float32 storage is exact for float-representable values.
void saveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint,
                    TensorPrecision precision = TensorPrecision::kFloat32);

/// Throws VersionError, ChecksumError or FormatError.
Checkpoint loadCheckpoint(const std::filesystem::path& path);

} // namespace promogen
