// SPDX-License-Identifier: Apache-2.0
#include "promogen/checkpoint.h"

#include "promogen/errors.h"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

namespace promogen {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr const char* kMagic = "promogen-checkpoint";

void appendTensors(const ParameterSet& set, const std::string& group, TensorPrecision precision, json& table,
                   std::string& payload) {
  for (const auto& [name, value] : set) {
    table.push_back({{"group", group},
                     {"name", name},
                     {"rows", value.rows()},
                     {"cols", value.cols()},
                     {"offset", payload.size()}});
    // Row-major on disk.
    for (Eigen::Index r = 0; r < value.rows(); ++r) {
      for (Eigen::Index c = 0; c < value.cols(); ++c) {
        if (precision == TensorPrecision::kFloat32) {
          const auto v = static_cast<float>(value(r, c));
          payload.append(reinterpret_cast<const char*>(&v), sizeof v);
        } else {
          const double v = value(r, c);
          payload.append(reinterpret_cast<const char*>(&v), sizeof v);
        }
      }
    }
  }
}

std::uint32_t crc(const std::string& bytes) {
  uLong value = crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    value = crc32(value, reinterpret_cast<const Bytef*>(bytes.data() + done), chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(value);
}

} // namespace

void saveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint, TensorPrecision precision) {
  json table = json::array();
  std::string payload;
  appendTensors(checkpoint.model, "model", precision, table, payload);
  appendTensors(checkpoint.discriminator, "discriminator", precision, table, payload);

  json manifest;
  manifest["format"] = kMagic;
  manifest["version"] = kCheckpointVersion;
  manifest["dtype"] = precision == TensorPrecision::kFloat32 ? "f32" : "f64";
  manifest["config"] = toJson(checkpoint.config);
  manifest["tensors"] = std::move(table);
  manifest["payload_bytes"] = payload.size();
  manifest["crc32"] = crc(payload);

  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write checkpoint " + path.string());
  }
  out << manifest.dump() << '\n';
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) {
    throw Error("failed writing checkpoint " + path.string());
  }
}

Checkpoint loadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open checkpoint " + path.string());
  }
  std::string header;
  if (!std::getline(in, header)) {
    throw FormatError("checkpoint has no manifest line");
  }
  json manifest;
  try {
    manifest = json::parse(header);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("checkpoint manifest: ") + e.what());
  }
  if (!manifest.is_object() || manifest.value("format", "") != kMagic) {
    throw FormatError("not a checkpoint file: " + path.string());
  }
  const int version = manifest.value("version", -1);
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  }
  const std::string dtype = manifest.value("dtype", "");
  if (dtype != "f32" && dtype != "f64") {
    throw FormatError("unknown tensor dtype '" + dtype + "'");
  }
  const std::size_t width = dtype == "f32" ? sizeof(float) : sizeof(double);

  const auto expected = manifest.at("payload_bytes").get<std::size_t>();
  std::string payload(expected, '\0');
  in.read(payload.data(), static_cast<std::streamsize>(expected));
  if (static_cast<std::size_t>(in.gcount()) != expected || in.peek() != std::char_traits<char>::eof()) {
    throw ChecksumError("checkpoint payload size mismatch");
  }
  if (crc(payload) != manifest.at("crc32").get<std::uint32_t>()) {
    throw ChecksumError("checkpoint payload checksum mismatch");
  }

  Checkpoint out;
  try {
    out.config = configFromJson(manifest.at("config"));
    for (const json& t : manifest.at("tensors")) {
      const auto rows = t.at("rows").get<Eigen::Index>();
      const auto cols = t.at("cols").get<Eigen::Index>();
      const auto offset = t.at("offset").get<std::size_t>();
      if (rows < 0 || cols < 0 || offset + static_cast<std::size_t>(rows * cols) * width > payload.size()) {
        throw FormatError("tensor extends past the payload");
      }
      Matrix value(rows, cols);
      const char* src = payload.data() + offset;
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          if (width == sizeof(float)) {
            float v;
            std::memcpy(&v, src, sizeof v);
            value(r, c) = v;
          } else {
            double v;
            std::memcpy(&v, src, sizeof v);
            value(r, c) = v;
          }
          src += width;
        }
      }
      const std::string group = t.at("group").get<std::string>();
      if (group == "model") {
        out.model.set(t.at("name").get<std::string>(), std::move(value));
      } else if (group == "discriminator") {
        out.discriminator.set(t.at("name").get<std::string>(), std::move(value));
      } else {
        throw FormatError("unknown tensor group '" + group + "'");
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint manifest: ") + e.what());
  }
  return out;
}

} // namespace promogen
