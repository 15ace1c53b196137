#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "motionqa/volume.hpp"

namespace motionqa {

/// Payload element type of an MRIF container.
///
/// f32le is the default. f64le exists for callers that need load(save(v))
/// to be bit-exact for arbitrary doubles; f32le is bit-exact only for values
/// representable in single precision.
enum class PayloadType { F32LE, F64LE };

/// MRIF v1: `<stem>.mrif.json` sidecar plus `<stem>.mrif.raw` payload.
struct MrifPaths {
  std::filesystem::path sidecar;
  std::filesystem::path payload;
};

MrifPaths mrif_paths(const std::filesystem::path& stem);

nlohmann::json meta_to_json(const VolumeMeta& meta);
VolumeMeta meta_from_json(const nlohmann::json& j);

/// Writes the sidecar and the payload. Throws IoError when either file
/// cannot be written.
void save_volume(const Volume& v, const std::filesystem::path& stem,
                 PayloadType dtype = PayloadType::F32LE);

/// Throws FormatError on a bad sidecar (magic, version, dtype, meta) and
/// DimMismatch when the payload length disagrees with the dims.
Volume load_volume(const std::filesystem::path& stem);

/// Ids (file stems without the .mrif.json suffix) of every volume in a
/// directory, sorted.
std::vector<std::string> list_volume_ids(const std::filesystem::path& dir);

bool volume_exists(const std::filesystem::path& stem);

}  // namespace motionqa
