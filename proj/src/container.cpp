#include "motionqa/container.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "motionqa/error.hpp"

namespace motionqa {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSidecarSuffix = ".mrif.json";
constexpr const char* kPayloadSuffix = ".mrif.raw";

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template <typename UInt>
UInt to_little(UInt v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    UInt out = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
      out = static_cast<UInt>((out << 8) | (v & 0xFF));
      v >>= 8;
    }
    return out;
  }
}

std::vector<char> encode_payload(std::span<const double> data, PayloadType dtype) {
  std::vector<char> bytes;
  if (dtype == PayloadType::F32LE) {
    bytes.resize(data.size() * 4);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto bits = to_little(std::bit_cast<std::uint32_t>(static_cast<float>(data[i])));
      std::memcpy(bytes.data() + 4 * i, &bits, 4);
    }
  } else {
    bytes.resize(data.size() * 8);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto bits = to_little(std::bit_cast<std::uint64_t>(data[i]));
      std::memcpy(bytes.data() + 8 * i, &bits, 8);
    }
  }
  return bytes;
}

std::vector<double> decode_payload(const std::vector<char>& bytes, PayloadType dtype,
                                   std::size_t expected) {
  const std::size_t width = dtype == PayloadType::F32LE ? 4 : 8;
  if (bytes.size() % width != 0 || bytes.size() / width != expected)
    fail(ErrorCode::DimMismatch, "payload holds " + std::to_string(bytes.size() / width) +
                                     " scalars, dims require " + std::to_string(expected));
  std::vector<double> out(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    if (dtype == PayloadType::F32LE) {
      std::uint32_t bits;
      std::memcpy(&bits, bytes.data() + 4 * i, 4);
      out[i] = std::bit_cast<float>(to_little(bits));
    } else {
      std::uint64_t bits;
      std::memcpy(&bits, bytes.data() + 8 * i, 8);
      out[i] = std::bit_cast<double>(to_little(bits));
    }
  }
  return out;
}

const char* dtype_name(PayloadType t) { return t == PayloadType::F32LE ? "f32le" : "f64le"; }

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) fail(ErrorCode::FormatError, std::string("sidecar missing '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, std::string("sidecar field '") + key + "': " + e.what());
  }
}

}  // namespace

MrifPaths mrif_paths(const fs::path& stem) {
  return {fs::path(stem.string() + kSidecarSuffix), fs::path(stem.string() + kPayloadSuffix)};
}

json meta_to_json(const VolumeMeta& meta) {
  json j;
  j["patient_id"] = meta.patient_id;
  j["modality"] = to_string(meta.modality);
  j["center"] = meta.center;
  j["severity_label"] = meta.severity_label ? json(to_string(*meta.severity_label)) : json(nullptr);
  j["is_corrupted"] = meta.is_corrupted;
  return j;
}

VolumeMeta meta_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::FormatError, "meta must be an object");
  VolumeMeta meta;
  meta.patient_id = field<std::string>(j, "patient_id");
  meta.modality = parse_modality(field<std::string>(j, "modality"));
  meta.center = j.value("center", std::string{});
  if (j.contains("severity_label") && !j["severity_label"].is_null())
    meta.severity_label = parse_severity(field<std::string>(j, "severity_label"));
  meta.is_corrupted = j.value("is_corrupted", false);
  meta.validate();
  return meta;
}

void save_volume(const Volume& v, const fs::path& stem, PayloadType dtype) {
  v.meta().validate();
  const auto paths = mrif_paths(stem);
  json sidecar;
  sidecar["magic"] = "MRIF";
  sidecar["version"] = 1;
  sidecar["dims"] = {v.dims().nz, v.dims().ny, v.dims().nx};
  sidecar["spacing"] = {v.spacing().dz, v.spacing().dy, v.spacing().dx};
  sidecar["dtype"] = dtype_name(dtype);
  sidecar["meta"] = meta_to_json(v.meta());

  std::ofstream side(paths.sidecar, std::ios::binary | std::ios::trunc);
  if (!side) fail(ErrorCode::IoError, "cannot write " + paths.sidecar.string());
  side << sidecar.dump(2) << '\n';
  if (!side) fail(ErrorCode::IoError, "write failed for " + paths.sidecar.string());

  const auto bytes = encode_payload(v.data(), dtype);
  std::ofstream raw(paths.payload, std::ios::binary | std::ios::trunc);
  if (!raw) fail(ErrorCode::IoError, "cannot write " + paths.payload.string());
  raw.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!raw) fail(ErrorCode::IoError, "write failed for " + paths.payload.string());
}

Volume load_volume(const fs::path& stem) {
  const auto paths = mrif_paths(stem);
  std::ifstream side(paths.sidecar, std::ios::binary);
  if (!side) fail(ErrorCode::IoError, "cannot read " + paths.sidecar.string());
  json sidecar;
  try {
    sidecar = json::parse(side);
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, paths.sidecar.string() + ": " + e.what());
  }
  if (!sidecar.is_object() || sidecar.value("magic", std::string{}) != "MRIF")
    fail(ErrorCode::FormatError, "bad magic in " + paths.sidecar.string());
  if (field<int>(sidecar, "version") != 1)
    fail(ErrorCode::FormatError, "unsupported MRIF version in " + paths.sidecar.string());

  const auto dims = field<std::vector<std::size_t>>(sidecar, "dims");
  const auto spacing = field<std::vector<double>>(sidecar, "spacing");
  if (dims.size() != 3 || spacing.size() != 3)
    fail(ErrorCode::FormatError, "dims and spacing must have three entries");
  const auto dtype_text = field<std::string>(sidecar, "dtype");
  PayloadType dtype;
  if (dtype_text == "f32le") dtype = PayloadType::F32LE;
  else if (dtype_text == "f64le") dtype = PayloadType::F64LE;
  else fail(ErrorCode::FormatError, "unsupported dtype '" + dtype_text + "'");
  const VolumeMeta meta = meta_from_json(field<json>(sidecar, "meta"));

  std::ifstream raw(paths.payload, std::ios::binary);
  if (!raw) fail(ErrorCode::IoError, "cannot read " + paths.payload.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(raw)), std::istreambuf_iterator<char>());

  const Dims d{dims[0], dims[1], dims[2]};
  if (d.nz == 0 || d.ny == 0 || d.nx == 0)
    fail(ErrorCode::FormatError, "dims must be positive");
  return Volume(d, decode_payload(bytes, dtype, d.count()), Spacing{spacing[0], spacing[1], spacing[2]},
                meta);
}

std::vector<std::string> list_volume_ids(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorCode::IoError, "not a directory: " + dir.string());
  std::vector<std::string> ids;
  const std::string suffix = kSidecarSuffix;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      ids.push_back(name.substr(0, name.size() - suffix.size()));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

bool volume_exists(const fs::path& stem) {
  const auto paths = mrif_paths(stem);
  return fs::exists(paths.sidecar) && fs::exists(paths.payload);
}

}  // namespace motionqa
