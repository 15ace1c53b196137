#include "motionqa/weights_file.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include "motionqa/error.hpp"

namespace motionqa {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path manifest_path(const fs::path& stem) { return fs::path(stem.string() + ".json"); }
fs::path payload_path(const fs::path& stem) { return fs::path(stem.string() + ".f32"); }

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

static_assert(std::endian::native == std::endian::little,
              "weight payloads are written in native order; big-endian hosts need a swap");

}  // namespace

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

const NamedTensor& WeightFile::tensor(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  fail(ErrorCode::FormatError, "weights file has no tensor '" + name + "'");
}

void save_weight_file(const WeightFile& file, const fs::path& stem) {
  json manifest = file.header;
  manifest["format"] = "motionqa-weights";
  manifest["version"] = 1;
  manifest["block_type"] = file.block_type;
  manifest["payload"] = payload_path(stem).filename().string();
  json entries = json::array();
  std::vector<char> bytes;
  for (const auto& t : file.tensors) {
    if (element_count(t.shape) != t.values.size())
      fail(ErrorCode::InvalidArgument, "tensor '" + t.name + "' does not match its shape");
    entries.push_back({{"name", t.name}, {"shape", t.shape}});
    for (double v : t.values) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      char raw[4];
      std::memcpy(raw, &bits, 4);
      bytes.insert(bytes.end(), raw, raw + 4);
    }
  }
  manifest["tensors"] = entries;

  std::ofstream m(manifest_path(stem), std::ios::trunc);
  if (!m) fail(ErrorCode::IoError, "cannot write " + manifest_path(stem).string());
  m << manifest.dump(2) << '\n';
  std::ofstream p(payload_path(stem), std::ios::binary | std::ios::trunc);
  if (!p) fail(ErrorCode::IoError, "cannot write " + payload_path(stem).string());
  p.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!m || !p) fail(ErrorCode::IoError, "failed writing weights " + stem.string());
}

WeightFile load_weight_file(const fs::path& stem) {
  std::ifstream m(manifest_path(stem));
  if (!m) fail(ErrorCode::IoError, "cannot read " + manifest_path(stem).string());
  json manifest;
  try {
    manifest = json::parse(m);
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, manifest_path(stem).string() + ": " + e.what());
  }
  if (manifest.value("format", std::string{}) != "motionqa-weights" ||
      manifest.value("version", 0) != 1)
    fail(ErrorCode::FormatError, "not a version 1 weights manifest: " + manifest_path(stem).string());

  std::ifstream p(payload_path(stem), std::ios::binary);
  if (!p) fail(ErrorCode::IoError, "cannot read " + payload_path(stem).string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(p)), std::istreambuf_iterator<char>());

  WeightFile file;
  file.block_type = manifest.value("block_type", std::string{});
  std::size_t offset = 0;
  try {
    for (const auto& entry : manifest.at("tensors")) {
      NamedTensor t;
      t.name = entry.at("name").get<std::string>();
      t.shape = entry.at("shape").get<std::vector<std::size_t>>();
      const std::size_t n = element_count(t.shape);
      if (offset + 4 * n > bytes.size())
        fail(ErrorCode::DimMismatch, "weights payload is shorter than the manifest declares");
      t.values.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, bytes.data() + offset + 4 * i, 4);
        t.values[i] = std::bit_cast<float>(bits);
      }
      offset += 4 * n;
      file.tensors.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, std::string("weights manifest: ") + e.what());
  }
  if (offset != bytes.size())
    fail(ErrorCode::DimMismatch, "weights payload is longer than the manifest declares");
  for (const char* key : {"format", "version", "block_type", "payload", "tensors"}) manifest.erase(key);
  file.header = std::move(manifest);
  return file;
}

}  // namespace motionqa
