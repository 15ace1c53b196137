#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace motionqa {

struct NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

/// A weights file is a JSON manifest `<stem>.json` and a little-endian f32
/// payload `<stem>.f32` holding the tensors back to back in manifest order.
/// The manifest carries a "block_type" tag plus caller-defined fields.
struct WeightFile {
  std::string block_type;
  nlohmann::json header = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  const NamedTensor& tensor(const std::string& name) const;
};

void save_weight_file(const WeightFile& file, const std::filesystem::path& stem);
WeightFile load_weight_file(const std::filesystem::path& stem);

/// Rounds to the nearest float; weights stored this way roundtrip exactly.
double to_f32(double v);

}  // namespace motionqa
