#include "motionqa/nn_blocks.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "motionqa/error.hpp"
#include "motionqa/rng.hpp"
#include "motionqa/weights_file.hpp"

namespace motionqa {
namespace {

void fill_uniform(std::vector<double>& v, double bound, Rng& rng) {
  for (double& x : v) x = to_f32(rng.uniform(-bound, bound));
}

ConvWeights seeded_conv(std::size_t out, std::size_t in, std::size_t k, Rng& rng) {
  auto w = ConvWeights::zeros(out, in, k);
  const double fan_in = static_cast<double>(in * k * k);
  fill_uniform(w.kernel_data, std::sqrt(6.0 / fan_in), rng);
  fill_uniform(w.bias, 1.0 / std::sqrt(fan_in), rng);
  return w;
}

void require_min_extent(const Tensor3& x, std::size_t n, const char* block) {
  if (x.height() < n || x.width() < n)
    fail(ErrorCode::ShapeUnderflow, std::string(block) + " needs H, W >= " + std::to_string(n) +
                                        ", got " + std::to_string(x.height()) + "x" +
                                        std::to_string(x.width()));
}

NamedTensor conv_tensor(const std::string& name, const ConvWeights& w) {
  return {name + ".kernel", {w.out_channels, w.in_channels, w.kernel, w.kernel}, w.kernel_data};
}

ConvWeights conv_from(const WeightFile& f, const std::string& name) {
  const auto& k = f.tensor(name + ".kernel");
  if (k.shape.size() != 4 || k.shape[2] != k.shape[3])
    fail(ErrorCode::FormatError, name + ".kernel must have shape (out, in, k, k)");
  ConvWeights w;
  w.out_channels = k.shape[0];
  w.in_channels = k.shape[1];
  w.kernel = k.shape[2];
  w.kernel_data = k.values;
  w.bias = f.tensor(name + ".bias").values;
  w.validate();
  return w;
}

void push_conv(WeightFile& f, const std::string& name, const ConvWeights& w) {
  f.tensors.push_back(conv_tensor(name, w));
  f.tensors.push_back({name + ".bias", {w.out_channels}, w.bias});
}

WeightFile load_tagged(const std::filesystem::path& stem, const std::string& tag) {
  auto f = load_weight_file(stem);
  if (f.block_type != tag)
    fail(ErrorCode::FormatError, "expected block type '" + tag + "', found '" + f.block_type + "'");
  return f;
}

}  // namespace

MultiscaleWeights MultiscaleWeights::zeros(std::size_t c) {
  return {ConvWeights::zeros(c, c, 3), ConvWeights::zeros(c, c, 5), ConvWeights::zeros(c, c, 7),
          ConvWeights::zeros(c, 3 * c, 1)};
}

MultiscaleWeights MultiscaleWeights::identity(std::size_t c) {
  auto w = zeros(c);
  for (std::size_t i = 0; i < c; ++i) {
    w.branch3.k(i, i, 1, 1) = 1.0;
    w.branch5.k(i, i, 2, 2) = 1.0;
    w.branch7.k(i, i, 3, 3) = 1.0;
    for (std::size_t b = 0; b < 3; ++b) w.fuse.k(i, b * c + i, 0, 0) = 1.0 / 3.0;
  }
  return w;
}

MultiscaleWeights MultiscaleWeights::seeded(std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  MultiscaleWeights w;
  w.branch3 = seeded_conv(c, c, 3, rng);
  w.branch5 = seeded_conv(c, c, 5, rng);
  w.branch7 = seeded_conv(c, c, 7, rng);
  w.fuse = seeded_conv(c, 3 * c, 1, rng);
  return w;
}

void MultiscaleWeights::validate() const {
  const std::size_t c = fuse.out_channels;
  const bool ok = branch3.kernel == 3 && branch5.kernel == 5 && branch7.kernel == 7 &&
                  fuse.kernel == 1 && fuse.in_channels == 3 * c;
  const bool channels_ok = branch3.in_channels == c && branch3.out_channels == c &&
                           branch5.in_channels == c && branch5.out_channels == c &&
                           branch7.in_channels == c && branch7.out_channels == c;
  if (!ok || !channels_ok)
    fail(ErrorCode::InvalidArgument, "multiscale weights have inconsistent shapes");
}

ChannelAttentionWeights ChannelAttentionWeights::zeros(std::size_t channels, std::size_t reduction) {
  ChannelAttentionWeights w;
  w.channels = channels;
  w.reduction = reduction;
  if (reduction == 0 || channels == 0 || channels % reduction != 0)
    fail(ErrorCode::InvalidArgument, "reduction ratio " + std::to_string(reduction) +
                                         " must be >= 1 and divide " + std::to_string(channels) +
                                         " channels");
  const std::size_t h = channels / reduction;
  w.fc1.assign(h * channels, 0.0);
  w.bias1.assign(h, 0.0);
  w.fc2.assign(channels * h, 0.0);
  w.bias2.assign(channels, 0.0);
  return w;
}

ChannelAttentionWeights ChannelAttentionWeights::seeded(std::size_t channels, std::size_t reduction,
                                                        std::uint64_t seed) {
  auto w = zeros(channels, reduction);
  Rng rng(seed);
  fill_uniform(w.fc1, std::sqrt(6.0 / static_cast<double>(channels)), rng);
  fill_uniform(w.bias1, 1.0 / std::sqrt(static_cast<double>(channels)), rng);
  fill_uniform(w.fc2, std::sqrt(6.0 / static_cast<double>(w.hidden())), rng);
  fill_uniform(w.bias2, 1.0 / std::sqrt(static_cast<double>(w.hidden())), rng);
  return w;
}

void ChannelAttentionWeights::validate() const {
  if (reduction == 0 || channels == 0 || channels % reduction != 0)
    fail(ErrorCode::InvalidArgument, "reduction ratio must be >= 1 and divide the channel count");
  const std::size_t h = hidden();
  if (fc1.size() != h * channels || bias1.size() != h || fc2.size() != channels * h ||
      bias2.size() != channels)
    fail(ErrorCode::InvalidArgument, "channel attention weights have inconsistent shapes");
}

SpatialAttentionWeights SpatialAttentionWeights::zeros() { return {ConvWeights::zeros(1, 2, 3)}; }

SpatialAttentionWeights SpatialAttentionWeights::seeded(std::uint64_t seed) {
  Rng rng(seed);
  return {seeded_conv(1, 2, 3, rng)};
}

ResidualWeights ResidualWeights::zeros(std::size_t c) {
  return {ConvWeights::zeros(c, c, 3), ConvWeights::zeros(c, c, 3)};
}

ResidualWeights ResidualWeights::seeded(std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  ResidualWeights w;
  w.first = seeded_conv(c, c, 3, rng);
  w.second = seeded_conv(c, c, 3, rng);
  return w;
}

Tensor3 multiscale_recovery(const Tensor3& x, const MultiscaleWeights& w) {
  w.validate();
  require_min_extent(x, 7, "multiscale_recovery");
  const std::size_t c = x.channels();
  const Tensor3 b3 = conv2d_same(x, w.branch3);
  const Tensor3 b5 = conv2d_same(x, w.branch5);
  const Tensor3 b7 = conv2d_same(x, w.branch7);
  Tensor3 cat(3 * c, x.height(), x.width());
  const std::size_t plane = x.height() * x.width();
  auto dst = cat.data();
  std::copy(b3.data().begin(), b3.data().end(), dst.begin());
  std::copy(b5.data().begin(), b5.data().end(), dst.begin() + static_cast<std::ptrdiff_t>(c * plane));
  std::copy(b7.data().begin(), b7.data().end(), dst.begin() + static_cast<std::ptrdiff_t>(2 * c * plane));
  return conv2d_same(cat, w.fuse);
}

std::vector<double> channel_attention_gate(const Tensor3& x, const ChannelAttentionWeights& w) {
  w.validate();
  if (x.channels() != w.channels)
    fail(ErrorCode::DimMismatch, "channel attention expects " + std::to_string(w.channels) +
                                     " channels, got " + std::to_string(x.channels()));
  const std::size_t c = w.channels, h = w.hidden();
  std::vector<double> pooled(c);
  for (std::size_t i = 0; i < c; ++i) {
    double sum = 0.0;
    for (double v : x.channel(i)) sum += v;
    pooled[i] = sum / static_cast<double>(x.height() * x.width());
  }
  std::vector<double> hidden(h);
  for (std::size_t j = 0; j < h; ++j) {
    double acc = w.bias1[j];
    for (std::size_t i = 0; i < c; ++i) acc += w.fc1[j * c + i] * pooled[i];
    hidden[j] = std::max(acc, 0.0);
  }
  std::vector<double> gate(c);
  for (std::size_t i = 0; i < c; ++i) {
    double acc = w.bias2[i];
    for (std::size_t j = 0; j < h; ++j) acc += w.fc2[i * h + j] * hidden[j];
    gate[i] = sigmoid(acc);
  }
  return gate;
}

Tensor3 channel_attention(const Tensor3& x, const ChannelAttentionWeights& w) {
  const auto gate = channel_attention_gate(x, w);
  Tensor3 out = x;
  for (std::size_t c = 0; c < x.channels(); ++c)
    for (std::size_t y = 0; y < x.height(); ++y)
      for (std::size_t xx = 0; xx < x.width(); ++xx) out(c, y, xx) *= gate[c];
  return out;
}

Tensor3 spatial_attention_mask(const Tensor3& x, const SpatialAttentionWeights& w) {
  require_min_extent(x, 3, "spatial_attention");
  if (w.conv.in_channels != 2 || w.conv.out_channels != 1 || w.conv.kernel != 3)
    fail(ErrorCode::InvalidArgument, "spatial attention needs a 2 -> 1 3x3 convolution");
  Tensor3 desc(2, x.height(), x.width());
  for (std::size_t y = 0; y < x.height(); ++y)
    for (std::size_t xx = 0; xx < x.width(); ++xx) {
      double mx = x(0, y, xx), sum = 0.0;
      for (std::size_t c = 0; c < x.channels(); ++c) {
        mx = std::max(mx, x(c, y, xx));
        sum += x(c, y, xx);
      }
      desc(0, y, xx) = mx;
      desc(1, y, xx) = sum / static_cast<double>(x.channels());
    }
  Tensor3 mask = conv2d_same(desc, w.conv);
  for (double& v : mask.data()) v = sigmoid(v);
  return mask;
}

Tensor3 spatial_attention(const Tensor3& x, const SpatialAttentionWeights& w) {
  const Tensor3 mask = spatial_attention_mask(x, w);
  Tensor3 out = x;
  for (std::size_t c = 0; c < x.channels(); ++c)
    for (std::size_t y = 0; y < x.height(); ++y)
      for (std::size_t xx = 0; xx < x.width(); ++xx) out(c, y, xx) *= mask(0, y, xx);
  return out;
}

Tensor3 residual_block(const Tensor3& x, const ResidualWeights& w) {
  require_min_extent(x, 3, "residual_block");
  if (w.first.kernel != 3 || w.second.kernel != 3)
    fail(ErrorCode::InvalidArgument, "residual block convolutions must be 3x3");
  Tensor3 branch = conv2d_same(x, w.first);
  relu_inplace(branch);
  branch = conv2d_same(branch, w.second);
  if (!branch.same_shape(x))
    fail(ErrorCode::DimMismatch, "residual branch must map C channels back to C");
  Tensor3 out = x;
  auto o = out.data();
  const auto b = branch.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += b[i];
  return out;
}

Tensor3 msa_block(const Tensor3& x, const MsaWeights& w) {
  return spatial_attention(channel_attention(x, w.channel), w.spatial);
}

void save_block(const MultiscaleWeights& w, const std::filesystem::path& stem) {
  WeightFile f;
  f.block_type = "multiscale_recovery";
  f.header["channels"] = w.channels();
  push_conv(f, "branch3", w.branch3);
  push_conv(f, "branch5", w.branch5);
  push_conv(f, "branch7", w.branch7);
  push_conv(f, "fuse", w.fuse);
  save_weight_file(f, stem);
}

void save_block(const ChannelAttentionWeights& w, const std::filesystem::path& stem) {
  WeightFile f;
  f.block_type = "channel_attention";
  f.header["channels"] = w.channels;
  f.header["reduction"] = w.reduction;
  f.tensors.push_back({"fc1.weight", {w.hidden(), w.channels}, w.fc1});
  f.tensors.push_back({"fc1.bias", {w.hidden()}, w.bias1});
  f.tensors.push_back({"fc2.weight", {w.channels, w.hidden()}, w.fc2});
  f.tensors.push_back({"fc2.bias", {w.channels}, w.bias2});
  save_weight_file(f, stem);
}

void save_block(const SpatialAttentionWeights& w, const std::filesystem::path& stem) {
  WeightFile f;
  f.block_type = "spatial_attention";
  push_conv(f, "conv", w.conv);
  save_weight_file(f, stem);
}

void save_block(const ResidualWeights& w, const std::filesystem::path& stem) {
  WeightFile f;
  f.block_type = "residual";
  push_conv(f, "first", w.first);
  push_conv(f, "second", w.second);
  save_weight_file(f, stem);
}

MultiscaleWeights load_multiscale(const std::filesystem::path& stem) {
  const auto f = load_tagged(stem, "multiscale_recovery");
  MultiscaleWeights w{conv_from(f, "branch3"), conv_from(f, "branch5"), conv_from(f, "branch7"),
                      conv_from(f, "fuse")};
  w.validate();
  return w;
}

ChannelAttentionWeights load_channel_attention(const std::filesystem::path& stem) {
  const auto f = load_tagged(stem, "channel_attention");
  ChannelAttentionWeights w;
  w.channels = f.header.value("channels", std::size_t{0});
  w.reduction = f.header.value("reduction", std::size_t{0});
  w.fc1 = f.tensor("fc1.weight").values;
  w.bias1 = f.tensor("fc1.bias").values;
  w.fc2 = f.tensor("fc2.weight").values;
  w.bias2 = f.tensor("fc2.bias").values;
  w.validate();
  return w;
}

SpatialAttentionWeights load_spatial_attention(const std::filesystem::path& stem) {
  return {conv_from(load_tagged(stem, "spatial_attention"), "conv")};
}

ResidualWeights load_residual(const std::filesystem::path& stem) {
  const auto f = load_tagged(stem, "residual");
  return {conv_from(f, "first"), conv_from(f, "second")};
}

}  // namespace motionqa
