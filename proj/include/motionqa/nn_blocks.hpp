#pragma once

#include <cstdint>
#include <filesystem>

#include "motionqa/tensor.hpp"

namespace motionqa {

/// Parallel 3x3 / 5x5 / 7x7 branches (C -> C each), concatenated and fused
/// back to C channels by a 1x1 convolution.
struct MultiscaleWeights {
  ConvWeights branch3;
  ConvWeights branch5;
  ConvWeights branch7;
  ConvWeights fuse;  // 3C -> C, kernel 1

  static MultiscaleWeights zeros(std::size_t channels);
  /// Every branch a centred delta, fusion averaging the three copies.
  static MultiscaleWeights identity(std::size_t channels);
  static MultiscaleWeights seeded(std::size_t channels, std::uint64_t seed);
  std::size_t channels() const { return fuse.out_channels; }
  void validate() const;
};

/// Squeeze-and-excitation gate: fc1 is (C/r x C), fc2 is (C x C/r), both
/// row-major.
struct ChannelAttentionWeights {
  std::size_t channels = 0;
  std::size_t reduction = 16;
  std::vector<double> fc1;
  std::vector<double> bias1;
  std::vector<double> fc2;
  std::vector<double> bias2;

  /// Throws InvalidArgument unless reduction >= 1 and divides channels.
  static ChannelAttentionWeights zeros(std::size_t channels, std::size_t reduction = 16);
  static ChannelAttentionWeights seeded(std::size_t channels, std::size_t reduction,
                                        std::uint64_t seed);
  std::size_t hidden() const { return channels / reduction; }
  void validate() const;
};

/// 3x3 convolution over the [max; mean] channel descriptor (2 -> 1).
struct SpatialAttentionWeights {
  ConvWeights conv;

  static SpatialAttentionWeights zeros();
  static SpatialAttentionWeights seeded(std::uint64_t seed);
};

struct ResidualWeights {
  ConvWeights first;   // C -> C, 3x3
  ConvWeights second;  // C -> C, 3x3

  static ResidualWeights zeros(std::size_t channels);
  static ResidualWeights seeded(std::size_t channels, std::uint64_t seed);
};

struct MsaWeights {
  ChannelAttentionWeights channel;
  SpatialAttentionWeights spatial;
};

Tensor3 multiscale_recovery(const Tensor3& x, const MultiscaleWeights& w);

/// Channel attention gate values a in (0,1)^C for input x.
std::vector<double> channel_attention_gate(const Tensor3& x, const ChannelAttentionWeights& w);
Tensor3 channel_attention(const Tensor3& x, const ChannelAttentionWeights& w);

/// Spatial mask m in (0,1)^{H x W}, returned as a 1-channel tensor.
Tensor3 spatial_attention_mask(const Tensor3& x, const SpatialAttentionWeights& w);
Tensor3 spatial_attention(const Tensor3& x, const SpatialAttentionWeights& w);

/// y = x + conv(relu(conv(x))).
Tensor3 residual_block(const Tensor3& x, const ResidualWeights& w);

/// Channel attention followed by spatial attention.
Tensor3 msa_block(const Tensor3& x, const MsaWeights& w);

void save_block(const MultiscaleWeights& w, const std::filesystem::path& stem);
void save_block(const ChannelAttentionWeights& w, const std::filesystem::path& stem);
void save_block(const SpatialAttentionWeights& w, const std::filesystem::path& stem);
void save_block(const ResidualWeights& w, const std::filesystem::path& stem);
MultiscaleWeights load_multiscale(const std::filesystem::path& stem);
ChannelAttentionWeights load_channel_attention(const std::filesystem::path& stem);
SpatialAttentionWeights load_spatial_attention(const std::filesystem::path& stem);
ResidualWeights load_residual(const std::filesystem::path& stem);

}  // namespace motionqa
