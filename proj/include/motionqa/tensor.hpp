#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace motionqa {

/// Feature tensor laid out (channel, row, col).
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t channels, std::size_t height, std::size_t width, double fill = 0.0);
  Tensor3(std::size_t channels, std::size_t height, std::size_t width, std::vector<double> data);

  std::size_t channels() const { return c_; }
  std::size_t height() const { return h_; }
  std::size_t width() const { return w_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * h_ + y) * w_ + x];
  }
  double operator()(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * h_ + y) * w_ + x];
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  std::span<const double> channel(std::size_t c) const {
    return std::span<const double>(data_).subspan(c * h_ * w_, h_ * w_);
  }

  bool same_shape(const Tensor3& o) const { return c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }
  bool operator==(const Tensor3&) const = default;

 private:
  std::size_t c_ = 0, h_ = 0, w_ = 0;
  std::vector<double> data_;
};

/// Square-kernel 2-D convolution parameters, kernel laid out
/// (out_channel, in_channel, ky, kx).
struct ConvWeights {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t kernel = 1;
  std::vector<double> kernel_data;
  std::vector<double> bias;

  static ConvWeights zeros(std::size_t out_channels, std::size_t in_channels, std::size_t kernel);

  double& k(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) {
    return kernel_data[((o * in_channels + i) * kernel + ky) * kernel + kx];
  }
  double k(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const {
    return kernel_data[((o * in_channels + i) * kernel + ky) * kernel + kx];
  }

  /// Throws InvalidArgument when the buffers disagree with the declared shape.
  void validate() const;
};

/// Zero-padded "same" convolution. With stride s the output is
/// ceil(H/s) x ceil(W/s).
Tensor3 conv2d_same(const Tensor3& x, const ConvWeights& w, std::size_t stride = 1);

void relu_inplace(Tensor3& t);
double sigmoid(double v);

/// 2x2 max pooling with floor semantics. Throws ShapeUnderflow when a
/// dimension would drop below 1.
Tensor3 max_pool2(const Tensor3& x);

}  // namespace motionqa
