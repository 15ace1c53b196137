#include "motionqa/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "motionqa/error.hpp"

namespace motionqa {

Tensor3::Tensor3(std::size_t channels, std::size_t height, std::size_t width, double fill)
    : c_(channels), h_(height), w_(width), data_(channels * height * width, fill) {
  if (c_ == 0 || h_ == 0 || w_ == 0)
    fail(ErrorCode::ShapeUnderflow, "tensor dimensions must be >= 1");
}

Tensor3::Tensor3(std::size_t channels, std::size_t height, std::size_t width,
                 std::vector<double> data)
    : c_(channels), h_(height), w_(width), data_(std::move(data)) {
  if (c_ == 0 || h_ == 0 || w_ == 0)
    fail(ErrorCode::ShapeUnderflow, "tensor dimensions must be >= 1");
  if (data_.size() != c_ * h_ * w_)
    fail(ErrorCode::DimMismatch, "tensor payload size does not match its shape");
}

ConvWeights ConvWeights::zeros(std::size_t out_channels, std::size_t in_channels,
                               std::size_t kernel) {
  ConvWeights w;
  w.out_channels = out_channels;
  w.in_channels = in_channels;
  w.kernel = kernel;
  w.kernel_data.assign(out_channels * in_channels * kernel * kernel, 0.0);
  w.bias.assign(out_channels, 0.0);
  return w;
}

void ConvWeights::validate() const {
  if (out_channels == 0 || in_channels == 0 || kernel == 0)
    fail(ErrorCode::InvalidArgument, "convolution shape must be positive");
  if (kernel % 2 == 0) fail(ErrorCode::InvalidArgument, "convolution kernel size must be odd");
  if (kernel_data.size() != out_channels * in_channels * kernel * kernel ||
      bias.size() != out_channels)
    fail(ErrorCode::InvalidArgument, "convolution buffers do not match the declared shape");
}

Tensor3 conv2d_same(const Tensor3& x, const ConvWeights& w, std::size_t stride) {
  w.validate();
  if (x.channels() != w.in_channels)
    fail(ErrorCode::DimMismatch, "convolution expects " + std::to_string(w.in_channels) +
                                     " input channels, got " + std::to_string(x.channels()));
  if (stride == 0) fail(ErrorCode::InvalidArgument, "stride must be >= 1");
  const std::size_t h = x.height(), wd = x.width(), k = w.kernel;
  const std::size_t oh = (h + stride - 1) / stride, ow = (wd + stride - 1) / stride;
  const auto pad_for = [&](std::size_t in, std::size_t out) {
    const long total = std::max<long>(static_cast<long>((out - 1) * stride + k) - static_cast<long>(in), 0);
    return total / 2;
  };
  const long pad_y = pad_for(h, oh), pad_x = pad_for(wd, ow);

  Tensor3 out(w.out_channels, oh, ow);
  for (std::size_t o = 0; o < w.out_channels; ++o)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = w.bias[o];
        for (std::size_t i = 0; i < w.in_channels; ++i)
          for (std::size_t ky = 0; ky < k; ++ky) {
            const long iy = static_cast<long>(oy * stride + ky) - pad_y;
            if (iy < 0 || iy >= static_cast<long>(h)) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const long ix = static_cast<long>(ox * stride + kx) - pad_x;
              if (ix < 0 || ix >= static_cast<long>(wd)) continue;
              acc += w.k(o, i, ky, kx) *
                     x(i, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
            }
          }
        out(o, oy, ox) = acc;
      }
  return out;
}

void relu_inplace(Tensor3& t) {
  for (double& v : t.data()) v = std::max(v, 0.0);
}

double sigmoid(double v) {
  // Saturates at the nearest representable values inside (0, 1).
  static const double upper = std::nextafter(1.0, 0.0);
  const double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  return std::clamp(s, std::numeric_limits<double>::min(), upper);
}

Tensor3 max_pool2(const Tensor3& x) {
  if (x.height() < 2 || x.width() < 2)
    fail(ErrorCode::ShapeUnderflow, "max pooling would reduce a " + std::to_string(x.height()) +
                                        "x" + std::to_string(x.width()) + " map below 1");
  const std::size_t oh = x.height() / 2, ow = x.width() / 2;
  Tensor3 out(x.channels(), oh, ow);
  for (std::size_t c = 0; c < x.channels(); ++c)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx)
        out(c, y, xx) = std::max({x(c, 2 * y, 2 * xx), x(c, 2 * y, 2 * xx + 1),
                                  x(c, 2 * y + 1, 2 * xx), x(c, 2 * y + 1, 2 * xx + 1)});
  return out;
}

}  // namespace motionqa
