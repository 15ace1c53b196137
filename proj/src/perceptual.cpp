#include "motionqa/perceptual.hpp"

#include <cmath>

#include "motionqa/error.hpp"
#include "motionqa/rng.hpp"
#include "motionqa/weights_file.hpp"

namespace motionqa {
namespace {

std::string to_string(Nonlinearity n) { return n == Nonlinearity::Relu ? "relu" : "none"; }
std::string to_string(Pooling p) { return p == Pooling::Max2 ? "max2" : "none"; }

Nonlinearity parse_nonlinearity(const std::string& s) {
  if (s == "relu") return Nonlinearity::Relu;
  if (s == "none") return Nonlinearity::None;
  fail(ErrorCode::FormatError, "unknown nonlinearity '" + s + "'");
}

Pooling parse_pooling(const std::string& s) {
  if (s == "max2") return Pooling::Max2;
  if (s == "none") return Pooling::None;
  fail(ErrorCode::FormatError, "unknown pooling '" + s + "'");
}

}  // namespace

FeatureExtractor::FeatureExtractor(std::vector<ConvStage> stages, std::vector<std::size_t> taps,
                                   std::vector<ConvWeights> weights, Provenance provenance)
    : stages_(std::move(stages)),
      taps_(std::move(taps)),
      weights_(std::move(weights)),
      provenance_(std::move(provenance)) {
  if (stages_.empty()) fail(ErrorCode::InvalidArgument, "extractor needs at least one stage");
  if (taps_.empty()) fail(ErrorCode::InvalidArgument, "extractor needs at least one tap layer");
  for (auto t : taps_)
    if (t >= stages_.size())
      fail(ErrorCode::InvalidArgument, "tap layer " + std::to_string(t) + " is not a stage index");
  if (weights_.size() != stages_.size())
    fail(ErrorCode::InvalidArgument, "one weight set per stage is required");
  std::size_t in_channels = 1;
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    const auto& st = stages_[s];
    const auto& w = weights_[s];
    w.validate();
    if (st.stride == 0) fail(ErrorCode::InvalidArgument, "stride must be >= 1");
    if (w.in_channels != in_channels || w.out_channels != st.out_channels || w.kernel != st.kernel)
      fail(ErrorCode::InvalidArgument,
           "stage " + std::to_string(s) + " kernel shape is inconsistent with its channels");
    in_channels = st.out_channels;
  }
}

FeatureExtractor FeatureExtractor::seeded(std::vector<ConvStage> stages,
                                          std::vector<std::size_t> taps, std::uint64_t seed) {
  std::vector<ConvWeights> weights;
  std::size_t in_channels = 1;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    auto w = ConvWeights::zeros(stages[s].out_channels, in_channels, stages[s].kernel);
    const double fan_in = static_cast<double>(in_channels * stages[s].kernel * stages[s].kernel);
    const double bound = std::sqrt(6.0 / fan_in);
    const double bias_bound = 1.0 / std::sqrt(fan_in);
    Rng rng(derive_seed(seed, s));
    for (double& v : w.kernel_data) v = to_f32(rng.uniform(-bound, bound));
    for (double& v : w.bias) v = to_f32(rng.uniform(-bias_bound, bias_bound));
    weights.push_back(std::move(w));
    in_channels = stages[s].out_channels;
  }
  Provenance prov{Provenance::Kind::Seeded, seed, {}};
  return FeatureExtractor(std::move(stages), std::move(taps), std::move(weights), prov);
}

FeatureExtractor FeatureExtractor::identity() {
  auto w = ConvWeights::zeros(1, 1, 1);
  w.kernel_data[0] = 1.0;
  return FeatureExtractor({ConvStage{1, 1, 1, Nonlinearity::None, Pooling::None}}, {0}, {w});
}

FeatureExtractor FeatureExtractor::deep_tap(std::uint64_t seed) {
  std::vector<ConvStage> stages{
      {4, 3, 1, Nonlinearity::Relu, Pooling::Max2},
      {8, 3, 1, Nonlinearity::Relu, Pooling::Max2},
      {8, 3, 1, Nonlinearity::Relu, Pooling::Max2},
      {16, 3, 1, Nonlinearity::Relu, Pooling::None},
      {16, 3, 1, Nonlinearity::Relu, Pooling::None},
  };
  return seeded(std::move(stages), {3, 4}, seed);
}

void FeatureExtractor::save(const std::filesystem::path& stem) const {
  WeightFile file;
  file.block_type = "feature_extractor";
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : stages_)
    stages.push_back({{"out_channels", s.out_channels},
                      {"kernel", s.kernel},
                      {"stride", s.stride},
                      {"nonlinearity", to_string(s.nonlinearity)},
                      {"pool", to_string(s.pool)}});
  file.header["stages"] = stages;
  file.header["taps"] = taps_;
  if (provenance_.kind == Provenance::Kind::Seeded)
    file.header["provenance"] = {{"kind", "seeded"}, {"seed", provenance_.seed}};
  else if (provenance_.kind == Provenance::Kind::Loaded)
    file.header["provenance"] = {{"kind", "loaded"}, {"path", provenance_.path}};
  else
    file.header["provenance"] = {{"kind", "constructed"}};
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    const auto& w = weights_[s];
    file.tensors.push_back({"stage" + std::to_string(s) + ".kernel",
                            {w.out_channels, w.in_channels, w.kernel, w.kernel},
                            w.kernel_data});
  }
  for (std::size_t s = 0; s < stages_.size(); ++s)
    file.tensors.push_back({"stage" + std::to_string(s) + ".bias", {weights_[s].out_channels},
                            weights_[s].bias});
  save_weight_file(file, stem);
}

FeatureExtractor FeatureExtractor::load(const std::filesystem::path& stem) {
  const WeightFile file = load_weight_file(stem);
  if (file.block_type != "feature_extractor")
    fail(ErrorCode::FormatError, "weights file is a '" + file.block_type + "', not an extractor");
  std::vector<ConvStage> stages;
  std::vector<std::size_t> taps;
  try {
    for (const auto& s : file.header.at("stages"))
      stages.push_back({s.at("out_channels").get<std::size_t>(), s.at("kernel").get<std::size_t>(),
                        s.value("stride", std::size_t{1}),
                        parse_nonlinearity(s.at("nonlinearity").get<std::string>()),
                        parse_pooling(s.at("pool").get<std::string>())});
    taps = file.header.at("taps").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, std::string("extractor manifest: ") + e.what());
  }
  std::vector<ConvWeights> weights;
  std::size_t in_channels = 1;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    ConvWeights w;
    w.out_channels = stages[s].out_channels;
    w.in_channels = in_channels;
    w.kernel = stages[s].kernel;
    w.kernel_data = file.tensor("stage" + std::to_string(s) + ".kernel").values;
    w.bias = file.tensor("stage" + std::to_string(s) + ".bias").values;
    weights.push_back(std::move(w));
    in_channels = stages[s].out_channels;
  }
  Provenance prov{Provenance::Kind::Loaded, 0, stem.string()};
  return FeatureExtractor(std::move(stages), std::move(taps), std::move(weights), prov);
}

std::vector<FeatureMap> FeatureExtractor::extract(std::span<const double> slice, std::size_t ny,
                                                  std::size_t nx) const {
  if (slice.size() != ny * nx) fail(ErrorCode::DimMismatch, "slice size disagrees with ny*nx");
  Tensor3 x(1, ny, nx, std::vector<double>(slice.begin(), slice.end()));
  std::vector<FeatureMap> out;
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    const auto& st = stages_[s];
    if (x.height() < st.kernel || x.width() < st.kernel)
      fail(ErrorCode::ShapeUnderflow, "stage " + std::to_string(s) + " input " +
                                          std::to_string(x.height()) + "x" +
                                          std::to_string(x.width()) + " is smaller than its kernel");
    x = conv2d_same(x, weights_[s], st.stride);
    if (st.nonlinearity == Nonlinearity::Relu) relu_inplace(x);
    if (st.pool == Pooling::Max2) x = max_pool2(x);
    for (auto t : taps_)
      if (t == s) out.push_back({x, s});
  }
  // Taps are reported in the order they were declared.
  std::vector<FeatureMap> ordered;
  for (auto t : taps_)
    for (const auto& fm : out)
      if (fm.layer_index == t) {
        ordered.push_back(fm);
        break;
      }
  return ordered;
}

std::vector<FeatureMap> extract_features(const FeatureExtractor& ex, std::span<const double> slice,
                                         std::size_t ny, std::size_t nx) {
  return ex.extract(slice, ny, nx);
}

double motion_perceptual_loss(const FeatureExtractor& ex, const Volume& pred, const Volume& gt) {
  require_same_dims(pred, gt, "motion_perceptual_loss");
  const Dims& d = pred.dims();
  double total = 0.0;
  for (std::size_t z = 0; z < d.nz; ++z) {
    const auto fp = ex.extract(pred.slice(z), d.ny, d.nx);
    const auto fg = ex.extract(gt.slice(z), d.ny, d.nx);
    double slice_loss = 0.0;
    for (std::size_t l = 0; l < fp.size(); ++l) {
      const auto a = fp[l].data.data();
      const auto b = fg[l].data.data();
      double sum = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
      slice_loss += sum / static_cast<double>(a.size());
    }
    total += slice_loss / static_cast<double>(fp.size());
  }
  return total / static_cast<double>(d.nz);
}

double feature_distance(const FeatureExtractor& ex, const Volume& a, const Volume& b) {
  return motion_perceptual_loss(ex, a, b);
}

FeatureSet pooled_features(const FeatureExtractor& ex, const Volume& v) {
  const Dims& d = v.dims();
  FeatureSet out;
  for (std::size_t z = 0; z < d.nz; ++z) {
    const auto maps = ex.extract(v.slice(z), d.ny, d.nx);
    const Tensor3& last = maps.back().data;
    if (z == 0) out.resize(static_cast<Eigen::Index>(d.nz), static_cast<Eigen::Index>(last.channels()));
    for (std::size_t c = 0; c < last.channels(); ++c) {
      double sum = 0.0;
      for (double x : last.channel(c)) sum += x;
      out(static_cast<Eigen::Index>(z), static_cast<Eigen::Index>(c)) =
          sum / static_cast<double>(last.height() * last.width());
    }
  }
  return out;
}

LossWeights::LossWeights(double l1, double ssim, double motion, double focal, double adv)
    : l1_(l1), ssim_(ssim), motion_(motion), focal_(focal), adv_(adv) {
  for (double w : {l1, ssim, motion, focal, adv})
    if (!(w > 0.0 && w <= 1.0)) fail(ErrorCode::InvalidArgument, "loss weights must lie in (0, 1]");
  const double sum = l1 + ssim + motion + focal + adv;
  if (std::abs(sum - 1.0) > 1e-9) {
    l1_ /= sum;
    ssim_ /= sum;
    motion_ /= sum;
    focal_ /= sum;
    adv_ /= sum;
    warning_ = "loss weights summed to " + std::to_string(sum) + "; rescaled to 1";
  }
}

double composite_loss(const LossTerms& t, const LossWeights& w) {
  const double adv = t.adv.value_or(0.0);
  for (double term : {t.l1, t.ssim_loss, t.motion, t.focal, adv})
    if (!std::isfinite(term) || term < 0.0)
      fail(ErrorCode::NonFiniteTerm, "loss terms must be finite and non-negative");
  return w.l1() * t.l1 + w.ssim() * t.ssim_loss + w.motion() * t.motion + w.focal() * t.focal +
         w.adv() * adv;
}

}  // namespace motionqa
