#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Core>

#include "csparts/backbone.hpp"
#include "csparts/errors.hpp"
#include "rng.hpp"

namespace csparts {

namespace {

using Mat = Eigen::MatrixXf;
using RowMajorMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kHeadEps = 1e-6;  // variance floor of the head's feature standardization

// Activations are channels x (rows * cols), column-major, so column p holds
// every channel of pixel p. This matches the channel-last Image layout.
struct Act {
  std::size_t c = 0, h = 0, w = 0;
  Mat m;
  std::size_t hw() const { return h * w; }
};

struct LayerCache {
  std::size_t in_c = 0, in_h = 0, in_w = 0;
  Mat col;                           // conv: im2col of the input
  Mat mask;                          // relu: 1 where pre-activation > 0
  std::vector<std::uint32_t> argmax;  // pool: input pixel per (channel, output pixel)
};

Mat im2col(const Act& a, std::size_t k) {
  const std::size_t kk = k * k;
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto H = static_cast<std::ptrdiff_t>(a.h), W = static_cast<std::ptrdiff_t>(a.w);
  Mat col = Mat::Zero(static_cast<Eigen::Index>(a.c * kk), static_cast<Eigen::Index>(a.hw()));
  for (std::ptrdiff_t y = 0; y < H; ++y) {
    for (std::ptrdiff_t x = 0; x < W; ++x) {
      float* dst = col.col(y * W + x).data();
      for (std::size_t ky = 0; ky < k; ++ky) {
        const std::ptrdiff_t sy = y + static_cast<std::ptrdiff_t>(ky) - pad;
        if (sy < 0 || sy >= H) continue;
        for (std::size_t kx = 0; kx < k; ++kx) {
          const std::ptrdiff_t sx = x + static_cast<std::ptrdiff_t>(kx) - pad;
          if (sx < 0 || sx >= W) continue;
          const float* src = a.m.col(sy * W + sx).data();
          for (std::size_t ch = 0; ch < a.c; ++ch) dst[ch * kk + ky * k + kx] = src[ch];
        }
      }
    }
  }
  return col;
}

// Scatters one (c*k*k) x (h*w) column block back onto a c x (h*w) gradient.
void col2im_add(const Eigen::Ref<const Mat>& dcol, std::size_t c, std::size_t h, std::size_t w, std::size_t k,
                Eigen::Ref<Mat> dx) {
  const std::size_t kk = k * k;
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto H = static_cast<std::ptrdiff_t>(h), W = static_cast<std::ptrdiff_t>(w);
  for (std::ptrdiff_t y = 0; y < H; ++y) {
    for (std::ptrdiff_t x = 0; x < W; ++x) {
      const float* src = dcol.col(y * W + x).data();
      for (std::size_t ky = 0; ky < k; ++ky) {
        const std::ptrdiff_t sy = y + static_cast<std::ptrdiff_t>(ky) - pad;
        if (sy < 0 || sy >= H) continue;
        for (std::size_t kx = 0; kx < k; ++kx) {
          const std::ptrdiff_t sx = x + static_cast<std::ptrdiff_t>(kx) - pad;
          if (sx < 0 || sx >= W) continue;
          float* dst = dx.col(sy * W + sx).data();
          for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += src[ch * kk + ky * k + kx];
        }
      }
    }
  }
}

Eigen::Map<const RowMajorMat> weight_matrix(const ConvWeights& cw) {
  return {cw.weight.data(), static_cast<Eigen::Index>(cw.out_channels),
          static_cast<Eigen::Index>(cw.in_channels * cw.kernel * cw.kernel)};
}

void check_input(const Image& img, const BackboneParams& p) {
  if (img.height() != p.input_height || img.width() != p.input_width || img.channels() != p.input_channels) {
    std::ostringstream msg;
    msg << "image shape " << img.height() << "x" << img.width() << "x" << img.channels()
        << " does not match backbone input " << p.input_height << "x" << p.input_width << "x" << p.input_channels;
    throw ArgumentError(msg.str());
  }
}

Act image_act(const Image& img) {
  Act a{img.channels(), img.height(), img.width(), {}};
  a.m = Eigen::Map<const Mat>(img.data().data(), static_cast<Eigen::Index>(a.c), static_cast<Eigen::Index>(a.hw()));
  return a;
}

Act run_forward(const Image& img, const BackboneParams& p, std::vector<LayerCache>* caches) {
  check_input(img, p);
  Act a = image_act(img);
  if (caches) caches->assign(p.layers.size(), {});
  std::size_t conv_i = 0;
  for (std::size_t li = 0; li < p.layers.size(); ++li) {
    const LayerSpec& layer = p.layers[li];
    LayerCache* cache = caches ? &(*caches)[li] : nullptr;
    if (cache) {
      cache->in_c = a.c;
      cache->in_h = a.h;
      cache->in_w = a.w;
    }
    switch (layer.kind) {
      case LayerSpec::Kind::Conv: {
        const ConvWeights& cw = p.convs[conv_i++];
        Mat col = layer.kernel == 1 ? a.m : im2col(a, layer.kernel);
        Mat out = weight_matrix(cw) * col;
        out.colwise() += Eigen::Map<const Eigen::VectorXf>(cw.bias.data(), static_cast<Eigen::Index>(cw.out_channels));
        if (cache) cache->col = std::move(col);
        a.c = cw.out_channels;
        a.m = std::move(out);
        break;
      }
      case LayerSpec::Kind::Relu: {
        if (cache) cache->mask = (a.m.array() > 0.0f).cast<float>().matrix();
        a.m = a.m.cwiseMax(0.0f);
        break;
      }
      case LayerSpec::Kind::MaxPool2: {
        const std::size_t oh = a.h / 2, ow = a.w / 2;
        Mat out(static_cast<Eigen::Index>(a.c), static_cast<Eigen::Index>(oh * ow));
        if (cache) cache->argmax.resize(a.c * oh * ow);
        for (std::size_t y = 0; y < oh; ++y) {
          for (std::size_t x = 0; x < ow; ++x) {
            const std::size_t po = y * ow + x;
            const std::size_t cand[4] = {(2 * y) * a.w + 2 * x, (2 * y) * a.w + 2 * x + 1, (2 * y + 1) * a.w + 2 * x,
                                         (2 * y + 1) * a.w + 2 * x + 1};
            for (std::size_t ch = 0; ch < a.c; ++ch) {
              std::size_t best = cand[0];
              float best_v = a.m(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(best));
              for (int i = 1; i < 4; ++i) {
                const float v = a.m(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(cand[i]));
                if (v > best_v) {
                  best_v = v;
                  best = cand[i];
                }
              }
              out(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(po)) = best_v;
              if (cache) cache->argmax[ch * oh * ow + po] = static_cast<std::uint32_t>(best);
            }
          }
        }
        a.h = oh;
        a.w = ow;
        a.m = std::move(out);
        break;
      }
    }
  }
  return a;
}

struct ConvGrad {
  Mat weight;  // out x (in*k*k), column-major
  Eigen::VectorXf bias;
};

// Propagates a batch of B upstream gradients (top channels x B*top_hw) back to
// the input. When weight_grads is given, B must be 1 and conv parameter
// gradients are accumulated into it.
Mat run_backward(const BackboneParams& p, const std::vector<LayerCache>& caches, Mat g, std::size_t batch,
                 std::vector<ConvGrad>* weight_grads) {
  std::size_t conv_i = p.convs.size();
  for (std::size_t li = p.layers.size(); li-- > 0;) {
    const LayerSpec& layer = p.layers[li];
    const LayerCache& cache = caches[li];
    const std::size_t in_hw = cache.in_h * cache.in_w;
    switch (layer.kind) {
      case LayerSpec::Kind::Relu: {
        const auto hw = static_cast<Eigen::Index>(in_hw);
        for (std::size_t b = 0; b < batch; ++b)
          g.middleCols(static_cast<Eigen::Index>(b) * hw, hw).array() *= cache.mask.array();
        break;
      }
      case LayerSpec::Kind::MaxPool2: {
        const std::size_t out_hw = (cache.in_h / 2) * (cache.in_w / 2);
        Mat dx = Mat::Zero(static_cast<Eigen::Index>(cache.in_c), static_cast<Eigen::Index>(batch * in_hw));
        for (std::size_t b = 0; b < batch; ++b)
          for (std::size_t po = 0; po < out_hw; ++po)
            for (std::size_t ch = 0; ch < cache.in_c; ++ch) {
              const auto row = static_cast<Eigen::Index>(ch);
              dx(row, static_cast<Eigen::Index>(b * in_hw + cache.argmax[ch * out_hw + po])) +=
                  g(row, static_cast<Eigen::Index>(b * out_hw + po));
            }
        g = std::move(dx);
        break;
      }
      case LayerSpec::Kind::Conv: {
        const ConvWeights& cw = p.convs[--conv_i];
        if (weight_grads) {
          ConvGrad& wg = (*weight_grads)[conv_i];
          wg.weight.noalias() += g * cache.col.transpose();
          wg.bias += g.rowwise().sum();
        }
        if (li == 0 && weight_grads) break;  // image gradient not needed for training
        Mat dcol = weight_matrix(cw).transpose() * g;
        if (layer.kernel == 1) {
          g = std::move(dcol);
        } else {
          Mat dx = Mat::Zero(static_cast<Eigen::Index>(cache.in_c), static_cast<Eigen::Index>(batch * in_hw));
          const auto hw = static_cast<Eigen::Index>(in_hw);
          for (std::size_t b = 0; b < batch; ++b) {
            const auto off = static_cast<Eigen::Index>(b) * hw;
            col2im_add(dcol.middleCols(off, hw), cache.in_c, cache.in_h, cache.in_w, layer.kernel,
                       dx.middleCols(off, hw));
          }
          g = std::move(dx);
        }
        break;
      }
    }
  }
  return g;
}

ChannelStack to_stack(const Act& a) {
  std::vector<float> data(a.c * a.hw());
  for (std::size_t d = 0; d < a.c; ++d)
    for (std::size_t q = 0; q < a.hw(); ++q)
      data[d * a.hw() + q] = a.m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(q));
  return ChannelStack(a.c, a.h, a.w, std::move(data));
}

FeatureVector pooled(const Act& a) {
  FeatureVector f(a.c);
  for (std::size_t d = 0; d < a.c; ++d) {
    double s = 0.0;
    for (std::size_t q = 0; q < a.hw(); ++q) s += a.m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(q));
    f[d] = static_cast<float>(s / static_cast<double>(a.hw()));
  }
  return f;
}

}  // namespace

std::size_t BackboneParams::feature_dim() const {
  for (auto it = layers.rbegin(); it != layers.rend(); ++it)
    if (it->kind == LayerSpec::Kind::Conv) return it->out_channels;
  return input_channels;
}

std::string BackboneParams::architecture() const {
  std::string out;
  for (const auto& l : layers) {
    if (!out.empty()) out += ' ';
    switch (l.kind) {
      case LayerSpec::Kind::Conv:
        out += "conv" + std::to_string(l.kernel) + ":" + std::to_string(l.out_channels);
        break;
      case LayerSpec::Kind::Relu:
        out += "relu";
        break;
      case LayerSpec::Kind::MaxPool2:
        out += "pool2";
        break;
    }
  }
  return out;
}

std::size_t BackboneParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& c : convs) n += c.weight.size() + c.bias.size();
  return n;
}

std::vector<LayerSpec> parse_architecture(std::string_view arch) {
  std::vector<LayerSpec> layers;
  std::istringstream in{std::string(arch)};
  std::string tok;
  while (in >> tok) {
    if (tok == "relu") {
      layers.push_back({LayerSpec::Kind::Relu, 0, 0});
    } else if (tok == "pool2") {
      layers.push_back({LayerSpec::Kind::MaxPool2, 0, 0});
    } else if (tok.starts_with("conv")) {
      const auto colon = tok.find(':');
      std::size_t k = 0, out = 0;
      try {
        if (colon == std::string::npos) throw std::invalid_argument("missing ':'");
        std::size_t used = 0;
        k = std::stoul(tok.substr(4, colon - 4), &used);
        if (used != colon - 4) throw std::invalid_argument("kernel");
        out = std::stoul(tok.substr(colon + 1), &used);
        if (used != tok.size() - colon - 1) throw std::invalid_argument("channels");
      } catch (const std::exception&) {
        throw ArgumentError("malformed conv layer '" + tok + "' (expected conv<k>:<channels>)");
      }
      if (k % 2 == 0 || k == 0) throw ArgumentError("conv kernel must be odd: '" + tok + "'");
      if (out == 0) throw ArgumentError("conv channels must be positive: '" + tok + "'");
      layers.push_back({LayerSpec::Kind::Conv, out, k});
    } else {
      throw ArgumentError("unknown layer '" + tok + "'");
    }
  }
  if (std::none_of(layers.begin(), layers.end(), [](const LayerSpec& l) { return l.kind == LayerSpec::Kind::Conv; }))
    throw ArgumentError("architecture needs at least one conv layer");
  return layers;
}

BackboneParams make_backbone(std::string_view arch, std::size_t input_height, std::size_t input_width,
                             std::size_t input_channels, std::uint64_t seed) {
  BackboneParams p;
  p.input_height = input_height;
  p.input_width = input_width;
  p.input_channels = input_channels;
  p.layers = parse_architecture(arch);
  p.seed = seed;
  if (input_height == 0 || input_width == 0) throw ArgumentError("backbone input size must be positive");
  if (input_channels != 1 && input_channels != 3) throw ArgumentError("backbone input channels must be 1 or 3");

  detail::Rng rng(seed);
  std::size_t c = input_channels, h = input_height, w = input_width;
  for (const auto& l : p.layers) {
    if (l.kind == LayerSpec::Kind::Conv) {
      ConvWeights cw{l.out_channels, c, l.kernel, {}, std::vector<float>(l.out_channels, 0.0f)};
      const double fan_in = static_cast<double>(c * l.kernel * l.kernel);
      const double fan_out = static_cast<double>(l.out_channels * l.kernel * l.kernel);
      const double bound = std::sqrt(6.0 / (fan_in + fan_out));
      cw.weight.resize(l.out_channels * c * l.kernel * l.kernel);
      for (auto& v : cw.weight) v = static_cast<float>(rng.uniform(-bound, bound));
      p.convs.push_back(std::move(cw));
      c = l.out_channels;
    } else if (l.kind == LayerSpec::Kind::MaxPool2) {
      h /= 2;
      w /= 2;
      if (h == 0 || w == 0) throw ArgumentError("architecture pools the input below 1x1");
    }
  }
  return p;
}

ChannelStack::ChannelStack(std::size_t channels, std::size_t rows, std::size_t cols, std::vector<float> data)
    : channels_(channels), rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) throw ArgumentError("channel stack maps must be at least 1x1");
  if (data_.size() != channels * rows * cols) throw ArgumentError("channel stack data length mismatch");
}

ForwardResult forward(const Image& img, const BackboneParams& p) {
  const Act a = run_forward(img, p, nullptr);
  return {to_stack(a), pooled(a)};
}

FeatureVector extract_features(const Image& img, const BackboneParams& p) { return pooled(run_forward(img, p, nullptr)); }

std::vector<GradientMap> input_gradients(const Image& img, const BackboneParams& p,
                                         std::span<const std::size_t> channels) {
  const std::size_t D = p.feature_dim();
  for (auto d : channels)
    if (d >= D) throw ArgumentError("channel index " + std::to_string(d) + " out of range (D=" + std::to_string(D) + ")");
  if (channels.empty()) return {};

  std::vector<LayerCache> caches;
  const Act top = run_forward(img, p, &caches);
  const std::size_t B = channels.size(), hw = top.hw();
  // d f_d / d F_d(q) = 1 / (s*u) for every position q of map d.
  Mat g = Mat::Zero(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(B * hw));
  const float inv = 1.0f / static_cast<float>(hw);
  for (std::size_t b = 0; b < B; ++b)
    g.block(static_cast<Eigen::Index>(channels[b]), static_cast<Eigen::Index>(b * hw), 1, static_cast<Eigen::Index>(hw))
        .setConstant(inv);

  const Mat dx = run_backward(p, caches, std::move(g), B, nullptr);
  const std::size_t n = img.size();
  std::vector<GradientMap> out(B);
  for (std::size_t b = 0; b < B; ++b) {
    out[b] = {img.height(), img.width(), img.channels(), std::vector<float>(n)};
    std::copy_n(dx.data() + b * n, n, out[b].data.begin());
  }
  return out;
}

GradientMap input_gradient(const Image& img, const BackboneParams& p, std::size_t d) {
  const std::size_t ch[1] = {d};
  return std::move(input_gradients(img, p, ch).front());
}

TrainReport train_backbone_report(std::span<const Image> images, std::span<const Label> labels,
                                  const BackboneParams& p0, const TrainConfig& cfg) {
  if (images.size() != labels.size()) throw ArgumentError("image and label counts differ");
  if (images.empty()) throw ArgumentError("empty training set");
  const Label max_label = *std::max_element(labels.begin(), labels.end());
  if (*std::min_element(labels.begin(), labels.end()) < 0) throw ArgumentError("negative label");
  const auto K = static_cast<std::size_t>(max_label) + 1;
  {
    std::vector<Label> distinct(labels.begin(), labels.end());
    std::sort(distinct.begin(), distinct.end());
    if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 2)
      throw ArgumentError("training needs at least 2 classes");
  }
  for (const auto& img : images) check_input(img, p0);
  if (cfg.batch_size == 0) throw ArgumentError("batch size must be positive");

  TrainReport report{p0, {}};
  BackboneParams& p = report.params;
  const std::size_t D = p.feature_dim();

  detail::Rng rng(detail::mix_seed(cfg.seed, 0x7ea1));
  const double head_bound = std::sqrt(6.0 / static_cast<double>(D + K));
  Mat head(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(D));
  for (Eigen::Index j = 0; j < head.cols(); ++j)
    for (Eigen::Index i = 0; i < head.rows(); ++i) head(i, j) = static_cast<float>(rng.uniform(-head_bound, head_bound));
  Eigen::VectorXf head_bias = Eigen::VectorXf::Zero(static_cast<Eigen::Index>(K));

  // The head sees a batch of features centered per channel and divided by one
  // standard deviation pooled over the batch and all channels. Gradients flow
  // through both statistics, so the head loss ignores the feature scale.
  struct Normalized {
    Mat z;
    float inv_std = 1.0f;
  };
  auto normalize = [&](const Mat& f) {
    Normalized out;
    out.z = f.colwise() - f.rowwise().mean();
    const double var = static_cast<double>(out.z.squaredNorm()) / static_cast<double>(f.size());
    out.inv_std = static_cast<float>(1.0 / std::sqrt(var + kHeadEps));
    out.z *= out.inv_std;
    return out;
  };
  // Sum of cross-entropies; fills dlogits (K x B) when asked.
  auto head_loss = [&](const Mat& z, std::span<const std::size_t> rows, Mat* dlogits) {
    const Mat logits = (head * z).colwise() + head_bias;
    if (dlogits) dlogits->resize(logits.rows(), logits.cols());
    double total = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      const float mx = logits.col(j).maxCoeff();
      const Eigen::VectorXd e = (logits.col(j).array() - mx).cast<double>().exp();
      const double z_sum = e.sum();
      const auto y = static_cast<Eigen::Index>(labels[rows[static_cast<std::size_t>(j)]]);
      total += std::log(z_sum) - static_cast<double>(logits(y, j) - mx);
      if (dlogits) {
        dlogits->col(j) = (e / z_sum).cast<float>();
        (*dlogits)(y, j) -= 1.0f;
      }
    }
    return total;
  };
  std::vector<std::size_t> all_rows(images.size());
  std::iota(all_rows.begin(), all_rows.end(), 0);
  auto dataset_loss = [&]() {
    Mat f(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(images.size()));
    for (std::size_t i = 0; i < images.size(); ++i) {
      const FeatureVector v = pooled(run_forward(images[i], p, nullptr));
      f.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXf>(v.data(), static_cast<Eigen::Index>(D));
    }
    return head_loss(normalize(f).z, all_rows, nullptr) / static_cast<double>(images.size());
  };

  report.loss_curve.push_back(dataset_loss());
  if (!std::isfinite(report.loss_curve.back())) throw NumericError("training diverged at epoch 0 (non-finite loss)");

  std::vector<ConvGrad> grads(p.convs.size()), velocity(p.convs.size());
  auto zero_like = [&](std::vector<ConvGrad>& gs) {
    for (std::size_t c = 0; c < p.convs.size(); ++c) {
      const auto& cw = p.convs[c];
      gs[c].weight = Mat::Zero(static_cast<Eigen::Index>(cw.out_channels),
                               static_cast<Eigen::Index>(cw.in_channels * cw.kernel * cw.kernel));
      gs[c].bias = Eigen::VectorXf::Zero(static_cast<Eigen::Index>(cw.out_channels));
    }
  };
  zero_like(velocity);
  Mat head_vel = Mat::Zero(head.rows(), head.cols());
  Eigen::VectorXf head_bias_vel = Eigen::VectorXf::Zero(head_bias.size());

  const auto lr = static_cast<float>(cfg.learning_rate);
  const auto mu = static_cast<float>(cfg.momentum);
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      const auto B = static_cast<Eigen::Index>(rows.size());
      const float inv_batch = 1.0f / static_cast<float>(B);

      std::vector<std::vector<LayerCache>> caches(rows.size());
      Mat f(static_cast<Eigen::Index>(D), B);
      std::size_t hw = 1;
      for (std::size_t s = 0; s < rows.size(); ++s) {
        const Act top = run_forward(images[rows[s]], p, &caches[s]);
        hw = top.hw();
        const FeatureVector v = pooled(top);
        f.col(static_cast<Eigen::Index>(s)) = Eigen::Map<const Eigen::VectorXf>(v.data(), static_cast<Eigen::Index>(D));
      }
      const Normalized nz = normalize(f);
      Mat dlogits;
      if (!std::isfinite(head_loss(nz.z, rows, &dlogits)))
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + " (non-finite loss)");
      dlogits *= inv_batch;

      const Mat head_grad = dlogits * nz.z.transpose();
      const Eigen::VectorXf head_bias_grad = dlogits.rowwise().sum();
      const Mat dz = head.transpose() * dlogits;
      const float dz_dot_z = dz.cwiseProduct(nz.z).sum() / static_cast<float>(dz.size());
      Mat df = (dz - dz_dot_z * nz.z) * nz.inv_std;
      df = df.colwise() - df.rowwise().mean();

      zero_like(grads);
      for (std::size_t s = 0; s < rows.size(); ++s) {
        Mat g = (df.col(static_cast<Eigen::Index>(s)) / static_cast<float>(hw)).replicate(1, static_cast<Eigen::Index>(hw));
        run_backward(p, caches[s], std::move(g), 1, &grads);
      }

      for (std::size_t c = 0; c < p.convs.size(); ++c) {
        auto& cw = p.convs[c];
        velocity[c].weight = mu * velocity[c].weight + grads[c].weight;
        velocity[c].bias = mu * velocity[c].bias + grads[c].bias;
        Eigen::Map<RowMajorMat> w(cw.weight.data(), velocity[c].weight.rows(), velocity[c].weight.cols());
        w -= lr * velocity[c].weight;
        Eigen::Map<Eigen::VectorXf>(cw.bias.data(), velocity[c].bias.size()) -= lr * velocity[c].bias;
      }
      head_vel = mu * head_vel + head_grad;
      head_bias_vel = mu * head_bias_vel + head_bias_grad;
      head -= lr * head_vel;
      head_bias -= lr * head_bias_vel;
    }

    report.loss_curve.push_back(dataset_loss());
    if (!std::isfinite(report.loss_curve.back()))
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + " (non-finite loss)");
  }
  return report;
}

BackboneParams train_backbone(std::span<const Image> images, std::span<const Label> labels, const BackboneParams& p0,
                              const TrainConfig& cfg) {
  return train_backbone_report(images, labels, p0, cfg).params;
}

}  // namespace csparts
