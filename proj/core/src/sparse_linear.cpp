#include <algorithm>
#include <cassert>
#include <cmath>
#include <set>
#include <sstream>

#include <Eigen/Core>

#include "csparts/errors.hpp"
#include "csparts/sparse_linear.hpp"
#include "csparts/tensor_io.hpp"
#include "text_kv.hpp"

namespace csparts {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 80;

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

struct BinaryProblem {
  const Eigen::MatrixXd& z;  // n x dim, standardized
  Eigen::VectorXd y;         // +-1
  Regularization reg;
  double lambda;

  double penalty(const Eigen::VectorXd& w) const {
    return reg == Regularization::L1 ? lambda * w.lpNorm<1>() : 0.5 * lambda * w.squaredNorm();
  }

  // Squared hinge loss sum plus the L2 term when that is the regularizer.
  double smooth(const Eigen::VectorXd& w, double b, Eigen::VectorXd* residual) const {
    const Eigen::VectorXd margin = (z * w).array() + b;
    Eigen::VectorXd r = (1.0 - y.array() * margin.array()).max(0.0);
    double f = r.squaredNorm();
    if (reg == Regularization::L2) f += 0.5 * lambda * w.squaredNorm();
    if (residual) *residual = std::move(r);
    return f;
  }

  double objective(const Eigen::VectorXd& w, double b) const {
    const double f = smooth(w, b, nullptr);
    return reg == Regularization::L1 ? f + penalty(w) : f;
  }
};

struct BinaryResult {
  Eigen::VectorXd w;
  double b = 0.0;
};

BinaryResult solve_binary(const BinaryProblem& prob, const SolverConfig& cfg,
                          const std::function<void(std::size_t, double)>& observe) {
  const auto dim = prob.z.cols();
  BinaryResult cur{Eigen::VectorXd::Zero(dim), 0.0};
  Eigen::VectorXd r;
  double smooth = prob.smooth(cur.w, cur.b, &r);
  double obj = prob.reg == Regularization::L1 ? smooth + prob.penalty(cur.w) : smooth;
  if (observe) observe(0, obj);

  double step = 1.0;
  for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
    // Gradient of the smooth part: -2 sum_i r_i y_i [z_i, 1].
    const Eigen::VectorXd ry = r.cwiseProduct(prob.y);
    Eigen::VectorXd gw = -2.0 * (prob.z.transpose() * ry);
    if (prob.reg == Regularization::L2) gw += prob.lambda * cur.w;
    const double gb = -2.0 * ry.sum();

    step *= 2.0;
    bool accepted = false;
    BinaryResult next;
    double next_smooth = 0.0, next_obj = 0.0;
    Eigen::VectorXd next_r;
    for (int h = 0; h < kMaxHalvings; ++h, step *= 0.5) {
      next.w = cur.w - step * gw;
      if (prob.reg == Regularization::L1) next.w = next.w.unaryExpr([&](double v) { return soft_threshold(v, step * prob.lambda); });
      next.b = cur.b - step * gb;
      const double moved = (next.w - cur.w).squaredNorm() + (next.b - cur.b) * (next.b - cur.b);
      if (moved == 0.0) return cur;  // fixed point of the prox-gradient map
      next_smooth = prob.smooth(next.w, next.b, &next_r);
      next_obj = prob.reg == Regularization::L1 ? next_smooth + prob.penalty(next.w) : next_smooth;
      if (next_obj <= obj - kArmijo / step * moved) {
        accepted = true;
        break;
      }
    }
    if (!accepted) return cur;

    assert(next_obj <= obj);
    const double change = (obj - next_obj) / std::max(std::abs(obj), 1e-12);
    cur = std::move(next);
    r = std::move(next_r);
    obj = next_obj;
    if (!std::isfinite(obj)) throw NumericError("solver objective became non-finite");
    if (observe) observe(it, obj);
    if (change < cfg.tol) break;
  }
  return cur;
}

double z_value(const LinearModel& m, std::size_t j, float x) {
  return (static_cast<double>(x) - static_cast<double>(m.mean[j])) / static_cast<double>(m.scale[j]);
}

}  // namespace

double ovr_objective(std::span<const std::vector<double>> xs, std::span<const double> ys, std::span<const double> w,
                     double b, Regularization reg, double lambda) {
  double loss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double m = b;
    for (std::size_t j = 0; j < w.size(); ++j) m += w[j] * xs[i][j];
    const double r = std::max(0.0, 1.0 - ys[i] * m);
    loss += r * r;
  }
  double pen = 0.0;
  for (double v : w) pen += reg == Regularization::L1 ? std::abs(v) : 0.5 * v * v;
  return loss + lambda * pen;
}

LinearModel fit_ovr(std::span<const FeatureVector> x, std::span<const Label> y, Regularization reg, double lambda,
                    const SolverConfig& cfg, const SolverObserver& observer) {
  if (x.size() != y.size()) throw ArgumentError("feature and label counts differ");
  if (x.empty()) throw ArgumentError("empty training set");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("lambda must be a finite value >= 0");
  const std::size_t dim = x.front().size();
  if (dim == 0) throw ArgumentError("feature dimension must be positive");
  for (const auto& row : x) {
    if (row.size() != dim) throw ArgumentError("inconsistent feature dimensions");
    for (float v : row)
      if (!std::isfinite(v)) throw ArgumentError("non-finite feature value");
  }
  if (*std::min_element(y.begin(), y.end()) < 0) throw ArgumentError("negative label");
  if (std::set<Label>(y.begin(), y.end()).size() < 2) throw ArgumentError("one-vs-rest needs at least 2 classes");

  const std::size_t n = x.size();
  LinearModel m;
  m.num_classes = static_cast<std::size_t>(*std::max_element(y.begin(), y.end())) + 1;
  m.dim = dim;
  m.regularization = reg;
  m.lambda = lambda;
  m.mean.resize(dim);
  m.scale.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    double s = 0.0;
    for (const auto& row : x) s += row[j];
    const double mu = s / static_cast<double>(n);
    double v = 0.0;
    for (const auto& row : x) v += (row[j] - mu) * (row[j] - mu);
    const double sd = std::sqrt(v / static_cast<double>(n));
    m.mean[j] = static_cast<float>(mu);
    m.scale[j] = sd > 1e-12 * std::max(1.0, std::abs(mu)) ? static_cast<float>(sd) : 1.0f;
  }

  Eigen::MatrixXd z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = z_value(m, j, x[i][j]);

  m.weights.resize(m.num_classes);
  m.biases.resize(m.num_classes);
  for (std::size_t c = 0; c < m.num_classes; ++c) {
    BinaryProblem prob{z, Eigen::VectorXd(static_cast<Eigen::Index>(n)), reg, lambda};
    for (std::size_t i = 0; i < n; ++i)
      prob.y(static_cast<Eigen::Index>(i)) = static_cast<std::size_t>(y[i]) == c ? 1.0 : -1.0;
    std::function<void(std::size_t, double)> observe;
    if (observer) observe = [&](std::size_t it, double obj) { observer(c, it, obj); };
    const BinaryResult res = solve_binary(prob, cfg, observe);
    m.weights[c].resize(dim);
    for (std::size_t j = 0; j < dim; ++j) m.weights[c][j] = static_cast<float>(res.w(static_cast<Eigen::Index>(j)));
    m.biases[c] = static_cast<float>(res.b);
  }
  return m;
}

Prediction predict(const LinearModel& m, std::span<const float> x) {
  if (x.size() != m.dim)
    throw ArgumentError("feature dimension " + std::to_string(x.size()) + " does not match model dimension " +
                        std::to_string(m.dim));
  Prediction p;
  p.scores.resize(m.num_classes);
  for (std::size_t c = 0; c < m.num_classes; ++c) {
    double s = m.biases[c];
    const auto& w = m.weights[c];
    for (std::size_t j = 0; j < m.dim; ++j)
      if (w[j] != 0.0f) s += static_cast<double>(w[j]) * z_value(m, j, x[j]);
    p.scores[c] = s;
    if (s > p.scores[p.label]) p.label = c;
  }
  return p;
}

SelectedChannels selected_channels(const LinearModel& m, std::size_t class_id) {
  if (m.regularization != Regularization::L1) throw MisuseError("channel selection requires an L1 model");
  if (class_id >= m.num_classes) throw ArgumentError("class " + std::to_string(class_id) + " out of range");
  SelectedChannels s{class_id, {}};
  const auto& w = m.weights[class_id];
  for (std::size_t j = 0; j < w.size(); ++j)
    if (w[j] != 0.0f) s.channels.push_back(j);
  return s;
}

std::vector<ClassSparsity> sparsity_report(const LinearModel& m) {
  std::vector<ClassSparsity> out;
  for (std::size_t c = 0; c < m.num_classes; ++c) {
    const auto nnz = static_cast<std::size_t>(
        std::count_if(m.weights[c].begin(), m.weights[c].end(), [](float v) { return v != 0.0f; }));
    out.push_back({c, nnz, m.dim == 0 ? 0.0 : 100.0 * static_cast<double>(nnz) / static_cast<double>(m.dim)});
  }
  return out;
}

namespace {
constexpr std::string_view kLinearHeader = "csparts-linear v1";
}

void save_linear_model(const std::filesystem::path& stem, const LinearModel& m) {
  std::ostringstream txt;
  txt << kLinearHeader << "\n"
      << "regularization " << (m.regularization == Regularization::L1 ? "L1" : "L2") << "\n"
      << "lambda " << detail::format_double(m.lambda) << "\n"
      << "dim " << m.dim << "\n"
      << "classes " << m.num_classes << "\n";
  detail::write_text(detail::with_suffix(stem, ".txt"), txt.str());

  const std::size_t cols = m.dim + 1;
  std::vector<float> data((m.num_classes + 2) * cols, 0.0f);
  for (std::size_t c = 0; c < m.num_classes; ++c) {
    std::copy(m.weights[c].begin(), m.weights[c].end(), data.begin() + static_cast<std::ptrdiff_t>(c * cols));
    data[c * cols + m.dim] = m.biases[c];
  }
  std::copy(m.mean.begin(), m.mean.end(), data.begin() + static_cast<std::ptrdiff_t>(m.num_classes * cols));
  std::copy(m.scale.begin(), m.scale.end(), data.begin() + static_cast<std::ptrdiff_t>((m.num_classes + 1) * cols));
  const std::uint64_t dims[2] = {m.num_classes + 2, cols};
  write_tensor(detail::with_suffix(stem, ".psf"), dims, data);
}

LinearModel load_linear_model(const std::filesystem::path& stem) {
  const auto txt_path = detail::with_suffix(stem, ".txt");
  const auto kv = detail::read_kv(txt_path, kLinearHeader);
  LinearModel m;
  const auto& reg = kv.at("regularization", txt_path);
  if (reg == "L1") {
    m.regularization = Regularization::L1;
  } else if (reg == "L2") {
    m.regularization = Regularization::L2;
  } else {
    throw FormatError("field 'regularization' must be L1 or L2 in '" + txt_path.string() + "'");
  }
  m.lambda = kv.double_at("lambda", txt_path);
  m.dim = kv.size_at("dim", txt_path);
  m.num_classes = kv.size_at("classes", txt_path);

  const auto psf_path = detail::with_suffix(stem, ".psf");
  const Tensor t = read_tensor(psf_path);
  const std::size_t cols = m.dim + 1;
  if (t.dims.size() != 2 || t.dims[0] != m.num_classes + 2 || t.dims[1] != cols)
    throw FormatError("linear model tensor '" + psf_path.string() + "' does not match its metadata");
  m.weights.resize(m.num_classes);
  m.biases.resize(m.num_classes);
  for (std::size_t c = 0; c < m.num_classes; ++c) {
    auto row = t.data.begin() + static_cast<std::ptrdiff_t>(c * cols);
    m.weights[c].assign(row, row + static_cast<std::ptrdiff_t>(m.dim));
    m.biases[c] = t.data[c * cols + m.dim];
  }
  auto mean_row = t.data.begin() + static_cast<std::ptrdiff_t>(m.num_classes * cols);
  m.mean.assign(mean_row, mean_row + static_cast<std::ptrdiff_t>(m.dim));
  auto scale_row = t.data.begin() + static_cast<std::ptrdiff_t>((m.num_classes + 1) * cols);
  m.scale.assign(scale_row, scale_row + static_cast<std::ptrdiff_t>(m.dim));
  for (float s : m.scale)
    if (!(s > 0.0f)) throw FormatError("non-positive scale in '" + psf_path.string() + "'");
  return m;
}

}  // namespace csparts
