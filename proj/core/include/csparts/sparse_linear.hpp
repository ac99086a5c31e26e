#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "csparts/backbone.hpp"

namespace csparts {

enum class Regularization { L1, L2 };

struct SolverConfig {
  std::size_t max_iter = 10000;
  double tol = 1e-6;  // relative objective change

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

/// One-vs-rest linear classifier over z-scored features.
struct LinearModel {
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::vector<std::vector<float>> weights;  // [class][dim]
  std::vector<float> biases;                // [class]
  Regularization regularization = Regularization::L1;
  double lambda = 0.0;
  std::vector<float> mean;   // [dim]
  std::vector<float> scale;  // [dim], > 0

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

struct SelectedChannels {
  std::size_t class_id = 0;
  std::vector<std::size_t> channels;  // strictly increasing
};

struct Prediction {
  std::size_t label = 0;
  std::vector<double> scores;
};

struct ClassSparsity {
  std::size_t class_id = 0;
  std::size_t nonzero = 0;
  double percent = 0.0;  // 100 * nonzero / dim
};

/// Per-iteration observer: (class, iteration, objective).
using SolverObserver = std::function<void(std::size_t, std::size_t, double)>;

/// Minimizes lambda * R(w) + sum_i max(0, 1 - y_i (w . x_i + b))^2 per class,
/// with y_i = +1 for the class and -1 otherwise, x standardized with training
/// statistics, and the bias unregularized. R is ||w||_1 (proximal gradient)
/// or 0.5 ||w||_2^2 (gradient descent). Both use backtracking by halving.
LinearModel fit_ovr(std::span<const FeatureVector> x, std::span<const Label> y, Regularization reg, double lambda,
                    const SolverConfig& cfg = {}, const SolverObserver& observer = {});

/// Objective of one binary subproblem on already standardized rows; exposed
/// for oracle tests.
double ovr_objective(std::span<const std::vector<double>> xs, std::span<const double> ys, std::span<const double> w,
                     double b, Regularization reg, double lambda);

/// Scores w_c . z(x) + b_c; ties go to the lowest class index.
Prediction predict(const LinearModel& m, std::span<const float> x);

/// Exact nonzero pattern of w_c.
SelectedChannels selected_channels(const LinearModel& m, std::size_t class_id);

std::vector<ClassSparsity> sparsity_report(const LinearModel& m);

/// Writes "<stem>.psf" (rank-2 tensor [C+2, dim+1]: weight rows with the bias
/// in the last column, then the mean row, then the scale row) and
/// "<stem>.txt" (regularization, lambda, dim, classes).
void save_linear_model(const std::filesystem::path& stem, const LinearModel& m);
LinearModel load_linear_model(const std::filesystem::path& stem);

}  // namespace csparts
