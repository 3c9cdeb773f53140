#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fvkit/fisher.hpp"
#include "fvkit/matrix.hpp"

namespace fvkit {

// One-vs-rest linear model: score_c(x) = weights.row(c) . x + biases[c].
struct LinearModel {
  std::vector<std::string> classes;
  Matrix weights;  // C x dim
  std::vector<double> biases;

  std::size_t num_classes() const noexcept { return classes.size(); }
  std::size_t dim() const noexcept { return weights.cols(); }

  // C >= 2, shapes agree, all finite.
  void validate() const;

  bool operator==(const LinearModel&) const = default;
};

struct SvmConfig {
  double lambda = 1e-4;
  int epochs = 30;
  int average_epochs = 10;  // average the epoch-end iterates of this many final epochs
  double t0 = 0.0;          // step offset; 0 means 1/lambda (first step size 1)
  bool balance_classes = true;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const;
};

struct SvmTrainResult {
  LinearModel model;
  // objective_trace[c][e]: regularized hinge objective of the model kept for
  // class c after epoch e. Non-increasing by construction.
  std::vector<std::vector<double>> objective_trace;
};

// Index of `label` in `classes`; throws kLabel when absent.
std::size_t class_index(std::span<const std::string> classes, std::string_view label);

// Trains one L2-regularized hinge-loss classifier per class by stochastic
// subgradient descent with step 1/(lambda (t + t0)). With balance_classes, a
// sample of class c carries loss weight n / (C' n_c), C' = classes present.
SvmTrainResult train_linear_svm(const Matrix& features, std::span<const std::string> labels,
                                std::vector<std::string> classes, const SvmConfig& config);

// Same as above on Fisher vectors, which must all be normalized and of equal length.
SvmTrainResult train_svm(std::span<const FisherVector> features,
                         std::span<const std::string> labels, std::vector<std::string> classes,
                         const SvmConfig& config);

// lambda/2 |w|^2 + (1/n) sum_i a_i max(0, 1 - y_i (w.x_i + b)).
double svm_objective(std::span<const double> w, double b, const Matrix& features,
                     std::span<const double> targets, std::span<const double> sample_weights,
                     double lambda);

struct Prediction {
  std::size_t class_index = 0;
  std::string label;
  std::vector<double> scores;
};

// Argmax of the raw scores; ties go to the lowest class index.
Prediction predict(const LinearModel& model, std::span<const double> features);
Prediction predict(const LinearModel& model, const FisherVector& fv);

struct EvalReport {
  std::vector<std::string> classes;
  std::vector<std::vector<std::uint64_t>> confusion;  // rows = truth, cols = prediction
  std::vector<std::optional<double>> per_class_recall;  // nullopt for zero support
  double bac = 0.0;
  std::vector<std::string> warnings;

  bool operator==(const EvalReport&) const = default;
};

// Mean of per-class recalls over the classes that have support.
EvalReport balanced_accuracy(std::span<const std::string> predictions,
                             std::span<const std::string> truth,
                             std::span<const std::string> classes);

// {"classes", "confusion", "per_class_recall", "bac"}; zero-support recalls are null.
std::string eval_report_to_json(const EvalReport& report, int indent = 2);
EvalReport eval_report_from_json(std::string_view text);

}  // namespace fvkit
