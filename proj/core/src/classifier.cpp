#include "fvkit/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "fvkit/errors.hpp"
#include "fvkit/parallel.hpp"
#include "fvkit/random.hpp"

namespace fvkit {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

struct BinaryResult {
  std::vector<double> w;
  double b = 0.0;
  std::vector<double> trace;
};

BinaryResult train_binary(const Matrix& x, std::span<const double> y,
                          std::span<const double> sample_weight, const SvmConfig& config,
                          std::uint64_t seed) {
  const std::size_t n = x.rows();
  const std::size_t dim = x.cols();
  const double lambda = config.lambda;
  const double t0 = config.t0 > 0.0 ? config.t0 : 1.0 / lambda;
  const int first_averaged = std::max(0, config.epochs - config.average_epochs);

  // w = scale * v keeps the per-step shrink O(1).
  std::vector<double> v(dim, 0.0);
  double scale = 1.0;
  double bias = 0.0;

  std::vector<double> avg_w(dim, 0.0);
  double avg_b = 0.0;
  int averaged = 0;

  BinaryResult best{std::vector<double>(dim, 0.0), 0.0, {}};
  double best_objective = svm_objective(best.w, best.b, x, y, sample_weight, lambda);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  double step = 0.0;
  std::vector<double> current(dim);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      const double eta = 1.0 / (lambda * (step + t0));
      const auto row = x.row(i);
      const double margin = y[i] * (scale * dot(v, row) + bias);
      scale *= 1.0 - eta * lambda;
      if (margin < 1.0) {
        const double g = eta * sample_weight[i] * y[i];
        const double coef = g / scale;
        for (std::size_t j = 0; j < dim; ++j) v[j] += coef * row[j];
        bias += g;
      }
      step += 1.0;
      if (scale < 1e-9) {
        for (double& e : v) e *= scale;
        scale = 1.0;
      }
    }

    for (std::size_t j = 0; j < dim; ++j) current[j] = scale * v[j];
    std::span<const double> candidate_w = current;
    double candidate_b = bias;
    if (epoch >= first_averaged) {
      ++averaged;
      const double mix = 1.0 / averaged;
      for (std::size_t j = 0; j < dim; ++j) avg_w[j] += mix * (current[j] - avg_w[j]);
      avg_b += mix * (bias - avg_b);
      candidate_w = avg_w;
      candidate_b = avg_b;
    }
    // Keep the candidate only if it does not raise the training objective.
    const double objective = svm_objective(candidate_w, candidate_b, x, y, sample_weight, lambda);
    if (objective <= best_objective) {
      best_objective = objective;
      best.w.assign(candidate_w.begin(), candidate_w.end());
      best.b = candidate_b;
    }
    best.trace.push_back(best_objective);
  }
  return best;
}

}  // namespace

void LinearModel::validate() const {
  if (classes.size() < 2) {
    throw Error(ErrorKind::kDegenerateLabels, "a linear model needs at least two classes");
  }
  if (weights.rows() != classes.size() || biases.size() != classes.size()) {
    throw Error(ErrorKind::kShape, "linear model rows do not match its class count");
  }
  for (double w : weights.data()) {
    if (!std::isfinite(w)) throw Error(ErrorKind::kInvalidArgument, "non-finite model weight");
  }
  for (double b : biases) {
    if (!std::isfinite(b)) throw Error(ErrorKind::kInvalidArgument, "non-finite model bias");
  }
}

void SvmConfig::validate() const {
  if (!(lambda > 0.0)) throw Error(ErrorKind::kInvalidArgument, "SVM lambda must be > 0");
  if (epochs < 1) throw Error(ErrorKind::kInvalidArgument, "SVM epochs must be >= 1");
  if (average_epochs < 1) {
    throw Error(ErrorKind::kInvalidArgument, "SVM average_epochs must be >= 1");
  }
  if (t0 < 0.0) throw Error(ErrorKind::kInvalidArgument, "SVM t0 must be >= 0");
}

std::size_t class_index(std::span<const std::string> classes, std::string_view label) {
  const auto it = std::find(classes.begin(), classes.end(), label);
  if (it == classes.end()) {
    throw Error(ErrorKind::kLabel, "unknown label '" + std::string(label) + "'");
  }
  return static_cast<std::size_t>(it - classes.begin());
}

double svm_objective(std::span<const double> w, double b, const Matrix& features,
                     std::span<const double> targets, std::span<const double> sample_weights,
                     double lambda) {
  double loss = 0.0;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const double margin = targets[i] * (dot(w, features.row(i)) + b);
    loss += sample_weights[i] * std::max(0.0, 1.0 - margin);
  }
  return 0.5 * lambda * dot(w, w) + loss / static_cast<double>(features.rows());
}

SvmTrainResult train_linear_svm(const Matrix& features, std::span<const std::string> labels,
                                std::vector<std::string> classes, const SvmConfig& config) {
  config.validate();
  if (features.rows() != labels.size()) {
    throw Error(ErrorKind::kShape, "feature count does not match label count");
  }
  if (features.rows() == 0) throw Error(ErrorKind::kEmptyInput, "no training samples");
  if (classes.size() < 2) {
    throw Error(ErrorKind::kDegenerateLabels, "training needs at least two classes");
  }
  for (double v : features.data()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kInvalidArgument, "non-finite feature value");
  }

  const std::size_t n = features.rows();
  const std::size_t num_classes = classes.size();
  std::vector<std::size_t> label_index(n);
  std::vector<std::size_t> support(num_classes, 0);
  for (std::size_t i = 0; i < n; ++i) {
    label_index[i] = class_index(classes, labels[i]);
    ++support[label_index[i]];
  }
  const auto present =
      static_cast<std::size_t>(std::count_if(support.begin(), support.end(),
                                             [](std::size_t s) { return s > 0; }));
  if (present < 2) {
    throw Error(ErrorKind::kDegenerateLabels, "training labels contain a single class");
  }

  std::vector<double> sample_weight(n, 1.0);
  if (config.balance_classes) {
    for (std::size_t i = 0; i < n; ++i) {
      sample_weight[i] = static_cast<double>(n) /
                         (static_cast<double>(present) * static_cast<double>(support[label_index[i]]));
    }
  }

  std::vector<BinaryResult> per_class(num_classes);
  parallel_for(num_classes, config.threads, [&](std::size_t c) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = label_index[i] == c ? 1.0 : -1.0;
    per_class[c] = train_binary(features, y, sample_weight, config, derive_seed(config.seed, c));
  });

  SvmTrainResult result;
  result.model.classes = std::move(classes);
  result.model.weights = Matrix(num_classes, features.cols());
  result.model.biases.resize(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::copy(per_class[c].w.begin(), per_class[c].w.end(), result.model.weights.row(c).begin());
    result.model.biases[c] = per_class[c].b;
    result.objective_trace.push_back(std::move(per_class[c].trace));
  }
  return result;
}

SvmTrainResult train_svm(std::span<const FisherVector> features,
                         std::span<const std::string> labels, std::vector<std::string> classes,
                         const SvmConfig& config) {
  if (features.empty()) throw Error(ErrorKind::kEmptyInput, "no training samples");
  const std::size_t dim = features.front().dim();
  Matrix x(features.size(), dim);
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (!features[i].normalized()) {
      throw Error(ErrorKind::kInvalidArgument, "training features must be normalized");
    }
    if (features[i].dim() != dim) {
      throw Error(ErrorKind::kShape, "training features have differing dimensions");
    }
    std::copy(features[i].values().begin(), features[i].values().end(), x.row(i).begin());
  }
  return train_linear_svm(x, labels, std::move(classes), config);
}

Prediction predict(const LinearModel& model, std::span<const double> features) {
  if (features.size() != model.dim()) {
    throw Error(ErrorKind::kShape, "feature dimension " + std::to_string(features.size()) +
                                       " does not match model dimension " +
                                       std::to_string(model.dim()));
  }
  Prediction out;
  out.scores.resize(model.num_classes());
  for (std::size_t c = 0; c < model.num_classes(); ++c) {
    out.scores[c] = dot(model.weights.row(c), features) + model.biases[c];
    if (out.scores[c] > out.scores[out.class_index]) out.class_index = c;
  }
  out.label = model.classes[out.class_index];
  return out;
}

Prediction predict(const LinearModel& model, const FisherVector& fv) {
  return predict(model, fv.values());
}

EvalReport balanced_accuracy(std::span<const std::string> predictions,
                             std::span<const std::string> truth,
                             std::span<const std::string> classes) {
  if (predictions.size() != truth.size()) {
    throw Error(ErrorKind::kShape, "prediction and truth lists differ in length");
  }
  if (truth.empty()) throw Error(ErrorKind::kEmptyInput, "nothing to evaluate");
  const std::size_t num_classes = classes.size();
  EvalReport report;
  report.classes.assign(classes.begin(), classes.end());
  report.confusion.assign(num_classes, std::vector<std::uint64_t>(num_classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++report.confusion[class_index(classes, truth[i])][class_index(classes, predictions[i])];
  }
  // Recalls are summed as unevaluated hi + lo pairs so the mean is rounded
  // once; the hand-countable cases then come out as the nearest double.
  double sum_hi = 0.0;
  double sum_lo = 0.0;
  std::size_t supported = 0;
  report.per_class_recall.resize(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    const auto& row = report.confusion[c];
    const std::uint64_t support = std::accumulate(row.begin(), row.end(), std::uint64_t{0});
    if (support == 0) {
      report.warnings.push_back("class '" + classes[c] +
                                "' has no samples and is excluded from the balanced accuracy");
      continue;
    }
    const auto hits = static_cast<double>(row[c]);
    const auto n = static_cast<double>(support);
    const double recall = hits / n;
    report.per_class_recall[c] = recall;
    const double recall_lo = std::fma(-recall, n, hits) / n;
    const double s = sum_hi + recall;
    const double v = s - sum_hi;
    sum_lo += (sum_hi - (s - v)) + (recall - v) + recall_lo;
    sum_hi = s;
    ++supported;
  }
  const auto m = static_cast<double>(supported);
  const double q = sum_hi / m;
  report.bac = q + (std::fma(-q, m, sum_hi) + sum_lo) / m;
  return report;
}

std::string eval_report_to_json(const EvalReport& report, int indent) {
  nlohmann::ordered_json j;
  j["classes"] = report.classes;
  j["confusion"] = report.confusion;
  auto recalls = nlohmann::ordered_json::array();
  for (const auto& r : report.per_class_recall) {
    recalls.push_back(r ? nlohmann::ordered_json(*r) : nlohmann::ordered_json(nullptr));
  }
  j["per_class_recall"] = std::move(recalls);
  j["bac"] = report.bac;
  if (!report.warnings.empty()) j["warnings"] = report.warnings;
  return j.dump(indent);
}

EvalReport eval_report_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EvalReport report;
    report.classes = j.at("classes").get<std::vector<std::string>>();
    report.confusion = j.at("confusion").get<std::vector<std::vector<std::uint64_t>>>();
    for (const auto& r : j.at("per_class_recall")) {
      report.per_class_recall.push_back(r.is_null() ? std::nullopt
                                                    : std::optional<double>(r.get<double>()));
    }
    report.bac = j.at("bac").get<double>();
    if (j.contains("warnings")) report.warnings = j["warnings"].get<std::vector<std::string>>();
    const std::size_t c = report.classes.size();
    bool shape_ok = report.confusion.size() == c && report.per_class_recall.size() == c;
    for (const auto& row : report.confusion) shape_ok = shape_ok && row.size() == c;
    if (!shape_ok) throw Error(ErrorKind::kFormat, "evaluation report shapes are inconsistent");
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("malformed evaluation report: ") + e.what());
  }
}

}  // namespace fvkit
