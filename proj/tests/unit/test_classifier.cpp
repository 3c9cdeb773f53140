#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fvkit/classifier.hpp"
#include "fvkit/errors.hpp"
#include "test_util.hpp"

namespace fvkit {
namespace {

struct Blobs {
  Matrix x;
  std::vector<std::string> labels;
};

// Two Gaussian blobs at +(5,5) and -(5,5); the line x + y = 0 separates them
// with margin far larger than the blob spread.
Blobs two_blobs(std::size_t per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Blobs b{Matrix(2 * per_class, 2), {}};
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const bool pos = i < per_class;
    const double c = pos ? 5.0 : -5.0;
    b.x(i, 0) = c + noise(rng);
    b.x(i, 1) = c + noise(rng);
    b.labels.push_back(pos ? "pos" : "neg");
  }
  return b;
}

double training_accuracy(const LinearModel& m, const Blobs& b) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < b.x.rows(); ++i) ok += predict(m, b.x.row(i)).label == b.labels[i];
  return static_cast<double>(ok) / static_cast<double>(b.x.rows());
}

TEST(TrainSvm, SeparatesTwoBlobs) {
  const auto blobs = two_blobs(100, 1);
  // Geometry check for the oracle: every point lies on its side of x + y = 0.
  for (std::size_t i = 0; i < 200; ++i) {
    ASSERT_EQ(blobs.x(i, 0) + blobs.x(i, 1) > 0.0, blobs.labels[i] == "pos");
  }
  const auto result = train_linear_svm(blobs.x, blobs.labels, {"pos", "neg"}, SvmConfig{});
  EXPECT_EQ(training_accuracy(result.model, blobs), 1.0);
}

TEST(TrainSvm, DuplicatingDataKeepsDecisionSigns) {
  const auto blobs = two_blobs(100, 2);
  Blobs doubled{Matrix(400, 2), blobs.labels};
  doubled.labels.insert(doubled.labels.end(), blobs.labels.begin(), blobs.labels.end());
  for (std::size_t i = 0; i < 400; ++i) {
    doubled.x(i, 0) = blobs.x(i % 200, 0);
    doubled.x(i, 1) = blobs.x(i % 200, 1);
  }
  const auto a = train_linear_svm(blobs.x, blobs.labels, {"pos", "neg"}, SvmConfig{}).model;
  const auto b = train_linear_svm(doubled.x, doubled.labels, {"pos", "neg"}, SvmConfig{}).model;
  for (std::size_t i = 0; i < 200; ++i) {
    EXPECT_EQ(predict(a, blobs.x.row(i)).label, predict(b, blobs.x.row(i)).label);
  }
}

TEST(TrainSvm, ObjectiveNonIncreasingAndDeterministic) {
  std::mt19937_64 rng(3);
  Matrix x = testing::random_matrix(150, 6, rng);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < 150; ++i) {
    labels.push_back(x(i, 0) + 0.5 * x(i, 1) > 0.3 ? "a" : (x(i, 2) > 0 ? "b" : "c"));
  }
  SvmConfig config;
  config.seed = 9;
  const auto r1 = train_linear_svm(x, labels, {"a", "b", "c"}, config);
  const auto r2 = train_linear_svm(x, labels, {"a", "b", "c"}, config);
  config.threads = 3;
  const auto r3 = train_linear_svm(x, labels, {"a", "b", "c"}, config);
  EXPECT_EQ(r1.model, r2.model);
  EXPECT_EQ(r1.model, r3.model);
  for (const auto& trace : r1.objective_trace) {
    ASSERT_EQ(trace.size(), 30u);
    for (std::size_t e = 1; e < trace.size(); ++e) EXPECT_LE(trace[e], trace[e - 1] + 1e-6);
  }
}

TEST(TrainSvm, Errors) {
  const auto blobs = two_blobs(5, 4);
  std::vector<std::string> single(10, "pos");
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kIo;
  };
  EXPECT_EQ(kind_of([&] { train_linear_svm(blobs.x, single, {"pos", "neg"}, SvmConfig{}); }),
            ErrorKind::kDegenerateLabels);
  EXPECT_EQ(kind_of([&] { train_linear_svm(blobs.x, blobs.labels, {"pos"}, SvmConfig{}); }),
            ErrorKind::kDegenerateLabels);
  EXPECT_EQ(kind_of([&] { train_linear_svm(blobs.x, blobs.labels, {"pos", "x"}, SvmConfig{}); }),
            ErrorKind::kLabel);

  std::vector<FisherVector> fvs = {FisherVector({1.0, 0.0}, true),
                                   FisherVector({0.0, 1.0, 0.0}, true)};
  std::vector<std::string> labels = {"pos", "neg"};
  EXPECT_EQ(kind_of([&] { train_svm(fvs, labels, {"pos", "neg"}, SvmConfig{}); }),
            ErrorKind::kShape);
  fvs = {FisherVector({1.0, 0.0}, true), FisherVector({0.0, 1.0}, false)};
  EXPECT_EQ(kind_of([&] { train_svm(fvs, labels, {"pos", "neg"}, SvmConfig{}); }),
            ErrorKind::kInvalidArgument);
}

TEST(Predict, TieGoesToFirstClass) {
  LinearModel m{{"x", "y", "z"}, Matrix(3, 4), {0.0, 0.0, 0.0}};
  const std::vector<double> f = {1.0, 2.0, 3.0, 4.0};
  const auto p = predict(m, f);
  EXPECT_EQ(p.class_index, 0u);
  EXPECT_EQ(p.label, "x");
}

TEST(Predict, ScoresAreDotProducts) {
  LinearModel m{{"a", "b"}, Matrix(2, 3, {1.0, -2.0, 0.5, 0.0, 3.0, -1.0}), {0.25, -1.0}};
  const std::vector<double> f = {2.0, 1.0, 4.0};
  const auto p = predict(m, f);
  EXPECT_DOUBLE_EQ(p.scores[0], 2.0 - 2.0 + 2.0 + 0.25);
  EXPECT_DOUBLE_EQ(p.scores[1], 0.0 + 3.0 - 4.0 - 1.0);
  EXPECT_EQ(p.label, "a");
  EXPECT_THROW(predict(m, std::vector<double>{1.0}), Error);
}

TEST(Predict, ArgmaxInvariantUnderPositiveScaling) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> pos(0.01, 100.0);
  for (int trial = 0; trial < 200; ++trial) {
    LinearModel m{{"a", "b", "c", "d"}, testing::random_matrix(4, 5, rng), {}};
    for (int c = 0; c < 4; ++c) m.biases.push_back(std::normal_distribution<double>()(rng));
    const auto f = testing::random_matrix(1, 5, rng);
    const double s = pos(rng);
    LinearModel scaled = m;
    for (double& w : scaled.weights.data()) w *= s;
    for (double& b : scaled.biases) b *= s;
    EXPECT_EQ(predict(m, f.row(0)).class_index, predict(scaled, f.row(0)).class_index);
  }
}

TEST(BalancedAccuracy, PerfectPredictions) {
  const std::vector<std::string> t = {"a", "b", "b", "c"};
  const std::vector<std::string> classes = {"a", "b", "c"};
  EXPECT_EQ(balanced_accuracy(t, t, classes).bac, 1.0);
}

TEST(BalancedAccuracy, HandCountedExample) {
  const std::vector<std::string> truth = {"A", "A", "A", "B"};
  const std::vector<std::string> preds = {"A", "A", "B", "B"};
  const std::vector<std::string> classes = {"A", "B"};
  const auto r = balanced_accuracy(preds, truth, classes);
  EXPECT_EQ(r.confusion, (std::vector<std::vector<std::uint64_t>>{{2, 1}, {0, 1}}));
  EXPECT_DOUBLE_EQ(*r.per_class_recall[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(*r.per_class_recall[1], 1.0);
  EXPECT_DOUBLE_EQ(r.bac, 5.0 / 6.0);
}

TEST(BalancedAccuracy, MajorityVoteOnSevenClasses) {
  const std::vector<std::string> classes = {"MEL", "NV", "BCC", "AKIEC", "BKL", "DF", "VASC"};
  std::vector<std::string> truth;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    truth.insert(truth.end(), c == 1 ? 60 : 3 + c, classes[c]);
  }
  const std::vector<std::string> preds(truth.size(), "NV");
  EXPECT_DOUBLE_EQ(balanced_accuracy(preds, truth, classes).bac, 1.0 / 7.0);
}

TEST(BalancedAccuracy, InvariantToReplicatingAClass) {
  std::mt19937_64 rng(31);
  const std::vector<std::string> classes = {"a", "b", "c", "d"};
  std::uniform_int_distribution<int> pick(0, 3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> truth, preds;
    for (int i = 0; i < 40; ++i) {
      truth.push_back(classes[pick(rng)]);
      preds.push_back(classes[pick(rng)]);
    }
    const auto base = balanced_accuracy(preds, truth, classes);
    const std::string target = classes[pick(rng)];
    const int factor = 2 + trial % 4;
    auto t2 = truth;
    auto p2 = preds;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] != target) continue;
      for (int r = 1; r < factor; ++r) {
        t2.push_back(truth[i]);
        p2.push_back(preds[i]);
      }
    }
    const auto replicated = balanced_accuracy(p2, t2, classes);
    EXPECT_NEAR(replicated.bac, base.bac, 1e-15);
    // Row sums equal support counts.
    for (std::size_t c = 0; c < classes.size(); ++c) {
      const auto support = static_cast<std::uint64_t>(std::count(t2.begin(), t2.end(), classes[c]));
      const auto& row = replicated.confusion[c];
      EXPECT_EQ(std::accumulate(row.begin(), row.end(), std::uint64_t{0}), support);
    }
  }
}

TEST(BalancedAccuracy, ZeroSupportClassIsExcluded) {
  const std::vector<std::string> truth = {"a", "a", "b"};
  const std::vector<std::string> preds = {"a", "c", "b"};
  const std::vector<std::string> classes = {"a", "b", "c"};
  const auto r = balanced_accuracy(preds, truth, classes);
  EXPECT_FALSE(r.per_class_recall[2].has_value());
  EXPECT_DOUBLE_EQ(r.bac, (0.5 + 1.0) / 2.0);
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(BalancedAccuracy, Errors) {
  const std::vector<std::string> classes = {"a", "b"};
  try {
    balanced_accuracy(std::vector<std::string>{"a"}, std::vector<std::string>{"z"}, classes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kLabel);
  }
  EXPECT_THROW(balanced_accuracy(std::vector<std::string>{}, std::vector<std::string>{}, classes),
               Error);
  EXPECT_THROW(
      balanced_accuracy(std::vector<std::string>{"a"}, std::vector<std::string>{"a", "b"}, classes),
      Error);
}

TEST(EvalReportJson, RoundTripsThroughSchema) {
  const std::vector<std::string> truth = {"a", "a", "b"};
  const std::vector<std::string> preds = {"a", "c", "b"};
  const std::vector<std::string> classes = {"a", "b", "c"};
  const auto r = balanced_accuracy(preds, truth, classes);
  const auto text = eval_report_to_json(r);
  EXPECT_NE(text.find("\"per_class_recall\""), std::string::npos);
  EXPECT_NE(text.find("null"), std::string::npos);
  EXPECT_EQ(eval_report_from_json(text), r);
  EXPECT_THROW(eval_report_from_json("{\"bac\": 1}"), Error);
  EXPECT_THROW(eval_report_from_json("not json"), Error);
}

}  // namespace
}  // namespace fvkit
