#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "support.hpp"
#include "tripletclass/metrics.hpp"

namespace tlc = tripletclass;

namespace {

// Independent tally: recount everything straight from the label vectors.
struct OracleMetrics {
  double accuracy;
  std::vector<double> precision, recall, f1, specificity;
};

OracleMetrics oracle(const std::vector<int>& truth, const std::vector<int>& pred, int k) {
  OracleMetrics m{0.0, {}, {}, {}, {}};
  long correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == pred[i]) ++correct;
  }
  m.accuracy = truth.empty() ? 0.0 : static_cast<double>(correct) / truth.size();
  for (int c = 0; c < k; ++c) {
    long tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool is_c = truth[i] == c, said_c = pred[i] == c;
      if (is_c && said_c) ++tp;
      if (!is_c && said_c) ++fp;
      if (is_c && !said_c) ++fn;
      if (!is_c && !said_c) ++tn;
    }
    const double p = tp + fp == 0 ? 0.0 : double(tp) / (tp + fp);
    const double r = tp + fn == 0 ? 0.0 : double(tp) / (tp + fn);
    m.precision.push_back(p);
    m.recall.push_back(r);
    m.f1.push_back(p + r == 0.0 ? 0.0 : 2 * p * r / (p + r));
    m.specificity.push_back(tn + fp == 0 ? 0.0 : double(tn) / (tn + fp));
  }
  return m;
}

const std::vector<std::vector<long>> kExampleCounts = {{5, 1, 0}, {0, 4, 2}, {1, 0, 7}};

tlc::ConfusionMatrix example_cm() {
  tlc::ConfusionMatrix cm;
  cm.counts = kExampleCounts;
  cm.class_names = {"a", "b", "c"};
  return cm;
}

}  // namespace

TEST_CASE("confusion matrix tallies") {
  SECTION("perfect predictions give a diagonal matrix") {
    const std::vector<int> labels = {0, 1, 2, 1, 0};
    const auto cm = tlc::confusion(labels, labels, 3);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (i != j) CHECK(cm.counts[i][j] == 0);
      }
    }
    CHECK(cm.total() == 5);
  }

  SECTION("everything predicted as class 0 fills only column 0") {
    const std::vector<int> truth = {0, 1, 2, 2};
    const std::vector<int> pred = {0, 0, 0, 0};
    const auto cm = tlc::confusion(truth, pred, 3);
    for (int i = 0; i < 3; ++i) {
      CHECK(cm.counts[i][0] == (i == 0 ? 1 : i == 1 ? 1 : 2));
      for (int j = 1; j < 3; ++j) CHECK(cm.counts[i][j] == 0);
    }
  }

  SECTION("random case matches a direct tally") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> dist(0, 2);
    std::vector<int> truth(30), pred(30);
    for (auto& v : truth) v = dist(rng);
    for (auto& v : pred) v = dist(rng);
    const auto cm = tlc::confusion(truth, pred, 3);
    for (int t = 0; t < 3; ++t) {
      for (int p = 0; p < 3; ++p) {
        long count = 0;
        for (int i = 0; i < 30; ++i) {
          if (truth[i] == t && pred[i] == p) ++count;
        }
        REQUIRE(cm.counts[t][p] == count);
      }
    }
  }

  SECTION("label out of range is a contract error") {
    CHECK_THROWS_AS(tlc::confusion({0, 3}, {0, 0}, 3), tlc::Error);
    CHECK_THROWS_AS(tlc::confusion({0, 0}, {0, -1}, 3), tlc::Error);
    CHECK_THROWS_AS(tlc::confusion({0}, {0, 1}, 2), tlc::Error);
  }
}

TEST_CASE("one-vs-rest reduction") {
  const auto cm = example_cm();

  SECTION("worked example for class 0") {
    const auto b = tlc::binary_counts(cm, 0);
    CHECK(b.tp == 5);
    CHECK(b.fp == 1);
    CHECK(b.fn == 1);
    CHECK(b.tn == 13);
  }

  SECTION("TP+FP+FN+TN partitions the total for every class") {
    for (int c = 0; c < 3; ++c) {
      const auto b = tlc::binary_counts(cm, c);
      CHECK(b.tp + b.fp + b.fn + b.tn == cm.total());
    }
  }

  SECTION("diagonal matrix has zero FP and FN everywhere") {
    tlc::ConfusionMatrix diag;
    diag.counts = {{3, 0}, {0, 4}};
    diag.class_names = {"x", "y"};
    for (int c = 0; c < 2; ++c) {
      const auto b = tlc::binary_counts(diag, c);
      CHECK(b.fp == 0);
      CHECK(b.fn == 0);
    }
  }
}

TEST_CASE("metric formulas") {
  CHECK(tlc::precision(8, 2) == 0.8);
  CHECK(tlc::recall(8, 2) == 0.8);
  CHECK(tlc::f1(0.8, 0.8) == Catch::Approx(0.8).margin(1e-12));
  CHECK(tlc::specificity(9, 1) == 0.9);

  SECTION("zero-denominator convention") {
    CHECK(tlc::precision(0, 0) == 0.0);
    CHECK(tlc::recall(0, 0) == 0.0);
    CHECK(tlc::f1(0.0, 0.0) == 0.0);
    CHECK(tlc::specificity(0, 0) == 0.0);
  }
}

TEST_CASE("evaluate populates the full report") {
  SECTION("perfect 3-class predictions score 1.0 everywhere") {
    const std::vector<int> labels = {0, 1, 2, 0, 1, 2};
    const auto r = tlc::evaluate(labels, labels, 3);
    CHECK(r.accuracy == 1.0);
    CHECK(r.macro_precision == 1.0);
    CHECK(r.macro_recall == 1.0);
    CHECK(r.macro_f1 == 1.0);
    CHECK(r.macro_specificity == 1.0);
  }

  SECTION("worked 3x3 example: accuracy = trace/total = 16/20") {
    // reconstruct label vectors realizing the example confusion matrix
    std::vector<int> truth, pred;
    for (int t = 0; t < 3; ++t) {
      for (int p = 0; p < 3; ++p) {
        for (long i = 0; i < kExampleCounts[t][p]; ++i) {
          truth.push_back(t);
          pred.push_back(p);
        }
      }
    }
    const auto r = tlc::evaluate(truth, pred, 3, {"a", "b", "c"});
    CHECK(r.accuracy == Catch::Approx(0.8).margin(1e-12));
    CHECK(r.confusion.counts == kExampleCounts);

    // macro f1 equals the mean of independently computed per-class f1
    const auto m = oracle(truth, pred, 3);
    const double mean_f1 = (m.f1[0] + m.f1[1] + m.f1[2]) / 3.0;
    CHECK(r.macro_f1 == Catch::Approx(mean_f1).margin(1e-12));
  }
}

TEST_CASE("metrics equal the brute-force oracle on random cases") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = std::uniform_int_distribution<int>(2, 5)(rng);
    const int n = std::uniform_int_distribution<int>(1, 200)(rng);
    std::uniform_int_distribution<int> label(0, k - 1);
    std::vector<int> truth(n), pred(n);
    for (auto& v : truth) v = label(rng);
    for (auto& v : pred) v = label(rng);

    const auto r = tlc::evaluate(truth, pred, k);
    const auto m = oracle(truth, pred, k);
    REQUIRE(std::abs(r.accuracy - m.accuracy) < 1e-12);
    for (int c = 0; c < k; ++c) {
      REQUIRE(std::abs(r.per_class[c].precision - m.precision[c]) < 1e-12);
      REQUIRE(std::abs(r.per_class[c].recall - m.recall[c]) < 1e-12);
      REQUIRE(std::abs(r.per_class[c].f1 - m.f1[c]) < 1e-12);
      REQUIRE(std::abs(r.per_class[c].specificity - m.specificity[c]) < 1e-12);
      // f1 identity from its defining formula
      const double p = r.per_class[c].precision, rec = r.per_class[c].recall;
      const double direct = p + rec == 0.0 ? 0.0 : 2 * p * rec / (p + rec);
      REQUIRE(std::abs(r.per_class[c].f1 - direct) < 1e-12);
    }
  }
}

TEST_CASE("relabeling classes permutes per-class metrics, accuracy unchanged") {
  std::mt19937_64 rng(29);
  std::uniform_int_distribution<int> label(0, 2);
  std::vector<int> truth(60), pred(60);
  for (auto& v : truth) v = label(rng);
  for (auto& v : pred) v = label(rng);

  const int perm[3] = {2, 0, 1};
  std::vector<int> truth_p(60), pred_p(60);
  for (int i = 0; i < 60; ++i) {
    truth_p[i] = perm[truth[i]];
    pred_p[i] = perm[pred[i]];
  }

  const auto base = tlc::evaluate(truth, pred, 3);
  const auto permuted = tlc::evaluate(truth_p, pred_p, 3);
  CHECK(base.accuracy == permuted.accuracy);
  for (int c = 0; c < 3; ++c) {
    CHECK(base.per_class[c].precision == permuted.per_class[perm[c]].precision);
    CHECK(base.per_class[c].recall == permuted.per_class[perm[c]].recall);
    CHECK(base.per_class[c].f1 == permuted.per_class[perm[c]].f1);
  }
  CHECK(base.macro_f1 == Catch::Approx(permuted.macro_f1).margin(1e-12));
}

TEST_CASE("binary macro metrics are the mean of the two one-vs-rest values") {
  std::vector<int> truth = {0, 0, 0, 1, 1, 0, 1, 0};
  std::vector<int> pred = {0, 1, 0, 1, 0, 0, 1, 1};
  const auto r = tlc::evaluate(truth, pred, 2);
  CHECK(r.macro_precision ==
        Catch::Approx((r.per_class[0].precision + r.per_class[1].precision) / 2).margin(1e-15));
  CHECK(r.macro_recall ==
        Catch::Approx((r.per_class[0].recall + r.per_class[1].recall) / 2).margin(1e-15));
}

TEST_CASE("report serialization") {
  testsupport::TempDir dir("metrics");
  const std::vector<int> truth = {0, 1, 2, 0};
  const std::vector<int> pred = {0, 1, 1, 0};
  const auto r = tlc::evaluate(truth, pred, 3, {"x", "y", "z"});

  SECTION("confusion CSV layout") {
    const auto path = dir.path / "cm.csv";
    tlc::save_confusion_csv(r.confusion, path);
    CHECK(testsupport::read_file(path) ==
          "x,y,z\n"
          "2,0,0\n"
          "0,1,0\n"
          "0,1,0\n");
  }

  SECTION("report CSV rows are the five paper metrics") {
    const auto path = dir.path / "report.csv";
    tlc::save_eval_report_csv(r, "demo", path);
    const auto text = testsupport::read_file(path);
    CHECK(text.find("metric,demo\n") == 0);
    CHECK(text.find("accuracy,0.75") != std::string::npos);
    CHECK(text.find("precision,") != std::string::npos);
    CHECK(text.find("specificity,") != std::string::npos);
    CHECK(text.find("recall,") != std::string::npos);
    CHECK(text.find("f1,") != std::string::npos);
  }

  SECTION("JSON carries per-class counts") {
    const auto j = tlc::eval_report_to_json(r);
    CHECK(j.at("accuracy").get<double>() == 0.75);
    CHECK(j.at("per_class").size() == 3);
    CHECK(j.at("per_class")[0].at("tp").get<long>() == 2);
    CHECK(j.at("confusion").at("class_names")[2].get<std::string>() == "z");
  }
}
