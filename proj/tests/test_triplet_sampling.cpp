#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "support.hpp"
#include "tripletclass/triplet.hpp"

namespace tlc = tripletclass;

TEST_CASE("sampled triplets satisfy the label invariants") {
  std::mt19937_64 seeder(3);
  for (int trial = 0; trial < 25; ++trial) {
    std::uniform_int_distribution<int> classes_dist(2, 5), size_dist(2, 9);
    const int num_classes = classes_dist(seeder);
    std::vector<int> train_sizes, val_sizes;
    for (int c = 0; c < num_classes; ++c) {
      train_sizes.push_back(size_dist(seeder));
      val_sizes.push_back(0);
    }
    const auto manifest = testsupport::fake_manifest(train_sizes, val_sizes);

    std::mt19937_64 rng(trial);
    const auto idx = tlc::sample_triplet_indices(manifest, tlc::SplitKind::train, 16, rng);
    REQUIRE(idx.anchor.size() == 16);
    for (int i = 0; i < 16; ++i) {
      const int a = idx.anchor[i], p = idx.positive[i], n = idx.negative[i];
      REQUIRE(manifest.records[p].label == manifest.records[a].label);
      REQUIRE(manifest.records[n].label != manifest.records[a].label);
      REQUIRE(p != a);
      REQUIRE(idx.anchor_labels[i] == manifest.records[a].label);
    }
  }
}

TEST_CASE("triplet sampling is deterministic per rng seed") {
  const auto manifest = testsupport::fake_manifest({5, 5, 5}, {0, 0, 0});
  std::mt19937_64 rng1(9), rng2(9);
  const auto a = tlc::sample_triplet_indices(manifest, tlc::SplitKind::train, 32, rng1);
  const auto b = tlc::sample_triplet_indices(manifest, tlc::SplitKind::train, 32, rng2);
  CHECK(a.anchor == b.anchor);
  CHECK(a.positive == b.positive);
  CHECK(a.negative == b.negative);
}

TEST_CASE("negatives are drawn uniformly over the other classes") {
  // anchor class 0; classes 1 and 2 have equal size -> each picked ~50%
  const auto manifest = testsupport::fake_manifest({40, 20, 20}, {0, 0, 0});
  std::mt19937_64 rng(123);
  int counts[3] = {0, 0, 0};
  int total_from_anchor_0 = 0;
  for (int round = 0; round < 1500; ++round) {
    const auto idx = tlc::sample_triplet_indices(manifest, tlc::SplitKind::train, 16, rng);
    for (int i = 0; i < 16; ++i) {
      if (idx.anchor_labels[i] != 0) continue;
      ++total_from_anchor_0;
      counts[manifest.records[idx.negative[i]].label] += 1;
    }
  }
  REQUIRE(total_from_anchor_0 > 10000);
  CHECK(counts[0] == 0);
  const double share1 = static_cast<double>(counts[1]) / total_from_anchor_0;
  CHECK(share1 > 0.47);
  CHECK(share1 < 0.53);
}

TEST_CASE("sampling errors") {
  SECTION("anchor class with a single record names the class") {
    const auto manifest = testsupport::fake_manifest({1, 1}, {0, 0});
    std::mt19937_64 rng(1);
    try {
      tlc::sample_triplet_indices(manifest, tlc::SplitKind::train, 4, rng);
      FAIL("expected error");
    } catch (const tlc::Error& e) {
      CHECK(e.code() == tlc::ErrorCode::sampling);
      CHECK(std::string(e.what()).find("class") != std::string::npos);
    }
  }

  SECTION("fewer than two populated classes") {
    const auto manifest = testsupport::fake_manifest({6, 0}, {0, 3});
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(tlc::sample_triplet_indices(manifest, tlc::SplitKind::train, 4, rng),
                    tlc::Error);
  }
}

TEST_CASE("sample_triplets loads aligned image tensors") {
  testsupport::TempDir dir("striplet");
  const auto root = testsupport::make_image_tree(dir, {"a", "b"}, 3, 8);
  auto manifest = tlc::scan_dataset(root, {8, 8, 3});

  std::mt19937_64 rng(5);
  const auto batch =
      tlc::sample_triplets(manifest, tlc::SplitKind::train, 4, rng, tlc::ElementKind::float16);
  CHECK(batch.anchors.shape == std::vector<int>{4, 8, 8, 3});
  CHECK(batch.positives.shape == batch.anchors.shape);
  CHECK(batch.negatives.shape == batch.anchors.shape);
  CHECK(batch.anchor_labels.size() == 4);
  CHECK(batch.anchors.kind == tlc::ElementKind::float16);
  for (float v : batch.anchors.data) CHECK(v == tlc::quantize_half(v));
}

TEST_CASE("semi-hard mining matches a brute-force scan") {
  std::mt19937_64 rng(31);
  const double margin = 0.4;

  for (int trial = 0; trial < 40; ++trial) {
    const int B = 8, D = 4;
    tlc::Tensor emb({B, D});
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    for (float& v : emb.data) v = dist(rng);
    std::vector<int> labels(B);
    std::uniform_int_distribution<int> ldist(0, 2);
    for (int& l : labels) l = ldist(rng);

    // need at least two classes and one repeated label to mine anything
    labels[0] = 0;
    labels[1] = 0;
    labels[2] = 1;

    const auto mined = tlc::mine_semi_hard(emb, labels, margin);
    REQUIRE(!mined.empty());

    auto dist_ij = [&](int i, int j) {
      double sum = 0.0;
      for (int d = 0; d < D; ++d) {
        const double diff = emb.at(i, d) - emb.at(j, d);
        sum += diff * diff;
      }
      return std::sqrt(sum);
    };

    for (const auto& [a, p, n] : mined) {
      REQUIRE(labels[p] == labels[a]);
      REQUIRE(labels[n] != labels[a]);
      REQUIRE(p != a);

      // oracle: hardest positive
      int want_p = -1;
      double want_dap = -1.0;
      for (int j = 0; j < B; ++j) {
        if (j == a || labels[j] != labels[a]) continue;
        if (dist_ij(a, j) > want_dap) {
          want_dap = dist_ij(a, j);
          want_p = j;
        }
      }
      REQUIRE(p == want_p);

      // oracle: hardest in-window negative, else minimal violation
      int want_n = -1;
      double best_window = std::numeric_limits<double>::infinity();
      for (int j = 0; j < B; ++j) {
        if (labels[j] == labels[a]) continue;
        const double d = dist_ij(a, j);
        if (d > want_dap && d < want_dap + margin && d < best_window) {
          best_window = d;
          want_n = j;
        }
      }
      if (want_n < 0) {
        double best_violation = std::numeric_limits<double>::infinity();
        for (int j = 0; j < B; ++j) {
          if (labels[j] == labels[a]) continue;
          const double violation = std::max(want_dap - dist_ij(a, j) + margin, 0.0);
          if (violation < best_violation) {
            best_violation = violation;
            want_n = j;
          }
        }
      }
      REQUIRE(n == want_n);
    }
  }
}

TEST_CASE("mining picks zero-loss negatives when everything is beyond the margin") {
  // two tight clusters 10 apart: every negative is far outside the window
  tlc::Tensor emb({4, 2});
  emb.at(0, 0) = 0.0f;
  emb.at(1, 0) = 0.1f;
  emb.at(2, 0) = 10.0f;
  emb.at(3, 0) = 10.1f;
  const std::vector<int> labels = {0, 0, 1, 1};

  const auto mined = tlc::mine_semi_hard(emb, labels, 0.4);
  tlc::TripletConfig cfg{0.4, tlc::DistanceKind::euclidean, 1};
  for (const auto& [a, p, n] : mined) {
    tlc::Tensor ta({1, 2}), tp({1, 2}), tn({1, 2});
    for (int d = 0; d < 2; ++d) {
      ta.at(0, d) = emb.at(a, d);
      tp.at(0, d) = emb.at(p, d);
      tn.at(0, d) = emb.at(n, d);
    }
    CHECK(tlc::triplet_loss(ta, tp, tn, cfg) == 0.0);
  }
}

TEST_CASE("mining errors on degenerate batches") {
  SECTION("two points with distinct labels: no positive exists") {
    tlc::Tensor emb({2, 2});
    emb.at(1, 0) = 1.0f;
    try {
      tlc::mine_semi_hard(emb, {0, 1}, 0.4);
      FAIL("expected error");
    } catch (const tlc::Error& e) {
      CHECK(e.code() == tlc::ErrorCode::mining);
    }
  }

  SECTION("single-class batch: no negative exists") {
    tlc::Tensor emb({3, 2});
    CHECK_THROWS_AS(tlc::mine_semi_hard(emb, {0, 0, 0}, 0.4), tlc::Error);
  }
}
