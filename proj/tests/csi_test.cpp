#include <gtest/gtest.h>

#include <cmath>

#include "srvnn/csi.hpp"
#include "test_support.hpp"

namespace srvnn {
namespace {

using testing::make_instance;

TEST(ComputeRate, MatchesRowsOverDuration) {
  EXPECT_DOUBLE_EQ(compute_rate(make_instance(600, 2, 1.0, [](Index, Index) { return 1.0; })), 600.0);
  EXPECT_DOUBLE_EQ(compute_rate(make_instance(1, 2, 1.0, [](Index, Index) { return 1.0; })), 1.0);
  EXPECT_DOUBLE_EQ(compute_rate(make_instance(346, 2, 2.0, [](Index, Index) { return 1.0; })), 173.0);
}

TEST(ComputeRate, RejectsNonPositiveDuration) {
  auto x = make_instance(4, 2, 1.0, [](Index, Index) { return 1.0; });
  x.duration = 0.0;
  try {
    compute_rate(x);
    FAIL() << "expected DegenerateInstance";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateInstance);
    EXPECT_EQ(e.where(), "csi_core.compute_rate");
  }
}

TEST(Preprocess, CleanInstanceIsIdentity) {
  Rng rng(3);
  const auto x = make_instance(600, 16, 1.0, [&](Index, Index) { return 1.0 + unit_uniform(rng); });
  const auto r = preprocess(x, {.outlier_threshold = 5.0});
  EXPECT_EQ(r.instance.rows(), 600);
  EXPECT_EQ(r.repaired_entries, 0u);
  EXPECT_EQ(r.dropped_rows, 0u);
  EXPECT_TRUE(r.instance.values == x.values);
  EXPECT_EQ(r.instance.timestamps, x.timestamps);
}

TEST(Preprocess, SpikeReplacedByTemporalMidpoint) {
  // Column 3 rises linearly with the row; row 5 is spiked to 10x the cap.
  auto x = make_instance(10, 4, 1.0, [](Index i, Index j) { return j == 3 ? 1.0 + 0.25 * static_cast<double>(i) : 2.0; });
  x.values(5, 3) = 50.0f;
  const auto r = preprocess(x, {.outlier_threshold = 5.0});
  // neighbours at rows 4 and 6 hold 2.0 and 2.5; equal time spacing
  const double expected = 0.5 * (1.0 + 0.25 * 4) + 0.5 * (1.0 + 0.25 * 6);
  EXPECT_FLOAT_EQ(r.instance.values(5, 3), static_cast<float>(expected));
  EXPECT_EQ(r.repaired_entries, 1u);
  EXPECT_EQ(r.dropped_rows, 0u);
  // every other entry untouched
  for (Index i = 0; i < 10; ++i) {
    for (Index j = 0; j < 4; ++j) {
      if (i == 5 && j == 3) continue;
      EXPECT_EQ(r.instance.values(i, j), x.values(i, j));
    }
  }
}

TEST(Preprocess, InterpolationUsesPhysicalTime) {
  auto x = make_instance(4, 2, 1.0, [](Index, Index) { return 1.0; });
  x.timestamps = {0.0, 0.1, 0.4, 0.5};
  x.values(0, 0) = 1.0f;
  x.values(2, 0) = 3.0f;
  x.values(1, 0) = 99.0f;
  x.values(3, 0) = 3.0f;
  // column 0: 3 of 4 valid (75%) would fail 0.8, so relax the fraction
  const auto r = preprocess(x, {.outlier_threshold = 5.0, .validity_fraction = 0.75});
  // t = 0.1 between (0.0, 1.0) and (0.4, 3.0)
  EXPECT_FLOAT_EQ(r.instance.values(1, 0), static_cast<float>(1.0 + 2.0 * 0.25));
}

TEST(Preprocess, EdgeEntriesHoldNearestValid) {
  auto x = make_instance(10, 3, 1.0, [](Index i, Index) { return 1.0 + 0.1 * static_cast<double>(i); });
  x.values(0, 1) = 40.0f;
  x.values(9, 1) = 40.0f;
  const auto r = preprocess(x, {.outlier_threshold = 5.0});
  EXPECT_EQ(r.instance.values(0, 1), x.values(1, 1));
  EXPECT_EQ(r.instance.values(9, 1), x.values(8, 1));
}

TEST(Preprocess, HeavilyCorruptedRowIsDropped) {
  // 10 rows x 8 subcarriers. Columns 0..3 are spiked at row 4 and at two
  // other rows each (30% corrupt), so pass 1 leaves them unresolved. Row 4
  // then has 4 of 8 subcarriers resolved (50%) and is deleted; the other
  // rows carry a single unresolved entry (87.5%) and are interpolated.
  auto x = make_instance(10, 8, 1.0, [](Index i, Index j) { return 1.0 + 0.01 * static_cast<double>(i + j); });
  const Index partners[4][2] = {{0, 1}, {2, 3}, {5, 6}, {7, 8}};
  for (Index j = 0; j < 4; ++j) {
    x.values(4, j) = 100.0f;
    for (Index k : partners[j]) x.values(k, j) = 100.0f;
  }
  const std::size_t spikes = 12, row4 = 4;

  const auto r = preprocess(x, {.outlier_threshold = 5.0});
  EXPECT_EQ(r.instance.rows(), 9);
  EXPECT_EQ(r.dropped_rows, 1u);
  EXPECT_EQ(r.repaired_entries, spikes - row4);
  EXPECT_EQ(r.instance.timestamps.size(), 9u);
  EXPECT_EQ(std::find(r.instance.timestamps.begin(), r.instance.timestamps.end(), x.timestamps[4]),
            r.instance.timestamps.end());
  EXPECT_DOUBLE_EQ(r.instance.duration, 1.0);
  EXPECT_DOUBLE_EQ(r.instance.nominal_rate(), 9.0);
  EXPECT_LE(r.instance.values.maxCoeff(), 5.0f);
}

TEST(Preprocess, DefaultThresholdIsTenTimesMedian) {
  auto x = make_instance(10, 4, 1.0, [](Index, Index) { return 2.0; });
  x.values(3, 1) = 19.0f;  // below 20
  x.values(6, 2) = 21.0f;  // above
  const auto r = preprocess(x, {});
  EXPECT_DOUBLE_EQ(r.threshold, 20.0);
  EXPECT_EQ(r.repaired_entries, 1u);
  EXPECT_EQ(r.instance.values(3, 1), 19.0f);
  EXPECT_EQ(r.instance.values(6, 2), 2.0f);
}

TEST(Preprocess, NegativeAndNonFiniteAreInvalid) {
  auto x = make_instance(10, 4, 1.0, [](Index, Index) { return 2.0; });
  x.values(2, 0) = -1.0f;
  x.values(7, 3) = std::numeric_limits<float>::infinity();
  const auto r = preprocess(x, {.outlier_threshold = 5.0});
  EXPECT_EQ(r.repaired_entries, 2u);
  EXPECT_TRUE(r.instance.values.allFinite());
  EXPECT_GE(r.instance.values.minCoeff(), 0.0f);
}

TEST(Preprocess, Errors) {
  const auto tiny = make_instance(1, 4, 1.0, [](Index, Index) { return 1.0; });
  EXPECT_THROW(preprocess(tiny, {.outlier_threshold = 5.0}), Error);
  const auto narrow = make_instance(5, 1, 1.0, [](Index, Index) { return 1.0; });
  try {
    preprocess(narrow, {.outlier_threshold = 5.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateInstance);
  }
  const auto ruined = make_instance(5, 4, 1.0, [](Index, Index) { return 100.0; });
  try {
    preprocess(ruined, {.outlier_threshold = 5.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyAfterPreprocess);
  }
  const auto ok = make_instance(5, 4, 1.0, [](Index, Index) { return 1.0; });
  EXPECT_THROW(preprocess(ok, {.outlier_threshold = 5.0, .validity_fraction = 0.0}), Error);
  EXPECT_THROW(preprocess(ok, {.outlier_threshold = -1.0}), Error);
}

// Property checks over random corrupted instances.
class PreprocessProperties : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(PreprocessProperties, RepairRulesHold) {
  const auto c = testing::make_corrupted(GetParam());
  const auto replay = testing::replay_repair_rules(c.spiked);
  const PreprocessConfig cfg{.outlier_threshold = 5.0};
  if (replay.dropped_rows == static_cast<std::size_t>(c.instance.rows())) {
    EXPECT_THROW(preprocess(c.instance, cfg), Error);
    return;
  }
  const auto r = preprocess(c.instance, cfg);
  EXPECT_EQ(r.repaired_entries, replay.repaired);
  EXPECT_EQ(r.dropped_rows, replay.dropped_rows);
  EXPECT_TRUE(r.instance.values.allFinite());
  EXPECT_LE(r.instance.values.maxCoeff(), 5.0f);
  EXPECT_GE(r.instance.values.minCoeff(), 0.0f);

  // valid entries of surviving rows are untouched
  Index out_row = 0;
  for (Index i = 0; i < c.instance.rows(); ++i) {
    if (out_row < r.instance.rows() && r.instance.timestamps[static_cast<std::size_t>(out_row)] == c.instance.timestamps[static_cast<std::size_t>(i)]) {
      for (Index j = 0; j < c.instance.subcarriers(); ++j) {
        if (!c.spiked[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) {
          EXPECT_EQ(r.instance.values(out_row, j), c.instance.values(i, j));
        }
      }
      ++out_row;
    }
  }
  EXPECT_EQ(out_row, r.instance.rows());

  const auto again = preprocess(r.instance, cfg);
  EXPECT_TRUE(again.instance.values == r.instance.values);
  EXPECT_EQ(again.instance.timestamps, r.instance.timestamps);
  EXPECT_EQ(again.repaired_entries, 0u);
}

INSTANTIATE_TEST_SUITE_P(Seeds, PreprocessProperties, ::testing::Range<std::uint64_t>(0, 60));

TEST(PreprocessProperties, FixturesExerciseDroppedRows) {
  std::size_t with_drops = 0, without = 0;
  for (std::uint64_t s = 0; s < 60; ++s) {
    const auto r = testing::replay_repair_rules(testing::make_corrupted(s).spiked);
    (r.dropped_rows > 0 ? with_drops : without) += 1;
  }
  EXPECT_GE(with_drops, 5u);
  EXPECT_GE(without, 5u);
}

TEST(SplitDataset, StratifiedAndDisjoint) {
  Dataset ds;
  ds.num_classes = 2;
  ds.class_names = {"a", "b"};
  for (int k = 0; k < 40; ++k) {
    ds.instances.push_back(make_instance(4, 2, 1.0, [k](Index, Index) { return k; }, static_cast<std::uint32_t>(k % 2)));
  }
  const auto s = split_dataset(ds, 0.25, 0.25, 9);
  EXPECT_EQ(s.train.size(), 20u);
  EXPECT_EQ(s.val.size(), 10u);
  EXPECT_EQ(s.test.size(), 10u);
  std::vector<float> seen;
  for (const Dataset* part : {&s.train, &s.val, &s.test}) {
    int ones = 0;
    for (const auto& x : part->instances) {
      ones += *x.label == 1;
      seen.push_back(x.values(0, 0));
    }
    EXPECT_EQ(ones * 2, static_cast<int>(part->size()));
  }
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(std::adjacent_find(seen.begin(), seen.end()), seen.end());
  const auto again = split_dataset(ds, 0.25, 0.25, 9);
  EXPECT_EQ(again.test.instances.front().values(0, 0), s.test.instances.front().values(0, 0));
}

}  // namespace
}  // namespace srvnn
