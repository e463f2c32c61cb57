#include <doctest.h>

#include <random>

#include "layoutmask/metrics.hpp"
#include "test_support.hpp"

using namespace layoutmask;
using namespace layoutmask::metrics;
using layoutmask::testing::MetricsFixture;

namespace {

BBoxTrajectory constant_gt(Canvas canvas, BBox b) {
  return {canvas, std::vector<std::optional<BBox>>(static_cast<std::size_t>(canvas.num_frames), b)};
}

DetectionTrack detect_first(std::size_t frames, std::size_t hits, BBox b) {
  DetectionTrack t(frames);
  for (std::size_t f = 0; f < hits; ++f) t.boxes[f] = b;
  return t;
}

}  // namespace

TEST_CASE("iou unit cases") {
  CHECK(iou({0, 0, 4, 4}, {0, 0, 4, 4}) == 1.0);
  CHECK(iou({0, 0, 2, 2}, {5, 5, 7, 7}) == 0.0);
  CHECK(iou({0, 0, 2, 2}, {2, 0, 4, 2}) == 0.0);  // touching edges share no cell
  CHECK(iou({0, 0, 2, 2}, {1, 0, 3, 2}) == 2.0 / 6.0);
}

TEST_CASE("iou properties") {
  std::mt19937_64 gen(31);
  std::uniform_int_distribution<int> u(0, 40);
  auto box = [&] {
    int x0 = u(gen), x1 = u(gen), y0 = u(gen), y1 = u(gen);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    return BBox{x0, y0, x1 + 1, y1 + 1};
  };
  for (int trial = 0; trial < 500; ++trial) {
    const BBox a = box(), b = box();
    CHECK(iou(a, b) == iou(b, a));
    CHECK(iou(a, a) == 1.0);
    CHECK(iou(a, b) >= 0.0);
    CHECK(iou(a, b) <= 1.0);
    const BBox a3{3 * a.x0, 3 * a.y0, 3 * a.x1, 3 * a.y1};
    const BBox b3{3 * b.x0, 3 * b.y0, 3 * b.x1, 3 * b.y1};
    CHECK(iou(a3, b3) == doctest::Approx(iou(a, b)).epsilon(1e-15));
  }
}

TEST_CASE("coverage: strict 50% filter") {
  const Canvas c{64, 64, 16};
  const BBox b{8, 8, 24, 24};
  auto rec = [&](std::size_t hits) {
    return make_record("v", constant_gt(c, b), detect_first(16, hits, b));
  };
  std::vector<EvalRecord> full = {rec(16), rec(16)};
  CHECK(coverage(full) == 1.0);
  std::vector<EvalRecord> one_low = {rec(16), rec(4)};
  CHECK(coverage(one_low) == 0.5);
  std::vector<EvalRecord> half = {rec(8)};
  CHECK(coverage(half) == 0.0);
  CHECK_FALSE(half[0].out.mean_iou.has_value());
  std::vector<EvalRecord> just_over = {rec(9)};
  CHECK(coverage(just_over) == 1.0);
  CHECK_THROWS_AS(coverage(std::vector<EvalRecord>{}), std::invalid_argument);
}

TEST_CASE("video mIoU counts absent frames as zero") {
  const Canvas c{64, 64, 4};
  const BBox b{8, 8, 24, 24};
  std::vector<EvalRecord> perfect = {make_record("p", constant_gt(c, b), detect_first(4, 4, b))};
  CHECK(video_miou(perfect) == 1.0);
  // 3 of 4 detected at IoU 1: passes the filter, mean 0.75.
  std::vector<EvalRecord> partial = {make_record("q", constant_gt(c, b), detect_first(4, 3, b))};
  CHECK(*video_miou(partial) == 0.75);
  // Half at IoU 1 on a longer video whose other half is absent but still
  // passes: 5 of 8 frames detected, of which 4 exact.
  DetectionTrack t(8);
  for (int f = 0; f < 4; ++f) t.boxes[f] = b;
  t.boxes[4] = BBox{40, 40, 60, 60};
  std::vector<EvalRecord> mixed = {make_record("r", constant_gt({64, 64, 8}, b), t)};
  CHECK(*video_miou(mixed) == 0.5);
  std::vector<EvalRecord> none = {make_record("s", constant_gt(c, b), DetectionTrack(4))};
  CHECK_FALSE(video_miou(none).has_value());
}

TEST_CASE("ap50 cases") {
  const Canvas c{100, 100, 24};
  const BBox gt{0, 0, 20, 10};
  const BBox near{0, 0, 20, 6};  // IoU 0.6
  REQUIRE(iou(gt, near) == doctest::Approx(0.6));
  std::vector<EvalRecord> all = {make_record("a", constant_gt(c, gt), detect_first(24, 24, near))};
  CHECK(ap50(all) == 1.0);
  std::vector<EvalRecord> none = {make_record("b", constant_gt(c, gt), DetectionTrack(24))};
  CHECK(ap50(none) == 0.0);
  std::vector<EvalRecord> half = {make_record("c", constant_gt(c, gt), detect_first(24, 12, near))};
  CHECK(ap50(half) == 0.5);
}

TEST_CASE("centroid distance cases") {
  const Canvas c{100, 100, 1};
  auto one = [&](BBox gt, BBox det, CentroidNorm norm = CentroidNorm::kDiagonal) {
    DetectionTrack t(1);
    t.boxes[0] = det;
    return *evaluate_video(constant_gt(c, gt), t, norm).centroid_distance;
  };
  CHECK(one({10, 10, 20, 20}, {10, 10, 20, 20}) == 0.0);
  CHECK(one({0, 0, 2, 2}, {98, 98, 100, 100}) == doctest::Approx(0.98).epsilon(1e-12));
  // Center offset (30, 40) on a 100x100 canvas.
  CHECK(one({0, 0, 40, 40}, {30, 40, 70, 80}) == doctest::Approx(50.0 / std::hypot(100.0, 100.0)).epsilon(1e-12));
  CHECK(one({0, 0, 40, 40}, {30, 40, 70, 80}) == doctest::Approx(0.3536).epsilon(1e-4));
  CHECK(one({0, 0, 40, 40}, {30, 40, 70, 80}, CentroidNorm::kLongSide) == doctest::Approx(0.5));
}

TEST_CASE("centroid distance: opposite corner pixels approach one") {
  // Centers (0.5, 0.5) and (99.5, 99.5) are 99 sqrt 2 apart; the diagonal is
  // 100 sqrt 2.
  const Canvas c{100, 100, 1};
  DetectionTrack t(1);
  t.boxes[0] = BBox{99, 99, 100, 100};
  const double cd = *evaluate_video({c, {BBox{0, 0, 1, 1}}}, t).centroid_distance;
  CHECK(cd == doctest::Approx(0.99).epsilon(1e-12));
}

TEST_CASE("three-video micro-fixture") {
  MetricsFixture fx;
  CHECK(fx.records[0].out.passes_filter);
  CHECK_FALSE(fx.records[1].out.passes_filter);
  CHECK(fx.records[2].out.passes_filter);
  CHECK(*fx.records[0].out.mean_iou == doctest::Approx(11.0 / 24).epsilon(1e-12));
  CHECK(std::abs(*video_miou(fx.records) - MetricsFixture::kMiou) <= 1e-9);
  CHECK(std::abs(ap50(fx.records) - MetricsFixture::kAp50) <= 1e-9);
  CHECK(std::abs(coverage(fx.records) - MetricsFixture::kCoverage) <= 1e-9);
  CHECK(std::abs(*centroid_distance(fx.records) - MetricsFixture::cd()) <= 1e-9);
}

TEST_CASE("metrics are invariant to video order and integer scaling") {
  MetricsFixture fx;
  auto reversed = fx.records;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(*video_miou(reversed) == doctest::Approx(*video_miou(fx.records)).epsilon(1e-15));
  CHECK(ap50(reversed) == doctest::Approx(ap50(fx.records)).epsilon(1e-15));

  std::vector<EvalRecord> scaled;
  for (const auto& r : fx.records) {
    auto gt = r.gt;
    gt.canvas.width *= 2;
    gt.canvas.height *= 2;
    auto det = r.det;
    for (auto* boxes : {&gt.boxes, &det.boxes})
      for (auto& b : *boxes)
        if (b) *b = BBox{2 * b->x0, 2 * b->y0, 2 * b->x1, 2 * b->y1};
    scaled.push_back(make_record(r.video_id, gt, det));
  }
  CHECK(*video_miou(scaled) == doctest::Approx(*video_miou(fx.records)).epsilon(1e-15));
  CHECK(*centroid_distance(scaled) == doctest::Approx(*centroid_distance(fx.records)).epsilon(1e-15));
}

TEST_CASE("mIoU is at least half the hit rate on filter-passing videos") {
  std::mt19937_64 gen(32);
  const Canvas c{64, 64, 10};
  for (int trial = 0; trial < 100; ++trial) {
    DetectionTrack t(10);
    for (auto& b : t.boxes) {
      if (gen() % 4 == 0) continue;
      const int dx = static_cast<int>(gen() % 20);
      b = BBox{10 + dx, 10, 30 + dx, 30};
    }
    const auto m = evaluate_video(constant_gt(c, {10, 10, 30, 30}), t);
    if (m.mean_iou) CHECK(*m.mean_iou >= 0.5 * m.ap50);
  }
}

TEST_CASE("suite report") {
  const Canvas c{64, 64, 4};
  const BBox b{8, 8, 24, 24};
  std::vector<EvalRecord> perfect = {make_record("v", constant_gt(c, b), detect_first(4, 4, b))};
  std::vector<EvalRecord> empty = {make_record("v", constant_gt(c, b), DetectionTrack(4))};
  MetricsFixture fx;
  const auto report = build_suite_report({{"perfect", perfect}, {"fixture", fx.records}, {"empty", empty}});
  REQUIRE(report.methods.size() == 3);
  const auto& p = report.methods[0];
  CHECK(*p.miou == 1.0);
  CHECK(p.ap50 == 1.0);
  CHECK(p.coverage == 1.0);
  CHECK(*p.cd == 0.0);
  const auto& f = report.methods[1];
  CHECK(*f.miou == doctest::Approx(MetricsFixture::kMiou).epsilon(1e-12));
  CHECK(f.filtered_in == 2);
  CHECK(f.total_videos == 3);
  const auto& e = report.methods[2];
  CHECK(e.coverage == 0.0);
  CHECK(e.ap50 == 0.0);
  CHECK_FALSE(e.miou.has_value());
  CHECK_FALSE(e.cd.has_value());

  const auto table = report.to_table();
  CHECK(table.find("Method") != std::string::npos);
  CHECK(table.find("39.6") != std::string::npos);   // 19/48 in percent
  CHECK(table.find("66.7") != std::string::npos);   // coverage
  CHECK_THROWS_AS(build_suite_report({}), std::invalid_argument);
}

TEST_CASE("evaluation errors") {
  const Canvas c{64, 64, 4};
  CHECK_THROWS_AS(evaluate_video(constant_gt(c, {0, 0, 8, 8}), DetectionTrack(3)),
                  std::invalid_argument);
  BBoxTrajectory empty{c, std::vector<std::optional<BBox>>(4)};
  CHECK_THROWS_AS(evaluate_video(empty, DetectionTrack(4)), std::invalid_argument);
}
