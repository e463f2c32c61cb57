#include <doctest.h>

#include <boost/rational.hpp>
#include <random>

#include "layoutmask/geometry.hpp"
#include "test_support.hpp"

using namespace layoutmask;

namespace {

BBoxTrajectory single_frame(Canvas canvas, std::optional<BBox> box) {
  canvas.num_frames = 1;
  return {canvas, {box}};
}

// Brute-force membership: the center of cell (cx, cy) is
// ((cx + 1/2) * W / gw, (cy + 1/2) * H / gh), compared with exact rationals.
bool center_inside(const BBox& b, const Canvas& c, const LatentGrid& g, int cx,
                   int cy) {
  using R = boost::rational<long long>;
  const R x = (R(cx) + R(1, 2)) * R(c.width, g.width);
  const R y = (R(cy) + R(1, 2)) * R(c.height, g.height);
  return R(b.x0) < x && x < R(b.x1) && R(b.y0) < y && y < R(b.y1);
}

BBox random_box(std::mt19937_64& gen, const Canvas& c) {
  std::uniform_int_distribution<int> xs(0, c.width - 1), ys(0, c.height - 1);
  int x0 = xs(gen), x1 = xs(gen), y0 = ys(gen), y1 = ys(gen);
  if (x0 > x1) std::swap(x0, x1);
  if (y0 > y1) std::swap(y0, y1);
  return {x0, y0, x1 + 1, y1 + 1};
}

}  // namespace

TEST_CASE("canvas and box validation") {
  CHECK_NOTHROW(Canvas{8, 8, 1}.validate());
  CHECK_THROWS_AS(Canvas({7, 8, 1}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(Canvas({8, 8, 0}).validate(), std::invalid_argument);

  const Canvas c{16, 16, 2};
  CHECK(BBox{0, 0, 16, 16}.valid_in(c));
  CHECK_FALSE(BBox{3, 0, 3, 4}.valid_in(c));
  CHECK_FALSE(BBox{0, 0, 17, 4}.valid_in(c));
  CHECK_FALSE(BBox{-1, 0, 4, 4}.valid_in(c));

  BBoxTrajectory short_traj{c, {BBox{0, 0, 4, 4}}};
  CHECK_THROWS_AS(short_traj.validate(), std::invalid_argument);
}

TEST_CASE("rasterize: left-half box on a 2x2 grid") {
  // Same geometry as a 4x4 canvas scaled by two: cell centers at x = 2 and 6.
  const auto m = rasterize(single_frame({8, 8, 1}, BBox{0, 0, 4, 8}), {2, 2});
  const std::vector<std::uint8_t> want = {1, 0, 1, 0};
  CHECK(std::vector<std::uint8_t>(m.frame(0).begin(), m.frame(0).end()) == want);
}

TEST_CASE("rasterize: absent box gives an empty frame") {
  const auto m = rasterize(single_frame({8, 8, 1}, std::nullopt), {2, 2});
  CHECK(m.count_foreground(0) == 0);
}

TEST_CASE("rasterize: 64..192 box on a 256 canvas covers 256 of 1024 cells") {
  const Canvas c{256, 256, 1};
  const LatentGrid g{32, 32};
  const BBox b{64, 64, 192, 192};
  const auto m = rasterize(single_frame(c, b), g);
  std::size_t oracle = 0;
  for (int cy = 0; cy < g.height; ++cy)
    for (int cx = 0; cx < g.width; ++cx) oracle += center_inside(b, c, g, cx, cy);
  CHECK(oracle == 256);
  CHECK(m.count_foreground(0) == 256);
}

TEST_CASE("rasterize: matches the rational center oracle on random boxes") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 300; ++trial) {
    const Canvas c{8 + static_cast<int>(gen() % 120), 8 + static_cast<int>(gen() % 120), 1};
    const LatentGrid g{1 + static_cast<int>(gen() % 8), 1 + static_cast<int>(gen() % 8)};
    const BBox b = random_box(gen, c);
    const auto m = rasterize(single_frame(c, b), g);
    std::size_t oracle = 0;
    for (int cy = 0; cy < g.height; ++cy)
      for (int cx = 0; cx < g.width; ++cx) {
        const bool in = center_inside(b, c, g, cx, cy);
        oracle += in;
        if (in) REQUIRE(m.at(0, static_cast<std::size_t>(cy * g.width + cx)) == 1);
      }
    if (oracle > 0) {
      CHECK(m.count_foreground(0) == oracle);
    } else {
      CHECK(m.count_foreground(0) == 1);
    }
  }
}

TEST_CASE("rasterize: sub-cell box forces the nearest cell") {
  // Cells are 8 px wide; a 2x2 box around (13, 13) holds no center.
  const auto m = rasterize(single_frame({32, 32, 1}, BBox{12, 12, 14, 14}), {4, 4});
  CHECK(m.count_foreground(0) == 1);
  CHECK(m.at(0, 1 * 4 + 1) == 1);  // center (12, 12) is nearest
}

TEST_CASE("rasterize: grid larger than the canvas is rejected") {
  CHECK_THROWS_AS(rasterize(single_frame({8, 8, 1}, BBox{0, 0, 4, 4}), {9, 2}),
                  std::invalid_argument);
}

TEST_CASE("rasterize properties: monotone, translation, non-empty, center") {
  std::mt19937_64 gen(5);
  const Canvas c{64, 64, 1};
  const LatentGrid g{8, 8};  // 8 px pitch
  for (int trial = 0; trial < 200; ++trial) {
    const BBox b = random_box(gen, c);
    const auto m = rasterize(single_frame(c, b), g);
    CHECK(m.count_foreground(0) >= 1);

    // Enlarging never clears a cell.
    BBox big{std::max(0, b.x0 - 3), std::max(0, b.y0 - 2),
             std::min(c.width, b.x1 + 4), std::min(c.height, b.y1 + 1)};
    const auto mb = rasterize(single_frame(c, big), g);
    for (std::size_t i = 0; i < g.num_latents(); ++i)
      if (m.at(0, i)) CHECK(mb.at(0, i) == 1);

    // The foreground cells' pixel extent contains the box center.
    int minx = g.width, miny = g.height, maxx = -1, maxy = -1;
    for (int cy = 0; cy < g.height; ++cy)
      for (int cx = 0; cx < g.width; ++cx)
        if (m.at(0, static_cast<std::size_t>(cy * g.width + cx))) {
          minx = std::min(minx, cx);
          maxx = std::max(maxx, cx);
          miny = std::min(miny, cy);
          maxy = std::max(maxy, cy);
        }
    CHECK(minx * 8 * 2 <= b.center_x2());
    CHECK(b.center_x2() <= (maxx + 1) * 8 * 2);
    CHECK(miny * 8 * 2 <= b.center_y2());
    CHECK(b.center_y2() <= (maxy + 1) * 8 * 2);

    // Shifting by one pitch shifts the pattern by one cell away from borders.
    if (b.x1 + 8 <= c.width && b.area() >= 64) {
      const auto ms = rasterize(single_frame(c, BBox{b.x0 + 8, b.y0, b.x1 + 8, b.y1}), g);
      for (int cy = 0; cy < g.height; ++cy)
        for (int cx = 0; cx + 1 < g.width; ++cx)
          CHECK(m.at(0, static_cast<std::size_t>(cy * g.width + cx)) ==
                ms.at(0, static_cast<std::size_t>(cy * g.width + cx + 1)));
    }
  }
}

TEST_CASE("interpolate_trajectory: midpoint and constant hold") {
  const Canvas c{64, 64, 3};
  const auto t = interpolate_trajectory({{0, BBox{0, 0, 10, 10}}, {2, BBox{20, 0, 30, 10}}}, c);
  CHECK(*t.boxes[1] == BBox{10, 0, 20, 10});

  const auto h = interpolate_trajectory({{0, BBox{1, 2, 3, 4}}}, Canvas{16, 16, 5});
  REQUIRE(h.boxes.size() == 5);
  for (const auto& b : h.boxes) CHECK(*b == BBox{1, 2, 3, 4});

  const auto tail = interpolate_trajectory({{2, BBox{4, 4, 8, 8}}, {3, BBox{5, 5, 9, 9}}},
                                           Canvas{16, 16, 6});
  CHECK(*tail.boxes[0] == BBox{4, 4, 8, 8});
  CHECK(*tail.boxes[5] == BBox{5, 5, 9, 9});
}

TEST_CASE("interpolate_trajectory: per-coordinate linear formula, rational oracle") {
  using R = boost::rational<long long>;
  // Round half up on exact rationals.
  auto round_half_up = [](R v) {
    const R shifted = v + R(1, 2);
    long long q = shifted.numerator() / shifted.denominator();
    if (shifted.numerator() < 0 && shifted.numerator() % shifted.denominator() != 0) --q;
    return static_cast<int>(q);
  };
  const Canvas c{200, 200, 13};
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 100; ++trial) {
    const BBox a = random_box(gen, c), b = random_box(gen, c);
    const int k0 = static_cast<int>(gen() % 4), k1 = 5 + static_cast<int>(gen() % 8);
    const auto t = interpolate_trajectory({{k0, a}, {k1, b}}, c);
    for (int f = k0; f <= k1; ++f) {
      const R w(f - k0, k1 - k0);
      auto lerp = [&](int p, int q) { return round_half_up(R(p) + (R(q) - R(p)) * w); };
      CHECK(*t.boxes[f] == BBox{lerp(a.x0, b.x0), lerp(a.y0, b.y0), lerp(a.x1, b.x1),
                                lerp(a.y1, b.y1)});
      CHECK(t.boxes[f]->valid_in(c));
    }
  }
  // Keys {0, 4} with unequal sizes: frame 2 is the arithmetic mean.
  const auto u = interpolate_trajectory({{0, BBox{0, 0, 10, 20}}, {4, BBox{20, 10, 50, 60}}}, c);
  CHECK(*u.boxes[2] == BBox{10, 5, 30, 40});
}

TEST_CASE("interpolate_trajectory: errors") {
  CHECK_THROWS_AS(interpolate_trajectory({}, Canvas{16, 16, 4}), std::invalid_argument);
  CHECK_THROWS_AS(interpolate_trajectory({{4, BBox{0, 0, 4, 4}}}, Canvas{16, 16, 4}),
                  std::invalid_argument);
}
