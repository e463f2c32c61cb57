#include "layoutmask/geometry.hpp"

#include <iterator>
#include <limits>
#include <stdexcept>
#include <string>

namespace layoutmask {

void Canvas::validate() const {
  if (width < 8 || height < 8) {
    throw std::invalid_argument("canvas must be at least 8x8 pixels, got " +
                                std::to_string(width) + "x" +
                                std::to_string(height));
  }
  if (num_frames < 1) {
    throw std::invalid_argument("canvas needs at least one frame");
  }
}

bool BBox::valid_in(const Canvas& canvas) const {
  return 0 <= x0 && x0 < x1 && x1 <= canvas.width && 0 <= y0 && y0 < y1 &&
         y1 <= canvas.height;
}

void BBoxTrajectory::validate() const {
  canvas.validate();
  if (boxes.size() != static_cast<std::size_t>(canvas.num_frames)) {
    throw std::invalid_argument(
        "trajectory has " + std::to_string(boxes.size()) + " slots for " +
        std::to_string(canvas.num_frames) + " frames");
  }
  for (std::size_t f = 0; f < boxes.size(); ++f) {
    if (boxes[f] && !boxes[f]->valid_in(canvas)) {
      throw std::invalid_argument("box at frame " + std::to_string(f) +
                                  " is degenerate or outside the canvas");
    }
  }
}

FrameMaskSet::FrameMaskSet(LatentGrid grid, int num_frames)
    : grid_(grid),
      num_frames_(num_frames),
      bits_(static_cast<std::size_t>(num_frames) * grid.num_latents(), 0) {}

std::span<const std::uint8_t> FrameMaskSet::frame(int f) const {
  return {bits_.data() + static_cast<std::size_t>(f) * num_latents(),
          num_latents()};
}

std::span<std::uint8_t> FrameMaskSet::frame(int f) {
  return {bits_.data() + static_cast<std::size_t>(f) * num_latents(),
          num_latents()};
}

std::vector<std::uint8_t> FrameMaskSet::pixel_track(std::size_t pixel) const {
  std::vector<std::uint8_t> track(static_cast<std::size_t>(num_frames_));
  for (int f = 0; f < num_frames_; ++f) track[f] = at(f, pixel);
  return track;
}

std::size_t FrameMaskSet::count_foreground(int f) const {
  std::size_t n = 0;
  for (auto b : frame(f)) n += b;
  return n;
}

FrameMaskSet rasterize(const BBoxTrajectory& traj, const LatentGrid& grid) {
  traj.validate();
  const Canvas& canvas = traj.canvas;
  if (grid.width < 1 || grid.height < 1) {
    throw std::invalid_argument("latent grid must be at least 1x1");
  }
  if (grid.width > canvas.width || grid.height > canvas.height) {
    throw std::invalid_argument("latent grid is larger than the canvas");
  }

  // Cell centers are ((2c + 1) * W / (2 * gw)); comparisons are done on
  // coordinates multiplied by 2 * gw (resp. 2 * gh) to stay in integers.
  const std::int64_t W = canvas.width, H = canvas.height;
  const std::int64_t gw = grid.width, gh = grid.height;

  FrameMaskSet masks(grid, canvas.num_frames);
  for (int f = 0; f < canvas.num_frames; ++f) {
    const auto& box = traj.boxes[f];
    if (!box) continue;
    auto out = masks.frame(f);
    bool any = false;
    for (std::int64_t cy = 0; cy < gh; ++cy) {
      const std::int64_t yc = (2 * cy + 1) * H;
      const bool row_in = 2 * gh * box->y0 < yc && yc < 2 * gh * box->y1;
      for (std::int64_t cx = 0; cx < gw; ++cx) {
        const std::int64_t xc = (2 * cx + 1) * W;
        const bool in = row_in && 2 * gw * box->x0 < xc && xc < 2 * gw * box->x1;
        out[cy * gw + cx] = in ? 1 : 0;
        any |= in;
      }
    }
    if (any) continue;

    // Sub-cell box: mark the cell whose center is nearest the box center.
    const double bx = 0.5 * box->center_x2();
    const double by = 0.5 * box->center_y2();
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::int64_t cy = 0; cy < gh; ++cy) {
      const double dy = (cy + 0.5) * static_cast<double>(H) / gh - by;
      for (std::int64_t cx = 0; cx < gw; ++cx) {
        const double dx = (cx + 0.5) * static_cast<double>(W) / gw - bx;
        const double d = dx * dx + dy * dy;
        if (d < best) {
          best = d;
          best_idx = static_cast<std::size_t>(cy * gw + cx);
        }
      }
    }
    out[best_idx] = 1;
  }
  return masks;
}

namespace {

// round(a + (b - a) * num / den) for non-negative coordinates, ties upward.
int lerp_round(int a, int b, std::int64_t num, std::int64_t den) {
  const std::int64_t scaled = static_cast<std::int64_t>(a) * den +
                              static_cast<std::int64_t>(b - a) * num;
  const std::int64_t twice = 2 * scaled + den;
  std::int64_t q = twice / (2 * den);
  if (twice % (2 * den) != 0 && twice < 0) --q;
  return static_cast<int>(q);
}

}  // namespace

BBoxTrajectory interpolate_trajectory(const std::map<int, BBox>& key_boxes,
                                      const Canvas& canvas) {
  canvas.validate();
  if (key_boxes.empty()) {
    throw std::invalid_argument("interpolation needs at least one key box");
  }
  for (const auto& [frame, box] : key_boxes) {
    if (frame < 0 || frame >= canvas.num_frames) {
      throw std::invalid_argument("key frame " + std::to_string(frame) +
                                  " is outside the video");
    }
    if (!box.valid_in(canvas)) {
      throw std::invalid_argument("key box at frame " + std::to_string(frame) +
                                  " is invalid");
    }
  }

  BBoxTrajectory traj{canvas, {}};
  traj.boxes.resize(static_cast<std::size_t>(canvas.num_frames));
  for (int f = 0; f < canvas.num_frames; ++f) {
    auto hi = key_boxes.lower_bound(f);
    if (hi != key_boxes.end() && hi->first == f) {
      traj.boxes[f] = hi->second;
      continue;
    }
    if (hi == key_boxes.begin()) {
      traj.boxes[f] = hi->second;
      continue;
    }
    auto lo = std::prev(hi);
    if (hi == key_boxes.end()) {
      traj.boxes[f] = lo->second;
      continue;
    }
    const std::int64_t num = f - lo->first;
    const std::int64_t den = hi->first - lo->first;
    const BBox& a = lo->second;
    const BBox& b = hi->second;
    traj.boxes[f] = BBox{lerp_round(a.x0, b.x0, num, den),
                         lerp_round(a.y0, b.y0, num, den),
                         lerp_round(a.x1, b.x1, num, den),
                         lerp_round(a.y1, b.y1, num, den)};
  }
  return traj;
}

}  // namespace layoutmask
