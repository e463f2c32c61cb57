#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace layoutmask {

// Video extent in pixels.
struct Canvas {
  int width = 256;
  int height = 256;
  int num_frames = 16;

  void validate() const;
  bool operator==(const Canvas&) const = default;
};

// Axis-aligned box in pixel coordinates, half-open: [x0, x1) x [y0, y1).
struct BBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  std::int64_t area() const {
    return static_cast<std::int64_t>(width()) * height();
  }
  // Center as doubled coordinates, so it stays integral.
  int center_x2() const { return x0 + x1; }
  int center_y2() const { return y0 + y1; }

  bool valid_in(const Canvas& canvas) const;
  bool operator==(const BBox&) const = default;
};

// One slot per frame; an empty slot means no foreground in that frame.
struct BBoxTrajectory {
  Canvas canvas;
  std::vector<std::optional<BBox>> boxes;

  // Throws std::invalid_argument if the slot count or any box is invalid.
  void validate() const;
};

// Latent resolution. Latent pixels are flattened row-major (y outer, x inner).
struct LatentGrid {
  int width = 32;
  int height = 32;

  std::size_t num_latents() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  bool operator==(const LatentGrid&) const = default;
};

// Per-frame binary foreground masks at latent resolution (frames x latents).
class FrameMaskSet {
 public:
  FrameMaskSet() = default;
  FrameMaskSet(LatentGrid grid, int num_frames);

  const LatentGrid& grid() const { return grid_; }
  int num_frames() const { return num_frames_; }
  std::size_t num_latents() const { return grid_.num_latents(); }

  std::span<const std::uint8_t> frame(int f) const;
  std::span<std::uint8_t> frame(int f);
  // The foreground indicator of one latent pixel across all frames.
  std::vector<std::uint8_t> pixel_track(std::size_t pixel) const;

  std::uint8_t at(int f, std::size_t pixel) const {
    return bits_[static_cast<std::size_t>(f) * num_latents() + pixel];
  }
  std::size_t count_foreground(int f) const;

  bool operator==(const FrameMaskSet&) const = default;

 private:
  LatentGrid grid_;
  int num_frames_ = 0;
  std::vector<std::uint8_t> bits_;
};

// A cell is foreground iff its center lies strictly inside the box. A present
// box that covers no cell center still marks the single cell nearest to the
// box center (lowest index on ties).
FrameMaskSet rasterize(const BBoxTrajectory& traj, const LatentGrid& grid);

// Linear per-coordinate interpolation between key frames, rounded to the
// nearest pixel (ties upward). Frames outside the key range hold the nearest
// key.
BBoxTrajectory interpolate_trajectory(const std::map<int, BBox>& key_boxes,
                                      const Canvas& canvas);

}  // namespace layoutmask
