#include "layoutmask/imc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace layoutmask::imc {

const char* to_string(Motion m) {
  return m == Motion::kStationary ? "stationary" : "moving";
}

const char* to_string(Direction d) {
  switch (d) {
    case Direction::kNone:
      return "none";
    case Direction::kUpDown:
      return "up_down";
    case Direction::kLeftRight:
      return "left_right";
    case Direction::kZigZag:
      return "zig_zag";
  }
  return "unknown";
}

const char* to_string(Aspect a) {
  switch (a) {
    case Aspect::kSquare:
      return "square_1_1";
    case Aspect::kHorizontal:
      return "horiz_4_3";
    case Aspect::kVertical:
      return "vert_3_4";
  }
  return "unknown";
}

// Prompt texts are the published IMC list, verbatim. The subject, motion,
// direction and aspect columns are our own manual annotation of each text;
// the published benchmark does not include per-prompt labels.
const std::vector<PromptEntry>& builtin_prompts() {
  using enum Motion;
  using enum Direction;
  using enum Aspect;
  static const std::vector<PromptEntry> prompts = {
      {"A woodpecker climbing up a tree trunk.", "woodpecker", kMoving, kUpDown, kVertical},
      {"A squirrel descending a tree after gathering nuts.", "squirrel", kMoving, kUpDown, kVertical},
      {"A bird diving towards the water to catch fish.", "bird", kMoving, kUpDown, kSquare},
      {"A frog leaping up to catch a fly.", "frog", kMoving, kUpDown, kSquare},
      {"A parrot flying upwards towards the treetops.", "parrot", kMoving, kUpDown, kVertical},
      {"A squirrel jumping from one tree to another.", "squirrel", kMoving, kLeftRight, kHorizontal},
      {"A rabbit burrowing downwards into its warren.", "rabbit", kMoving, kUpDown, kSquare},
      {"A satellite orbiting Earth in outer space.", "satellite", kMoving, kLeftRight, kHorizontal},
      {"A skateboarder performing tricks at a skate park.", "skateboarder", kMoving, kZigZag, kVertical},
      {"A leaf falling gently from a tree.", "leaf", kMoving, kZigZag, kSquare},
      {"A paper plane gliding in the air.", "paper plane", kMoving, kLeftRight, kHorizontal},
      {"A bear climbing down a tree after spotting a threat.", "bear", kMoving, kUpDown, kVertical},
      {"A duck diving underwater in search of food.", "duck", kMoving, kUpDown, kHorizontal},
      {"A kangaroo hopping down a gentle slope.", "kangaroo", kMoving, kZigZag, kVertical},
      {"An owl swooping down on its prey during the night.", "owl", kMoving, kUpDown, kSquare},
      {"A hot air balloon drifting across a clear sky.", "hot air balloon", kMoving, kLeftRight, kVertical},
      {"A red double-decker bus moving through London streets.", "red double-decker bus", kMoving, kLeftRight, kHorizontal},
      {"A jet plane flying high in the sky.", "jet plane", kMoving, kLeftRight, kHorizontal},
      {"A helicopter hovering above a cityscape.", "helicopter", kStationary, kNone, kHorizontal},
      {"A roller coaster looping in an amusement park.", "roller coaster", kMoving, kZigZag, kHorizontal},
      {"A streetcar trundling down tracks in a historic district.", "streetcar", kMoving, kLeftRight, kHorizontal},
      {"A rocket launching into space from a launchpad.", "rocket", kMoving, kUpDown, kVertical},
      {"A deer standing in a snowy field.", "deer", kStationary, kNone, kVertical},
      {"A horse grazing in a meadow.", "horse", kStationary, kNone, kHorizontal},
      {"A fox sitting in a forest clearing.", "fox", kStationary, kNone, kSquare},
      {"A swan floating gracefully on a lake.", "swan", kStationary, kNone, kHorizontal},
      {"A panda munching bamboo in a bamboo forest.", "panda", kStationary, kNone, kSquare},
      {"A penguin standing on an iceberg.", "penguin", kStationary, kNone, kVertical},
      {"A lion lying in the savanna grass.", "lion", kStationary, kNone, kHorizontal},
      {"An owl perched silently in a tree at night.", "owl", kStationary, kNone, kVertical},
      {"A dolphin just breaking the ocean surface.", "dolphin", kMoving, kUpDown, kHorizontal},
      {"A camel resting in a desert landscape.", "camel", kStationary, kNone, kHorizontal},
      {"A kangaroo standing in the Australian outback.", "kangaroo", kStationary, kNone, kVertical},
      {"A colorful hot air balloon tethered to the ground.", "hot air balloon", kStationary, kNone, kVertical},
  };
  return prompts;
}

std::vector<int> allowed_centroids(const PromptEntry& entry) {
  std::vector<int> out;
  for (int idx = 0; idx < 9; ++idx) {
    const int row = idx / 3, col = idx % 3;
    switch (entry.direction) {
      case Direction::kNone:
        out.push_back(idx);
        break;
      case Direction::kUpDown:
        if (col != 1) out.push_back(idx);
        break;
      case Direction::kLeftRight:
      case Direction::kZigZag:
        if (row != 1) out.push_back(idx);
        break;
    }
  }
  return out;
}

std::pair<int, int> box_size(const Canvas& canvas, double size_fraction,
                             Aspect aspect) {
  const double side = size_fraction * std::min(canvas.width, canvas.height);
  double ratio = 1.0;  // width / height
  if (aspect == Aspect::kHorizontal) ratio = 4.0 / 3.0;
  if (aspect == Aspect::kVertical) ratio = 3.0 / 4.0;
  const double r = std::sqrt(ratio);
  const int w = static_cast<int>(std::lround(side * r));
  const int h = static_cast<int>(std::lround(side / r));
  return {std::max(w, 1), std::max(h, 1)};
}

namespace {

// Shift [lo, lo + len) into [0, limit) without changing its length.
void shift_inside(int& lo, int& hi, int limit) {
  if (lo < 0) {
    hi -= lo;
    lo = 0;
  }
  if (hi > limit) {
    lo -= hi - limit;
    hi = limit;
  }
}

}  // namespace

BBoxTrajectory trajectory_from_params(const PromptEntry& entry,
                                      const Canvas& canvas,
                                      const TrajectorySampleParams& params,
                                      Rng& rng) {
  canvas.validate();
  if (params.start_centroid < 0 || params.start_centroid > 8) {
    throw std::invalid_argument("start centroid must be in [0, 8]");
  }
  if (params.jitter_px < 0) {
    throw std::invalid_argument("jitter must be non-negative");
  }
  const auto [w, h] = box_size(canvas, params.size_fraction, entry.aspect);
  const int j = params.jitter_px;
  if (w + 2 * j > canvas.width || h + 2 * j > canvas.height || w <= 2 * j ||
      h <= 2 * j) {
    throw std::invalid_argument(
        "canvas " + std::to_string(canvas.width) + "x" +
        std::to_string(canvas.height) + " cannot hold a box of size fraction " +
        std::to_string(params.size_fraction) + " with jitter " +
        std::to_string(j));
  }

  const int row = params.start_centroid / 3, col = params.start_centroid % 3;
  const double cx0 = (2 * col + 1) * canvas.width / 6.0;
  const double cy0 = (2 * row + 1) * canvas.height / 6.0;
  const int sign = params.flip ? -1 : 1;
  const bool moving = entry.motion == Motion::kMoving;
  const int period = (canvas.num_frames + 2) / 3;  // ceil(frames / 3)

  BBoxTrajectory traj{canvas, {}};
  traj.boxes.reserve(static_cast<std::size_t>(canvas.num_frames));
  int zig = 0;  // vertical offset of a zig-zag path, in units of speed
  for (int k = 0; k < canvas.num_frames; ++k) {
    double cx = cx0, cy = cy0;
    if (moving) {
      const double travel = static_cast<double>(sign) * params.speed * k;
      switch (entry.direction) {
        case Direction::kUpDown:
          cy += travel;
          break;
        case Direction::kLeftRight:
          cx += travel;
          break;
        case Direction::kZigZag:
          cx += travel;
          cy += static_cast<double>(params.speed) * zig;
          zig += ((k / period) % 2 == 0) ? 1 : -1;
          break;
        case Direction::kNone:
          break;
      }
    }
    BBox b{static_cast<int>(std::lround(cx - w / 2.0)),
           static_cast<int>(std::lround(cy - h / 2.0)), 0, 0};
    b.x1 = b.x0 + w;
    b.y1 = b.y0 + h;
    if (j > 0) {
      b.x0 += static_cast<int>(rng.uniform_int(-j, j));
      b.y0 += static_cast<int>(rng.uniform_int(-j, j));
      b.x1 += static_cast<int>(rng.uniform_int(-j, j));
      b.y1 += static_cast<int>(rng.uniform_int(-j, j));
    }
    shift_inside(b.x0, b.x1, canvas.width);
    shift_inside(b.y0, b.y1, canvas.height);
    traj.boxes.emplace_back(b);
  }
  return traj;
}

SampledTrajectory sample_trajectory(const PromptEntry& entry,
                                    const Canvas& canvas, Rng& rng,
                                    int jitter_px) {
  canvas.validate();
  if (canvas.num_frames < 8) {
    throw std::invalid_argument("IMC trajectories need at least 8 frames");
  }
  if ((entry.direction == Direction::kNone) !=
      (entry.motion == Motion::kStationary)) {
    throw std::invalid_argument("prompt entry has inconsistent motion labels");
  }
  const auto starts = allowed_centroids(entry);
  TrajectorySampleParams p;
  p.start_centroid = starts[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(starts.size()) - 1))];
  p.size_fraction = kSizeFractions[static_cast<std::size_t>(rng.uniform_int(0, 1))];
  p.speed = static_cast<int>(rng.uniform_int(kMinSpeed, kMaxSpeed));
  p.flip = rng.coin();
  p.jitter_px = jitter_px;
  return {trajectory_from_params(entry, canvas, p, rng), p};
}

std::vector<DatasetItem> generate_dataset(const Canvas& canvas,
                                          std::uint64_t seed, int jitter_px) {
  const auto& prompts = builtin_prompts();
  std::vector<DatasetItem> items;
  items.reserve(prompts.size() * kTrajectoriesPerPrompt);
  for (std::size_t p = 0; p < prompts.size(); ++p) {
    for (int v = 0; v < kTrajectoriesPerPrompt; ++v) {
      const auto pair_index = p * kTrajectoriesPerPrompt + v;
      Rng rng(mix_seed(seed, pair_index));
      items.push_back({static_cast<int>(p), v, prompts[p],
                       sample_trajectory(prompts[p], canvas, rng, jitter_px)});
    }
  }
  return items;
}

}  // namespace layoutmask::imc
