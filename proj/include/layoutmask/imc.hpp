#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "layoutmask/geometry.hpp"
#include "layoutmask/random.hpp"

namespace layoutmask::imc {

enum class Motion { kStationary, kMoving };
enum class Direction { kNone, kUpDown, kLeftRight, kZigZag };
enum class Aspect { kSquare, kHorizontal, kVertical };  // 1:1, 4:3, 3:4

const char* to_string(Motion m);
const char* to_string(Direction d);
const char* to_string(Aspect a);

struct PromptEntry {
  std::string text;
  std::string subject;  // foreground phrase, occurs verbatim in `text`
  Motion motion = Motion::kStationary;
  Direction direction = Direction::kNone;
  Aspect aspect = Aspect::kSquare;
};

inline constexpr int kNumPrompts = 34;
inline constexpr int kTrajectoriesPerPrompt = 3;
inline constexpr std::array<double, 2> kSizeFractions = {0.25, 0.35};
inline constexpr int kMinSpeed = 5;
inline constexpr int kMaxSpeed = 20;
inline constexpr int kDefaultJitterPx = 1;
inline constexpr int kDefaultFrames = 24;
inline constexpr std::uint64_t kDefaultSeed = 20231207;

const std::vector<PromptEntry>& builtin_prompts();

// Centroid index in the 3x3 grid, row-major (0 = top-left, 4 = center).
struct TrajectorySampleParams {
  int start_centroid = 4;
  double size_fraction = 0.25;
  int speed = kMinSpeed;  // px per frame
  bool flip = false;
  int jitter_px = kDefaultJitterPx;
};

struct SampledTrajectory {
  BBoxTrajectory trajectory;
  TrajectorySampleParams params;
};

// Centroids a trajectory of this kind may start from: all nine when
// stationary, otherwise the six off the line through the canvas center along
// the dominant axis of motion.
std::vector<int> allowed_centroids(const PromptEntry& entry);

// Box width and height for a size fraction and aspect: the geometric mean of
// the sides is size_fraction * min(width, height).
std::pair<int, int> box_size(const Canvas& canvas, double size_fraction,
                             Aspect aspect);

// Deterministic boxes for fixed parameters. Jitter offsets are drawn from
// `rng` (nothing is drawn when jitter_px == 0).
BBoxTrajectory trajectory_from_params(const PromptEntry& entry,
                                      const Canvas& canvas,
                                      const TrajectorySampleParams& params,
                                      Rng& rng);

SampledTrajectory sample_trajectory(const PromptEntry& entry,
                                    const Canvas& canvas, Rng& rng,
                                    int jitter_px = kDefaultJitterPx);

struct DatasetItem {
  int prompt_index = 0;
  int variant = 0;
  PromptEntry entry;
  SampledTrajectory sample;
};

// 34 prompts x 3 trajectories, prompt-major. Each pair draws from its own
// stream derived from (seed, pair index).
std::vector<DatasetItem> generate_dataset(const Canvas& canvas,
                                          std::uint64_t seed,
                                          int jitter_px = kDefaultJitterPx);

}  // namespace layoutmask::imc
