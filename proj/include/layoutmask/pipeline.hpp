#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "layoutmask/attention.hpp"
#include "layoutmask/geometry.hpp"
#include "layoutmask/maskgen.hpp"

namespace layoutmask {

// Latent tensor z laid out as [frame][latent pixel][channel].
class LatentVideo {
 public:
  LatentVideo() = default;
  LatentVideo(int frames, std::size_t latents, int channels);

  int frames() const { return frames_; }
  std::size_t latents() const { return latents_; }
  int channels() const { return channels_; }

  double& at(int f, std::size_t i, int c) {
    return data_[(static_cast<std::size_t>(f) * latents_ + i) * channels_ + c];
  }
  double at(int f, std::size_t i, int c) const {
    return data_[(static_cast<std::size_t>(f) * latents_ + i) * channels_ + c];
  }

  // latents x channels view of one frame.
  Eigen::Map<Matrix> frame(int f);
  Eigen::Map<const Matrix> frame(int f) const;

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  double max_abs() const;
  bool all_finite() const;

  bool operator==(const LatentVideo&) const = default;

 private:
  int frames_ = 0;
  std::size_t latents_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// Standard-normal latent noise drawn from `seed`.
LatentVideo initial_noise(int frames, std::size_t latents, int channels,
                          std::uint64_t seed);

// Prompt tokens with pseudorandom embeddings. Each token's embedding depends
// only on the token text and the seed.
struct PromptSpec {
  std::vector<std::string> tokens;
  Matrix embeddings;  // l_text x d_text
  TokenLabels labels;

  void validate() const;
};

PromptSpec make_prompt(std::string_view prompt, std::string_view fg_phrase,
                       int d_text, std::uint64_t seed);

enum class PipelineMode { kVideo, kImage };
enum class StepMode { kMasked, kFree };
enum class AttentionLayer { kSpatial, kCross, kTemporal };

const char* to_string(PipelineMode mode);
const char* to_string(StepMode mode);
const char* to_string(AttentionLayer layer);

struct PipelineConfig {
  static constexpr int kDefaultSteps = 40;
  // Frozen-step defaults for ssv2-style and IMC-style generation.
  static constexpr int kFrozenStepsSsv2 = 2;
  static constexpr int kFrozenStepsImc = 4;

  int num_steps = kDefaultSteps;
  int frozen_steps = kFrozenStepsSsv2;
  std::uint64_t seed = 0;
  PipelineMode mode = PipelineMode::kVideo;
  ScaleMode scale_mode = ScaleMode::kInvSqrtD;
  double gain = 0.5;
  int channels = 4;
  int d_model = 8;
  int d_text = 16;
  AblationFlags ablation;

  void validate() const;
  bool operator==(const PipelineConfig&) const = default;
};

// Masked iff step < frozen_steps.
StepMode schedule(int step, const PipelineConfig& cfg);

struct LayerRecord {
  AttentionLayer layer = AttentionLayer::kSpatial;
  // Largest per-row attention mass on entries the reference masks forbid.
  double max_leakage = 0.0;
  // Whether every mask this layer actually applied was all ones.
  bool masks_all_ones = true;
  std::size_t fallback_rows = 0;
};

struct StepRecord {
  int step = 0;
  StepMode mode = StepMode::kFree;
  std::vector<LayerRecord> layers;
  double max_leakage = 0.0;
  // Share of foreground-content energy inside the box, per frame, after the
  // step (see fg_energy_fraction).
  std::vector<double> fg_energy_fraction;

  const LayerRecord* find(AttentionLayer layer) const;
};

struct RunReport {
  std::vector<StepRecord> steps;

  int masked_steps() const;
  // Largest leakage of `layer` over steps with the given mode; 0 if none.
  double max_leakage(AttentionLayer layer, StepMode mode) const;
  // Mean over frames with a box of the fg energy fraction after `step`.
  double localization_at(int step, const FrameMaskSet& masks) const;
  double final_localization(const FrameMaskSet& masks) const;
  // Localization after the last masked step (after step 0 when none).
  double masked_phase_localization(const FrameMaskSet& masks) const;
};

// Three attention layers (spatial, cross, temporal) with fixed pseudorandom
// projections. Each layer updates x <- x + gain * (attend(x) - x). Value
// projections of the self-attention layers have unit column abs-sums, so they
// never grow the latent's max-norm.
class ToyDenoiser {
 public:
  ToyDenoiser(int channels, int d_text, int d_model, double gain,
              ScaleMode scale_mode, std::uint64_t seed);
  explicit ToyDenoiser(const PipelineConfig& cfg);

  int channels() const { return channels_; }
  int d_text() const { return d_text_; }
  int d_model() const { return d_model_; }
  double gain() const { return gain_; }

  // Cross-attention values of the prompt tokens (l_text x channels).
  Matrix token_values(const PromptSpec& prompt) const;

  // One pass through the layers with the given masks in effect. Leakage is
  // measured against `reference` (defaults to `masks`).
  LatentVideo apply(const LatentVideo& z, const PromptSpec& prompt,
                    const AttentionMaskBundle& masks, PipelineMode mode,
                    const AttentionMaskBundle* reference = nullptr,
                    StepRecord* record = nullptr) const;

 private:
  struct LayerWeights {
    Matrix wq;  // channels x d_model
    Matrix wk;  // key input width x d_model
    Matrix wv;  // key input width x channels
  };

  int channels_;
  int d_text_;
  int d_model_;
  double gain_;
  double scale_;
  LayerWeights spatial_;
  LayerWeights cross_;
  LayerWeights temporal_;
};

// One denoising step: the bundle's masks when Masked, all-ones when Free.
LatentVideo denoise_step(const LatentVideo& z, const PromptSpec& prompt,
                         const AttentionMaskBundle& bundle, StepMode mode,
                         const ToyDenoiser& net,
                         PipelineMode pipeline_mode = PipelineMode::kVideo,
                         const AttentionMaskBundle* reference = nullptr,
                         StepRecord* record = nullptr);

// Per frame: with u the unit direction from the mean background token value
// to the mean foreground token value, s_i = <z_i, u> and m the frame mean of
// s, each pixel's foreground-content energy is (s_i - m)^2. Returns the share
// of that energy on foreground pixels. Frames without foreground pixels, and
// frames whose contrast is negligible next to sum(s_i^2), score 0.
std::vector<double> fg_energy_fraction(const LatentVideo& z,
                                       const FrameMaskSet& masks,
                                       const Matrix& token_values,
                                       const TokenLabels& labels);

struct RunResult {
  LatentVideo latent;
  RunReport report;
};

RunResult run(const BBoxTrajectory& traj, const LatentGrid& grid,
              const PromptSpec& prompt, const PipelineConfig& cfg);

// Runs from a given initial latent instead of seeded noise.
RunResult run_from(LatentVideo z, const FrameMaskSet& masks,
                   const PromptSpec& prompt, const PipelineConfig& cfg);

}  // namespace layoutmask
