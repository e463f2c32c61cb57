#include "layoutmask/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "layoutmask/random.hpp"

namespace layoutmask {

namespace {

// Seed streams derived from the run seed.
constexpr std::uint64_t kWeightStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kTokenStream = 3;

// Relative contrast below which a frame counts as uniform.
constexpr double kContrastFloor = 1e-20;

Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                     double stddev) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = stddev * rng.normal();
  return m;
}

// Rescale every column to unit absolute sum: |x W|_inf <= |x|_inf.
void normalize_columns(Matrix& w) {
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    const double s = w.col(c).cwiseAbs().sum();
    if (s > 0.0) w.col(c) /= s;
  }
}

struct LayerTally {
  LayerRecord rec;
  void add(const AttentionResult& res, const BinaryMatrix& applied,
           const BinaryMatrix& reference) {
    rec.max_leakage = std::max(
        rec.max_leakage, masked_mass(res.weights, reference, res.fallback_rows));
    rec.masks_all_ones = rec.masks_all_ones && applied.all_ones();
    rec.fallback_rows += res.fallback_rows.size();
  }
};

}  // namespace

LatentVideo::LatentVideo(int frames, std::size_t latents, int channels)
    : frames_(frames),
      latents_(latents),
      channels_(channels),
      data_(static_cast<std::size_t>(frames) * latents *
                static_cast<std::size_t>(channels),
            0.0) {}

Eigen::Map<Matrix> LatentVideo::frame(int f) {
  return {data_.data() + static_cast<std::size_t>(f) * latents_ * channels_,
          static_cast<Eigen::Index>(latents_), channels_};
}

Eigen::Map<const Matrix> LatentVideo::frame(int f) const {
  return {data_.data() + static_cast<std::size_t>(f) * latents_ * channels_,
          static_cast<Eigen::Index>(latents_), channels_};
}

double LatentVideo::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool LatentVideo::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

LatentVideo initial_noise(int frames, std::size_t latents, int channels,
                          std::uint64_t seed) {
  LatentVideo z(frames, latents, channels);
  Rng rng(seed);
  for (double& v : z.data()) v = rng.normal();
  return z;
}

void PromptSpec::validate() const {
  labels.validate();
  if (static_cast<std::size_t>(embeddings.rows()) != labels.size() ||
      tokens.size() != labels.size()) {
    throw std::invalid_argument("prompt embeddings and labels differ in length");
  }
  if (!embeddings.allFinite()) {
    throw std::invalid_argument("prompt embeddings must be finite");
  }
}

PromptSpec make_prompt(std::string_view prompt, std::string_view fg_phrase,
                       int d_text, std::uint64_t seed) {
  if (d_text < 1) throw std::invalid_argument("d_text must be positive");
  PromptSpec spec;
  spec.tokens = tokenize_prompt(prompt);
  spec.labels = label_tokens(prompt, fg_phrase);
  spec.embeddings.resize(static_cast<Eigen::Index>(spec.tokens.size()), d_text);
  for (std::size_t t = 0; t < spec.tokens.size(); ++t) {
    Rng rng(mix_seed(seed ^ fnv1a64(spec.tokens[t]), kTokenStream));
    for (int c = 0; c < d_text; ++c) {
      spec.embeddings(static_cast<Eigen::Index>(t), c) = rng.normal();
    }
  }
  return spec;
}

const char* to_string(PipelineMode mode) {
  return mode == PipelineMode::kVideo ? "video" : "image";
}

const char* to_string(StepMode mode) {
  return mode == StepMode::kMasked ? "masked" : "free";
}

const char* to_string(AttentionLayer layer) {
  switch (layer) {
    case AttentionLayer::kSpatial:
      return "spatial";
    case AttentionLayer::kCross:
      return "cross";
    case AttentionLayer::kTemporal:
      return "temporal";
  }
  return "unknown";
}

void PipelineConfig::validate() const {
  if (num_steps < 1) throw std::invalid_argument("num_steps must be positive");
  if (frozen_steps < 0 || frozen_steps > num_steps) {
    throw std::invalid_argument("frozen_steps must lie in [0, num_steps]");
  }
  if (!(gain >= 0.0 && gain <= 1.0)) {
    throw std::invalid_argument("gain must lie in [0, 1]");
  }
  if (channels < 1 || d_model < 1 || d_text < 1) {
    throw std::invalid_argument("channels, d_model and d_text must be positive");
  }
}

StepMode schedule(int step, const PipelineConfig& cfg) {
  if (step < 0 || step >= cfg.num_steps) {
    throw std::invalid_argument("step " + std::to_string(step) +
                                " is outside [0, " +
                                std::to_string(cfg.num_steps) + ")");
  }
  return step < cfg.frozen_steps ? StepMode::kMasked : StepMode::kFree;
}

const LayerRecord* StepRecord::find(AttentionLayer layer) const {
  for (const auto& l : layers)
    if (l.layer == layer) return &l;
  return nullptr;
}

int RunReport::masked_steps() const {
  return static_cast<int>(
      std::count_if(steps.begin(), steps.end(),
                    [](const StepRecord& s) { return s.mode == StepMode::kMasked; }));
}

double RunReport::max_leakage(AttentionLayer layer, StepMode mode) const {
  double m = 0.0;
  for (const auto& s : steps) {
    if (s.mode != mode) continue;
    if (const auto* l = s.find(layer)) m = std::max(m, l->max_leakage);
  }
  return m;
}

double RunReport::localization_at(int step, const FrameMaskSet& masks) const {
  if (step < 0 || step >= static_cast<int>(steps.size())) {
    throw std::invalid_argument("no record for step " + std::to_string(step));
  }
  const auto& frac = steps[static_cast<std::size_t>(step)].fg_energy_fraction;
  double sum = 0.0;
  int n = 0;
  for (int f = 0; f < masks.num_frames() && f < static_cast<int>(frac.size());
       ++f) {
    if (masks.count_foreground(f) == 0) continue;
    sum += frac[f];
    ++n;
  }
  return n == 0 ? 0.0 : sum / n;
}

double RunReport::final_localization(const FrameMaskSet& masks) const {
  if (steps.empty()) return 0.0;
  return localization_at(static_cast<int>(steps.size()) - 1, masks);
}

double RunReport::masked_phase_localization(const FrameMaskSet& masks) const {
  if (steps.empty()) return 0.0;
  return localization_at(std::max(masked_steps() - 1, 0), masks);
}

ToyDenoiser::ToyDenoiser(int channels, int d_text, int d_model, double gain,
                         ScaleMode scale_mode, std::uint64_t seed)
    : channels_(channels),
      d_text_(d_text),
      d_model_(d_model),
      gain_(gain),
      scale_(attention_scale(scale_mode, static_cast<std::size_t>(d_model))) {
  if (channels < 1 || d_text < 1 || d_model < 1) {
    throw std::invalid_argument("denoiser dimensions must be positive");
  }
  if (!(gain >= 0.0 && gain <= 1.0)) {
    throw std::invalid_argument("gain must lie in [0, 1]");
  }
  Rng rng(mix_seed(seed, kWeightStream));
  const double sc = 1.0 / std::sqrt(static_cast<double>(channels));
  const double st = 1.0 / std::sqrt(static_cast<double>(d_text));
  auto self_layer = [&] {
    LayerWeights w{random_matrix(rng, channels, d_model, sc),
                   random_matrix(rng, channels, d_model, sc),
                   random_matrix(rng, channels, channels, 1.0)};
    normalize_columns(w.wv);
    return w;
  };
  spatial_ = self_layer();
  cross_ = LayerWeights{random_matrix(rng, channels, d_model, sc),
                        random_matrix(rng, d_text, d_model, st),
                        random_matrix(rng, d_text, channels, st)};
  temporal_ = self_layer();
}

ToyDenoiser::ToyDenoiser(const PipelineConfig& cfg)
    : ToyDenoiser(cfg.channels, cfg.d_text, cfg.d_model, cfg.gain,
                  cfg.scale_mode, cfg.seed) {}

Matrix ToyDenoiser::token_values(const PromptSpec& prompt) const {
  return prompt.embeddings * cross_.wv;
}

LatentVideo ToyDenoiser::apply(const LatentVideo& z, const PromptSpec& prompt,
                               const AttentionMaskBundle& masks,
                               PipelineMode mode,
                               const AttentionMaskBundle* reference,
                               StepRecord* record) const {
  prompt.validate();
  const AttentionMaskBundle& ref = reference ? *reference : masks;
  const bool video = mode == PipelineMode::kVideo;
  for (const AttentionMaskBundle* b : {&masks, &ref}) {
    if (b->num_frames() != z.frames() || b->num_latents() != z.latents() ||
        b->num_tokens() != prompt.labels.size() ||
        b->spatial.size() != static_cast<std::size_t>(z.frames()) ||
        (video && b->temporal.size() != z.latents())) {
      throw std::invalid_argument("mask bundle does not match latent/prompt");
    }
  }
  if (z.channels() != channels_ || prompt.embeddings.cols() != d_text_) {
    throw std::invalid_argument("latent or prompt width does not match denoiser");
  }

  LatentVideo out = z;
  LayerTally spatial{{AttentionLayer::kSpatial}};
  LayerTally cross{{AttentionLayer::kCross}};
  LayerTally temporal{{AttentionLayer::kTemporal}};

  for (int f = 0; f < out.frames(); ++f) {
    auto x = out.frame(f);
    const AttentionInputs in{x * spatial_.wq, x * spatial_.wk, x * spatial_.wv,
                             scale_};
    const auto res = masked_attention(in, masks.spatial[f]);
    spatial.add(res, masks.spatial[f], ref.spatial[f]);
    x += gain_ * (res.output - x);
  }

  const Matrix tok_keys = prompt.embeddings * cross_.wk;
  const Matrix tok_values = prompt.embeddings * cross_.wv;
  for (int f = 0; f < out.frames(); ++f) {
    auto x = out.frame(f);
    const AttentionInputs in{x * cross_.wq, tok_keys, tok_values, scale_};
    const auto res = masked_attention(in, masks.cross[f]);
    cross.add(res, masks.cross[f], ref.cross[f]);
    x += gain_ * (res.output - x);
  }

  if (video) {
    Matrix track(out.frames(), channels_);
    for (std::size_t i = 0; i < out.latents(); ++i) {
      for (int f = 0; f < out.frames(); ++f)
        for (int c = 0; c < channels_; ++c) track(f, c) = out.at(f, i, c);
      const AttentionInputs in{track * temporal_.wq, track * temporal_.wk,
                               track * temporal_.wv, scale_};
      const auto res = masked_attention(in, masks.temporal[i]);
      temporal.add(res, masks.temporal[i], ref.temporal[i]);
      track += gain_ * (res.output - track);
      for (int f = 0; f < out.frames(); ++f)
        for (int c = 0; c < channels_; ++c) out.at(f, i, c) = track(f, c);
    }
  }

  if (record) {
    record->layers = {spatial.rec, cross.rec};
    if (video) record->layers.push_back(temporal.rec);
    record->max_leakage = 0.0;
    for (const auto& l : record->layers)
      record->max_leakage = std::max(record->max_leakage, l.max_leakage);
  }
  return out;
}

LatentVideo denoise_step(const LatentVideo& z, const PromptSpec& prompt,
                         const AttentionMaskBundle& bundle, StepMode mode,
                         const ToyDenoiser& net, PipelineMode pipeline_mode,
                         const AttentionMaskBundle* reference,
                         StepRecord* record) {
  if (record) record->mode = mode;
  if (mode == StepMode::kMasked) {
    return net.apply(z, prompt, bundle, pipeline_mode, reference, record);
  }
  const auto ones =
      all_ones_bundle(z.frames(), z.latents(), prompt.labels.size());
  return net.apply(z, prompt, ones, pipeline_mode,
                   reference ? reference : &bundle, record);
}

std::vector<double> fg_energy_fraction(const LatentVideo& z,
                                       const FrameMaskSet& masks,
                                       const Matrix& token_values,
                                       const TokenLabels& labels) {
  std::vector<double> out(static_cast<std::size_t>(z.frames()), 0.0);
  if (masks.num_frames() != z.frames() || masks.num_latents() != z.latents() ||
      static_cast<std::size_t>(token_values.rows()) != labels.size() ||
      token_values.cols() != z.channels()) {
    throw std::invalid_argument("fg_energy_fraction: shape mismatch");
  }
  Eigen::RowVectorXd fg_mean = Eigen::RowVectorXd::Zero(z.channels());
  Eigen::RowVectorXd bg_mean = Eigen::RowVectorXd::Zero(z.channels());
  int n_fg = 0, n_bg = 0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    const auto row = token_values.row(static_cast<Eigen::Index>(t));
    if (labels.labels[t]) {
      fg_mean += row;
      ++n_fg;
    } else {
      bg_mean += row;
      ++n_bg;
    }
  }
  if (n_fg == 0) return out;
  fg_mean /= n_fg;
  if (n_bg > 0) bg_mean /= n_bg;
  Eigen::RowVectorXd dir = fg_mean - bg_mean;
  const double norm = dir.norm();
  if (!(norm > 0.0)) return out;
  dir /= norm;

  std::vector<double> proj(z.latents());
  for (int f = 0; f < z.frames(); ++f) {
    const auto x = z.frame(f);
    double mean = 0.0, raw = 0.0;
    for (std::size_t i = 0; i < z.latents(); ++i) {
      proj[i] = x.row(static_cast<Eigen::Index>(i)).dot(dir);
      mean += proj[i];
      raw += proj[i] * proj[i];
    }
    mean /= static_cast<double>(z.latents());
    double in_fg = 0.0, total = 0.0;
    for (std::size_t i = 0; i < z.latents(); ++i) {
      const double e = (proj[i] - mean) * (proj[i] - mean);
      total += e;
      if (masks.at(f, i)) in_fg += e;
    }
    // A frame whose contrast is at rounding level carries no layout.
    out[f] = total > kContrastFloor * raw ? in_fg / total : 0.0;
  }
  return out;
}

RunResult run(const BBoxTrajectory& traj, const LatentGrid& grid,
              const PromptSpec& prompt, const PipelineConfig& cfg) {
  cfg.validate();
  const auto masks = rasterize(traj, grid);
  auto z = initial_noise(masks.num_frames(), masks.num_latents(), cfg.channels,
                         mix_seed(cfg.seed, kNoiseStream));
  return run_from(std::move(z), masks, prompt, cfg);
}

RunResult run_from(LatentVideo z, const FrameMaskSet& masks,
                   const PromptSpec& prompt, const PipelineConfig& cfg) {
  cfg.validate();
  prompt.validate();
  if (z.frames() != masks.num_frames() || z.latents() != masks.num_latents() ||
      z.channels() != cfg.channels) {
    throw std::invalid_argument("initial latent does not match masks/config");
  }
  const ToyDenoiser net(cfg);
  const auto reference = build_bundle(masks, prompt.labels);
  const auto effective = cfg.ablation == AblationFlags{}
                             ? reference
                             : build_bundle(masks, prompt.labels, cfg.ablation);
  const auto ones =
      all_ones_bundle(masks.num_frames(), masks.num_latents(), prompt.labels.size());
  const Matrix tok_values = net.token_values(prompt);

  RunResult result;
  result.report.steps.reserve(static_cast<std::size_t>(cfg.num_steps));
  for (int step = 0; step < cfg.num_steps; ++step) {
    StepRecord rec;
    rec.step = step;
    rec.mode = schedule(step, cfg);
    const auto& in_effect = rec.mode == StepMode::kMasked ? effective : ones;
    z = net.apply(z, prompt, in_effect, cfg.mode, &reference, &rec);
    rec.fg_energy_fraction =
        fg_energy_fraction(z, masks, tok_values, prompt.labels);
    result.report.steps.push_back(std::move(rec));
  }
  result.latent = std::move(z);
  return result;
}

}  // namespace layoutmask
