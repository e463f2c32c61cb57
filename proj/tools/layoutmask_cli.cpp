// layoutmask: generate IMC trajectories, export attention masks, run the toy
// masked-diffusion pipeline, score detections and run the mask ablation.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>

#include "layoutmask/commands.hpp"

namespace {

using namespace layoutmask;
namespace fs = std::filesystem;

struct PipelineOverrides {
  std::optional<int> steps;
  std::optional<int> frozen;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::string> scale;
  std::optional<std::string> grid;
  std::optional<std::string> traj;
  std::optional<std::string> out;
  bool no_cross = false, no_spatial = false, no_temporal = false;
};

void add_pipeline_flags(CLI::App* cmd, std::string& config_path,
                        PipelineOverrides& o) {
  cmd->add_option("--config", config_path, "Experiment config (JSON)");
  cmd->add_option("--traj", o.traj, "Trajectory document (overrides config dataset)");
  cmd->add_option("--out", o.out, "Output directory (overrides config output_dir)");
  cmd->add_option("--steps", o.steps, "Number of denoising steps (default 40)");
  cmd->add_option("--frozen", o.frozen, "Masked steps t at the start (default 2)");
  cmd->add_option("--seed", o.seed, "Seed for noise, weights and embeddings");
  cmd->add_option("--mode", o.mode, "video or image")
      ->check(CLI::IsMember({"video", "image"}));
  cmd->add_option("--scale", o.scale, "Score scale: inv_sqrt_d or inv_d")
      ->check(CLI::IsMember({"inv_sqrt_d", "inv_d"}));
  cmd->add_option("--grid", o.grid, "Latent grid WxH (default 16x16)");
  cmd->add_flag("--no-cross", o.no_cross, "Disable the cross-attention mask");
  cmd->add_flag("--no-spatial", o.no_spatial, "Disable the spatial-attention mask");
  cmd->add_flag("--no-temporal", o.no_temporal, "Disable the temporal-attention mask");
}

io::ExperimentConfig resolve_config(const std::string& config_path,
                                    const PipelineOverrides& o) {
  io::ExperimentConfig cfg;
  if (!config_path.empty()) {
    io::json j;
    try {
      j = io::json::parse(io::read_file(config_path));
    } catch (const io::json::exception& e) {
      throw io::FormatError(config_path + ": " + e.what());
    }
    cfg = io::config_from_json(j);
  }
  auto& p = cfg.pipeline;
  if (o.steps) p.num_steps = *o.steps;
  if (o.frozen) p.frozen_steps = *o.frozen;
  if (o.seed) p.seed = *o.seed;
  if (o.mode) p.mode = *o.mode == "image" ? PipelineMode::kImage : PipelineMode::kVideo;
  if (o.scale) p.scale_mode = *o.scale == "inv_d" ? ScaleMode::kInvD : ScaleMode::kInvSqrtD;
  if (o.grid) {
    const auto [w, h] = cli::parse_dims(*o.grid);
    cfg.grid = {w, h};
  }
  if (o.traj) cfg.dataset = *o.traj;
  if (o.out) cfg.output_dir = *o.out;
  if (o.no_cross) p.ablation.cross = false;
  if (o.no_spatial) p.ablation.spatial = false;
  if (o.no_temporal) p.ablation.temporal = false;
  return cfg;
}

std::vector<std::uint8_t> parse_token_list(const std::string& text) {
  std::vector<std::uint8_t> out;
  for (char c : text) {
    if (c == '0' || c == '1') {
      out.push_back(static_cast<std::uint8_t>(c - '0'));
    } else if (c != ',' && c != ' ') {
      throw cli::UsageError("--tokens expects a list of 0/1, got '" + text + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Masked spatio-temporal attention toolkit"};
  app.require_subcommand(1);

  // gen-imc
  cli::GenImcOptions gen;
  std::string gen_canvas = "256x256";
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-imc", "Generate the 102 IMC prompt/trajectory pairs");
  gen_cmd->add_option("--canvas", gen_canvas, "Canvas WxH")->capture_default_str();
  gen_cmd->add_option("--frames", gen.canvas.num_frames, "Frames per video")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--jitter", gen.jitter_px, "Per-coordinate jitter in px")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "Output directory")->required();

  // build-masks
  cli::BuildMasksOptions bm;
  std::string bm_traj, bm_grid = "32x32", bm_out, bm_tokens;
  bool bm_no_cross = false, bm_no_spatial = false, bm_no_temporal = false;
  auto* bm_cmd = app.add_subcommand("build-masks", "Export cross/spatial/temporal masks as PKBM");
  bm_cmd->add_option("--traj", bm_traj, "Trajectory document")->required();
  bm_cmd->add_option("--grid", bm_grid, "Latent grid WxH")->capture_default_str();
  bm_cmd->add_option("--tokens", bm_tokens,
                     "Token labels as 0/1 list (default: from fg_phrase)");
  bm_cmd->add_option("--out", bm_out, "Output directory")->required();
  bm_cmd->add_flag("--no-cross", bm_no_cross, "Write an all-ones cross mask");
  bm_cmd->add_flag("--no-spatial", bm_no_spatial, "Write an all-ones spatial mask");
  bm_cmd->add_flag("--no-temporal", bm_no_temporal, "Write an all-ones temporal mask");

  // run
  std::string run_config;
  PipelineOverrides run_over;
  auto* run_cmd = app.add_subcommand("run", "Run the toy masked-diffusion pipeline");
  add_pipeline_flags(run_cmd, run_config, run_over);

  // eval
  cli::EvalOptions ev;
  std::string ev_gt, ev_out, ev_norm = "diagonal";
  std::vector<std::string> ev_dets;
  auto* ev_cmd = app.add_subcommand("eval", "Score detections: mIoU, AP50, Coverage, CD");
  ev_cmd->add_option("--gt", ev_gt, "Directory of ground-truth trajectory documents")->required();
  ev_cmd->add_option("--detections", ev_dets,
                     "Detections JSONL, as NAME=PATH or PATH (repeatable)")
      ->required();
  ev_cmd->add_option("--cd-norm", ev_norm, "Centroid distance normalizer")
      ->check(CLI::IsMember({"diagonal", "long_side"}))
      ->capture_default_str();
  ev_cmd->add_option("--out", ev_out, "Output directory for the report files");

  // ablate
  std::string ab_config;
  PipelineOverrides ab_over;
  auto* ab_cmd = app.add_subcommand("ablate", "Run full / no-cross / no-spatial / no-temporal");
  add_pipeline_flags(ab_cmd, ab_config, ab_over);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  try {
    if (*gen_cmd) {
      const auto [w, h] = cli::parse_dims(gen_canvas);
      gen.canvas.width = w;
      gen.canvas.height = h;
      gen.out_dir = gen_out;
      const auto m = cli::cmd_gen_imc(gen);
      std::printf("wrote %zu trajectories and %s to %s\n", m.entries.size(),
                  cli::kManifestName, gen_out.c_str());
    } else if (*bm_cmd) {
      const auto [w, h] = cli::parse_dims(bm_grid);
      bm.trajectory = bm_traj;
      bm.grid = {w, h};
      bm.out_dir = bm_out;
      bm.ablation = {!bm_no_cross, !bm_no_spatial, !bm_no_temporal};
      if (!bm_tokens.empty()) bm.tokens = parse_token_list(bm_tokens);
      const auto res = cli::cmd_build_masks(bm);
      std::printf("%d cross, %d spatial, %zu temporal masks\n",
                  res.bundle.num_frames(), res.bundle.num_frames(),
                  res.bundle.temporal.size());
      for (const auto& f : res.files) std::printf("  %s\n", f.string().c_str());
      for (int f : res.bundle.frames_with_empty_cross_rows) {
        std::fprintf(stderr,
                     "warning: frame %d has pixels whose label no token shares; "
                     "attention falls back to unmasked rows there\n",
                     f);
      }
    } else if (*run_cmd) {
      const auto cfg = resolve_config(run_config, run_over);
      const auto res = cli::cmd_run(cfg);
      const auto& rep = res.report;
      std::printf("steps=%zu masked=%d max_masked_leakage=%.3e\n", rep.steps.size(),
                  rep.masked_steps(),
                  std::max({rep.max_leakage(AttentionLayer::kSpatial, StepMode::kMasked),
                            rep.max_leakage(AttentionLayer::kCross, StepMode::kMasked),
                            rep.max_leakage(AttentionLayer::kTemporal, StepMode::kMasked)}));
      if (!cfg.output_dir.empty()) std::printf("wrote %s\n", cfg.output_dir.c_str());
    } else if (*ev_cmd) {
      ev.gt_dir = ev_gt;
      ev.out_dir = ev_out;
      ev.norm = ev_norm == "long_side" ? metrics::CentroidNorm::kLongSide
                                       : metrics::CentroidNorm::kDiagonal;
      for (const auto& d : ev_dets) {
        const auto eq = d.find('=');
        if (eq == std::string::npos) {
          ev.detections.emplace_back(fs::path(d).stem().string(), d);
        } else {
          ev.detections.emplace_back(d.substr(0, eq), d.substr(eq + 1));
        }
      }
      const auto report = cli::cmd_eval(ev);
      std::fputs(report.to_table().c_str(), stdout);
    } else if (*ab_cmd) {
      const auto cfg = resolve_config(ab_config, ab_over);
      const auto report = cli::cmd_ablate(cfg);
      std::fputs(report.to_table().c_str(), stdout);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return cli::exit_code_for(e);
  }
  return cli::kExitOk;
}
