// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 when everything passes).

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "layoutmask/commands.hpp"
#include "test_support.hpp"

using namespace layoutmask;
namespace t = layoutmask::testing;

namespace {

// Tolerances and budgets.
constexpr int kMaskCases = 1000;
constexpr double kMaskBudgetSec = 5.0;
constexpr int kAttentionCases = 500;
constexpr double kAttentionBudgetSec = 10.0;
constexpr double kAttentionRelTol = 1e-10;
constexpr double kLeakageTol = 1e-12;
constexpr double kMetricsTol = 1e-9;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && pass_) {
      pass_ = false;
      first_failure_ = what;
    }
  }
  Outcome done(std::string detail) const {
    if (!pass_) detail = "first failure: " + first_failure_ + "; " + detail;
    return {pass_, std::move(detail)};
  }

 private:
  bool pass_ = true;
  std::string first_failure_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

bool symmetric_unit_diagonal(const BinaryMatrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (m(i, i) != 1) return false;
    for (std::size_t j = 0; j < i; ++j)
      if (m(i, j) != m(j, i)) return false;
  }
  return true;
}

Outcome mask_algebra() {
  Check c;
  std::mt19937_64 gen(101);
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 0; k < kMaskCases; ++k) {
    const auto frame_fg = t::random_bits(gen, 1 + gen() % 64);
    const auto token_fg = t::random_bits(gen, 1 + gen() % 16);
    const auto pixel_fg = t::random_bits(gen, 1 + gen() % 24);
    const TokenLabels tokens{token_fg};
    const auto cross = build_cross_mask(frame_fg, tokens);
    const auto spatial = build_spatial_mask(frame_fg);
    const auto temporal = build_temporal_mask(pixel_fg);
    c.expect(cross == t::outer_product_oracle(frame_fg, token_fg), "cross vs oracle");
    c.expect(spatial == t::outer_product_oracle(frame_fg, frame_fg), "spatial vs oracle");
    c.expect(temporal == t::outer_product_oracle(pixel_fg, pixel_fg), "temporal vs oracle");
    c.expect(symmetric_unit_diagonal(spatial), "spatial symmetry");
    c.expect(symmetric_unit_diagonal(temporal), "temporal symmetry");
    c.expect(build_cross_mask(t::complement(frame_fg), TokenLabels{t::complement(token_fg)}) == cross,
             "cross complement");
    c.expect(build_spatial_mask(t::complement(frame_fg)) == spatial, "spatial complement");
    c.expect(build_temporal_mask(t::complement(pixel_fg)) == temporal, "temporal complement");
  }
  const double secs = t::seconds_since(t0);
  c.expect(secs < kMaskBudgetSec, "runtime budget");
  return c.done(std::to_string(kMaskCases) + " cases in " + fmt("%.3f s", secs));
}

Outcome attention_oracle() {
  Check c;
  std::mt19937_64 gen(102);
  double worst_err = 0.0, worst_leak = 0.0;
  int fallback_cases = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 0; k < kAttentionCases; ++k) {
    const auto dq = static_cast<Eigen::Index>(1 + gen() % 16);
    const auto dk = static_cast<Eigen::Index>(1 + gen() % 16);
    const auto dm = static_cast<Eigen::Index>(1 + gen() % 8);
    const auto dv = static_cast<Eigen::Index>(1 + gen() % 8);
    const AttentionInputs in{t::random_matrix(gen, dq, dm, 2.0), t::random_matrix(gen, dk, dm, 2.0),
                             t::random_matrix(gen, dk, dv), attention_scale(
                                 k % 2 ? ScaleMode::kInvD : ScaleMode::kInvSqrtD,
                                 static_cast<std::size_t>(dm))};
    BinaryMatrix mask(static_cast<std::size_t>(dq), static_cast<std::size_t>(dk));
    for (auto& b : mask.data()) b = static_cast<std::uint8_t>(gen() & 1u);
    if (k % 10 == 0) {  // force a fully masked row
      for (std::size_t j = 0; j < mask.cols(); ++j) mask(0, j) = 0;
    }
    const auto res = masked_attention(in, mask);
    fallback_cases += !res.fallback_rows.empty();
    const auto want = t::column_deletion_oracle(in.q, in.k, in.v, in.scale, mask);
    worst_err = std::max(worst_err, t::max_rel_error(res.output, want));
    worst_leak = std::max(worst_leak, masked_mass(res.weights, mask, res.fallback_rows));
    c.expect(res.output.allFinite() && res.weights.allFinite(), "finite output");
  }
  const double secs = t::seconds_since(t0);
  c.expect(worst_err <= kAttentionRelTol, "relative error");
  c.expect(worst_leak <= kLeakageTol, "leakage");
  c.expect(fallback_cases >= kAttentionCases / 10, "fully masked rows exercised");
  c.expect(secs < kAttentionBudgetSec, "runtime budget");
  return c.done(std::to_string(kAttentionCases) + " cases, max rel err " + fmt("%.2e", worst_err) +
                ", max leakage " + fmt("%.2e", worst_leak) + ", " +
                std::to_string(fallback_cases) + " with fallback rows, " + fmt("%.3f s", secs));
}

Outcome schedule_and_pipeline() {
  Check c;
  BBoxTrajectory traj{{128, 128, 8}, {}};
  for (int f = 0; f < 8; ++f) traj.boxes.push_back(BBox{10 + 8 * f, 30, 50 + 8 * f, 80});
  const LatentGrid grid{16, 16};
  const auto prompt = make_prompt("A jet plane flying high in the sky.", "jet plane", 16, 3);
  double worst = 0.0;
  for (int frozen : {PipelineConfig::kFrozenStepsSsv2, PipelineConfig::kFrozenStepsImc}) {
    PipelineConfig cfg;
    cfg.frozen_steps = frozen;
    c.expect(cfg.num_steps == 40, "default step count");
    const auto a = run(traj, grid, prompt, cfg);
    const auto b = run(traj, grid, prompt, cfg);
    c.expect(a.report.masked_steps() == frozen, "masked step count");
    c.expect(a.latent == b.latent, "bit-identical repeat");
    for (const auto& s : a.report.steps) {
      if (s.mode != StepMode::kMasked) continue;
      worst = std::max(worst, s.max_leakage);
    }
    cfg.mode = PipelineMode::kImage;
    const auto img = run(traj, grid, prompt, cfg);
    for (const auto& s : img.report.steps)
      c.expect(s.find(AttentionLayer::kTemporal) == nullptr, "image mode temporal record");
  }
  c.expect(worst <= kLeakageTol, "masked-step leakage");
  return c.done("t in {2, 4}, 40 steps, max masked leakage " + fmt("%.2e", worst));
}

Outcome localization_direction() {
  Check c;
  t::StandardFixture fx;
  const auto masks = rasterize(fx.trajectory, fx.grid);
  const double free_loc =
      run(fx.trajectory, fx.grid, fx.prompt, fx.config(0)).report.final_localization(masks);
  const double masked_loc = run(fx.trajectory, fx.grid, fx.prompt,
                                fx.config(PipelineConfig::kDefaultSteps))
                                .report.final_localization(masks);
  c.expect(masked_loc > free_loc, "fully masked run must localize more");
  return c.done("t=0: " + fmt("%.6f", free_loc) + ", t=40: " + fmt("%.6f", masked_loc));
}

Outcome imc_regeneration() {
  Check c;
  const Canvas canvas{256, 256, imc::kDefaultFrames};
  const auto items = imc::generate_dataset(canvas, imc::kDefaultSeed);
  c.expect(items.size() == 102, "pair count");
  for (const auto& it : items) {
    const auto& p = it.sample.params;
    c.expect(p.size_fraction == 0.25 || p.size_fraction == 0.35, "size fraction");
    c.expect(p.speed >= 5 && p.speed <= 20, "speed range");
    for (const auto& b : it.sample.trajectory.boxes)
      c.expect(b && b->valid_in(canvas), "box inside canvas");
  }
  t::TempDir dir("imc_accept");
  cli::GenImcOptions opts;
  opts.out_dir = dir.path();
  const auto manifest = cli::cmd_gen_imc(opts);
  std::string golden;
  try {
    golden = io::read_file(LAYOUTMASK_GOLDEN_MANIFEST);
  } catch (const std::exception& e) {
    c.expect(false, std::string("golden manifest unreadable: ") + e.what());
  }
  c.expect(manifest.text == golden, "manifest differs from golden");
  return c.done(std::to_string(items.size()) + " pairs, manifest " +
                io::sha256_hex(manifest.text).substr(0, 16));
}

Outcome metrics_fixtures() {
  Check c;
  t::MetricsFixture fx;
  const double miou = *metrics::video_miou(fx.records);
  const double ap = metrics::ap50(fx.records);
  const double cov = metrics::coverage(fx.records);
  const double cd = *metrics::centroid_distance(fx.records);
  c.expect(std::abs(miou - t::MetricsFixture::kMiou) <= kMetricsTol, "mIoU");
  c.expect(std::abs(ap - t::MetricsFixture::kAp50) <= kMetricsTol, "AP50");
  c.expect(std::abs(cov - t::MetricsFixture::kCoverage) <= kMetricsTol, "Coverage");
  c.expect(std::abs(cd - t::MetricsFixture::cd()) <= kMetricsTol, "CD");
  c.expect(metrics::iou({0, 0, 4, 4}, {0, 0, 4, 4}) == 1.0, "iou identical");
  c.expect(metrics::iou({0, 0, 2, 2}, {3, 3, 5, 5}) == 0.0, "iou disjoint");
  c.expect(metrics::iou({0, 0, 2, 2}, {1, 0, 3, 2}) == 2.0 / 6.0, "iou 2/6");

  const Canvas canvas{64, 64, 16};
  metrics::DetectionTrack half(16);
  for (int f = 0; f < 8; ++f) half.boxes[f] = BBox{0, 0, 8, 8};
  const auto rec = metrics::make_record(
      "half", BBoxTrajectory{canvas, std::vector<std::optional<BBox>>(16, BBox{0, 0, 8, 8})}, half);
  c.expect(!rec.out.passes_filter, "8/16 detected must be excluded");
  return c.done("mIoU " + fmt("%.9f", miou) + ", AP50 " + fmt("%.9f", ap) + ", Coverage " +
                fmt("%.9f", cov) + ", CD " + fmt("%.9f", cd));
}

Outcome ablation_driver() {
  Check c;
  t::TempDir dir("ablate_accept");
  const auto items = imc::generate_dataset({256, 256, imc::kDefaultFrames}, imc::kDefaultSeed);
  io::TrajectoryDocument doc{items[21].entry.text, items[21].entry.subject,
                             items[21].sample.trajectory, io::json::object()};
  io::write_trajectory(dir.path() / "traj.json", doc);
  io::ExperimentConfig cfg;
  cfg.dataset = (dir.path() / "traj.json").string();
  cfg.pipeline.frozen_steps = PipelineConfig::kFrozenStepsImc;
  cfg.pipeline.seed = 5;
  const auto report = cli::cmd_ablate(cfg);
  c.expect(report.rows.size() == 4, "four variants");
  std::ostringstream detail;
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    const double leaks[3] = {r.cross_leakage, r.spatial_leakage, r.temporal_leakage};
    for (int fam = 0; fam < 3; ++fam) {
      const bool disabled = i == static_cast<std::size_t>(fam + 1);
      c.expect(disabled ? leaks[fam] > kLeakageTol : leaks[fam] <= kLeakageTol,
               r.variant + " leakage pattern");
    }
    c.expect(r.result.report.masked_steps() == cfg.pipeline.frozen_steps, "masked steps");
    detail << r.variant << " " << fmt("%.2e", std::max({leaks[0], leaks[1], leaks[2]}))
           << (i + 1 < report.rows.size() ? ", " : "");
  }
  // Same seed everywhere: the first spatial layer of step 0 sees the same
  // noise, so the no_cross and full runs agree until the cross layer acts.
  PipelineConfig pc = cfg.pipeline;
  const auto prompt = make_prompt(doc.prompt, doc.fg_phrase, pc.d_text, pc.seed);
  c.expect(run(doc.trajectory, cfg.grid, prompt, pc).latent == report.rows[0].result.latent,
           "full row reproducible from its seed");
  return c.done(detail.str());
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"mask_algebra", mask_algebra},
      {"attention_oracle", attention_oracle},
      {"schedule_and_pipeline", schedule_and_pipeline},
      {"localization_direction", localization_direction},
      {"imc_regeneration", imc_regeneration},
      {"metrics_fixtures", metrics_fixtures},
      {"ablation_driver", ablation_driver},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %-24s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed;
}
