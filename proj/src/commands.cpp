#include "layoutmask/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "layoutmask/parallel.hpp"

namespace layoutmask::cli {

namespace fs = std::filesystem;
using io::json;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const io::ValidationError*>(&e) ||
      dynamic_cast<const io::FormatError*>(&e)) {
    return kExitValidation;
  }
  if (dynamic_cast<const std::invalid_argument*>(&e)) return kExitUsage;
  return kExitInternal;
}

std::pair<int, int> parse_dims(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) {
    throw UsageError("expected WxH, got '" + text + "'");
  }
  const auto parse = [&](const char* first, const char* last) {
    int v = 0;
    const auto [end, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || end != last || v < 1) {
      throw UsageError("bad dimensions '" + text + "'");
    }
    return v;
  };
  const char* s = text.data();
  return {parse(s, s + x), parse(s + x + 1, s + text.size())};
}

Manifest cmd_gen_imc(const GenImcOptions& opts) {
  if (opts.out_dir.empty()) throw UsageError("gen-imc: --out is required");
  opts.canvas.validate();
  const auto items = imc::generate_dataset(opts.canvas, opts.seed, opts.jitter_px);
  fs::create_directories(opts.out_dir);

  auto entries = parallel_map(items.size(), [&](std::size_t i) {
    const auto& it = items[i];
    const auto& p = it.sample.params;
    io::TrajectoryDocument doc;
    doc.prompt = it.entry.text;
    doc.fg_phrase = it.entry.subject;
    doc.trajectory = it.sample.trajectory;
    doc.meta = {{"prompt_index", it.prompt_index},
                {"variant", it.variant},
                {"motion", imc::to_string(it.entry.motion)},
                {"direction", imc::to_string(it.entry.direction)},
                {"aspect", imc::to_string(it.entry.aspect)},
                {"start_centroid", p.start_centroid},
                {"size_fraction", p.size_fraction},
                {"speed", p.speed},
                {"flip", p.flip},
                {"jitter_px", p.jitter_px},
                {"seed", opts.seed}};
    char name[32];
    std::snprintf(name, sizeof name, "imc_%03zu.json", i);
    const auto text = io::trajectory_to_json(doc).dump(2) + "\n";
    io::write_file(opts.out_dir / name, text);
    return ManifestEntry{name, io::sha256_hex(text)};
  });

  Manifest m;
  m.entries = std::move(entries);
  for (const auto& e : m.entries) m.text += e.sha256 + "  " + e.file + "\n";
  io::write_file(opts.out_dir / kManifestName, m.text);
  return m;
}

BuildMasksResult cmd_build_masks(const BuildMasksOptions& opts) {
  if (opts.out_dir.empty()) throw UsageError("build-masks: --out is required");
  const auto doc = io::read_trajectory(opts.trajectory);
  TokenLabels tokens = opts.tokens.empty()
                           ? label_tokens(doc.prompt, doc.fg_phrase)
                           : TokenLabels{opts.tokens};
  const auto masks = rasterize(doc.trajectory, opts.grid);

  BuildMasksResult res;
  res.bundle = build_bundle(masks, tokens, opts.ablation);
  fs::create_directories(opts.out_dir);
  for (auto fam : {MaskFamily::kCross, MaskFamily::kSpatial, MaskFamily::kTemporal}) {
    const auto path = opts.out_dir / (std::string(family_name(fam)) + ".pkbm");
    io::write_file(path, io::encode_pkbm(fam, res.bundle.family(fam)));
    res.files.push_back(path);
  }
  return res;
}

std::pair<io::TrajectoryDocument, PromptSpec> load_experiment_inputs(
    const io::ExperimentConfig& cfg) {
  if (cfg.dataset.empty()) throw UsageError("config names no dataset");
  auto doc = io::read_trajectory(cfg.dataset);
  auto prompt = make_prompt(doc.prompt, doc.fg_phrase, cfg.pipeline.d_text,
                            cfg.pipeline.seed);
  return {std::move(doc), std::move(prompt)};
}

RunResult cmd_run(const io::ExperimentConfig& cfg) {
  cfg.pipeline.validate();
  const auto [doc, prompt] = load_experiment_inputs(cfg);
  auto result = run(doc.trajectory, cfg.grid, prompt, cfg.pipeline);
  if (!cfg.output_dir.empty()) {
    const fs::path out(cfg.output_dir);
    io::write_file(out / "latent.pkbl", io::encode_pkbl(result.latent));
    io::write_file(out / "report.json",
                   io::run_report_to_json(result.report).dump(2) + "\n");
  }
  return result;
}

metrics::SuiteReport cmd_eval(const EvalOptions& opts) {
  if (opts.detections.empty()) {
    throw UsageError("eval: at least one detections file is required");
  }
  if (!fs::is_directory(opts.gt_dir)) {
    throw io::ValidationError("ground-truth directory " + opts.gt_dir.string() +
                              " does not exist");
  }
  std::vector<fs::path> gt_files;
  for (const auto& entry : fs::directory_iterator(opts.gt_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      gt_files.push_back(entry.path());
    }
  }
  std::sort(gt_files.begin(), gt_files.end());
  if (gt_files.empty()) {
    throw io::ValidationError("no ground-truth trajectories in " +
                              opts.gt_dir.string());
  }
  const auto gts = parallel_map(gt_files.size(), [&](std::size_t i) {
    return io::read_trajectory(gt_files[i]).trajectory;
  });

  std::vector<metrics::MethodRecords> groups;
  for (const auto& [method, path] : opts.detections) {
    const auto rows = io::parse_detections(io::read_file(path));
    for (const auto& r : rows) {
      const bool known = std::any_of(gt_files.begin(), gt_files.end(), [&](const auto& p) {
        return p.stem().string() == r.video_id;
      });
      if (!known) {
        throw io::ValidationError("detections name unknown video '" + r.video_id + "'");
      }
    }
    auto records = parallel_map(gt_files.size(), [&](std::size_t i) {
      const auto id = gt_files[i].stem().string();
      return metrics::make_record(
          id, gts[i], io::detections_to_track(rows, id, gts[i].canvas), opts.norm);
    });
    groups.emplace_back(method, std::move(records));
  }

  auto report = metrics::build_suite_report(groups);
  if (!opts.out_dir.empty()) {
    io::write_file(opts.out_dir / "suite_report.txt", report.to_table());
    io::write_file(opts.out_dir / "suite_report.json",
                   io::suite_report_to_json(report).dump(2) + "\n");
  }
  return report;
}

std::string AblationReport::to_table() const {
  std::ostringstream os;
  char line[200];
  std::snprintf(line, sizeof line, "%-12s %14s %14s %14s %11s %11s\n",
                "variant", "cross_leak", "spatial_leak", "temporal_leak",
                "loc_masked", "loc_final");
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-12s %14.3e %14.3e %14.3e %11.6f %11.6f\n",
                  r.variant.c_str(), r.cross_leakage, r.spatial_leakage,
                  r.temporal_leakage, r.masked_localization,
                  r.final_localization);
    os << line;
  }
  return os.str();
}

AblationReport cmd_ablate(const io::ExperimentConfig& cfg) {
  cfg.pipeline.validate();
  const auto inputs = load_experiment_inputs(cfg);
  const auto& doc = inputs.first;
  const auto& prompt = inputs.second;
  const auto masks = rasterize(doc.trajectory, cfg.grid);

  const std::vector<std::pair<std::string, AblationFlags>> variants = {
      {"full", {true, true, true}},
      {"no_cross", {false, true, true}},
      {"no_spatial", {true, false, true}},
      {"no_temporal", {true, true, false}},
  };

  AblationReport report;
  report.rows = parallel_map(variants.size(), [&](std::size_t i) {
    PipelineConfig pc = cfg.pipeline;
    pc.ablation = variants[i].second;
    AblationRow row;
    row.variant = variants[i].first;
    row.flags = pc.ablation;
    row.result = run(doc.trajectory, cfg.grid, prompt, pc);
    const auto& rep = row.result.report;
    row.cross_leakage = rep.max_leakage(AttentionLayer::kCross, StepMode::kMasked);
    row.spatial_leakage = rep.max_leakage(AttentionLayer::kSpatial, StepMode::kMasked);
    row.temporal_leakage = rep.max_leakage(AttentionLayer::kTemporal, StepMode::kMasked);
    row.masked_localization = rep.masked_phase_localization(masks);
    row.final_localization = rep.final_localization(masks);
    return row;
  });

  if (!cfg.output_dir.empty()) {
    const fs::path out(cfg.output_dir);
    json rows = json::array();
    for (const auto& r : report.rows) {
      rows.push_back({{"variant", r.variant},
                      {"cross_mask", r.flags.cross},
                      {"spatial_mask", r.flags.spatial},
                      {"temporal_mask", r.flags.temporal},
                      {"cross_leakage", r.cross_leakage},
                      {"spatial_leakage", r.spatial_leakage},
                      {"temporal_leakage", r.temporal_leakage},
                      {"masked_localization", r.masked_localization},
                      {"final_localization", r.final_localization},
                      {"masked_steps", r.result.report.masked_steps()}});
    }
    io::write_file(out / "ablation.json",
                   json{{"seed", cfg.pipeline.seed}, {"rows", rows}}.dump(2) + "\n");
    io::write_file(out / "ablation.txt", report.to_table());
  }
  return report;
}

}  // namespace layoutmask::cli
