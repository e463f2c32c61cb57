#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "layoutmask/imc.hpp"
#include "layoutmask/io.hpp"
#include "layoutmask/metrics.hpp"
#include "layoutmask/pipeline.hpp"

namespace layoutmask::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitValidation = 3,
};

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Maps an in-flight exception to the process exit code.
int exit_code_for(const std::exception& e);

// "WxH" -> (W, H).
std::pair<int, int> parse_dims(const std::string& text);

// ---- gen-imc ---------------------------------------------------------------

struct GenImcOptions {
  Canvas canvas{256, 256, imc::kDefaultFrames};
  std::uint64_t seed = imc::kDefaultSeed;
  int jitter_px = imc::kDefaultJitterPx;
  std::filesystem::path out_dir;
};

struct ManifestEntry {
  std::string file;
  std::string sha256;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::string text;  // "<sha256>  <file>\n" per entry
};

inline constexpr const char* kManifestName = "manifest.sha256";

// Writes imc_NNN.json for every pair plus the manifest.
Manifest cmd_gen_imc(const GenImcOptions& opts);

// ---- build-masks -----------------------------------------------------------

struct BuildMasksOptions {
  std::filesystem::path trajectory;
  LatentGrid grid{32, 32};
  AblationFlags ablation;
  // Explicit token labels; when empty they come from the document's fg_phrase.
  std::vector<std::uint8_t> tokens;
  std::filesystem::path out_dir;
};

struct BuildMasksResult {
  AttentionMaskBundle bundle;
  std::vector<std::filesystem::path> files;  // cross, spatial, temporal
};

BuildMasksResult cmd_build_masks(const BuildMasksOptions& opts);

// ---- run -------------------------------------------------------------------

// Writes latent.pkbl and report.json into cfg.output_dir.
RunResult cmd_run(const io::ExperimentConfig& cfg);

// ---- eval ------------------------------------------------------------------

struct EvalOptions {
  std::filesystem::path gt_dir;
  // (method name, detections file)
  std::vector<std::pair<std::string, std::filesystem::path>> detections;
  metrics::CentroidNorm norm = metrics::CentroidNorm::kDiagonal;
  std::filesystem::path out_dir;
};

// Ground truth is every *.json trajectory document in gt_dir; the file stem
// is the video id. Writes suite_report.txt and suite_report.json.
metrics::SuiteReport cmd_eval(const EvalOptions& opts);

// ---- ablate ----------------------------------------------------------------

struct AblationRow {
  std::string variant;  // full, no_cross, no_spatial, no_temporal
  AblationFlags flags;
  // Largest leakage over masked steps, per family, against the full masks.
  double cross_leakage = 0.0;
  double spatial_leakage = 0.0;
  double temporal_leakage = 0.0;
  // fg energy localization after the masked phase and after the last step.
  double masked_localization = 0.0;
  double final_localization = 0.0;
  RunResult result;
};

struct AblationReport {
  std::vector<AblationRow> rows;
  std::string to_table() const;
};

// Four runs with the same seed that differ only in the ablation flags. Writes
// ablation.txt and ablation.json when cfg.output_dir is set.
AblationReport cmd_ablate(const io::ExperimentConfig& cfg);

// Loads the trajectory named by cfg.dataset and builds its prompt.
std::pair<io::TrajectoryDocument, PromptSpec> load_experiment_inputs(
    const io::ExperimentConfig& cfg);

}  // namespace layoutmask::cli
