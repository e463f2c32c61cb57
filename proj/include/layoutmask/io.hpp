#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "layoutmask/geometry.hpp"
#include "layoutmask/maskgen.hpp"
#include "layoutmask/metrics.hpp"
#include "layoutmask/pipeline.hpp"

namespace layoutmask::io {

using nlohmann::json;

// Malformed binary payload or document structure.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed input that violates a domain rule (e.g. a detection outside the
// video).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- PKBM: packed binary masks -------------------------------------------
//
//   "PKBM" | u16 version | u8 family | u32 count | u32 rows | u32 cols |
//   ceil(count * rows * cols / 8) payload bytes
//
// Little-endian. The payload is one bit stream over all matrices, row-major;
// bit k lives in byte k / 8 at position k % 8 (LSB first). Pad bits are zero.

inline constexpr std::uint16_t kPkbmVersion = 1;

struct MaskFile {
  MaskFamily family = MaskFamily::kCross;
  std::vector<BinaryMatrix> matrices;
  bool operator==(const MaskFile&) const = default;
};

std::string encode_pkbm(MaskFamily family,
                        const std::vector<BinaryMatrix>& matrices);
MaskFile decode_pkbm(std::string_view bytes);

// ---- PKBL: latent video ----------------------------------------------------
//
//   "PKBL" | u32 frames | u32 latents | u32 channels | f32 payload
//
// Little-endian, [frame][latent][channel] order.

std::string encode_pkbl(const LatentVideo& z);
// Values come back as the stored f32 widened to double.
LatentVideo decode_pkbl(std::string_view bytes);

// ---- Trajectory documents --------------------------------------------------

struct TrajectoryDocument {
  std::string prompt;
  std::string fg_phrase;
  BBoxTrajectory trajectory;
  // Extra fields carried through verbatim (e.g. generator parameters).
  json meta = json::object();
};

// Writes mode "dense": every present box, absent frames omitted.
json trajectory_to_json(const TrajectoryDocument& doc);
// Accepts mode "dense" (missing frames are absent) or "keyframes" (missing
// frames are interpolated).
TrajectoryDocument trajectory_from_json(const json& j);

TrajectoryDocument read_trajectory(const std::filesystem::path& path);
void write_trajectory(const std::filesystem::path& path,
                      const TrajectoryDocument& doc);

// ---- Detections (JSON lines) -----------------------------------------------

struct DetectionRow {
  std::string video_id;
  int frame = 0;
  BBox box;
  double score = 0.0;
};

// One object per non-empty line: {video_id, frame, x0, y0, x1, y1, score}.
std::vector<DetectionRow> parse_detections(std::string_view text);

// Tracks for one video. Boxes are clipped to the canvas; per frame the highest
// score wins. Rows for unknown frames or boxes empty after clipping raise
// ValidationError.
metrics::DetectionTrack detections_to_track(
    const std::vector<DetectionRow>& rows, const std::string& video_id,
    const Canvas& canvas);

// ---- Reports ---------------------------------------------------------------

json run_report_to_json(const RunReport& report);
json suite_report_to_json(const metrics::SuiteReport& report);

// ---- Experiment configuration ----------------------------------------------

struct ExperimentConfig {
  PipelineConfig pipeline;
  LatentGrid grid{16, 16};
  std::string dataset;     // trajectory document
  std::string output_dir;

  bool operator==(const ExperimentConfig&) const = default;
};

json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const json& j);

// ---- Files -----------------------------------------------------------------

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);
std::string sha256_hex(std::string_view bytes);

}  // namespace layoutmask::io
