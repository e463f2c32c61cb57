#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "layoutmask/geometry.hpp"

namespace layoutmask::metrics {

// Detector output for one video: at most one box per frame.
struct DetectionTrack {
  std::vector<std::optional<BBox>> boxes;
  std::vector<std::optional<double>> scores;

  explicit DetectionTrack(std::size_t frames = 0)
      : boxes(frames), scores(frames) {}
  std::size_t detected_frames() const;
};

enum class CentroidNorm {
  kDiagonal,  // divide by the canvas diagonal
  kLongSide,  // divide by max(width, height)
};

struct VideoMetrics {
  double detected_frame_fraction = 0.0;
  bool passes_filter = false;             // detected_frame_fraction > 0.5
  std::optional<double> mean_iou;         // only when passes_filter
  double ap50 = 0.0;                      // share of frames with IoU >= 0.5
  std::optional<double> centroid_distance;  // over detected frames
};

struct EvalRecord {
  std::string video_id;
  BBoxTrajectory gt;
  DetectionTrack det;
  VideoMetrics out;
};

// Exact |a & b| / |a | b| over half-open integer boxes.
double iou(const BBox& a, const BBox& b);

// Per-frame quantities are taken over frames with a ground-truth box; frames
// without a detection count as IoU 0 and as AP50 misses.
VideoMetrics evaluate_video(const BBoxTrajectory& gt, const DetectionTrack& det,
                            CentroidNorm norm = CentroidNorm::kDiagonal);

EvalRecord make_record(std::string video_id, BBoxTrajectory gt,
                       DetectionTrack det,
                       CentroidNorm norm = CentroidNorm::kDiagonal);

// Share of videos detected in more than half of their frames.
double coverage(std::span<const EvalRecord> records);
// Mean of per-video mean IoU over filter-passing videos; nullopt if none pass.
std::optional<double> video_miou(std::span<const EvalRecord> records);
// Mean of per-video AP50 over all videos.
double ap50(std::span<const EvalRecord> records);
// Mean of per-video centroid distance over videos with a detection.
std::optional<double> centroid_distance(std::span<const EvalRecord> records);

struct MethodScores {
  std::string method;
  std::optional<double> miou;
  double ap50 = 0.0;
  double coverage = 0.0;
  std::optional<double> cd;
  std::size_t total_videos = 0;
  std::size_t filtered_in = 0;
};

struct SuiteReport {
  std::vector<MethodScores> methods;

  // Aligned text table; mIoU, AP50 and Coverage in percent.
  std::string to_table() const;
};

using MethodRecords = std::pair<std::string, std::vector<EvalRecord>>;

SuiteReport build_suite_report(const std::vector<MethodRecords>& groups);

}  // namespace layoutmask::metrics
