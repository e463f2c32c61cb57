#include "layoutmask/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace layoutmask::metrics {

std::size_t DetectionTrack::detected_frames() const {
  return static_cast<std::size_t>(
      std::count_if(boxes.begin(), boxes.end(),
                    [](const auto& b) { return b.has_value(); }));
}

double iou(const BBox& a, const BBox& b) {
  const std::int64_t iw =
      std::max(0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const std::int64_t ih =
      std::max(0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const std::int64_t inter = iw * ih;
  const std::int64_t uni = a.area() + b.area() - inter;
  if (uni <= 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

VideoMetrics evaluate_video(const BBoxTrajectory& gt, const DetectionTrack& det,
                            CentroidNorm norm) {
  gt.validate();
  if (det.boxes.size() != gt.boxes.size()) {
    throw std::invalid_argument("detection track length differs from ground truth");
  }
  const double w = gt.canvas.width, h = gt.canvas.height;
  const double scale =
      norm == CentroidNorm::kDiagonal ? std::hypot(w, h) : std::max(w, h);

  std::size_t frames = 0, detected = 0, hits = 0;
  double iou_sum = 0.0, cd_sum = 0.0;
  for (std::size_t f = 0; f < gt.boxes.size(); ++f) {
    if (!gt.boxes[f]) continue;
    ++frames;
    const auto& d = det.boxes[f];
    if (!d) continue;
    ++detected;
    const double v = iou(*gt.boxes[f], *d);
    iou_sum += v;
    if (v >= 0.5) ++hits;
    const double dx = 0.5 * (d->center_x2() - gt.boxes[f]->center_x2());
    const double dy = 0.5 * (d->center_y2() - gt.boxes[f]->center_y2());
    cd_sum += std::hypot(dx, dy) / scale;
  }
  if (frames == 0) {
    throw std::invalid_argument("ground truth has no boxes");
  }

  VideoMetrics m;
  const auto n = static_cast<double>(frames);
  m.detected_frame_fraction = static_cast<double>(detected) / n;
  m.passes_filter = 2 * detected > frames;
  if (m.passes_filter) m.mean_iou = iou_sum / n;
  m.ap50 = static_cast<double>(hits) / n;
  if (detected > 0) m.centroid_distance = cd_sum / static_cast<double>(detected);
  return m;
}

EvalRecord make_record(std::string video_id, BBoxTrajectory gt,
                       DetectionTrack det, CentroidNorm norm) {
  EvalRecord r{std::move(video_id), std::move(gt), std::move(det), {}};
  r.out = evaluate_video(r.gt, r.det, norm);
  return r;
}

double coverage(std::span<const EvalRecord> records) {
  if (records.empty()) {
    throw std::invalid_argument("coverage of an empty record set");
  }
  const auto passing = std::count_if(
      records.begin(), records.end(),
      [](const EvalRecord& r) { return r.out.passes_filter; });
  return static_cast<double>(passing) / static_cast<double>(records.size());
}

std::optional<double> video_miou(std::span<const EvalRecord> records) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (!r.out.mean_iou) continue;
    sum += *r.out.mean_iou;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

double ap50(std::span<const EvalRecord> records) {
  if (records.empty()) {
    throw std::invalid_argument("AP50 of an empty record set");
  }
  double sum = 0.0;
  for (const auto& r : records) sum += r.out.ap50;
  return sum / static_cast<double>(records.size());
}

std::optional<double> centroid_distance(std::span<const EvalRecord> records) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (!r.out.centroid_distance) continue;
    sum += *r.out.centroid_distance;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

SuiteReport build_suite_report(const std::vector<MethodRecords>& groups) {
  if (groups.empty()) {
    throw std::invalid_argument("suite report needs at least one method");
  }
  SuiteReport report;
  for (const auto& [name, records] : groups) {
    MethodScores s;
    s.method = name;
    s.total_videos = records.size();
    s.coverage = coverage(records);
    s.miou = video_miou(records);
    s.ap50 = ap50(records);
    s.cd = centroid_distance(records);
    s.filtered_in = static_cast<std::size_t>(std::count_if(
        records.begin(), records.end(),
        [](const EvalRecord& r) { return r.out.passes_filter; }));
    report.methods.push_back(std::move(s));
  }
  return report;
}

namespace {

std::string fmt_fixed(std::optional<double> v, double mul, int prec) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", prec, *v * mul);
  return buf;
}

}  // namespace

std::string SuiteReport::to_table() const {
  std::size_t name_w = 6;
  for (const auto& m : methods) name_w = std::max(name_w, m.method.size());

  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-*s %8s %8s %9s %7s %7s %9s\n",
                static_cast<int>(name_w), "Method", "mIoU", "AP50", "Coverage",
                "CD", "videos", "filtered");
  os << line;
  for (const auto& m : methods) {
    std::snprintf(line, sizeof line, "%-*s %8s %8s %9s %7s %7zu %9zu\n",
                  static_cast<int>(name_w), m.method.c_str(),
                  fmt_fixed(m.miou, 100.0, 1).c_str(),
                  fmt_fixed(m.ap50, 100.0, 1).c_str(),
                  fmt_fixed(m.coverage, 100.0, 1).c_str(),
                  fmt_fixed(m.cd, 1.0, 3).c_str(), m.total_videos,
                  m.filtered_in);
    os << line;
  }
  return os.str();
}

}  // namespace layoutmask::metrics
