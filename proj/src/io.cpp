#include "layoutmask/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace layoutmask::io {

namespace {

constexpr std::string_view kPkbmMagic = "PKBM";
constexpr std::string_view kPkblMagic = "PKBL";

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<char>((v >> s) & 0xff));
}

class Reader {
 public:
  Reader(std::string_view bytes, const char* what) : bytes_(bytes), what_(what) {}

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string(what_) + ": truncated payload");
    }
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint16_t u16() {
    auto s = take(2);
    return static_cast<std::uint16_t>(static_cast<std::uint8_t>(s[0]) |
                                      static_cast<std::uint8_t>(s[1]) << 8);
  }
  std::uint32_t u32() {
    auto s = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(s[i]);
    return v;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
  const char* what_;
};

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > UINT32_MAX) throw std::invalid_argument(std::string(what) + " exceeds u32");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::string encode_pkbm(MaskFamily family,
                        const std::vector<BinaryMatrix>& matrices) {
  const std::size_t rows = matrices.empty() ? 0 : matrices.front().rows();
  const std::size_t cols = matrices.empty() ? 0 : matrices.front().cols();
  for (const auto& m : matrices) {
    if (m.rows() != rows || m.cols() != cols) {
      throw std::invalid_argument("PKBM matrices must share one shape");
    }
    if (!m.is_binary()) throw std::invalid_argument("PKBM matrix is not binary");
  }
  std::string out(kPkbmMagic);
  put_u16(out, kPkbmVersion);
  out.push_back(static_cast<char>(family));
  put_u32(out, checked_u32(matrices.size(), "count"));
  put_u32(out, checked_u32(rows, "rows"));
  put_u32(out, checked_u32(cols, "cols"));

  const std::size_t bits = matrices.size() * rows * cols;
  std::string payload((bits + 7) / 8, '\0');
  std::size_t k = 0;
  for (const auto& m : matrices) {
    for (auto v : m.data()) {
      if (v) payload[k / 8] = static_cast<char>(payload[k / 8] | (1u << (k % 8)));
      ++k;
    }
  }
  out += payload;
  return out;
}

MaskFile decode_pkbm(std::string_view bytes) {
  Reader in(bytes, "PKBM");
  if (in.take(4) != kPkbmMagic) throw FormatError("PKBM: bad magic");
  const auto version = in.u16();
  if (version != kPkbmVersion) {
    throw FormatError("PKBM: unsupported version " + std::to_string(version));
  }
  const auto tag = in.u8();
  if (tag > 2) throw FormatError("PKBM: unknown family tag " + std::to_string(tag));
  const std::size_t count = in.u32(), rows = in.u32(), cols = in.u32();
  const std::size_t bits = count * rows * cols;
  const std::size_t nbytes = (bits + 7) / 8;
  if (in.remaining() != nbytes) {
    throw FormatError(in.remaining() < nbytes ? "PKBM: truncated payload"
                                              : "PKBM: trailing bytes");
  }
  const auto payload = in.take(nbytes);
  if (bits % 8 != 0 &&
      (static_cast<std::uint8_t>(payload.back()) >> (bits % 8)) != 0) {
    throw FormatError("PKBM: non-zero padding bits");
  }

  MaskFile file;
  file.family = static_cast<MaskFamily>(tag);
  file.matrices.reserve(count);
  std::size_t k = 0;
  for (std::size_t m = 0; m < count; ++m) {
    BinaryMatrix mat(rows, cols);
    for (auto& v : mat.data()) {
      v = (static_cast<std::uint8_t>(payload[k / 8]) >> (k % 8)) & 1u;
      ++k;
    }
    file.matrices.push_back(std::move(mat));
  }
  return file;
}

std::string encode_pkbl(const LatentVideo& z) {
  std::string out(kPkblMagic);
  put_u32(out, checked_u32(static_cast<std::size_t>(z.frames()), "frames"));
  put_u32(out, checked_u32(z.latents(), "latents"));
  put_u32(out, checked_u32(static_cast<std::size_t>(z.channels()), "channels"));
  out.reserve(out.size() + 4 * z.data().size());
  for (double v : z.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

LatentVideo decode_pkbl(std::string_view bytes) {
  Reader in(bytes, "PKBL");
  if (in.take(4) != kPkblMagic) throw FormatError("PKBL: bad magic");
  const std::size_t frames = in.u32(), latents = in.u32(), channels = in.u32();
  const std::size_t n = frames * latents * channels;
  if (in.remaining() != 4 * n) {
    throw FormatError(in.remaining() < 4 * n ? "PKBL: truncated payload"
                                             : "PKBL: trailing bytes");
  }
  LatentVideo z(static_cast<int>(frames), latents, static_cast<int>(channels));
  for (double& v : z.data()) v = std::bit_cast<float>(in.u32());
  return z;
}

json trajectory_to_json(const TrajectoryDocument& doc) {
  const auto& t = doc.trajectory;
  json boxes = json::array();
  for (std::size_t f = 0; f < t.boxes.size(); ++f) {
    if (!t.boxes[f]) continue;
    const auto& b = *t.boxes[f];
    boxes.push_back({{"frame", f}, {"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}});
  }
  json j = {{"prompt", doc.prompt},
            {"fg_phrase", doc.fg_phrase},
            {"canvas", {{"w", t.canvas.width}, {"h", t.canvas.height}, {"frames", t.canvas.num_frames}}},
            {"mode", "dense"},
            {"boxes", std::move(boxes)}};
  if (!doc.meta.empty()) j["meta"] = doc.meta;
  return j;
}

TrajectoryDocument trajectory_from_json(const json& j) {
  TrajectoryDocument doc;
  std::string mode;
  std::map<int, BBox> keyed;
  try {
    doc.prompt = j.at("prompt").get<std::string>();
    doc.fg_phrase = j.at("fg_phrase").get<std::string>();
    const auto& c = j.at("canvas");
    doc.trajectory.canvas = {c.at("w").get<int>(), c.at("h").get<int>(),
                             c.at("frames").get<int>()};
    mode = j.value("mode", std::string("dense"));
    for (const auto& b : j.at("boxes")) {
      const int f = b.at("frame").get<int>();
      if (keyed.contains(f)) {
        throw ValidationError("duplicate box for frame " + std::to_string(f));
      }
      keyed[f] = BBox{b.at("x0").get<int>(), b.at("y0").get<int>(),
                      b.at("x1").get<int>(), b.at("y1").get<int>()};
    }
    if (j.contains("meta")) doc.meta = j.at("meta");
  } catch (const json::exception& e) {
    throw FormatError(std::string("trajectory document: ") + e.what());
  }

  try {
    const Canvas& canvas = doc.trajectory.canvas;
    canvas.validate();
    if (mode == "keyframes") {
      doc.trajectory = interpolate_trajectory(keyed, canvas);
    } else if (mode == "dense") {
      doc.trajectory.boxes.assign(static_cast<std::size_t>(canvas.num_frames),
                                  std::nullopt);
      for (const auto& [f, b] : keyed) {
        if (f < 0 || f >= canvas.num_frames) {
          throw std::invalid_argument("box frame " + std::to_string(f) +
                                      " outside the video");
        }
        doc.trajectory.boxes[f] = b;
      }
      doc.trajectory.validate();
    } else {
      throw FormatError("trajectory document: unknown mode '" + mode + "'");
    }
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("trajectory document: ") + e.what());
  }
  return doc;
}

TrajectoryDocument read_trajectory(const std::filesystem::path& path) {
  const auto text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return trajectory_from_json(j);
}

void write_trajectory(const std::filesystem::path& path,
                      const TrajectoryDocument& doc) {
  write_file(path, trajectory_to_json(doc).dump(2) + "\n");
}

std::vector<DetectionRow> parse_detections(std::string_view text) {
  std::vector<DetectionRow> rows;
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto j = json::parse(line);
      DetectionRow r;
      r.video_id = j.at("video_id").get<std::string>();
      r.frame = j.at("frame").get<int>();
      r.box = {j.at("x0").get<int>(), j.at("y0").get<int>(),
               j.at("x1").get<int>(), j.at("y1").get<int>()};
      r.score = j.value("score", 1.0);
      rows.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ValidationError("detections line " + std::to_string(line_no) +
                            ": " + e.what());
    }
  }
  return rows;
}

metrics::DetectionTrack detections_to_track(
    const std::vector<DetectionRow>& rows, const std::string& video_id,
    const Canvas& canvas) {
  metrics::DetectionTrack track(static_cast<std::size_t>(canvas.num_frames));
  for (const auto& r : rows) {
    if (r.video_id != video_id) continue;
    if (r.frame < 0 || r.frame >= canvas.num_frames) {
      throw ValidationError("detection for video '" + video_id +
                            "' at frame " + std::to_string(r.frame) +
                            " is outside the video");
    }
    BBox b{std::max(r.box.x0, 0), std::max(r.box.y0, 0),
           std::min(r.box.x1, canvas.width), std::min(r.box.y1, canvas.height)};
    if (!b.valid_in(canvas)) {
      throw ValidationError("detection for video '" + video_id + "' at frame " +
                            std::to_string(r.frame) + " is empty inside the canvas");
    }
    auto& slot = track.boxes[r.frame];
    auto& score = track.scores[r.frame];
    if (!slot || r.score > *score) {
      slot = b;
      score = r.score;
    }
  }
  return track;
}

json run_report_to_json(const RunReport& report) {
  json steps = json::array();
  for (const auto& s : report.steps) {
    json layers = json::array();
    for (const auto& l : s.layers) {
      layers.push_back({{"layer", to_string(l.layer)},
                        {"max_leakage", l.max_leakage},
                        {"masks_all_ones", l.masks_all_ones},
                        {"fallback_rows", l.fallback_rows}});
    }
    steps.push_back({{"step", s.step},
                     {"mode", to_string(s.mode)},
                     {"max_leakage", s.max_leakage},
                     {"layers", std::move(layers)},
                     {"fg_energy_fraction", s.fg_energy_fraction}});
  }
  return {{"masked_steps", report.masked_steps()}, {"steps", std::move(steps)}};
}

json suite_report_to_json(const metrics::SuiteReport& report) {
  auto opt = [](const std::optional<double>& v) -> json {
    return v ? json(*v) : json(nullptr);
  };
  json methods = json::array();
  for (const auto& m : report.methods) {
    methods.push_back({{"method", m.method},
                       {"mIoU", opt(m.miou)},
                       {"AP50", m.ap50},
                       {"Coverage", m.coverage},
                       {"CD", opt(m.cd)},
                       {"videos", m.total_videos},
                       {"filtered_in", m.filtered_in}});
  }
  return {{"methods", std::move(methods)}};
}

namespace {

const char* scale_name(ScaleMode m) {
  return m == ScaleMode::kInvD ? "inv_d" : "inv_sqrt_d";
}

}  // namespace

json config_to_json(const ExperimentConfig& cfg) {
  const auto& p = cfg.pipeline;
  return {{"pipeline",
           {{"num_steps", p.num_steps},
            {"frozen_steps", p.frozen_steps},
            {"seed", p.seed},
            {"mode", to_string(p.mode)},
            {"scale_mode", scale_name(p.scale_mode)},
            {"gain", p.gain},
            {"channels", p.channels},
            {"d_model", p.d_model},
            {"d_text", p.d_text}}},
          {"grid", {{"w", cfg.grid.width}, {"h", cfg.grid.height}}},
          {"ablations",
           {{"cross", p.ablation.cross},
            {"spatial", p.ablation.spatial},
            {"temporal", p.ablation.temporal}}},
          {"dataset", cfg.dataset},
          {"output_dir", cfg.output_dir}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  auto& p = cfg.pipeline;
  try {
    if (j.contains("pipeline")) {
      const auto& jp = j.at("pipeline");
      p.num_steps = jp.value("num_steps", p.num_steps);
      p.frozen_steps = jp.value("frozen_steps", p.frozen_steps);
      p.seed = jp.value("seed", p.seed);
      const auto mode = jp.value("mode", std::string("video"));
      if (mode == "video") {
        p.mode = PipelineMode::kVideo;
      } else if (mode == "image") {
        p.mode = PipelineMode::kImage;
      } else {
        throw FormatError("config: unknown mode '" + mode + "'");
      }
      const auto scale = jp.value("scale_mode", std::string("inv_sqrt_d"));
      if (scale == "inv_sqrt_d") {
        p.scale_mode = ScaleMode::kInvSqrtD;
      } else if (scale == "inv_d") {
        p.scale_mode = ScaleMode::kInvD;
      } else {
        throw FormatError("config: unknown scale_mode '" + scale + "'");
      }
      p.gain = jp.value("gain", p.gain);
      p.channels = jp.value("channels", p.channels);
      p.d_model = jp.value("d_model", p.d_model);
      p.d_text = jp.value("d_text", p.d_text);
    }
    if (j.contains("grid")) {
      cfg.grid.width = j.at("grid").value("w", cfg.grid.width);
      cfg.grid.height = j.at("grid").value("h", cfg.grid.height);
    }
    if (j.contains("ablations")) {
      const auto& a = j.at("ablations");
      p.ablation.cross = a.value("cross", true);
      p.ablation.spatial = a.value("spatial", true);
      p.ablation.temporal = a.value("temporal", true);
    }
    cfg.dataset = j.value("dataset", std::string());
    cfg.output_dir = j.value("output_dir", std::string());
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  return cfg;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace layoutmask::io
