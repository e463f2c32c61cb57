#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <string>

#include "layoutmask/commands.hpp"

namespace py = pybind11;
using namespace layoutmask;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

std::vector<std::uint8_t> to_bits(const U8Array& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-d indicator array");
  return {a.data(), a.data() + a.size()};
}

py::array_t<std::uint8_t> to_array(const BinaryMatrix& m) {
  py::array_t<std::uint8_t> out({m.rows(), m.cols()});
  if (m.size() > 0) std::memcpy(out.mutable_data(), m.data().data(), m.size());
  return out;
}

BinaryMatrix from_array(const U8Array& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d mask array");
  BinaryMatrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  if (m.size() > 0) std::memcpy(m.data().data(), a.data(), m.size());
  if (!m.is_binary()) throw std::invalid_argument("mask entries must be 0 or 1");
  return m;
}

py::array_t<std::uint8_t> mask_set_array(const FrameMaskSet& masks) {
  py::array_t<std::uint8_t> out(
      {static_cast<std::size_t>(masks.num_frames()), masks.num_latents()});
  auto* dst = out.mutable_data();
  for (int f = 0; f < masks.num_frames(); ++f) {
    const auto frame = masks.frame(f);
    std::memcpy(dst + static_cast<std::size_t>(f) * masks.num_latents(), frame.data(),
                frame.size());
  }
  return out;
}

py::array_t<double> latent_array(const LatentVideo& z) {
  py::array_t<double> out({static_cast<std::size_t>(z.frames()), z.latents(),
                           static_cast<std::size_t>(z.channels())});
  if (!z.data().empty())
    std::memcpy(out.mutable_data(), z.data().data(), z.data().size() * sizeof(double));
  return out;
}

MaskFamily parse_family(const std::string& name) {
  for (auto f : {MaskFamily::kCross, MaskFamily::kSpatial, MaskFamily::kTemporal})
    if (name == family_name(f)) return f;
  throw std::invalid_argument("unknown mask family '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_layoutmask, m) {
  m.doc() = "Bounding-box guided masked attention for training-free video layout control";

  py::register_exception<io::FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<io::ValidationError>(m, "ValidationError", PyExc_ValueError);

  py::class_<Canvas>(m, "Canvas")
      .def(py::init([](int w, int h, int f) {
             Canvas c{w, h, f};
             c.validate();
             return c;
           }),
           py::arg("width"), py::arg("height"), py::arg("num_frames"))
      .def_readonly("width", &Canvas::width)
      .def_readonly("height", &Canvas::height)
      .def_readonly("num_frames", &Canvas::num_frames)
      .def(py::self == py::self)
      .def("__repr__", [](const Canvas& c) {
        return "Canvas(" + std::to_string(c.width) + ", " + std::to_string(c.height) + ", " +
               std::to_string(c.num_frames) + ")";
      });

  py::class_<BBox>(m, "BBox")
      .def(py::init([](int x0, int y0, int x1, int y1) { return BBox{x0, y0, x1, y1}; }),
           py::arg("x0"), py::arg("y0"), py::arg("x1"), py::arg("y1"))
      .def_readonly("x0", &BBox::x0)
      .def_readonly("y0", &BBox::y0)
      .def_readonly("x1", &BBox::x1)
      .def_readonly("y1", &BBox::y1)
      .def("area", &BBox::area)
      .def("as_tuple", [](const BBox& b) { return py::make_tuple(b.x0, b.y0, b.x1, b.y1); })
      .def(py::self == py::self)
      .def("__repr__", [](const BBox& b) {
        return "BBox(" + std::to_string(b.x0) + ", " + std::to_string(b.y0) + ", " +
               std::to_string(b.x1) + ", " + std::to_string(b.y1) + ")";
      });

  py::class_<LatentGrid>(m, "LatentGrid")
      .def(py::init([](int w, int h) { return LatentGrid{w, h}; }), py::arg("width"),
           py::arg("height"))
      .def_readonly("width", &LatentGrid::width)
      .def_readonly("height", &LatentGrid::height)
      .def("num_latents", &LatentGrid::num_latents);

  py::class_<BBoxTrajectory>(m, "Trajectory")
      .def(py::init([](const Canvas& c, std::vector<std::optional<BBox>> boxes) {
             BBoxTrajectory t{c, std::move(boxes)};
             t.validate();
             return t;
           }),
           py::arg("canvas"), py::arg("boxes"))
      .def_readonly("canvas", &BBoxTrajectory::canvas)
      .def_readonly("boxes", &BBoxTrajectory::boxes);

  m.def("interpolate_trajectory", &interpolate_trajectory, py::arg("key_boxes"),
        py::arg("canvas"));
  m.def("rasterize",
        [](const BBoxTrajectory& t, const LatentGrid& g) { return mask_set_array(rasterize(t, g)); },
        py::arg("trajectory"), py::arg("grid"),
        "Per-frame foreground indicators, shape (frames, latents).");

  m.def("tokenize_prompt", &tokenize_prompt, py::arg("prompt"));
  m.def("label_tokens",
        [](const std::string& p, const std::string& fg) { return label_tokens(p, fg).labels; },
        py::arg("prompt"), py::arg("fg_phrase"));
  m.def("cross_mask",
        [](const U8Array& frame_fg, const U8Array& token_fg) {
          const auto labels = TokenLabels{to_bits(token_fg)};
          labels.validate();
          return to_array(build_cross_mask(to_bits(frame_fg), labels));
        },
        py::arg("frame_fg"), py::arg("token_fg"));
  m.def("spatial_mask",
        [](const U8Array& frame_fg) { return to_array(build_spatial_mask(to_bits(frame_fg))); },
        py::arg("frame_fg"));
  m.def("temporal_mask",
        [](const U8Array& pixel_fg) { return to_array(build_temporal_mask(to_bits(pixel_fg))); },
        py::arg("pixel_fg"));

  m.def("masked_attention",
        [](const Matrix& q, const Matrix& k, const Matrix& v, const U8Array& mask,
           std::optional<double> scale) {
          AttentionInputs in{q, k, v,
                             scale ? *scale
                                   : attention_scale(ScaleMode::kInvSqrtD,
                                                     static_cast<std::size_t>(q.cols()))};
          auto res = masked_attention(in, from_array(mask));
          return py::make_tuple(std::move(res.output), std::move(res.weights),
                                std::move(res.fallback_rows));
        },
        py::arg("q"), py::arg("k"), py::arg("v"), py::arg("mask"), py::arg("scale") = py::none(),
        "Returns (output, weights, fallback_rows). The default scale is 1/sqrt(d).");
  m.def("masked_mass",
        [](const Matrix& w, const U8Array& ref, std::vector<std::size_t> skip) {
          return masked_mass(w, from_array(ref), skip);
        },
        py::arg("weights"), py::arg("reference"), py::arg("skip_rows") = std::vector<std::size_t>{});

  m.def("encode_pkbm",
        [](const std::string& family, const std::vector<U8Array>& mats) {
          std::vector<BinaryMatrix> ms;
          for (const auto& a : mats) ms.push_back(from_array(a));
          return py::bytes(io::encode_pkbm(parse_family(family), ms));
        },
        py::arg("family"), py::arg("matrices"));
  m.def("decode_pkbm",
        [](const py::bytes& data) {
          const auto file = io::decode_pkbm(std::string(data));
          py::list mats;
          for (const auto& mat : file.matrices) mats.append(to_array(mat));
          return py::make_tuple(std::string(family_name(file.family)), mats);
        },
        py::arg("data"), "Returns (family, list of matrices).");
  m.def("decode_pkbl",
        [](const py::bytes& data) { return latent_array(io::decode_pkbl(std::string(data))); },
        py::arg("data"));

  m.def("_run",
        [](const BBoxTrajectory& t, const LatentGrid& grid, const std::string& prompt,
           const std::string& fg_phrase, int num_steps, int frozen_steps, std::uint64_t seed,
           const std::string& mode, bool cross, bool spatial, bool temporal) {
          PipelineConfig cfg;
          cfg.num_steps = num_steps;
          cfg.frozen_steps = frozen_steps;
          cfg.seed = seed;
          if (mode == "image") {
            cfg.mode = PipelineMode::kImage;
          } else if (mode != "video") {
            throw std::invalid_argument("mode must be 'video' or 'image'");
          }
          cfg.ablation = {cross, spatial, temporal};
          cfg.validate();
          const auto spec = make_prompt(prompt, fg_phrase, cfg.d_text, seed);
          RunResult res;
          {
            py::gil_scoped_release release;
            res = run(t, grid, spec, cfg);
          }
          const auto masks = rasterize(t, grid);
          auto report = io::run_report_to_json(res.report);
          report["final_localization"] = res.report.final_localization(masks);
          report["masked_localization"] = res.report.masked_phase_localization(masks);
          return py::make_tuple(latent_array(res.latent), report.dump());
        });

  m.def("_evaluate",
        [](const std::vector<BBoxTrajectory>& gts,
           const std::vector<std::vector<std::optional<BBox>>>& dets, const std::string& norm) {
          if (gts.size() != dets.size())
            throw std::invalid_argument("need one detection track per ground-truth video");
          metrics::CentroidNorm n = metrics::CentroidNorm::kDiagonal;
          if (norm == "long_side") {
            n = metrics::CentroidNorm::kLongSide;
          } else if (norm != "diagonal") {
            throw std::invalid_argument("norm must be 'diagonal' or 'long_side'");
          }
          std::vector<metrics::EvalRecord> records;
          for (std::size_t i = 0; i < gts.size(); ++i) {
            metrics::DetectionTrack track(dets[i].size());
            track.boxes = dets[i];
            records.push_back(metrics::make_record(std::to_string(i), gts[i], track, n));
          }
          auto report = metrics::build_suite_report({{"method", std::move(records)}});
          return io::suite_report_to_json(report).dump();
        });
  m.def("iou", &metrics::iou, py::arg("a"), py::arg("b"));

  m.def("_generate_imc", [](const Canvas& c, std::uint64_t seed, int jitter) {
    py::list out;
    for (const auto& it : imc::generate_dataset(c, seed, jitter)) {
      py::dict d;
      d["prompt_index"] = it.prompt_index;
      d["variant"] = it.variant;
      d["prompt"] = it.entry.text;
      d["subject"] = it.entry.subject;
      d["motion"] = imc::to_string(it.entry.motion);
      d["direction"] = imc::to_string(it.entry.direction);
      d["aspect"] = imc::to_string(it.entry.aspect);
      d["trajectory"] = it.sample.trajectory;
      d["size_fraction"] = it.sample.params.size_fraction;
      d["speed"] = it.sample.params.speed;
      d["start_centroid"] = it.sample.params.start_centroid;
      d["flip"] = it.sample.params.flip;
      out.append(std::move(d));
    }
    return out;
  });
  m.attr("IMC_DEFAULT_SEED") = imc::kDefaultSeed;
  m.attr("IMC_DEFAULT_FRAMES") = imc::kDefaultFrames;

  m.def("read_trajectory", [](const std::string& path) {
    const auto doc = io::read_trajectory(path);
    return py::make_tuple(doc.prompt, doc.fg_phrase, doc.trajectory);
  }, py::arg("path"), "Returns (prompt, fg_phrase, trajectory).");
  m.def("sha256_hex", [](const py::bytes& b) { return io::sha256_hex(std::string(b)); });
}
