// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

// Python surface of the core library. Images cross the boundary as uint8
// (H, W, 3) RGB numpy arrays and codes as float32 vectors, so the module does
// not depend on torch's Python bindings.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "refbeauty/beautifier.hpp"
#include "refbeauty/data/splits.hpp"
#include "refbeauty/errors.hpp"
#include "refbeauty/generator/layers.hpp"
#include "refbeauty/image.hpp"
#include "refbeauty/trainer/trainer.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;

namespace refbeauty {
namespace {

using U8Image = py::array_t<uint8_t, py::array::c_style | py::array::forcecast>;
using F32Array = py::array_t<float, py::array::c_style | py::array::forcecast>;

torch::Tensor from_numpy_image(const U8Image& img) {
  if (img.ndim() != 3 || img.shape(2) != 3) throw ShapeError("expected a uint8 (H, W, 3) RGB array");
  cv::Mat view(static_cast<int>(img.shape(0)), static_cast<int>(img.shape(1)), CV_8UC3,
               const_cast<uint8_t*>(img.data()));
  return normalize(view);
}

U8Image to_numpy_image(const torch::Tensor& image) {
  const cv::Mat rgb = denormalize(image);
  U8Image out({rgb.rows, rgb.cols, 3});
  for (int r = 0; r < rgb.rows; ++r) {
    std::memcpy(out.mutable_data(r), rgb.ptr(r), static_cast<std::size_t>(rgb.cols) * 3);
  }
  return out;
}

torch::Tensor from_numpy_floats(const F32Array& a) {
  std::vector<int64_t> shape(a.shape(), a.shape() + a.ndim());
  return torch::from_blob(const_cast<float*>(a.data()), shape, torch::kFloat32).clone();
}

F32Array to_numpy_floats(const torch::Tensor& t) {
  auto c = t.detach().to(torch::kFloat32).contiguous();
  std::vector<py::ssize_t> shape(c.sizes().begin(), c.sizes().end());
  F32Array out(shape);
  std::memcpy(out.mutable_data(), c.data_ptr<float>(), static_cast<std::size_t>(c.numel()) * sizeof(float));
  return out;
}

py::object json_to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::dict gain_dict(const GainReport& r) {
  py::dict d;
  d["mean_before"] = r.mean_before;
  d["mean_after"] = r.mean_after;
  d["gain_percent"] = r.gain_percent;
  return d;
}

/// A trained translator, optionally with a perception backbone for scoring.
class Model {
 public:
  Model(const fs::path& checkpoint, const std::optional<fs::path>& backbone)
      : loaded_(load_model(checkpoint, backbone)), beautifier_(loaded_.translator, loaded_.backbone) {}

  py::list beautify(const U8Image& target, const U8Image& reference, std::optional<std::vector<double>> weights,
                    std::optional<int64_t> steps, bool scores) {
    if (weights && steps) throw ValidationError("pass either weights or steps, not both");
    BeautifyRequest request;
    request.target = resize(from_numpy_image(target), loaded_.config.image_size);
    request.reference = resize(from_numpy_image(reference), loaded_.config.image_size);
    request.w2_values = weights ? *weights : linspace_weights(steps.value_or(1));
    request.score_outputs = scores;
    BeautifySequence seq;
    {
      py::gil_scoped_release release;
      seq = beautifier_.beautify(request);
    }
    py::list out;
    for (const auto& f : seq.frames) {
      py::dict d;
      d["w1"] = 1.0 - f.w2;
      d["w2"] = f.w2;
      d["image"] = to_numpy_image(f.image);
      d["score"] = f.score ? py::object(py::float_(*f.score)) : py::none();
      out.append(d);
    }
    return out;
  }

  double score(const U8Image& image) {
    auto t = from_numpy_image(image);
    py::gil_scoped_release release;
    return beautifier_.score(t);
  }

  py::tuple image_size() const { return py::make_tuple(loaded_.config.image_size.height, loaded_.config.image_size.width); }
  int64_t iteration() const { return loaded_.iteration; }
  const std::string& digest() const { return loaded_.digest; }

 private:
  LoadedModel loaded_;
  Beautifier beautifier_;
};

}  // namespace
}  // namespace refbeauty

PYBIND11_MODULE(_core, m) {
  using namespace refbeauty;
  m.doc() = "Reference-guided face beautification";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<ValidationError>(m, "ValidationError", base);
  py::register_exception<ShapeError>(m, "ShapeError", base);
  py::register_exception<NotReadyError>(m, "NotReadyError", base);
  py::register_exception<IoError>(m, "IoError", base);
  py::register_exception<NonFiniteLossError>(m, "NonFiniteLossError", base);

  m.def("adain",
        [](const F32Array& z, const F32Array& gamma, const F32Array& beta) {
          return to_numpy_floats(adain(from_numpy_floats(z), from_numpy_floats(gamma), from_numpy_floats(beta)));
        },
        py::arg("z"), py::arg("gamma"), py::arg("beta"));

  m.def("mix_styles",
        [](const F32Array& a, const F32Array& b, double w1, double w2) {
          return to_numpy_floats(mix_styles({from_numpy_floats(a)}, {from_numpy_floats(b)}, w1, w2).vector);
        },
        py::arg("a"), py::arg("b"), py::arg("w1"), py::arg("w2"));

  m.def("linspace_weights", &linspace_weights, py::arg("steps"));
  m.def("weight_from_percent", &weight_from_percent, py::arg("percent"));
  m.def("gain_from_means", [](double before, double after) { return gain_dict(gain_from_means(before, after)); },
        py::arg("mean_before"), py::arg("mean_after"));
  m.def("gain_from_scores",
        [](const std::vector<double>& before, const std::vector<double>& after) {
          return gain_dict(gain_from_scores(before, after));
        },
        py::arg("before"), py::arg("after"));

  m.def("split_translation",
        [](const fs::path& attributes, const fs::path& out_dir, std::optional<std::set<std::string>> positive,
           const fs::path& image_root) {
          const auto table = data::read_attribute_table(attributes);
          const auto split =
              data::build_translation_split(table, positive ? *positive : data::default_positive_attributes(), image_root);
          fs::create_directories(out_dir);
          split.a.write(out_dir / "domain_a.jsonl");
          split.b.write(out_dir / "domain_b.jsonl");
          return py::make_tuple(split.a.size(), split.b.size());
        },
        py::arg("attributes"), py::arg("out_dir"), py::arg("positive") = py::none(), py::arg("image_root") = fs::path{});

  m.def("split_regression",
        [](const fs::path& scores, const fs::path& out_dir, double fraction, uint64_t seed, const fs::path& image_root) {
          const auto split = data::build_regression_split(data::read_scores(scores, image_root), fraction, seed);
          fs::create_directories(out_dir);
          split.train.write(out_dir / "train.jsonl");
          split.test.write(out_dir / "test.jsonl");
          return py::make_tuple(split.train.size(), split.test.size());
        },
        py::arg("scores"), py::arg("out_dir"), py::arg("fraction") = 0.6, py::arg("seed") = 0,
        py::arg("image_root") = fs::path{});

  m.def("train",
        [](const fs::path& config_path, const std::optional<fs::path>& resume, const std::optional<std::string>& ablate,
           const std::function<bool(py::dict)>& callback) {
          auto config = TrainConfig::load(config_path);
          if (ablate) apply_ablation(config, *ablate);
          IterationCallback cb;
          if (callback) {
            cb = [&](const IterationRecord& r) {
              py::gil_scoped_acquire gil;
              return callback(json_to_python(nlohmann::json(r)).cast<py::dict>());
            };
          }
          TrainingResult result;
          {
            py::gil_scoped_release release;
            result = run_training(config, resume, cb);
          }
          py::dict d;
          d["final_checkpoint"] = result.final_checkpoint;
          d["log_path"] = result.log_path;
          d["iterations_run"] = result.iterations_run;
          d["stopped_early"] = result.stopped_early;
          return d;
        },
        py::arg("config"), py::arg("resume") = py::none(), py::arg("ablate") = py::none(),
        py::arg("callback") = nullptr);

  py::class_<Model>(m, "Model")
      .def(py::init<const fs::path&, const std::optional<fs::path>&>(), py::arg("checkpoint"),
           py::arg("backbone") = py::none())
      .def("beautify", &Model::beautify, py::arg("target"), py::arg("reference"), py::arg("weights") = py::none(),
           py::arg("steps") = py::none(), py::arg("scores") = false)
      .def("score", &Model::score, py::arg("image"))
      .def_property_readonly("image_size", &Model::image_size)
      .def_property_readonly("iteration", &Model::iteration)
      .def_property_readonly("digest", &Model::digest);
}
