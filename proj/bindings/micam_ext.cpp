#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include "micam/cam.hpp"
#include "micam/counterfactual.hpp"
#include "micam/eval.hpp"
#include "micam/mi.hpp"
#include "micam/model.hpp"

namespace py = pybind11;
using namespace micam;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Image np_to_image(const DoubleArray& arr) {
    const py::buffer_info info = arr.request();
    if (info.ndim != 2 && info.ndim != 3)
        throw std::invalid_argument("expected an array of shape (H, W) or (H, W, C)");
    const int h = static_cast<int>(info.shape[0]);
    const int w = static_cast<int>(info.shape[1]);
    const int c = info.ndim == 3 ? static_cast<int>(info.shape[2]) : 1;
    Image img(h, w, c, c == 3 ? ColorSpace::Rgb : ColorSpace::Gray);
    const double* data = static_cast<const double*>(info.ptr);
    std::copy(data, data + img.data().size(), img.data().begin());
    return img;
}

py::array_t<double> image_to_np(const Image& img) {
    if (img.channels() == 1) {
        py::array_t<double> out({img.height(), img.width()});
        std::copy(img.data().begin(), img.data().end(), out.mutable_data());
        return out;
    }
    py::array_t<double> out({img.height(), img.width(), img.channels()});
    std::copy(img.data().begin(), img.data().end(), out.mutable_data());
    return out;
}

Plane np_to_plane(const DoubleArray& arr) {
    const py::buffer_info info = arr.request();
    if (info.ndim != 2)
        throw std::invalid_argument("expected a 2-D array");
    Plane p(static_cast<Eigen::Index>(info.shape[0]), static_cast<Eigen::Index>(info.shape[1]));
    const double* data = static_cast<const double*>(info.ptr);
    std::copy(data, data + p.size(), p.data());
    return p;
}

py::array_t<double> plane_to_np(const Plane& p) {
    py::array_t<double> out({static_cast<py::ssize_t>(p.rows()),
                             static_cast<py::ssize_t>(p.cols())});
    std::copy(p.data(), p.data() + p.size(), out.mutable_data());
    return out;
}

py::array_t<double> vector_to_np(const Eigen::VectorXd& v) {
    py::array_t<double> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
    std::copy(v.data(), v.data() + v.size(), out.mutable_data());
    return out;
}

py::array_t<double> stack_to_np(const ActivationStack& stack) {
    py::array_t<double> out({stack.channels(), stack.height(), stack.width()});
    double* data = out.mutable_data();
    const size_t plane_size = static_cast<size_t>(stack.height()) * stack.width();
    for (int k = 0; k < stack.channels(); ++k)
        std::copy(stack.planes[static_cast<size_t>(k)].data(),
                  stack.planes[static_cast<size_t>(k)].data() + plane_size,
                  data + static_cast<size_t>(k) * plane_size);
    return out;
}

SaliencyMap np_to_saliency(const DoubleArray& arr) {
    SaliencyMap s;
    s.plane = np_to_plane(arr);
    return s;
}

BBox tuple_to_box(const std::tuple<int, int, int, int>& box) {
    return BBox{std::get<0>(box), std::get<1>(box), std::get<2>(box), std::get<3>(box)};
}

py::dict explanation_to_dict(const Explanation& ex) {
    py::dict out;
    out["saliency"] = plane_to_np(ex.map.plane);
    out["weights"] = vector_to_np(ex.weights.weights);
    out["scores"] = vector_to_np(ex.scores.values);
    out["class_index"] = ex.class_index;
    out["method"] = method_name(ex.map.method);
    out["layer"] = ex.map.layer;
    return out;
}

py::dict divergence_to_dict(const DivergenceReport& r) {
    py::dict out;
    out["per_channel"] = vector_to_np(r.per_channel);
    out["l1"] = r.l1;
    out["linf"] = r.linf;
    out["relative_l1"] = r.relative_l1;
    return out;
}

PerturbPolicy make_policy(const std::string& kind, double fraction, int patch_w, int patch_h,
                          double fill, uint64_t seed) {
    PerturbPolicy policy;
    if (kind == "occlude-top-salient")
        policy.kind = PerturbKind::OccludeTopSalient;
    else if (kind == "random-patch")
        policy.kind = PerturbKind::RandomPatch;
    else if (kind == "constant-fill")
        policy.kind = PerturbKind::ConstantFill;
    else
        throw std::invalid_argument("unknown perturbation policy: " + kind);
    policy.fraction = fraction;
    policy.patch_w = patch_w;
    policy.patch_h = patch_h;
    policy.fill = fill;
    policy.seed = seed;
    return policy;
}

py::tuple curve_to_tuple(const Curve& c) {
    py::array_t<double> fractions(std::vector<py::ssize_t>{static_cast<py::ssize_t>(c.fractions.size())});
    py::array_t<double> scores(std::vector<py::ssize_t>{static_cast<py::ssize_t>(c.scores.size())});
    std::copy(c.fractions.begin(), c.fractions.end(), fractions.mutable_data());
    std::copy(c.scores.begin(), c.scores.end(), scores.mutable_data());
    return py::make_tuple(fractions, scores);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Gradient-free CNN saliency toolkit: mutual-information CAM with "
              "score-cam and eigen-cam baselines";

    py::class_<ModelHandle>(m, "Model")
        .def(py::init(&ModelHandle::load), py::arg("path"))
        .def_static("from_json", &ModelHandle::from_json_text, py::arg("text"))
        .def_property_readonly("name", &ModelHandle::name)
        .def_property_readonly("num_classes", &ModelHandle::num_classes)
        .def_property_readonly("input_height",
                               [](const ModelHandle& m) { return m.input_spec().height; })
        .def_property_readonly("input_width",
                               [](const ModelHandle& m) { return m.input_spec().width; })
        .def_property_readonly("input_channels",
                               [](const ModelHandle& m) { return m.input_spec().channels; })
        .def("layer_names", &ModelHandle::layer_names)
        .def("conv_layer_names", &ModelHandle::conv_layer_names)
        .def("parameterized_layer_names", &ModelHandle::parameterized_layer_names)
        .def("last_conv_layer", &ModelHandle::last_conv_layer)
        .def("preprocess",
             [](const ModelHandle& m, const DoubleArray& img) {
                 return image_to_np(m.preprocess(np_to_image(img)));
             },
             py::arg("image"))
        .def("forward",
             [](const ModelHandle& m, const DoubleArray& img) {
                 return vector_to_np(m.forward(np_to_image(img)).values);
             },
             py::arg("image"))
        .def("capture",
             [](const ModelHandle& m, const DoubleArray& img, const std::string& layer) {
                 return stack_to_np(m.capture_activations(np_to_image(img), layer));
             },
             py::arg("image"), py::arg("layer"))
        .def("randomize_cascade", &ModelHandle::randomize_cascade, py::arg("from_top"),
             py::arg("seed"))
        .def("parameter_tensor", &ModelHandle::parameter_tensor, py::arg("layer"));

    m.def("grayscale",
          [](const DoubleArray& img) { return plane_to_np(grayscale(np_to_image(img))); },
          py::arg("image"), "Luma gray-scale of a (H, W[, C]) image on the 0..255 scale");

    m.def("upsample",
          [](const DoubleArray& plane, int width, int height) {
              return plane_to_np(upsample(np_to_plane(plane), width, height));
          },
          py::arg("plane"), py::arg("width"), py::arg("height"),
          "Bilinear resample with half-pixel centers");

    m.def("quantize",
          [](const DoubleArray& plane, int bins) {
              const DiscreteVector v = quantize(np_to_plane(plane), bins);
              py::array_t<int> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.symbols.size())});
              std::copy(v.symbols.begin(), v.symbols.end(), out.mutable_data());
              return out;
          },
          py::arg("plane"), py::arg("bins") = 256,
          "Min-max normalize and bin to row-major symbols");

    m.def("entropy",
          [](const std::vector<double>& probs) { return entropy(ProbTable{probs}); },
          py::arg("probs"), "Shannon entropy in bits");

    m.def("mutual_information",
          [](const DoubleArray& a, const DoubleArray& b, int bins) {
              return mutual_information(np_to_plane(a), np_to_plane(b), bins);
          },
          py::arg("a"), py::arg("b"), py::arg("bins") = 256,
          "Histogram mutual information between two equally sized planes, in bits");

    m.def("explain",
          [](const ModelHandle& model, const DoubleArray& img, const std::string& layer,
             const std::string& method, int class_index, int bins) {
              return explanation_to_dict(explain(model, np_to_image(img), layer,
                                                 parse_method(method), class_index, bins));
          },
          py::arg("model"), py::arg("image"), py::arg("layer") = "",
          py::arg("method") = "mi-cam", py::arg("class_index") = -1, py::arg("bins") = 256,
          "Saliency map, channel weights and scores for one image");

    m.def("render_overlay",
          [](const DoubleArray& img, const DoubleArray& saliency, double alpha) {
              return image_to_np(render_overlay(np_to_image(img), np_to_saliency(saliency),
                                                alpha));
          },
          py::arg("image"), py::arg("saliency"), py::arg("alpha") = 0.5);

    m.def("threshold_mask",
          [](const DoubleArray& img, const DoubleArray& saliency, double theta,
             const std::string& mode) {
              if (mode != "keep-above" && mode != "keep-below-muted")
                  throw std::invalid_argument("mode must be keep-above or keep-below-muted");
              return image_to_np(threshold_mask(
                  np_to_image(img), np_to_saliency(saliency), theta,
                  mode == "keep-above" ? MaskMode::KeepAbove : MaskMode::MuteBelow));
          },
          py::arg("image"), py::arg("saliency"), py::arg("theta") = 0.5,
          py::arg("mode") = "keep-below-muted");

    m.def("average_drop",
          [](const std::vector<std::pair<double, double>>& pairs) {
              std::vector<EvalRecord> records;
              records.reserve(pairs.size());
              for (const auto& [y, o] : pairs)
                  records.push_back(EvalRecord{"", 0, y, o, 0.0});
              return average_drop(records);
          },
          py::arg("pairs"), "Average drop over (original, masked) score pairs, in percent");

    m.def("average_increase",
          [](const std::vector<std::pair<double, double>>& pairs) {
              std::vector<EvalRecord> records;
              records.reserve(pairs.size());
              for (const auto& [o, b] : pairs)
                  records.push_back(EvalRecord{"", 0, 1.0, o, b});
              return average_increase(records);
          },
          py::arg("pairs"), "Average increase over (masked, baseline) score pairs, in percent");

    m.def("deletion_curve",
          [](const ModelHandle& model, const DoubleArray& img, const DoubleArray& saliency,
             int class_index, double step, int steps) {
              return curve_to_tuple(deletion_curve(model, np_to_image(img),
                                                   np_to_saliency(saliency), class_index, step,
                                                   steps));
          },
          py::arg("model"), py::arg("image"), py::arg("saliency"), py::arg("class_index"),
          py::arg("step") = 0.01, py::arg("steps") = 100);

    m.def("insertion_curve",
          [](const ModelHandle& model, const DoubleArray& img, const DoubleArray& saliency,
             int class_index, double step, int steps, const std::string& order) {
              return curve_to_tuple(insertion_curve(
                  model, np_to_image(img), np_to_saliency(saliency), class_index, step, steps,
                  order == "descending" ? RankOrder::Descending : RankOrder::Ascending));
          },
          py::arg("model"), py::arg("image"), py::arg("saliency"), py::arg("class_index"),
          py::arg("step") = 0.01, py::arg("steps") = 100, py::arg("order") = "ascending");

    m.def("auc",
          [](const std::vector<double>& fractions, const std::vector<double>& scores) {
              return auc(Curve{fractions, scores});
          },
          py::arg("fractions"), py::arg("scores"), "Trapezoidal area under a curve");

    m.def("pointing_game",
          [](const DoubleArray& saliency, const std::tuple<int, int, int, int>& box) {
              return pointing_game(np_to_saliency(saliency), tuple_to_box(box));
          },
          py::arg("saliency"), py::arg("box"),
          "True when the saliency argmax lies inside the (x, y, w, h) box");

    m.def("ebpg",
          [](const DoubleArray& saliency, const std::tuple<int, int, int, int>& box) {
              return ebpg(np_to_saliency(saliency), tuple_to_box(box));
          },
          py::arg("saliency"), py::arg("box"),
          "Percentage of saliency energy inside the (x, y, w, h) box");

    m.def("spearman",
          [](const std::vector<double>& a, const std::vector<double>& b) {
              return spearman_rank_correlation(a, b);
          },
          py::arg("a"), py::arg("b"), "Spearman rank correlation with average ties");

    m.def("perturb",
          [](const DoubleArray& img, const py::object& saliency, const std::string& kind,
             double fraction, int patch_w, int patch_h, double fill, uint64_t seed) {
              const PerturbPolicy policy =
                  make_policy(kind, fraction, patch_w, patch_h, fill, seed);
              if (saliency.is_none())
                  return image_to_np(perturb(np_to_image(img), nullptr, policy));
              const SaliencyMap s = np_to_saliency(saliency.cast<DoubleArray>());
              return image_to_np(perturb(np_to_image(img), &s, policy));
          },
          py::arg("image"), py::arg("saliency") = py::none(),
          py::arg("kind") = "occlude-top-salient", py::arg("fraction") = 0.5,
          py::arg("patch_w") = 0, py::arg("patch_h") = 0, py::arg("fill") = 0.0,
          py::arg("seed") = 0);

    m.def("weight_divergence",
          [](const DoubleArray& w, const DoubleArray& w_cf) {
              WeightVector a, b;
              const py::buffer_info wi = w.request(), ci = w_cf.request();
              a.weights = Eigen::Map<const Eigen::VectorXd>(
                  static_cast<const double*>(wi.ptr), wi.size);
              b.weights = Eigen::Map<const Eigen::VectorXd>(
                  static_cast<const double*>(ci.ptr), ci.size);
              return divergence_to_dict(weight_divergence(a, b));
          },
          py::arg("weights"), py::arg("weights_counterfactual"));

    m.def("counterfactual_run",
          [](const ModelHandle& model, const DoubleArray& img, const std::string& layer,
             const std::vector<std::string>& methods, const std::string& kind, double fraction,
             int patch_w, int patch_h, double fill, uint64_t seed, int class_index, int bins) {
              std::vector<Method> parsed;
              for (const std::string& name : methods)
                  parsed.push_back(parse_method(name));
              const PerturbPolicy policy =
                  make_policy(kind, fraction, patch_w, patch_h, fill, seed);
              const auto results = counterfactual_run(model, np_to_image(img), layer, policy,
                                                      parsed, class_index, bins);
              py::list out;
              for (const CounterfactualResult& r : results) {
                  py::dict entry;
                  entry["method"] = method_name(r.method);
                  entry["weights_original"] = vector_to_np(r.original.weights);
                  entry["weights_counterfactual"] = vector_to_np(r.counterfactual.weights);
                  entry["divergence"] = divergence_to_dict(r.divergence);
                  out.append(entry);
              }
              return out;
          },
          py::arg("model"), py::arg("image"), py::arg("layer") = "",
          py::arg("methods") = std::vector<std::string>{"mi-cam", "score-cam", "eigen-cam"},
          py::arg("kind") = "occlude-top-salient", py::arg("fraction") = 0.5,
          py::arg("patch_w") = 0, py::arg("patch_h") = 0, py::arg("fill") = 0.0,
          py::arg("seed") = 0, py::arg("class_index") = -1, py::arg("bins") = 256);

#ifdef MICAM_VERSION
    m.attr("__version__") = MICAM_VERSION;
#else
    m.attr("__version__") = "dev";
#endif
}
