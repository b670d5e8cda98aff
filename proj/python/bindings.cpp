#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "mason/array_io.hpp"
#include "mason/gmm.hpp"
#include "mason/grabcut.hpp"
#include "mason/maxflow.hpp"
#include "mason/metrics.hpp"
#include "mason/objectness.hpp"
#include "mason/pipeline.hpp"
#include "mason/regions.hpp"

namespace py = pybind11;
using namespace mason;

namespace {

template <class T>
using CArray = py::array_t<T, py::array::c_style | py::array::forcecast>;

using BoxTuple = std::tuple<int, int, int, int>;

void require_ndim(const py::array& a, py::ssize_t ndim, const char* what) {
  if (a.ndim() != ndim) {
    throw Error(ErrorCode::DimMismatch, std::string(what) + " must have " + std::to_string(ndim) + " dimensions");
  }
}

template <class G>
G grid_from(const CArray<typename G::value_type>& a, const char* what) {
  require_ndim(a, 2, what);
  const auto* p = a.data();
  return G(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
           std::vector<typename G::value_type>(p, p + a.size()));
}

template <class G>
py::array_t<typename G::value_type> grid_to(const G& g) {
  py::array_t<typename G::value_type> out({g.height(), g.width()});
  std::memcpy(out.mutable_data(), g.values().data(), g.size() * sizeof(typename G::value_type));
  return out;
}

RasterImage image_from(const CArray<std::uint8_t>& a) {
  require_ndim(a, 3, "image");
  if (a.shape(2) != 3) throw Error(ErrorCode::DimMismatch, "image must have 3 color channels");
  RasterImage img(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::memcpy(img.values().data(), a.data(), img.size() * 3);
  return img;
}

FeatureMapStack stack_from(const CArray<float>& a, const std::string& layer, const std::string& source) {
  require_ndim(a, 3, "feature stack");
  const auto* p = a.data();
  FeatureMapStack s(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)),
                    std::vector<float>(p, p + a.size()), layer, source);
  s.validate();
  return s;
}

BoundingBox box_from(const BoxTuple& t) {
  return {std::get<0>(t), std::get<1>(t), std::get<2>(t), std::get<3>(t)};
}

BoxTuple box_to(const BoundingBox& b) { return {b.x0, b.y0, b.x1, b.y1}; }

std::vector<BoundingBox> boxes_from(const std::vector<BoxTuple>& v) {
  std::vector<BoundingBox> out;
  out.reserve(v.size());
  for (const auto& t : v) out.push_back(box_from(t));
  return out;
}

GrabCutParams params_of(int components, double gamma, int max_iters, double energy_epsilon, std::uint64_t seed) {
  GrabCutParams p;
  p.components = components;
  p.gamma = gamma;
  p.max_iters = max_iters;
  p.energy_epsilon = energy_epsilon;
  p.rng_seed = seed;
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "C++ core of the mason objectness and localization toolkit";

  // Raised as instances with a `code` attribute naming the error.
  static py::handle mason_error = py::exception<Error>(m, "MasonError", PyExc_ValueError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = mason_error(e.what());
      err.attr("code") = std::string(error_name(e.code()));
      PyErr_SetObject(mason_error.ptr(), err.ptr());
    }
  });

  m.def(
      "read_feature_stack",
      [](const std::filesystem::path& path) {
        const FeatureMapStack s = read_feature_stack(path);
        py::array_t<float> a({s.channels, s.height, s.width});
        std::memcpy(a.mutable_data(), s.data.data(), s.data.size() * sizeof(float));
        py::dict meta;
        meta["layer_name"] = s.layer_name;
        meta["source_image"] = s.source_image;
        return py::make_tuple(a, meta);
      },
      py::arg("path"), "Load a (C, H, W) float32 stack and its metadata.");

  m.def(
      "write_feature_stack",
      [](const CArray<float>& a, const std::filesystem::path& path, const std::string& layer_name,
         const std::string& source_image) { write_feature_stack(stack_from(a, layer_name, source_image), path); },
      py::arg("array"), py::arg("path"), py::arg("layer_name") = "unknown", py::arg("source_image") = "");

  m.def(
      "sum_activations", [](const CArray<float>& a) { return grid_to(sum_activations(stack_from(a, "unknown", ""))); },
      py::arg("stack"));
  m.def(
      "normalize", [](const CArray<double>& raw) { return grid_to(normalize(grid_from<RawMap>(raw, "map"))); },
      py::arg("raw"));
  m.def(
      "bicubic_upscale",
      [](const CArray<double>& map, int height, int width) {
        return grid_to(bicubic_upscale(grid_from<Heatmap>(map, "heatmap"), height, width));
      },
      py::arg("heatmap"), py::arg("height"), py::arg("width"));
  m.def(
      "objectness",
      [](const CArray<float>& a, int height, int width) {
        return grid_to(objectness(stack_from(a, "unknown", ""), height, width));
      },
      py::arg("stack"), py::arg("height"), py::arg("width"));
  m.def(
      "stratify", [](const CArray<double>& map) { return grid_to(stratify(grid_from<Heatmap>(map, "heatmap"))); },
      py::arg("heatmap"));

  m.def(
      "grabcut",
      [](const CArray<std::uint8_t>& image, const CArray<std::uint8_t>& trimap, int components, double gamma,
         int max_iters, double energy_epsilon, std::uint64_t seed) {
        const GrabCutTrace t = grabcut_traced(image_from(image), grid_from<Trimap>(trimap, "trimap"),
                                              params_of(components, gamma, max_iters, energy_epsilon, seed));
        return py::make_tuple(grid_to(t.mask), t.energy);
      },
      py::arg("image"), py::arg("trimap"), py::arg("components") = 5, py::arg("gamma") = 50.0,
      py::arg("max_iters") = 5, py::arg("energy_epsilon") = 1e-3, py::arg("seed") = 42,
      "Segment an (H, W, 3) uint8 image from a trimap. Returns (mask, energy per iteration).");
  m.def(
      "localize",
      [](const CArray<std::uint8_t>& image, const CArray<float>& stack, int components, double gamma, int max_iters,
         double energy_epsilon, std::uint64_t seed) {
        return grid_to(localize(image_from(image), stack_from(stack, "unknown", ""),
                                params_of(components, gamma, max_iters, energy_epsilon, seed)));
      },
      py::arg("image"), py::arg("stack"), py::arg("components") = 5, py::arg("gamma") = 50.0,
      py::arg("max_iters") = 5, py::arg("energy_epsilon") = 1e-3, py::arg("seed") = 42);

  m.def(
      "fit_gmm",
      [](const CArray<double>& samples, int components, std::uint64_t seed) {
        require_ndim(samples, 2, "samples");
        if (samples.shape(1) != 3) throw Error(ErrorCode::DimMismatch, "samples must have 3 columns");
        std::vector<Color> xs(static_cast<std::size_t>(samples.shape(0)));
        auto r = samples.unchecked<2>();
        for (py::ssize_t i = 0; i < r.shape(0); ++i) xs[i] = Color(r(i, 0), r(i, 1), r(i, 2));
        const GmmFit fit = fit_gmm_traced(xs, components, seed);
        const auto k = static_cast<py::ssize_t>(fit.model.size());
        py::array_t<double> weights(k);
        py::array_t<double> means({k, py::ssize_t{3}});
        py::array_t<double> covs({k, py::ssize_t{3}, py::ssize_t{3}});
        auto w = weights.mutable_unchecked<1>();
        auto mu = means.mutable_unchecked<2>();
        auto cv = covs.mutable_unchecked<3>();
        for (py::ssize_t j = 0; j < k; ++j) {
          const auto& c = fit.model.component(static_cast<std::size_t>(j));
          w(j) = c.weight;
          for (int a = 0; a < 3; ++a) {
            mu(j, a) = c.mean(a);
            for (int b = 0; b < 3; ++b) cv(j, a, b) = c.covariance(a, b);
          }
        }
        py::dict out;
        out["weights"] = weights;
        out["means"] = means;
        out["covariances"] = covs;
        out["log_likelihood"] = fit.log_likelihood;
        out["converged"] = fit.converged;
        return out;
      },
      py::arg("samples"), py::arg("components"), py::arg("seed") = 0);

  m.def(
      "max_flow",
      [](int nodes, int source, int sink, const std::vector<std::tuple<int, int, double>>& arcs) {
        FlowNetwork net(nodes, source, sink);
        for (const auto& [u, v, c] : arcs) net.add_arc(u, v, c);
        const CutResult r = max_flow_min_cut(net);
        return py::make_tuple(r.flow_value, std::vector<bool>(r.source_side.begin(), r.source_side.end()));
      },
      py::arg("nodes"), py::arg("source"), py::arg("sink"), py::arg("arcs"),
      "Returns (flow value, per-node source-side flags).");

  m.def(
      "box_iou", [](const BoxTuple& a, const BoxTuple& b) { return box_iou(box_from(a), box_from(b)); },
      py::arg("a"), py::arg("b"));
  m.def(
      "mask_iou",
      [](const CArray<std::uint8_t>& a, const CArray<std::uint8_t>& b) {
        return mask_iou(grid_from<Mask>(a, "mask"), grid_from<Mask>(b, "mask"));
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "mean_iou",
      [](const std::vector<std::pair<CArray<std::uint8_t>, CArray<std::uint8_t>>>& pairs) {
        std::vector<std::pair<Mask, Mask>> masks;
        for (const auto& [a, b] : pairs) masks.emplace_back(grid_from<Mask>(a, "mask"), grid_from<Mask>(b, "mask"));
        return mean_iou(masks);
      },
      py::arg("pairs"));
  m.def(
      "recall_at",
      [](const std::vector<BoxTuple>& proposals, const std::vector<BoxTuple>& truth, double threshold) {
        return recall_at(boxes_from(proposals), boxes_from(truth), threshold);
      },
      py::arg("proposals"), py::arg("ground_truth"), py::arg("iou_threshold"));

  m.def(
      "generate_proposals",
      [](const CArray<double>& map, const std::vector<double>& scales) {
        std::vector<BoxTuple> out;
        for (const auto& b : generate_proposals(grid_from<Heatmap>(map, "heatmap"), scales)) out.push_back(box_to(b));
        return out;
      },
      py::arg("heatmap"),
      py::arg("scales") = std::vector<double>(std::begin(kDefaultProposalScales), std::end(kDefaultProposalScales)));
  m.def(
      "largest_region_bbox",
      [](const CArray<double>& map) -> std::optional<BoxTuple> {
        const auto b = largest_region_bbox(grid_from<Heatmap>(map, "heatmap"));
        if (!b) return std::nullopt;
        return box_to(*b);
      },
      py::arg("heatmap"));
}
