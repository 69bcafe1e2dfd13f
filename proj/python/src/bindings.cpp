#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tumorcast/baseline.hpp"
#include "tumorcast/gradcheck.hpp"
#include "tumorcast/metrics.hpp"
#include "tumorcast/motion.hpp"
#include "tumorcast/preprocess.hpp"
#include "tumorcast/synth.hpp"

namespace py = pybind11;
using namespace tumorcast;

namespace {

/// numpy (nz, ny, nx) float32 C-order <-> Volume3D (x-fastest layout).
Volume3D to_volume(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 3) throw std::invalid_argument("expected a 3-D array (nz, ny, nx)");
    Volume3D v = Volume3D::zeros(int(a.shape(2)), int(a.shape(1)), int(a.shape(0)));
    std::copy(a.data(), a.data() + v.voxel_count(), v.data.begin());
    return v;
}

py::array_t<float> to_array(const Volume3D& v) {
    py::array_t<float> a({v.dims[2], v.dims[1], v.dims[0]});
    std::copy(v.data.begin(), v.data.end(), a.mutable_data());
    return a;
}

TumorMask to_mask(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
    TumorMask m{to_volume(a)};
    for (auto& x : m.volume.data) x = x != 0.0f ? 255.0f : 0.0f;
    return m;
}

py::dict metrics_dict(const MetricEntry& e) {
    py::dict d;
    d["recall"] = e.recall;
    d["precision"] = e.precision;
    d["dice"] = e.dice;
    d["rvd"] = e.rvd;
    d["tpv_vox"] = e.tpv_vox;
    d["vpred_vox"] = e.vpred_vox;
    d["vgt_vox"] = e.vgt_vox;
    d["empty_prediction"] = e.empty_prediction;
    return d;
}

}  // namespace

PYBIND11_MODULE(_tumorcast, m) {
    m.doc() = "voxel-wise tumor growth prediction core";
    m.attr("__version__") = "0.1.0";

    m.def("map_suv", [](py::array_t<float, py::array::c_style | py::array::forcecast> suv) {
        return to_array(map_suv(to_volume(suv)));
    }, py::arg("suv"), "Scale SUV into the ConvNet [0,255] range.");

    m.def("compute_icvf",
          [](py::array_t<float, py::array::c_style | py::array::forcecast> ct_post,
             py::array_t<float, py::array::c_style | py::array::forcecast> ct_pre,
             double blood_post, double blood_pre, double hct,
             py::array_t<float, py::array::c_style | py::array::forcecast> mask) {
              return to_array(compute_icvf(to_volume(ct_post), to_volume(ct_pre), blood_post,
                                           blood_pre, hct, to_mask(mask)));
          },
          py::arg("ct_post"), py::arg("ct_pre"), py::arg("blood_post"), py::arg("blood_pre"),
          py::arg("hct"), py::arg("mask"),
          "Intracellular volume fraction (scaled by 100) from dual-phase CT.");

    m.def("build_growth_map",
          [](py::array_t<float, py::array::c_style | py::array::forcecast> m1,
             py::array_t<float, py::array::c_style | py::array::forcecast> m2) {
              return to_array(build_growth_map(to_mask(m1), to_mask(m2)));
          },
          py::arg("mask_t1"), py::arg("mask_t2"),
          "4-level growth map: overlap 255, new growth 170, shrink 85, background 0.");

    m.def("linear_predict",
          [](py::array_t<float, py::array::c_style | py::array::forcecast> m1,
             py::array_t<float, py::array::c_style | py::array::forcecast> m2) {
              return to_array(linear_predict(to_mask(m1), to_mask(m2)).volume);
          },
          py::arg("mask_t1"), py::arg("mask_t2"),
          "Linear radial-growth extrapolation of the t3 mask.");

    m.def("compute_metrics",
          [](py::array_t<float, py::array::c_style | py::array::forcecast> pred,
             py::array_t<float, py::array::c_style | py::array::forcecast> gt) {
              return metrics_dict(compute_metrics(to_mask(pred), to_mask(gt)));
          },
          py::arg("pred"), py::arg("gt"), "Dice/recall/precision/RVD of two binary masks.");

    m.def("generate_phantom",
          [](std::uint32_t seed, double g12, double g23, double noise_std) {
              PhantomParams p;
              p.seed = seed;
              p.g12 = g12;
              p.g23 = g23;
              p.noise_std = noise_std;
              LongitudinalCase c = generate_case(p);
              py::list tps;
              for (const auto& tp : c.timepoints) {
                  py::dict d;
                  d["ct_pre"] = to_array(tp.ct_pre);
                  d["ct_post"] = to_array(tp.ct_post);
                  d["suv"] = to_array(tp.suv);
                  d["mask"] = to_array(tp.mask.volume);
                  d["day"] = tp.acquisition_day;
                  tps.append(d);
              }
              py::dict out;
              out["timepoints"] = tps;
              out["hematocrit"] = c.hematocrit;
              out["blood_hu_pre_mean"] = c.blood_hu_pre_mean;
              out["blood_hu_post_mean"] = c.blood_hu_post_mean;
              return out;
          },
          py::arg("seed") = 1, py::arg("g12") = 1.2, py::arg("g23") = 1.1,
          py::arg("noise_std") = 0.0, "Three-timepoint ellipsoid phantom (64^3 grid).");

    m.def("gradient_check",
          [](double tolerance) {
              GradCheckReport rep = gradient_check(tolerance);
              py::dict errs;
              for (const auto& r : rep.results) errs[py::str(r.name)] = r.max_rel_err;
              return py::make_tuple(rep.pass(), errs);
          },
          py::arg("tolerance") = 1e-3,
          "Finite-difference check of every layer type; returns (pass, {layer: max_rel_err}).");
}
