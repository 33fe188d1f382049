// Python bindings for the main operations: density conversion, ray
// sampling and compositing, regularization losses, analytic SDFs, camera
// rays, rendering, marching cubes, and the consistency metrics.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sdfvr/analytic_sdf.hpp"
#include "sdfvr/camera.hpp"
#include "sdfvr/consistency.hpp"
#include "sdfvr/density.hpp"
#include "sdfvr/field.hpp"
#include "sdfvr/geometry.hpp"
#include "sdfvr/losses.hpp"
#include "sdfvr/render.hpp"
#include "sdfvr/rng.hpp"

namespace py = pybind11;
using namespace sdfvr;

namespace {

py::dict buffers_to_dict(const RenderBuffers& buf) {
    const int w = buf.width, h = buf.height;
    py::array_t<double> color({h, w, 3});
    py::array_t<double> depth({h, w});
    py::array_t<double> opacity({h, w});
    py::array_t<bool> valid({h, w});
    std::copy(buf.color.begin(), buf.color.end(), color.mutable_data());
    std::copy(buf.depth.begin(), buf.depth.end(), depth.mutable_data());
    std::copy(buf.opacity.begin(), buf.opacity.end(), opacity.mutable_data());
    for (std::size_t i = 0; i < buf.pixels(); ++i) valid.mutable_data()[i] = buf.valid[i] != 0;
    py::dict out;
    out["color"] = color;
    out["depth"] = depth;
    out["opacity"] = opacity;
    out["valid"] = valid;
    if (buf.feature_width > 0) {
        py::array_t<double> feature({h, w, buf.feature_width});
        std::copy(buf.feature.begin(), buf.feature.end(), feature.mutable_data());
        out["feature"] = feature;
    }
    return out;
}

std::vector<Vec3> to_points(const py::array_t<double, py::array::c_style>& arr) {
    if (arr.ndim() != 2 || arr.shape(1) != 3)
        throw std::invalid_argument("expected an (n, 3) array");
    std::vector<Vec3> pts(static_cast<std::size_t>(arr.shape(0)));
    for (py::ssize_t i = 0; i < arr.shape(0); ++i)
        pts[static_cast<std::size_t>(i)] = Vec3(arr.at(i, 0), arr.at(i, 1), arr.at(i, 2));
    return pts;
}

py::tuple mesh_to_tuple(const TriMesh& mesh) {
    py::array_t<double> v({static_cast<py::ssize_t>(mesh.vertices.size()), py::ssize_t(3)});
    py::array_t<int> f({static_cast<py::ssize_t>(mesh.faces.size()), py::ssize_t(3)});
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
        for (int k = 0; k < 3; ++k)
            v.mutable_at(static_cast<py::ssize_t>(i), k) = mesh.vertices[i](k);
    for (std::size_t i = 0; i < mesh.faces.size(); ++i)
        for (int k = 0; k < 3; ++k)
            f.mutable_at(static_cast<py::ssize_t>(i), k) = mesh.faces[i][k];
    return py::make_tuple(v, f);
}

}  // namespace

PYBIND11_MODULE(_sdfvr, m) {
    m.doc() = "SDF volume rendering and view-consistency toolkit";

    m.def(
        "sdf_to_density",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> d, double alpha) {
            const DensityParams params{alpha};
            py::array_t<double> out(std::vector<py::ssize_t>(d.shape(), d.shape() + d.ndim()));
            const double* src = d.data();
            double* dst = out.mutable_data();
            for (py::ssize_t i = 0; i < d.size(); ++i) dst[i] = sdf_to_density(src[i], params);
            return out;
        },
        py::arg("d"), py::arg("alpha"),
        "sigma = (1/alpha) * sigmoid(-d/alpha), elementwise");

    m.def(
        "ray_samples",
        [](double t_near, double t_far, int n, double delta) {
            return Vector(RaySamples::with_offset(t_near, t_far, n, delta).t);
        },
        py::arg("t_near"), py::arg("t_far"), py::arg("n"), py::arg("delta"),
        "evenly spaced sample distances sharing one offset");

    m.def(
        "sample_ray",
        [](double t_near, double t_far, int n, std::uint64_t seed) {
            Rng rng(seed);
            return Vector(sample_ray(t_near, t_far, n, rng).t);
        },
        py::arg("t_near"), py::arg("t_far"), py::arg("n"), py::arg("seed") = 0);

    m.def(
        "composite",
        [](double t_near, double t_far, double delta, const Vector& densities,
           const Matrix& values) {
            const RaySamples s = RaySamples::with_offset(
                t_near, t_far, static_cast<int>(densities.size()), delta);
            auto [integrated, w] = composite(s, densities, values);
            const auto [depth, valid] = expected_depth(s, w);
            py::dict out;
            out["integrated"] = integrated;
            out["weights"] = Vector(w.weight);
            out["transmittance"] = Vector(w.transmittance);
            out["opacity"] = w.opacity;
            out["depth"] = depth;
            out["depth_valid"] = valid;
            return out;
        },
        py::arg("t_near"), py::arg("t_far"), py::arg("delta"), py::arg("densities"),
        py::arg("values"),
        "discrete quadrature; values columns are per-sample vectors");

    m.def("smoothed_l1", &smoothed_l1, py::arg("predicted"), py::arg("truth"));
    m.def("eikonal_loss", &eikonal_loss, py::arg("gradients"),
          "mean (|g|-1)^2 over columns of a 3 x B matrix");
    m.def("minimal_surface_loss", &minimal_surface_loss, py::arg("sdf_values"),
          py::arg("scale") = 100.0);
    m.def(
        "total_volume_loss",
        [](double adv, double view, double eik, double surf, double lambda_view,
           double lambda_eik, double lambda_surf) {
            const LossBreakdown b =
                total_volume_loss(adv, view, eik, surf, {lambda_view, lambda_eik, lambda_surf});
            py::dict out;
            out["adv"] = b.adv;
            out["view"] = b.view;
            out["eikonal"] = b.eikonal;
            out["surface"] = b.surface;
            out["total"] = b.total;
            return out;
        },
        py::arg("adv"), py::arg("view"), py::arg("eikonal"), py::arg("surface"),
        py::arg("lambda_view") = 15.0, py::arg("lambda_eik") = 0.1,
        py::arg("lambda_surf") = 0.05);

    py::class_<AnalyticSdf>(m, "AnalyticSdf")
        .def_static("sphere", &AnalyticSdf::sphere, py::arg("center"), py::arg("radius"))
        .def_static("box", &AnalyticSdf::box, py::arg("center"), py::arg("half_extents"))
        .def_static("torus", &AnalyticSdf::torus, py::arg("center"), py::arg("ring_radius"),
                    py::arg("tube_radius"))
        .def("eval", &AnalyticSdf::eval, py::arg("x"))
        .def("gradient", &AnalyticSdf::gradient, py::arg("x"))
        .def(
            "eval_many",
            [](const AnalyticSdf& s, const py::array_t<double, py::array::c_style>& pts) {
                const auto points = to_points(pts);
                py::array_t<double> out(static_cast<py::ssize_t>(points.size()));
                for (std::size_t i = 0; i < points.size(); ++i)
                    out.mutable_data()[i] = s.eval(points[i]);
                return out;
            },
            py::arg("points"));

    py::class_<CameraPose>(m, "CameraPose")
        .def(py::init([](double azimuth, double elevation, double fov_deg, double near,
                         double far, int width, int height) {
                 return camera_from_angles(azimuth, elevation, fov_deg, near, far, width, height);
             }),
             py::arg("azimuth"), py::arg("elevation"), py::arg("fov_deg") = 12.0,
             py::arg("near") = 0.88, py::arg("far") = 1.12, py::arg("width") = 64,
             py::arg("height") = 64)
        .def_readonly("azimuth", &CameraPose::azimuth)
        .def_readonly("elevation", &CameraPose::elevation)
        .def_property_readonly("center", &CameraPose::center)
        .def_property_readonly("forward", &CameraPose::forward)
        .def_property_readonly("focal_px", &CameraPose::focal_px)
        .def("rays",
             [](const CameraPose& cam) {
                 const auto rays = generate_rays(cam);
                 const py::ssize_t n = static_cast<py::ssize_t>(rays.size());
                 py::array_t<double> origins({n, py::ssize_t(3)});
                 py::array_t<double> dirs({n, py::ssize_t(3)});
                 for (py::ssize_t i = 0; i < n; ++i)
                     for (int k = 0; k < 3; ++k) {
                         origins.mutable_at(i, k) = rays[static_cast<std::size_t>(i)].origin(k);
                         dirs.mutable_at(i, k) = rays[static_cast<std::size_t>(i)].dir(k);
                     }
                 return py::make_tuple(origins, dirs);
             })
        .def("project", [](const CameraPose& cam, const Vec3& p) -> py::object {
            double px, py_, t;
            if (!project(cam, p, px, py_, t)) return py::none();
            return py::make_tuple(px, py_, t);
        });

    m.def(
        "sample_pose",
        [](double azimuth_std, double elevation_std, std::uint64_t seed) {
            Rng rng(seed);
            return sample_pose({azimuth_std, elevation_std}, rng);
        },
        py::arg("azimuth_std") = 0.3, py::arg("elevation_std") = 0.15, py::arg("seed") = 0);

    m.def(
        "render",
        [](const AnalyticSdf& shape, const CameraPose& cam, double alpha, int n_samples,
           std::uint64_t seed, int threads) {
            const AnalyticEvaluator field(shape);
            RenderOptions opts;
            opts.density.alpha = alpha;
            opts.n_samples = n_samples;
            opts.seed = seed;
            opts.threads = threads;
            return buffers_to_dict(render(field, cam, opts));
        },
        py::arg("shape"), py::arg("camera"), py::arg("alpha") = 0.1, py::arg("n_samples") = 24,
        py::arg("seed") = 0, py::arg("threads") = 0,
        "volume-render an analytic shape; returns color/depth/opacity/valid arrays");

    m.def(
        "marching_cubes",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& values,
           const Vec3& bounds_min, const Vec3& bounds_max, double iso) {
            if (values.ndim() != 3 || values.shape(0) != values.shape(1) ||
                values.shape(1) != values.shape(2))
                throw std::invalid_argument("expected a cubic (r, r, r) array");
            SdfGrid grid;
            grid.resolution = static_cast<int>(values.shape(0));
            grid.bounds_min = bounds_min;
            grid.bounds_max = bounds_max;
            // numpy index [i, j, k] -> lattice (x=i, y=j, z=k)
            grid.values.resize(static_cast<std::size_t>(values.size()));
            for (int i = 0; i < grid.resolution; ++i)
                for (int j = 0; j < grid.resolution; ++j)
                    for (int k = 0; k < grid.resolution; ++k)
                        grid.values[(static_cast<std::size_t>(k) * grid.resolution + j) *
                                        grid.resolution +
                                    i] = values.at(i, j, k);
            return mesh_to_tuple(marching_cubes(grid, iso));
        },
        py::arg("values"), py::arg("bounds_min"), py::arg("bounds_max"), py::arg("iso") = 0.0);

    m.def(
        "subdivide",
        [](const py::array_t<double, py::array::c_style>& v,
           const py::array_t<int, py::array::c_style>& f) {
            TriMesh mesh;
            mesh.vertices = to_points(v);
            if (f.ndim() != 2 || f.shape(1) != 3)
                throw std::invalid_argument("expected an (m, 3) face array");
            for (py::ssize_t i = 0; i < f.shape(0); ++i)
                mesh.faces.push_back({f.at(i, 0), f.at(i, 1), f.at(i, 2)});
            return mesh_to_tuple(subdivide(mesh));
        },
        py::arg("vertices"), py::arg("faces"), "midpoint 1-to-4 subdivision");

    m.def(
        "vertex_noise",
        [](std::size_t count, std::uint64_t seed) {
            Rng rng(seed);
            py::array_t<float> out(static_cast<py::ssize_t>(count));
            for (std::size_t i = 0; i < count; ++i)
                out.mutable_data()[i] = static_cast<float>(rng.normal());
            return out;
        },
        py::arg("count"), py::arg("seed") = 0, "iid standard normal per vertex");

    m.def(
        "modified_chamfer",
        [](const py::array_t<double, py::array::c_style>& s1,
           const py::array_t<double, py::array::c_style>& s2, double bin_size) {
            return modified_chamfer(to_points(s1), to_points(s2), bin_size).value;
        },
        py::arg("s1"), py::arg("s2"), py::arg("bin_size"),
        "median-based symmetric Chamfer, distances normalized by the bin size");

    py::class_<FieldModel>(m, "FieldModel")
        .def_static("load", &load_model, py::arg("path"))
        .def("save",
             [](const FieldModel& model, const std::string& path) { save_model(model, path); })
        .def_property_readonly("z_dim",
                               [](const FieldModel& model) { return model.mapping.z_dim(); })
        .def_property_readonly("trunk_width",
                               [](const FieldModel& model) { return model.field.width(); })
        .def(
            "query",
            [](const FieldModel& model, const Vector& z,
               const py::array_t<double, py::array::c_style>& pts, const Vec3& view) {
                const ModulationSignals mods = mapping_forward(model.mapping, z);
                const auto points = to_points(pts);
                Matrix x(3, static_cast<Eigen::Index>(points.size()));
                Matrix v(3, static_cast<Eigen::Index>(points.size()));
                for (std::size_t i = 0; i < points.size(); ++i) {
                    x.col(static_cast<Eigen::Index>(i)) = points[i];
                    v.col(static_cast<Eigen::Index>(i)) = view.normalized();
                }
                RowVector d;
                Matrix color;
                field_query_batch(model.field, mods, x, v, d, &color, nullptr);
                py::dict out;
                out["d"] = Vector(d.transpose());
                out["color"] = Matrix(color.transpose());
                return out;
            },
            py::arg("z"), py::arg("points"), py::arg("view") = Vec3(0, 0, -1))
        .def(
            "sdf_gradient",
            [](const FieldModel& model, const Vector& z, const Vec3& x) {
                return sdf_input_gradient(model.field, x, mapping_forward(model.mapping, z));
            },
            py::arg("z"), py::arg("x"));

    m.def(
        "make_field_model",
        [](int z_dim, int map_hidden, int trunk_width, int feature_width, std::uint64_t seed) {
            FieldArch arch;
            arch.z_dim = z_dim;
            arch.map_hidden = map_hidden;
            arch.trunk_width = trunk_width;
            arch.feature_width = feature_width;
            Rng rng(seed);
            return make_field_model(arch, rng);
        },
        py::arg("z_dim") = 256, py::arg("map_hidden") = 256, py::arg("trunk_width") = 256,
        py::arg("feature_width") = 256, py::arg("seed") = 0);

    m.def(
        "sphere_init_fit",
        [](FieldModel& model, double radius, int iterations, double step_size, int batch,
           double box_halfwidth, std::uint64_t seed) {
            SphereInitConfig cfg;
            cfg.radius = radius;
            cfg.iterations = iterations;
            cfg.step_size = step_size;
            cfg.batch = batch;
            cfg.box_halfwidth = box_halfwidth;
            Rng rng(seed);
            return sphere_init_fit(model, cfg, rng);
        },
        py::arg("model"), py::arg("radius") = 0.25, py::arg("iterations") = 10000,
        py::arg("step_size") = 1e-4, py::arg("batch") = 256, py::arg("box_halfwidth") = 1.344,
        py::arg("seed") = 0, "fit the model to a sphere SDF; returns the loss history");
}
