// Command-line front end: sphere-init fitting, rendering, mesh extraction,
// view-consistency evaluation, and gradient checking.
//
// Exit codes: 0 success, 1 usage/config error, 2 runtime/numeric error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "sdfvr/config.hpp"
#include "sdfvr/consistency.hpp"
#include "sdfvr/errors.hpp"
#include "sdfvr/geometry.hpp"
#include "sdfvr/gradcheck.hpp"
#include "sdfvr/image_io.hpp"
#include "sdfvr/losses.hpp"
#include "sdfvr/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sdfvr;

namespace {

Vec3 frontal_view_dir() { return Vec3(0, 0, -1); }

struct GlobalArgs {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    bool force = false;
};

RunConfig effective_config(const GlobalArgs& g) {
    RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
    if (g.seed) cfg.seed = *g.seed;
    return cfg;
}

fs::path prepare_out_dir(const GlobalArgs& g) {
    const fs::path dir(g.out_dir);
    if (fs::exists(dir / "manifest.json") && !g.force)
        throw ConfigError("output directory already holds a run (use --force): " + g.out_dir);
    fs::create_directories(dir);
    return dir;
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& cfg,
                    int threads, const json& extra) {
    json m{{"command", command},
           {"config", config_to_json(cfg)},
           {"seed", cfg.seed},
           {"threads", threads}};
    for (const auto& [k, v] : extra.items()) m[k] = v;
    std::ofstream f(dir / "manifest.json");
    f << m.dump(2) << "\n";
}

void add_global_options(CLI::App* app, GlobalArgs& g) {
    app->add_option("--config", g.config_path, "JSON run configuration");
    app->add_option("--out", g.out_dir, "output directory for this run")->required();
    app->add_option("--seed", g.seed, "seed override");
    app->add_option("--threads", g.threads, "worker count (0 = all cores)");
    app->add_flag("--force", g.force, "allow writing into an existing run directory");
}

// ---------------------------------------------------------------------- init-sphere

int cmd_init_sphere(const GlobalArgs& g) {
    const RunConfig cfg = effective_config(g);
    const fs::path dir = prepare_out_dir(g);

    FieldArch arch;
    arch.z_dim = cfg.sphere_init.z_dim;
    arch.map_hidden = cfg.sphere_init.map_hidden;
    arch.trunk_width = cfg.sphere_init.trunk_width;
    arch.feature_width = cfg.sphere_init.feature_width;
    Rng rng = Rng::for_stream(cfg.seed, 0x5153);
    FieldModel model = make_field_model(arch, rng);

    SphereInitConfig fit;
    fit.radius = cfg.sphere_init.radius;
    fit.iterations = cfg.sphere_init.iterations;
    fit.step_size = cfg.sphere_init.step_size;
    fit.batch = cfg.sphere_init.batch;
    fit.box_halfwidth = cfg.sphere_init.box_halfwidth;

    const auto write_history = [&](const std::vector<double>& history) {
        std::ofstream csv(dir / "loss_history.csv");
        csv << "iteration,mse\n";
        csv.precision(17);
        for (std::size_t i = 0; i < history.size(); ++i) csv << i + 1 << "," << history[i] << "\n";
    };

    std::vector<double> history;
    try {
        history = sphere_init_fit(model, fit, rng);
    } catch (const TrainingError& e) {
        write_history(e.history);
        write_manifest(dir, "init-sphere", cfg, g.threads, {{"status", "diverged"}});
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    save_model(model, (dir / "network.sdfn").string());
    write_history(history);

    Rng eval_rng = Rng::for_stream(cfg.seed, 0xe7a1);
    const double residual = sphere_fit_residual(model, fit.radius, 2048, eval_rng);
    write_manifest(dir, "init-sphere", cfg, g.threads,
                   {{"status", "ok"},
                    {"final_loss", history.back()},
                    {"held_out_mean_abs_residual", residual},
                    {"artifacts", {"network.sdfn", "loss_history.csv"}}});
    std::cout << "final mse " << history.back() << ", held-out |d - d*| " << residual << "\n";
    return 0;
}

// ---------------------------------------------------------------------- render

struct RenderArgs {
    std::optional<double> azimuth, elevation, fov, alpha;
    std::optional<int> samples, resolution;
    std::optional<double> viz_near, viz_far;
};

int cmd_render(const GlobalArgs& g, const RenderArgs& a) {
    RunConfig cfg = effective_config(g);
    if (a.azimuth) cfg.camera.azimuth = *a.azimuth;
    if (a.elevation) cfg.camera.elevation = *a.elevation;
    if (a.fov) cfg.camera.fov_deg = *a.fov;
    if (a.alpha) cfg.render.alpha = *a.alpha;
    if (a.samples) cfg.render.samples = *a.samples;
    if (a.resolution) cfg.camera.width = cfg.camera.height = *a.resolution;
    const fs::path dir = prepare_out_dir(g);

    const SceneHandle scene = open_scene(cfg.scene, cfg.seed);
    const CameraPose cam = camera_from_config(cfg.camera);

    RenderOptions opts;
    opts.density.alpha = cfg.render.alpha;
    opts.n_samples = cfg.render.samples;
    opts.seed = cfg.seed;
    opts.threads = g.threads;
    if (cfg.scene.type == "network") opts.fixed_view = frontal_view_dir();

    const RenderBuffers buf = render(*scene.evaluator, cam, opts);

    write_png_rgb((dir / "color.png").string(), buf.width, buf.height, color_to_bytes(buf));
    write_pfm_rgb((dir / "color.pfm").string(), buf.width, buf.height, buf.color);
    write_png_gray((dir / "opacity.png").string(), buf.width, buf.height, opacity_to_bytes(buf));
    write_pfm_gray((dir / "opacity.pfm").string(), buf.width, buf.height, buf.opacity);
    write_pfm_gray((dir / "depth.pfm").string(), buf.width, buf.height, buf.depth);
    write_png_gray((dir / "depth.png").string(), buf.width, buf.height,
                   depth_to_bytes(buf, a.viz_near ? *a.viz_near : cam.t_near,
                                  a.viz_far ? *a.viz_far : cam.t_far));
    json artifacts{"color.png", "color.pfm", "opacity.png", "opacity.pfm", "depth.pfm",
                   "depth.png"};
    if (buf.feature_width > 0) {
        write_feature_raw((dir / "features.raw").string(), (dir / "features.json").string(), buf);
        artifacts.push_back("features.raw");
        artifacts.push_back("features.json");
    }
    write_manifest(dir, "render", cfg, g.threads,
                   {{"camera", camera_to_json(cam)}, {"artifacts", artifacts}});
    return 0;
}

// ---------------------------------------------------------------------- extract-mesh

struct MeshArgs {
    int resolution = 128;
    int subdivide_steps = 0;
    bool noise = false;
    std::string format = "ply";
};

int cmd_extract_mesh(const GlobalArgs& g, const MeshArgs& a) {
    const RunConfig cfg = effective_config(g);
    if (a.format != "ply" && a.format != "obj") throw ConfigError("format must be ply or obj");
    const fs::path dir = prepare_out_dir(g);

    const SceneHandle scene = open_scene(cfg.scene, cfg.seed);
    // grid bounds: camera shell cube scaled so the unit-sphere scene fits
    const double half = 0.55 * cfg.camera.far;
    const Vec3 lo(-half, -half, -half), hi(half, half, half);

    const SdfGrid grid = sample_grid(*scene.evaluator, lo, hi, a.resolution, g.threads);
    TriMesh mesh = marching_cubes(grid, 0.0, g.threads);
    if (mesh.faces.empty())
        std::cerr << "warning: no zero crossing inside the grid, writing an empty mesh\n";
    for (int s = 0; s < a.subdivide_steps; ++s) mesh = subdivide(mesh);
    if (a.noise) {
        Rng rng = Rng::for_stream(cfg.seed, 0x401e);
        mesh = attach_vertex_noise(mesh, rng);
    }

    const std::string name = a.format == "ply" ? "mesh.ply" : "mesh.obj";
    export_mesh(mesh, (dir / name).string(),
                a.format == "ply" ? MeshFormat::Ply : MeshFormat::Obj);
    write_manifest(dir, "extract-mesh", cfg, g.threads,
                   {{"grid_resolution", a.resolution},
                    {"bounds_halfwidth", half},
                    {"subdivide", a.subdivide_steps},
                    {"noise", a.noise},
                    {"vertices", mesh.vertices.size()},
                    {"faces", mesh.faces.size()},
                    {"artifacts", {name}}});
    return 0;
}

// ---------------------------------------------------------------------- eval-consistency

struct EvalArgs {
    std::optional<double> side_azimuth;
    double side_elevation = 0.0;
    int resolution = 128;
    int samples = 128;
    std::optional<double> alpha;
    int batch = 1;
    bool no_occlusion_mask = false;
};

int cmd_eval_consistency(const GlobalArgs& g, const EvalArgs& a) {
    const RunConfig cfg = effective_config(g);
    const fs::path dir = prepare_out_dir(g);

    // side view defaults to 1.5x the training azimuth std
    const double side_az = a.side_azimuth ? *a.side_azimuth : 1.5 * cfg.camera.azimuth_std;
    const CameraPose frontal = camera_from_angles(0, 0, cfg.camera.fov_deg, cfg.camera.near,
                                                  cfg.camera.far, a.resolution, a.resolution);
    const CameraPose side =
        camera_from_angles(side_az, a.side_elevation, cfg.camera.fov_deg, cfg.camera.near,
                           cfg.camera.far, a.resolution, a.resolution);

    ConsistencyOptions opts;
    opts.resolution = a.resolution;
    opts.n_samples = a.samples;
    opts.density.alpha = a.alpha ? *a.alpha : cfg.render.alpha;
    opts.threads = g.threads;
    opts.mask_occlusion = !a.no_occlusion_mask;

    std::unique_ptr<FieldModel> model;
    if (cfg.scene.type == "network") {
        model = std::make_unique<FieldModel>(load_model(cfg.scene.path));
        opts.fixed_view = frontal_view_dir();
    }

    std::ofstream csv(dir / "aggregate.csv");
    csv << "identity,chamfer,median_l1,valid_fraction,coverage_fraction\n";
    csv.precision(17);
    double sum_cd = 0, sum_l1 = 0;

    for (int i = 0; i < a.batch; ++i) {
        std::unique_ptr<FieldEvaluator> evaluator;
        if (model) {
            Rng zrng = Rng::for_stream(cfg.seed, 0x1a7e + static_cast<std::uint64_t>(i));
            Vector z(model->mapping.z_dim());
            for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = zrng.normal();
            evaluator = std::make_unique<NetworkEvaluator>(model->field,
                                                           mapping_forward(model->mapping, z));
        } else {
            evaluator = open_scene(cfg.scene, cfg.seed).evaluator;
        }
        opts.seed = cfg.seed + static_cast<std::uint64_t>(i);

        const ConsistencyReport rep = evaluate_pair(*evaluator, frontal, side, opts);
        sum_cd += rep.chamfer;
        sum_l1 += rep.median_l1;
        csv << i << "," << rep.chamfer << "," << rep.median_l1 << "," << rep.valid_fraction << ","
            << rep.coverage_fraction << "\n";

        json rj{{"chamfer", rep.chamfer},
                {"median_l1", rep.median_l1},
                {"valid_fraction", rep.valid_fraction},
                {"coverage_fraction", rep.coverage_fraction},
                {"bin_size", rep.bin_size},
                {"frontal_camera", camera_to_json(rep.frontal)},
                {"side_camera", camera_to_json(rep.side)}};
        std::ofstream rf(dir / ("report_" + std::to_string(i) + ".json"));
        rf << rj.dump(2) << "\n";

        if (i == 0) {
            // nearest-neighbor distance map in bin units, 0..4 bins scale
            const std::size_t px =
                static_cast<std::size_t>(rep.frontal.width) * rep.frontal.height;
            std::vector<std::uint8_t> nn_map(px, 0);
            for (std::size_t k = 0; k < rep.nn_dist.size(); ++k) {
                const double v = std::min(rep.nn_dist[k] / 4.0, 1.0);
                nn_map[rep.nn_pixel[k]] = static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
            write_png_gray((dir / "nn_distance.png").string(), rep.frontal.width,
                           rep.frontal.height, nn_map);
            // per-pixel reprojection L1, 0..32 scale on 0-255 values
            std::vector<std::uint8_t> l1_map(px, 0);
            for (std::size_t k = 0; k < rep.l1_map.size(); ++k) {
                if (rep.l1_map[k] < 0) continue;
                l1_map[k] = static_cast<std::uint8_t>(
                    std::lround(std::min(rep.l1_map[k] / 32.0, 1.0) * 255.0));
            }
            write_png_gray((dir / "reprojection_l1.png").string(), rep.frontal.width,
                           rep.frontal.height, l1_map);
        }
    }
    csv << "mean," << sum_cd / a.batch << "," << sum_l1 / a.batch << ",,\n";

    write_manifest(dir, "eval-consistency", cfg, g.threads,
                   {{"side_azimuth", side_az},
                    {"side_elevation", a.side_elevation},
                    {"resolution", a.resolution},
                    {"samples", a.samples},
                    {"alpha", opts.density.alpha},
                    {"batch", a.batch},
                    {"mean_chamfer", sum_cd / a.batch},
                    {"mean_median_l1", sum_l1 / a.batch}});
    std::cout << "mean chamfer " << sum_cd / a.batch << " (bin units), mean median L1 "
              << sum_l1 / a.batch << "\n";
    return 0;
}

// ---------------------------------------------------------------------- gradcheck

struct GradArgs {
    int nets = 15;
    int points = 8;
    double tolerance = 1e-4;
    bool corrupt = false;
};

int cmd_gradcheck(const GlobalArgs& g, const GradArgs& a) {
    const RunConfig cfg = effective_config(g);
    const fs::path dir = prepare_out_dir(g);

    const GradCheckReport rep = run_gradcheck(a.nets, a.points, cfg.seed, a.corrupt);

    std::printf("%-14s %-12s %-12s %6s\n", "layer", "input_err", "param_err", "checks");
    json rows = json::array();
    for (const auto& row : rep.rows) {
        std::printf("%-14s %-12.3e %-12.3e %6d\n", row.name.c_str(), row.input_err, row.param_err,
                    row.checks);
        rows.push_back({{"name", row.name},
                        {"input_err", row.input_err},
                        {"param_err", row.param_err},
                        {"checks", row.checks}});
    }
    const bool pass = rep.pass(a.tolerance);
    std::printf("worst %.3e over %d configurations -> %s\n", rep.worst, rep.configurations,
                pass ? "PASS" : "FAIL");

    std::ofstream rf(dir / "report.json");
    rf << json{{"rows", rows},
               {"worst", rep.worst},
               {"configurations", rep.configurations},
               {"tolerance", a.tolerance},
               {"pass", pass}}
              .dump(2)
       << "\n";
    write_manifest(dir, "gradcheck", cfg, g.threads,
                   {{"pass", pass}, {"worst", rep.worst}, {"artifacts", {"report.json"}}});
    return pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SDF volume rendering and view-consistency toolkit"};
    app.require_subcommand(1);

    GlobalArgs g_init, g_render, g_mesh, g_eval, g_grad;
    RenderArgs render_args;
    MeshArgs mesh_args;
    EvalArgs eval_args;
    GradArgs grad_args;

    CLI::App* init = app.add_subcommand("init-sphere", "fit a fresh network to a sphere SDF");
    add_global_options(init, g_init);

    CLI::App* rnd = app.add_subcommand("render", "volume-render the configured scene");
    add_global_options(rnd, g_render);
    rnd->add_option("--azimuth", render_args.azimuth, "camera azimuth (radians)");
    rnd->add_option("--elevation", render_args.elevation, "camera elevation (radians)");
    rnd->add_option("--fov", render_args.fov, "field of view (degrees)");
    rnd->add_option("--alpha", render_args.alpha, "density tightness");
    rnd->add_option("--samples", render_args.samples, "samples per ray");
    rnd->add_option("--resolution", render_args.resolution, "image width and height");
    rnd->add_option("--viz-near", render_args.viz_near,
                    "near value for the depth PNG normalization");
    rnd->add_option("--viz-far", render_args.viz_far,
                    "far value for the depth PNG normalization");

    CLI::App* mesh = app.add_subcommand("extract-mesh", "marching cubes on the scene SDF");
    add_global_options(mesh, g_mesh);
    mesh->add_option("--resolution", mesh_args.resolution, "grid samples per axis");
    mesh->add_option("--subdivide", mesh_args.subdivide_steps, "midpoint subdivision steps");
    mesh->add_flag("--noise", mesh_args.noise, "attach per-vertex unit Gaussian noise");
    mesh->add_option("--format", mesh_args.format, "ply or obj");

    CLI::App* eval = app.add_subcommand("eval-consistency",
                                        "frontal vs side-view depth and color consistency");
    add_global_options(eval, g_eval);
    eval->add_option("--side-azimuth", eval_args.side_azimuth,
                     "side view azimuth (default 1.5 x azimuth std)");
    eval->add_option("--side-elevation", eval_args.side_elevation, "side view elevation");
    eval->add_option("--resolution", eval_args.resolution, "depth map resolution");
    eval->add_option("--samples", eval_args.samples, "samples per ray");
    eval->add_option("--alpha", eval_args.alpha, "density tightness");
    eval->add_option("--batch", eval_args.batch, "number of identities / repeats");
    eval->add_flag("--no-occlusion-mask", eval_args.no_occlusion_mask,
                   "keep occluded pixels in the error statistics");

    CLI::App* grad = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    add_global_options(grad, g_grad);
    grad->add_option("--nets", grad_args.nets, "random networks to test");
    grad->add_option("--points", grad_args.points, "input-gradient points per network");
    grad->add_option("--tolerance", grad_args.tolerance, "max relative error");
    grad->add_flag("--corrupt-gradients", grad_args.corrupt, "")->group("");  // test hook

    CLI11_PARSE(app, argc, argv);

    try {
        if (init->parsed()) return cmd_init_sphere(g_init);
        if (rnd->parsed()) return cmd_render(g_render, render_args);
        if (mesh->parsed()) return cmd_extract_mesh(g_mesh, mesh_args);
        if (eval->parsed()) return cmd_eval_consistency(g_eval, eval_args);
        if (grad->parsed()) return cmd_gradcheck(g_grad, grad_args);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
