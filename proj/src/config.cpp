#include "sdfvr/config.hpp"

#include <fstream>

#include "sdfvr/errors.hpp"

namespace sdfvr {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok |= key == a;
        if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for key '" + std::string(key) + "' in " + where);
    }
}

Vec3 get_vec3(const json& j, const char* key, const Vec3& fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 3)
        throw ConfigError("key '" + std::string(key) + "' in " + where +
                          " must be an array of 3 numbers");
    try {
        return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
    } catch (const json::exception&) {
        throw ConfigError("bad value for key '" + std::string(key) + "' in " + where);
    }
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& j) {
    check_keys(j, "config", {"seed", "scene", "camera", "render", "loss_weights", "sphere_init"});
    RunConfig cfg;
    cfg.seed = get_or<std::uint64_t>(j, "seed", 0, "config");

    if (j.contains("scene")) {
        const auto& s = j.at("scene");
        check_keys(s, "scene", {"type", "radius", "center", "half_extents", "ring_radius",
                                "tube_radius", "path"});
        cfg.scene.type = get_or<std::string>(s, "type", "sphere", "scene");
        if (cfg.scene.type != "sphere" && cfg.scene.type != "box" && cfg.scene.type != "torus" &&
            cfg.scene.type != "network")
            throw ConfigError("scene.type must be sphere, box, torus or network");
        cfg.scene.radius = get_or(s, "radius", cfg.scene.radius, "scene");
        cfg.scene.center = get_vec3(s, "center", cfg.scene.center, "scene");
        cfg.scene.half_extents = get_vec3(s, "half_extents", cfg.scene.half_extents, "scene");
        cfg.scene.ring_radius = get_or(s, "ring_radius", cfg.scene.ring_radius, "scene");
        cfg.scene.tube_radius = get_or(s, "tube_radius", cfg.scene.tube_radius, "scene");
        cfg.scene.path = get_or<std::string>(s, "path", "", "scene");
        if (cfg.scene.type == "network" && cfg.scene.path.empty())
            throw ConfigError("scene.path is required for network scenes");
    }

    if (j.contains("camera")) {
        const auto& c = j.at("camera");
        check_keys(c, "camera", {"fov_deg", "near", "far", "width", "height", "azimuth",
                                 "elevation", "azimuth_std", "elevation_std"});
        cfg.camera.fov_deg = get_or(c, "fov_deg", cfg.camera.fov_deg, "camera");
        cfg.camera.near = get_or(c, "near", cfg.camera.near, "camera");
        cfg.camera.far = get_or(c, "far", cfg.camera.far, "camera");
        cfg.camera.width = get_or(c, "width", cfg.camera.width, "camera");
        cfg.camera.height = get_or(c, "height", cfg.camera.height, "camera");
        cfg.camera.azimuth = get_or(c, "azimuth", cfg.camera.azimuth, "camera");
        cfg.camera.elevation = get_or(c, "elevation", cfg.camera.elevation, "camera");
        cfg.camera.azimuth_std = get_or(c, "azimuth_std", cfg.camera.azimuth_std, "camera");
        cfg.camera.elevation_std = get_or(c, "elevation_std", cfg.camera.elevation_std, "camera");
    }

    if (j.contains("render")) {
        const auto& r = j.at("render");
        check_keys(r, "render", {"samples", "alpha"});
        cfg.render.samples = get_or(r, "samples", cfg.render.samples, "render");
        cfg.render.alpha = get_or(r, "alpha", cfg.render.alpha, "render");
        if (cfg.render.samples < 1) throw ConfigError("render.samples must be at least 1");
        if (!(cfg.render.alpha > 0.0)) throw ConfigError("render.alpha must be positive");
    }

    if (j.contains("loss_weights")) {
        const auto& w = j.at("loss_weights");
        check_keys(w, "loss_weights", {"lambda_view", "lambda_eik", "lambda_surf"});
        cfg.weights.lambda_view = get_or(w, "lambda_view", cfg.weights.lambda_view, "loss_weights");
        cfg.weights.lambda_eik = get_or(w, "lambda_eik", cfg.weights.lambda_eik, "loss_weights");
        cfg.weights.lambda_surf = get_or(w, "lambda_surf", cfg.weights.lambda_surf, "loss_weights");
    }

    if (j.contains("sphere_init")) {
        const auto& s = j.at("sphere_init");
        check_keys(s, "sphere_init",
                   {"radius", "iterations", "step_size", "batch", "box_halfwidth", "z_dim",
                    "map_hidden", "trunk_width", "feature_width"});
        auto& si = cfg.sphere_init;
        si.radius = get_or(s, "radius", si.radius, "sphere_init");
        si.iterations = get_or(s, "iterations", si.iterations, "sphere_init");
        si.step_size = get_or(s, "step_size", si.step_size, "sphere_init");
        si.batch = get_or(s, "batch", si.batch, "sphere_init");
        si.box_halfwidth = get_or(s, "box_halfwidth", si.box_halfwidth, "sphere_init");
        si.z_dim = get_or(s, "z_dim", si.z_dim, "sphere_init");
        si.map_hidden = get_or(s, "map_hidden", si.map_hidden, "sphere_init");
        si.trunk_width = get_or(s, "trunk_width", si.trunk_width, "sphere_init");
        si.feature_width = get_or(s, "feature_width", si.feature_width, "sphere_init");
        if (si.iterations < 1) throw ConfigError("sphere_init.iterations must be at least 1");
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return config_from_json(j);
}

nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json scene{{"type", cfg.scene.type}};
    if (cfg.scene.type == "sphere") {
        scene["radius"] = cfg.scene.radius;
        scene["center"] = {cfg.scene.center.x(), cfg.scene.center.y(), cfg.scene.center.z()};
    } else if (cfg.scene.type == "box") {
        scene["half_extents"] = {cfg.scene.half_extents.x(), cfg.scene.half_extents.y(),
                                 cfg.scene.half_extents.z()};
        scene["center"] = {cfg.scene.center.x(), cfg.scene.center.y(), cfg.scene.center.z()};
    } else if (cfg.scene.type == "torus") {
        scene["ring_radius"] = cfg.scene.ring_radius;
        scene["tube_radius"] = cfg.scene.tube_radius;
        scene["center"] = {cfg.scene.center.x(), cfg.scene.center.y(), cfg.scene.center.z()};
    } else {
        scene["path"] = cfg.scene.path;
    }
    return nlohmann::json{
        {"seed", cfg.seed},
        {"scene", scene},
        {"camera",
         {{"fov_deg", cfg.camera.fov_deg},
          {"near", cfg.camera.near},
          {"far", cfg.camera.far},
          {"width", cfg.camera.width},
          {"height", cfg.camera.height},
          {"azimuth", cfg.camera.azimuth},
          {"elevation", cfg.camera.elevation},
          {"azimuth_std", cfg.camera.azimuth_std},
          {"elevation_std", cfg.camera.elevation_std}}},
        {"render", {{"samples", cfg.render.samples}, {"alpha", cfg.render.alpha}}},
        {"loss_weights",
         {{"lambda_view", cfg.weights.lambda_view},
          {"lambda_eik", cfg.weights.lambda_eik},
          {"lambda_surf", cfg.weights.lambda_surf}}},
        {"sphere_init",
         {{"radius", cfg.sphere_init.radius},
          {"iterations", cfg.sphere_init.iterations},
          {"step_size", cfg.sphere_init.step_size},
          {"batch", cfg.sphere_init.batch},
          {"box_halfwidth", cfg.sphere_init.box_halfwidth},
          {"z_dim", cfg.sphere_init.z_dim},
          {"map_hidden", cfg.sphere_init.map_hidden},
          {"trunk_width", cfg.sphere_init.trunk_width},
          {"feature_width", cfg.sphere_init.feature_width}}}};
}

CameraPose camera_from_config(const CameraConfig& c) {
    return camera_from_angles(c.azimuth, c.elevation, c.fov_deg, c.near, c.far, c.width, c.height);
}

SceneHandle open_scene(const SceneConfig& scene, std::uint64_t seed) {
    SceneHandle handle;
    if (scene.type == "sphere") {
        handle.evaluator =
            std::make_unique<AnalyticEvaluator>(AnalyticSdf::sphere(scene.center, scene.radius));
    } else if (scene.type == "box") {
        handle.evaluator = std::make_unique<AnalyticEvaluator>(
            AnalyticSdf::box(scene.center, scene.half_extents));
    } else if (scene.type == "torus") {
        handle.evaluator = std::make_unique<AnalyticEvaluator>(
            AnalyticSdf::torus(scene.center, scene.ring_radius, scene.tube_radius));
    } else if (scene.type == "network") {
        handle.model = std::make_unique<FieldModel>(load_model(scene.path));
        Rng rng = Rng::for_stream(seed, 0x1a7e);
        Vector z(handle.model->mapping.z_dim());
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
        handle.evaluator = std::make_unique<NetworkEvaluator>(
            handle.model->field, mapping_forward(handle.model->mapping, z));
    } else {
        throw ConfigError("unknown scene type: " + scene.type);
    }
    return handle;
}

}  // namespace sdfvr
