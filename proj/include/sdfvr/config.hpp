#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "json.hpp"
#include "sdfvr/camera.hpp"
#include "sdfvr/losses.hpp"
#include "sdfvr/render.hpp"

namespace sdfvr {

struct SceneConfig {
    std::string type = "sphere";  // sphere | box | torus | network
    double radius = 0.1;
    Vec3 center = Vec3::Zero();
    Vec3 half_extents = Vec3(0.25, 0.25, 0.25);
    double ring_radius = 0.25;
    double tube_radius = 0.1;
    std::string path;  // parameter file for network scenes
};

struct CameraConfig {
    double fov_deg = 12.0;
    double near = 0.88;
    double far = 1.12;
    int width = 64;
    int height = 64;
    double azimuth = 0.0;
    double elevation = 0.0;
    double azimuth_std = 0.3;
    double elevation_std = 0.15;
};

struct RenderConfig {
    int samples = 24;
    double alpha = 0.1;
};

struct SphereInitBlock {
    double radius = 0.25;
    int iterations = 10000;
    double step_size = 1e-4;
    int batch = 256;
    double box_halfwidth = 1.344;
    int z_dim = 256;
    int map_hidden = 256;
    int trunk_width = 256;
    int feature_width = 256;
};

struct RunConfig {
    std::uint64_t seed = 0;
    SceneConfig scene;
    CameraConfig camera;
    RenderConfig render;
    LossWeights weights;
    SphereInitBlock sphere_init;
};

// Strict: unknown keys are rejected with a diagnostic naming the key.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
// Effective config with every default filled in; loading it back round-trips.
nlohmann::json config_to_json(const RunConfig& cfg);

CameraPose camera_from_config(const CameraConfig& c);

// Builds the evaluator for the configured scene. Network scenes load the
// parameter file and condition on a latent drawn from `seed`; color queries
// use the frontal-fixed view direction.
struct SceneHandle {
    std::unique_ptr<FieldEvaluator> evaluator;
    std::unique_ptr<FieldModel> model;  // only for network scenes
};
SceneHandle open_scene(const SceneConfig& scene, std::uint64_t seed);

}  // namespace sdfvr
