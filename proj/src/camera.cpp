#include "sdfvr/camera.hpp"

#include <cmath>

#include "sdfvr/errors.hpp"

namespace sdfvr {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Vec3 CameraPose::center() const {
    const double ce = std::cos(elevation);
    return Vec3(ce * std::sin(azimuth), std::sin(elevation), ce * std::cos(azimuth));
}

Vec3 CameraPose::forward() const { return -center(); }

Vec3 CameraPose::right() const {
    const Vec3 f = forward();
    const Vec3 r = f.cross(Vec3(0, 1, 0));
    const double n = r.norm();
    if (n < 1e-9) throw ParamError("camera looks along the world up axis");
    return r / n;
}

Vec3 CameraPose::up() const { return right().cross(forward()); }

double CameraPose::focal_px() const {
    return (width / 2.0) / std::tan(fov_deg * kPi / 360.0);
}

CameraPose camera_from_angles(double azimuth, double elevation, double fov_deg, double t_near,
                              double t_far, int width, int height) {
    if (!(fov_deg > 0.0) || !(fov_deg < 180.0)) throw ParamError("fov must be in (0, 180) degrees");
    if (!(t_near > 0.0) || !(t_far > t_near)) throw ParamError("need t_far > t_near > 0");
    if (width < 1 || height < 1) throw ParamError("image dimensions must be positive");
    CameraPose cam{azimuth, elevation, fov_deg, t_near, t_far, width, height};
    cam.right();  // rejects degenerate elevation
    return cam;
}

Ray ray_through_pixel(const CameraPose& cam, double px, double py) {
    const double f = cam.focal_px();
    const double sx = (px - cam.width / 2.0) / f;
    const double sy = (cam.height / 2.0 - py) / f;
    const Vec3 d = cam.forward() + sx * cam.right() + sy * cam.up();
    return Ray{cam.center(), d.normalized()};
}

std::vector<Ray> generate_rays(const CameraPose& cam) {
    std::vector<Ray> rays;
    rays.reserve(static_cast<size_t>(cam.width) * cam.height);
    const Vec3 o = cam.center();
    const Vec3 fwd = cam.forward();
    const Vec3 r = cam.right();
    const Vec3 u = cam.up();
    const double f = cam.focal_px();
    for (int j = 0; j < cam.height; ++j) {
        for (int i = 0; i < cam.width; ++i) {
            const double sx = (i + 0.5 - cam.width / 2.0) / f;
            const double sy = (cam.height / 2.0 - (j + 0.5)) / f;
            const Vec3 d = fwd + sx * r + sy * u;
            rays.push_back(Ray{o, d.normalized()});
        }
    }
    return rays;
}

bool project(const CameraPose& cam, const Vec3& p, double& px, double& py, double& t) {
    const Vec3 q = p - cam.center();
    const double zf = q.dot(cam.forward());
    if (zf <= 0.0) return false;
    const double f = cam.focal_px();
    px = cam.width / 2.0 + f * q.dot(cam.right()) / zf;
    py = cam.height / 2.0 - f * q.dot(cam.up()) / zf;
    t = q.norm();
    return true;
}

std::pair<double, double> sample_pose(const PoseDistribution& dist, Rng& rng) {
    if (dist.azimuth_std < 0.0 || dist.elevation_std < 0.0)
        throw ParamError("pose stds must be non-negative");
    const double az = dist.azimuth_std * rng.normal();
    const double el = dist.elevation_std * rng.normal();
    return {az, el};
}

nlohmann::json camera_to_json(const CameraPose& cam) {
    return nlohmann::json{{"azimuth", cam.azimuth}, {"elevation", cam.elevation},
                          {"fov_deg", cam.fov_deg}, {"near", cam.t_near},
                          {"far", cam.t_far},       {"width", cam.width},
                          {"height", cam.height}};
}

CameraPose camera_from_json(const nlohmann::json& j) {
    return camera_from_angles(j.at("azimuth").get<double>(), j.at("elevation").get<double>(),
                              j.at("fov_deg").get<double>(), j.at("near").get<double>(),
                              j.at("far").get<double>(), j.at("width").get<int>(),
                              j.at("height").get<int>());
}

}  // namespace sdfvr
