#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sdfvr/rng.hpp"

namespace sdfvr {

using Vec3 = Eigen::Vector3d;

// Camera on the unit sphere, looking at the origin. World axes: +y up,
// frontal pose (azimuth 0, elevation 0) at +z. Azimuth rotates about +y,
// elevation lifts the camera toward +y. Pixel centers sit at half-integer
// coordinates, principal point at the image center, row 0 at the top.
struct CameraPose {
    double azimuth = 0;    // radians
    double elevation = 0;  // radians
    double fov_deg = 12;   // horizontal field of view
    double t_near = 0.88;
    double t_far = 1.12;
    int width = 64;
    int height = 64;

    Vec3 center() const;
    Vec3 forward() const;  // unit, towards the origin
    Vec3 right() const;
    Vec3 up() const;
    double focal_px() const;  // (width/2) / tan(fov/2)
};

CameraPose camera_from_angles(double azimuth, double elevation, double fov_deg, double t_near,
                              double t_far, int width, int height);

struct Ray {
    Vec3 origin;
    Vec3 dir;  // unit
};

Ray ray_through_pixel(const CameraPose& cam, double px, double py);

// row-major, one ray per pixel center
std::vector<Ray> generate_rays(const CameraPose& cam);

// Projects a world point; returns false if it lies behind the camera.
// t is the distance along the (unit) ray, matching rendered depth units.
bool project(const CameraPose& cam, const Vec3& p, double& px, double& py, double& t);

struct PoseDistribution {
    double azimuth_std = 0.3;
    double elevation_std = 0.15;
};

// zero-mean independent Gaussian draws -> (azimuth, elevation)
std::pair<double, double> sample_pose(const PoseDistribution& dist, Rng& rng);

nlohmann::json camera_to_json(const CameraPose& cam);
CameraPose camera_from_json(const nlohmann::json& j);

}  // namespace sdfvr
