#pragma once

#include <Eigen/Dense>

namespace sdfvr {

using Vec3 = Eigen::Vector3d;

// Exact signed distance to a primitive shape (negative inside). Used as the
// sphere-initialization regression target and as the oracle scene for the
// renderer and consistency tests.
class AnalyticSdf {
  public:
    enum class Shape { Sphere, Box, Torus };

    static AnalyticSdf sphere(const Vec3& center, double radius);
    static AnalyticSdf box(const Vec3& center, const Vec3& half_extents);
    // ring radius R (distance from center to tube center), tube radius r;
    // ring lies in the xz-plane through the center
    static AnalyticSdf torus(const Vec3& center, double ring_radius, double tube_radius);

    double eval(const Vec3& x) const;
    // analytic gradient; unit norm away from the medial axis
    Vec3 gradient(const Vec3& x) const;

    Shape shape() const { return shape_; }
    const Vec3& center() const { return center_; }
    double radius() const { return a_; }

  private:
    AnalyticSdf(Shape s, const Vec3& c, const Vec3& p, double a, double b)
        : shape_(s), center_(c), params_(p), a_(a), b_(b) {}

    Shape shape_;
    Vec3 center_;
    Vec3 params_;  // box half extents
    double a_ = 0, b_ = 0;  // sphere radius / torus radii
};

}  // namespace sdfvr
