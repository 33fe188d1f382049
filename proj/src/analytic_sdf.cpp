#include "sdfvr/analytic_sdf.hpp"

#include <cmath>

#include "sdfvr/errors.hpp"

namespace sdfvr {

AnalyticSdf AnalyticSdf::sphere(const Vec3& center, double radius) {
    if (!(radius > 0.0)) throw ParamError("sphere radius must be positive");
    return AnalyticSdf(Shape::Sphere, center, Vec3::Zero(), radius, 0.0);
}

AnalyticSdf AnalyticSdf::box(const Vec3& center, const Vec3& half_extents) {
    if (!(half_extents.minCoeff() > 0.0)) throw ParamError("box half extents must be positive");
    return AnalyticSdf(Shape::Box, center, half_extents, 0.0, 0.0);
}

AnalyticSdf AnalyticSdf::torus(const Vec3& center, double ring_radius, double tube_radius) {
    if (!(ring_radius > 0.0) || !(tube_radius > 0.0))
        throw ParamError("torus radii must be positive");
    return AnalyticSdf(Shape::Torus, center, Vec3::Zero(), ring_radius, tube_radius);
}

double AnalyticSdf::eval(const Vec3& x) const {
    const Vec3 p = x - center_;
    switch (shape_) {
        case Shape::Sphere:
            return p.norm() - a_;
        case Shape::Box: {
            const Vec3 q = p.cwiseAbs() - params_;
            const double outside = q.cwiseMax(0.0).norm();
            const double inside = std::min(q.maxCoeff(), 0.0);
            return outside + inside;
        }
        case Shape::Torus: {
            const double ring = std::hypot(p.x(), p.z()) - a_;
            return std::hypot(ring, p.y()) - b_;
        }
    }
    return 0.0;
}

Vec3 AnalyticSdf::gradient(const Vec3& x) const {
    const Vec3 p = x - center_;
    switch (shape_) {
        case Shape::Sphere: {
            const double n = p.norm();
            if (n == 0.0) return Vec3(1, 0, 0);  // medial point, any unit vector
            return p / n;
        }
        case Shape::Box: {
            const Vec3 q = p.cwiseAbs() - params_;
            Vec3 g;
            if (q.maxCoeff() > 0.0) {
                const Vec3 qp = q.cwiseMax(0.0);
                g = qp / qp.norm();
            } else {
                // inside: gradient points along the axis of least clearance
                g = Vec3::Zero();
                int axis = 0;
                q.maxCoeff(&axis);
                g[axis] = 1.0;
            }
            for (int i = 0; i < 3; ++i)
                if (p[i] < 0.0) g[i] = -g[i];
            return g;
        }
        case Shape::Torus: {
            const double s = std::hypot(p.x(), p.z());
            const double ring = s - a_;
            const double n = std::hypot(ring, p.y());
            if (n == 0.0 || s == 0.0) return Vec3(0, 1, 0);
            return Vec3(ring * p.x() / s, p.y(), ring * p.z() / s) / n;
        }
    }
    return Vec3::Zero();
}

}  // namespace sdfvr
