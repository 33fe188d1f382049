#include "sdfvr/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "sdfvr/errors.hpp"

namespace sdfvr {

DepthPointCloud unproject(const RenderBuffers& buffers, const CameraPose& cam) {
    if (buffers.width != cam.width || buffers.height != cam.height)
        throw ShapeError("depth buffer does not match camera dimensions");
    DepthPointCloud cloud;
    cloud.camera = cam;
    const std::vector<Ray> rays = generate_rays(cam);
    for (std::size_t p = 0; p < buffers.pixels(); ++p) {
        if (!buffers.valid[p]) continue;
        cloud.points.push_back(rays[p].origin + buffers.depth[p] * rays[p].dir);
        cloud.pixel.push_back(p);
    }
    return cloud;
}

double lower_median(std::vector<double> values) {
    if (values.empty()) throw ShapeError("median of empty set");
    const std::size_t idx = (values.size() - 1) / 2;
    std::nth_element(values.begin(), values.begin() + idx, values.end());
    return values[idx];
}

namespace {

// Exact nearest-neighbor queries over a uniform grid hash. The grid only
// accelerates the search; results equal brute force exactly.
class GridIndex {
  public:
    explicit GridIndex(const std::vector<Vec3>& points) : points_(points) {
        Vec3 lo = points[0], hi = points[0];
        for (const auto& p : points) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        origin_ = lo;
        const double diag = (hi - lo).norm();
        cell_ = diag / std::max(1.0, std::cbrt(static_cast<double>(points.size())));
        if (!(cell_ > 0.0)) cell_ = 1.0;
        for (int i = 0; i < static_cast<int>(points.size()); ++i)
            cells_[key_(cell_of_(points[i]))].push_back(i);
    }

    double nearest_distance(const Vec3& q) const {
        const Eigen::Vector3i qc = cell_of_(q);
        double best_sq = std::numeric_limits<double>::infinity();
        for (int ring = 0;; ++ring) {
            scan_ring_(q, qc, ring, best_sq);
            const double safe = static_cast<double>(ring) * cell_;
            if (best_sq <= safe * safe) break;
        }
        return std::sqrt(best_sq);
    }

  private:
    Eigen::Vector3i cell_of_(const Vec3& p) const {
        return Eigen::Vector3i(static_cast<int>(std::floor((p.x() - origin_.x()) / cell_)),
                               static_cast<int>(std::floor((p.y() - origin_.y()) / cell_)),
                               static_cast<int>(std::floor((p.z() - origin_.z()) / cell_)));
    }

    static std::uint64_t key_(const Eigen::Vector3i& c) {
        const auto u = [](int v) { return static_cast<std::uint64_t>(v + (1 << 20)) & 0x1fffff; };
        return (u(c.x()) << 42) | (u(c.y()) << 21) | u(c.z());
    }

    void scan_cell_(const Vec3& q, const Eigen::Vector3i& c, double& best_sq) const {
        const auto it = cells_.find(key_(c));
        if (it == cells_.end()) return;
        for (int i : it->second) best_sq = std::min(best_sq, (points_[i] - q).squaredNorm());
    }

    void scan_ring_(const Vec3& q, const Eigen::Vector3i& qc, int ring, double& best_sq) const {
        if (ring == 0) {
            scan_cell_(q, qc, best_sq);
            return;
        }
        for (int dx = -ring; dx <= ring; ++dx) {
            for (int dy = -ring; dy <= ring; ++dy) {
                for (int dz = -ring; dz <= ring; ++dz) {
                    if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
                    scan_cell_(q, qc + Eigen::Vector3i(dx, dy, dz), best_sq);
                }
            }
        }
    }

    const std::vector<Vec3>& points_;
    Vec3 origin_;
    double cell_ = 1.0;
    std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

std::vector<double> nearest_distances(const std::vector<Vec3>& from,
                                      const std::vector<Vec3>& to) {
    const GridIndex index(to);
    std::vector<double> d;
    d.reserve(from.size());
    for (const auto& p : from) d.push_back(index.nearest_distance(p));
    return d;
}

}  // namespace

ChamferResult modified_chamfer(const std::vector<Vec3>& s1, const std::vector<Vec3>& s2,
                               double bin_size) {
    if (s1.empty() || s2.empty()) throw ShapeError("chamfer requires nonempty point sets");
    if (!(bin_size > 0.0)) throw ParamError("bin size must be positive");
    ChamferResult r;
    r.d1 = nearest_distances(s1, s2);
    r.d2 = nearest_distances(s2, s1);
    for (auto& v : r.d1) v /= bin_size;
    for (auto& v : r.d2) v /= bin_size;
    std::vector<double> sq1(r.d1.size()), sq2(r.d2.size());
    for (std::size_t i = 0; i < r.d1.size(); ++i) sq1[i] = r.d1[i] * r.d1[i];
    for (std::size_t i = 0; i < r.d2.size(); ++i) sq2[i] = r.d2[i] * r.d2[i];
    r.value = lower_median(std::move(sq1)) + lower_median(std::move(sq2));
    return r;
}

ReprojectionResult reproject(const RenderBuffers& src, const CameraPose& src_cam,
                             const CameraPose& dst_cam, const RenderBuffers* dst,
                             double occlusion_threshold) {
    if (src.width != src_cam.width || src.height != src_cam.height)
        throw ShapeError("source buffers do not match camera dimensions");
    if (dst && (dst->width != dst_cam.width || dst->height != dst_cam.height))
        throw ShapeError("destination buffers do not match camera dimensions");

    ReprojectionResult out;
    out.width = dst_cam.width;
    out.height = dst_cam.height;
    const std::size_t n = static_cast<std::size_t>(out.width) * out.height;
    out.rgb.assign(n * 3, 0.0);
    out.coverage.assign(n, 0);
    out.occluded.assign(n, 0);
    out.splat_depth.assign(n, std::numeric_limits<double>::infinity());

    const std::vector<Ray> rays = generate_rays(src_cam);
    for (std::size_t p = 0; p < src.pixels(); ++p) {
        if (!src.valid[p]) continue;
        const Vec3 world = rays[p].origin + src.depth[p] * rays[p].dir;
        double px, py, t;
        if (!project(dst_cam, world, px, py, t)) continue;
        const int qx = static_cast<int>(std::floor(px));
        const int qy = static_cast<int>(std::floor(py));
        if (qx < 0 || qx >= out.width || qy < 0 || qy >= out.height) continue;
        const std::size_t q = static_cast<std::size_t>(qy) * out.width + qx;
        if (t < out.splat_depth[q]) {
            out.splat_depth[q] = t;
            out.coverage[q] = 1;
            for (int k = 0; k < 3; ++k) out.rgb[q * 3 + k] = src.color[p * 3 + k];
        }
    }

    if (dst) {
        for (std::size_t q = 0; q < n; ++q) {
            if (!out.coverage[q] || !dst->valid[q]) continue;
            if (out.splat_depth[q] > dst->depth[q] + occlusion_threshold) out.occluded[q] = 1;
        }
    }
    return out;
}

double reprojection_error(const std::vector<double>& warped_rgb,
                          const std::vector<double>& reference_rgb,
                          const std::vector<std::uint8_t>& mask) {
    if (warped_rgb.size() != reference_rgb.size() || warped_rgb.size() != mask.size() * 3)
        throw ShapeError("reprojection buffers disagree in shape");
    std::vector<double> errors;
    for (std::size_t p = 0; p < mask.size(); ++p) {
        if (!mask[p]) continue;
        double e = 0.0;
        for (int k = 0; k < 3; ++k)
            e += std::abs(warped_rgb[p * 3 + k] - reference_rgb[p * 3 + k]);
        errors.push_back(e / 3.0 * 255.0);
    }
    if (errors.empty()) throw ShapeError("reprojection error over an empty mask");
    return lower_median(std::move(errors));
}

ConsistencyReport evaluate_pair(const FieldEvaluator& field, const CameraPose& frontal,
                                const CameraPose& side, const ConsistencyOptions& opts) {
    CameraPose cam1 = frontal;
    CameraPose cam2 = side;
    cam1.width = cam1.height = opts.resolution;
    cam2.width = cam2.height = opts.resolution;

    RenderOptions ropts;
    ropts.density = opts.density;
    ropts.n_samples = opts.n_samples;
    ropts.seed = opts.seed;
    ropts.threads = opts.threads;
    ropts.fixed_view = opts.fixed_view;
    ropts.want_feature = false;

    const RenderBuffers front_buf = render(field, cam1, ropts);
    const RenderBuffers side_buf = render(field, cam2, ropts);

    const DepthPointCloud cloud1 = unproject(front_buf, cam1);
    const DepthPointCloud cloud2 = unproject(side_buf, cam2);
    if (cloud1.points.empty() || cloud2.points.empty())
        throw EvaluationError("every ray was filtered by the opacity test");

    ConsistencyReport report;
    report.frontal = cam1;
    report.side = cam2;
    report.bin_size = (cam1.t_far - cam1.t_near) / opts.n_samples;

    ChamferResult cd = modified_chamfer(cloud1.points, cloud2.points, report.bin_size);
    report.chamfer = cd.value;
    report.nn_dist = std::move(cd.d1);
    report.nn_pixel = cloud1.pixel;
    report.valid_fraction =
        static_cast<double>(cloud1.points.size()) / static_cast<double>(front_buf.pixels());

    const ReprojectionResult warp = reproject(side_buf, cam2, cam1, &front_buf,
                                              opts.occlusion_bins * report.bin_size);
    std::vector<std::uint8_t> mask(front_buf.pixels(), 0);
    std::size_t covered = 0, valid = 0;
    for (std::size_t p = 0; p < front_buf.pixels(); ++p) {
        if (!front_buf.valid[p]) continue;
        ++valid;
        if (!warp.coverage[p]) continue;
        ++covered;
        mask[p] = (opts.mask_occlusion && warp.occluded[p]) ? 0 : 1;
    }
    report.coverage_fraction = valid ? static_cast<double>(covered) / valid : 0.0;
    bool any_masked = false;
    report.l1_map.assign(front_buf.pixels(), -1.0);
    for (std::size_t p = 0; p < front_buf.pixels(); ++p) {
        if (!mask[p]) continue;
        any_masked = true;
        double e = 0.0;
        for (int k = 0; k < 3; ++k)
            e += std::abs(warp.rgb[p * 3 + k] - front_buf.color[p * 3 + k]);
        report.l1_map[p] = e / 3.0 * 255.0;
    }
    if (!any_masked) throw EvaluationError("reprojection produced no comparable pixels");
    report.median_l1 = reprojection_error(warp.rgb, front_buf.color, mask);
    return report;
}

}  // namespace sdfvr
