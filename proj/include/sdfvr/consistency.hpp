#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sdfvr/camera.hpp"
#include "sdfvr/render.hpp"

namespace sdfvr {

// Depth map lifted to world space. Only rays passing the 0.5 opacity filter
// contribute; every point satisfies point = origin + depth * direction.
struct DepthPointCloud {
    std::vector<Vec3> points;
    std::vector<std::size_t> pixel;  // source pixel of each point
    CameraPose camera;
};

DepthPointCloud unproject(const RenderBuffers& buffers, const CameraPose& cam);

struct ChamferResult {
    double value = 0;           // med min (|x-y|/bin)^2 both ways, summed
    std::vector<double> d1;     // bin-normalized nearest distance per point of S1
    std::vector<double> d2;
};

// Modified (median-based) symmetric Chamfer discrepancy. Distances are
// divided by bin_size before squaring; medians use the lower median for even
// counts. Nearest neighbors come from an exact grid-hash index.
ChamferResult modified_chamfer(const std::vector<Vec3>& s1, const std::vector<Vec3>& s2,
                               double bin_size);

// lower median for even counts; input is consumed
double lower_median(std::vector<double> values);

struct ReprojectionResult {
    int width = 0, height = 0;
    std::vector<double> rgb;              // 3 per dst pixel, splatted
    std::vector<std::uint8_t> coverage;   // a source pixel landed here
    std::vector<std::uint8_t> occluded;   // dst depth nearer than splat by > threshold
    std::vector<double> splat_depth;
};

// Unprojects every valid src pixel, projects it into dst, and z-buffers a
// nearest-pixel splat. When dst buffers are supplied, pixels whose dst depth
// is nearer than the splatted depth by more than occlusion_threshold are
// flagged occluded.
ReprojectionResult reproject(const RenderBuffers& src, const CameraPose& src_cam,
                             const CameraPose& dst_cam, const RenderBuffers* dst = nullptr,
                             double occlusion_threshold = 0.0);

// Median over masked pixels of the per-pixel mean absolute RGB difference on
// the 0-255 scale.
double reprojection_error(const std::vector<double>& warped_rgb,
                          const std::vector<double>& reference_rgb,
                          const std::vector<std::uint8_t>& mask);

struct ConsistencyOptions {
    int resolution = 128;
    int n_samples = 128;
    DensityParams density{1e-3};
    std::uint64_t seed = 0;
    int threads = 0;
    bool mask_occlusion = true;            // exclude occluded pixels from the L1 stats
    double occlusion_bins = 2.0;           // threshold in units of bin_size
    std::optional<Vec3> fixed_view;        // frontal-fixed color queries
};

struct ConsistencyReport {
    double chamfer = 0;                 // bin-normalized
    std::vector<double> nn_dist;        // per frontal point, bin units
    std::vector<std::size_t> nn_pixel;  // matching frontal pixels
    double median_l1 = 0;               // 0-255
    std::vector<double> l1_map;         // per frontal pixel, -1 where not comparable
    double valid_fraction = 0;          // frontal view
    double coverage_fraction = 0;       // reprojection coverage among valid pixels
    double bin_size = 0;
    CameraPose frontal, side;
};

// Renders both views, filters non-terminating rays, unprojects, and computes
// the modified Chamfer plus the side-to-frontal reprojection error.
ConsistencyReport evaluate_pair(const FieldEvaluator& field, const CameraPose& frontal,
                                const CameraPose& side, const ConsistencyOptions& opts);

}  // namespace sdfvr
