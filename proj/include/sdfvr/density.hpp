#pragma once

#include <Eigen/Dense>
#include <utility>

#include "sdfvr/rng.hpp"

namespace sdfvr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Learned tightness of the density around the surface boundary; smaller
// alpha means a sharper object boundary.
struct DensityParams {
    double alpha = 0.1;
};

// sigma = (1/alpha) * sigmoid(-d / alpha)
double sdf_to_density(double d, const DensityParams& params);

// N evenly spaced samples over [t_near, t_far) sharing a single uniform
// offset delta in [0, bin_size); no stratified randomness.
struct RaySamples {
    double t_near = 0, t_far = 0;
    int n = 0;
    double delta = 0;
    double bin_size = 0;
    Vector t;

    // deterministic constructor: t_i = t_near + delta + bin_size * i
    static RaySamples with_offset(double t_near, double t_far, int n, double delta);
};

RaySamples sample_ray(double t_near, double t_far, int n, Rng& rng);

struct CompositeWeights {
    Vector transmittance;  // T_i, T_0 = 1, non-increasing
    Vector alpha;          // a_i = 1 - exp(-sigma_i * bin)
    Vector weight;         // w_i = T_i * a_i
    double opacity = 0;    // sum of weights
};

CompositeWeights composite_weights(const RaySamples& samples, const Vector& densities);

// Discrete quadrature of per-sample values (columns of `values` are one
// sample each, K rows). Returns the integrated K-vector and the weights for
// reuse by depth / opacity.
std::pair<Vector, CompositeWeights> composite(const RaySamples& samples, const Vector& densities,
                                              const Matrix& values);

// Expected termination distance: unnormalized sum of w_i * t_i. The flag is
// false for rays whose accumulated opacity is below 0.5.
std::pair<double, bool> expected_depth(const RaySamples& samples, const CompositeWeights& weights);

inline constexpr double kOpacityThreshold = 0.5;

}  // namespace sdfvr
