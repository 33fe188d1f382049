#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sdfvr/field.hpp"
#include "sdfvr/rng.hpp"

namespace sdfvr {

struct LossWeights {
    double lambda_view = 15.0;
    double lambda_eik = 0.1;
    double lambda_surf = 0.05;
};

struct LossBreakdown {
    double adv = 0;
    double view = 0;
    double eikonal = 0;
    double surface = 0;
    double total = 0;
};

// (pred - true)^2 when |pred - true| <= 1, |pred - true| otherwise
double smoothed_l1(double predicted, double truth);

// mean of (||g||_2 - 1)^2 over gradient columns
double eikonal_loss(const Matrix& gradients);

// mean of exp(-scale * |d|)
double minimal_surface_loss(const Vector& sdf_values, double scale = 100.0);

// adv + lambda_view*view + lambda_eik*eikonal + lambda_surf*surface. The
// adversarial term is an externally supplied scalar.
LossBreakdown total_volume_loss(double adv, double view, double eikonal, double surface,
                                const LossWeights& weights = {});

struct SphereInitConfig {
    double radius = 0.25;
    int iterations = 10000;
    double step_size = 1e-4;
    int batch = 256;
    double box_halfwidth = 1.344;  // 1.2 * t_far for the default camera range
};

// Fits the model to the analytic sphere SDF: per iteration a fresh latent is
// drawn, points are sampled uniformly in the box, and an Adam step
// (beta1 = 0, beta2 = 0.9) is taken on the d-regression loss. Returns the
// per-iteration loss history; throws TrainingError on divergence.
std::vector<double> sphere_init_fit(FieldModel& model, const SphereInitConfig& cfg, Rng& rng);

// Mean |d_pred - d_true| over held-out points sampled on a shell around the
// target sphere, with fresh latents.
double sphere_fit_residual(const FieldModel& model, double radius, int n_points, Rng& rng);

}  // namespace sdfvr
