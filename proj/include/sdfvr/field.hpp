#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sdfvr/rng.hpp"

namespace sdfvr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;
using Vec3 = Eigen::Vector3d;

// Per-layer frequency (gamma) and phase (beta) conditioning, one pair per
// modulated layer: trunk layers 0..7 followed by the color-path layer.
struct ModulationSignals {
    std::vector<Vector> gamma;
    std::vector<Vector> beta;
    int layers() const { return static_cast<int>(gamma.size()); }
};

struct AffineParams {
    Matrix W;
    Vector b;
    int in() const { return static_cast<int>(W.cols()); }
    int out() const { return static_cast<int>(W.rows()); }
};

// 3 affine layers with leaky ReLU, then an affine head that emits the
// concatenated (gamma, beta) pairs. The latent w is the last hidden output.
struct MappingNetwork {
    std::vector<AffineParams> hidden;
    AffineParams head;
    std::vector<int> mod_widths;
    double leaky_slope = 0.2;

    int z_dim() const { return hidden.front().in(); }
    int w_dim() const { return hidden.back().out(); }
};

ModulationSignals mapping_forward(const MappingNetwork& net, const Vector& z);

// sin(gamma .* (W x + b) + beta)
Vector film_siren_forward(const AffineParams& layer, const Vector& x, const Vector& gamma,
                          const Vector& beta);

// 8 shared FiLM sine layers, an affine SDF head, and a color path: one more
// FiLM sine layer on [trunk output; view direction] followed by an affine
// head squashed with a sigmoid.
struct FieldNetwork {
    std::vector<AffineParams> trunk;
    AffineParams sdf_head;
    AffineParams color_film;
    AffineParams color_head;

    int width() const { return trunk.front().out(); }
    int depth() const { return static_cast<int>(trunk.size()); }
    int feature_width() const { return color_film.out(); }
    int modulated_layers() const { return depth() + 1; }
};

struct FieldSample {
    double d = 0.0;
    Vec3 color = Vec3::Zero();
    Vector feature;
};

FieldSample field_query(const FieldNetwork& net, const Vec3& x, const Vec3& v,
                        const ModulationSignals& mods);

// Columns of `x` are query points; columns of `v` are (unit) view directions.
// Skips the color path entirely when color/feature outputs are null.
void field_query_batch(const FieldNetwork& net, const ModulationSignals& mods, const Matrix& x,
                       const Matrix& v, RowVector& d_out, Matrix* color_out, Matrix* feature_out);

// exact d(d)/d(x) by reverse sweep through the trunk and SDF head
Vec3 sdf_input_gradient(const FieldNetwork& net, const Vec3& x, const ModulationSignals& mods);

struct FieldModel {
    MappingNetwork mapping;
    FieldNetwork field;
};

struct FieldArch {
    int z_dim = 256;
    int map_hidden = 256;
    int trunk_width = 256;
    int feature_width = 256;
    int trunk_depth = 8;
    int map_depth = 3;
    double omega0 = 30.0;
};

FieldArch arch_of(const FieldModel& model);
FieldModel make_field_model(const FieldArch& arch, Rng& rng);

// Gradient containers mirror the parameter layout exactly.
struct ModelGradients {
    std::vector<AffineParams> map_hidden;
    AffineParams map_head;
    std::vector<AffineParams> trunk;
    AffineParams sdf_head;
    AffineParams color_film;
    AffineParams color_head;

    static ModelGradients zeros_like(const FieldModel& model);
};

struct RegressionBatch {
    Matrix x;          // 3 x B
    Vector d_targets;  // B
    Matrix v;          // 3 x B, only consulted when c_targets is nonempty
    Matrix c_targets;  // 3 x B or empty (d-only regression)
};

struct RegressionResult {
    double loss = 0.0;
    ModelGradients grads;
};

// Mean-squared-error regression of the SDF output (and optionally the color
// output) against targets; returns gradients for every parameter reachable
// from the loss, including the mapping network's.
RegressionResult param_gradient_regression(const FieldModel& model, const Vector& z,
                                           const RegressionBatch& batch);

// Per-layer (dL/dgamma, dL/dbeta) -> mapping parameter gradients.
void mapping_backward(const MappingNetwork& net, const Vector& z, const ModulationSignals& d_mods,
                      std::vector<AffineParams>& d_hidden, AffineParams& d_head);

// Binary parameter file: little-endian float32 tensors behind a
// self-describing header (magic, version, layer widths).
void save_model(const FieldModel& model, const std::string& path);
FieldModel load_model(const std::string& path);

}  // namespace sdfvr
