#include "sdfvr/density.hpp"

#include <cmath>

#include "sdfvr/errors.hpp"

namespace sdfvr {

namespace {

double stable_sigmoid(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

}  // namespace

double sdf_to_density(double d, const DensityParams& params) {
    if (!(params.alpha > 0.0)) throw ParamError("density alpha must be positive");
    return stable_sigmoid(-d / params.alpha) / params.alpha;
}

RaySamples RaySamples::with_offset(double t_near, double t_far, int n, double delta) {
    if (!(t_far > t_near)) throw ParamError("t_far must exceed t_near");
    if (n < 1) throw ParamError("sample count must be at least 1");
    RaySamples s;
    s.t_near = t_near;
    s.t_far = t_far;
    s.n = n;
    s.bin_size = (t_far - t_near) / n;
    if (!(delta >= 0.0) || delta >= s.bin_size) throw ParamError("offset outside [0, bin)");
    s.delta = delta;
    s.t.resize(n);
    for (int i = 0; i < n; ++i) s.t(i) = t_near + delta + s.bin_size * i;
    return s;
}

RaySamples sample_ray(double t_near, double t_far, int n, Rng& rng) {
    if (!(t_far > t_near)) throw ParamError("t_far must exceed t_near");
    if (n < 1) throw ParamError("sample count must be at least 1");
    const double bin = (t_far - t_near) / n;
    return RaySamples::with_offset(t_near, t_far, n, rng.uniform() * bin);
}

CompositeWeights composite_weights(const RaySamples& samples, const Vector& densities) {
    if (densities.size() != samples.n) throw ShapeError("density count mismatch");
    if (densities.size() > 0 && densities.minCoeff() < 0.0)
        throw ShapeError("densities must be non-negative");
    CompositeWeights w;
    w.transmittance.resize(samples.n);
    w.alpha.resize(samples.n);
    w.weight.resize(samples.n);
    double trans = 1.0;
    double opacity = 0.0;
    for (int i = 0; i < samples.n; ++i) {
        const double a = -std::expm1(-densities(i) * samples.bin_size);
        w.transmittance(i) = trans;
        w.alpha(i) = a;
        w.weight(i) = trans * a;
        opacity += w.weight(i);
        trans *= 1.0 - a;
    }
    w.opacity = std::min(opacity, 1.0);
    return w;
}

std::pair<Vector, CompositeWeights> composite(const RaySamples& samples, const Vector& densities,
                                              const Matrix& values) {
    if (values.cols() != samples.n) throw ShapeError("value count mismatch");
    CompositeWeights w = composite_weights(samples, densities);
    Vector integrated = values * w.weight;
    return {std::move(integrated), std::move(w)};
}

std::pair<double, bool> expected_depth(const RaySamples& samples, const CompositeWeights& weights) {
    if (weights.weight.size() != samples.n) throw ShapeError("weights do not match samples");
    const double depth = weights.weight.dot(samples.t);
    return {depth, weights.opacity >= kOpacityThreshold};
}

}  // namespace sdfvr
