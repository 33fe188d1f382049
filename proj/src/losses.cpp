#include "sdfvr/losses.hpp"

#include <cmath>

#include "sdfvr/analytic_sdf.hpp"
#include "sdfvr/errors.hpp"

namespace sdfvr {

double smoothed_l1(double predicted, double truth) {
    const double e = predicted - truth;
    const double a = std::abs(e);
    return a <= 1.0 ? e * e : a;
}

double eikonal_loss(const Matrix& gradients) {
    if (gradients.cols() == 0) throw ShapeError("eikonal batch must be nonempty");
    if (gradients.rows() != 3) throw ShapeError("gradients must be 3 x B");
    double sum = 0.0;
    for (Eigen::Index c = 0; c < gradients.cols(); ++c) {
        const double r = gradients.col(c).norm() - 1.0;
        sum += r * r;
    }
    return sum / static_cast<double>(gradients.cols());
}

double minimal_surface_loss(const Vector& sdf_values, double scale) {
    if (sdf_values.size() == 0) throw ShapeError("minimal surface batch must be nonempty");
    return (-scale * sdf_values.array().abs()).exp().mean();
}

LossBreakdown total_volume_loss(double adv, double view, double eikonal, double surface,
                                const LossWeights& weights) {
    LossBreakdown b;
    b.adv = adv;
    b.view = view;
    b.eikonal = eikonal;
    b.surface = surface;
    b.total = adv + weights.lambda_view * view + weights.lambda_eik * eikonal +
              weights.lambda_surf * surface;
    return b;
}

namespace {

// Adam with beta1 = 0 (no momentum, matching the renderer's optimizer
// settings); `moments` holds the second-moment accumulators.
void adam_step(AffineParams& p, const AffineParams& g, AffineParams& moments, double lr,
               double beta2, int t) {
    const double eps = 1e-8;
    const double correction = 1.0 - std::pow(beta2, t);
    moments.W = beta2 * moments.W + (1.0 - beta2) * g.W.cwiseProduct(g.W);
    moments.b = beta2 * moments.b + (1.0 - beta2) * g.b.cwiseProduct(g.b);
    p.W -= lr * g.W.cwiseQuotient(((moments.W / correction).cwiseSqrt().array() + eps).matrix());
    p.b -= lr * g.b.cwiseQuotient(((moments.b / correction).cwiseSqrt().array() + eps).matrix());
}

template <typename Fn>
void for_each_block(FieldModel& m, ModelGradients& g, ModelGradients& v, Fn fn) {
    for (size_t i = 0; i < m.mapping.hidden.size(); ++i)
        fn(m.mapping.hidden[i], g.map_hidden[i], v.map_hidden[i]);
    fn(m.mapping.head, g.map_head, v.map_head);
    for (size_t i = 0; i < m.field.trunk.size(); ++i)
        fn(m.field.trunk[i], g.trunk[i], v.trunk[i]);
    fn(m.field.sdf_head, g.sdf_head, v.sdf_head);
    fn(m.field.color_film, g.color_film, v.color_film);
    fn(m.field.color_head, g.color_head, v.color_head);
}

}  // namespace

std::vector<double> sphere_init_fit(FieldModel& model, const SphereInitConfig& cfg, Rng& rng) {
    if (cfg.iterations < 1) throw ParamError("iteration count must be at least 1");
    if (cfg.batch < 1) throw ParamError("batch size must be at least 1");
    if (!(cfg.radius > 0.0)) throw ParamError("target radius must be positive");
    if (!(cfg.box_halfwidth > 0.0)) throw ParamError("sampling box must be positive");

    const AnalyticSdf target = AnalyticSdf::sphere(Vec3::Zero(), cfg.radius);
    ModelGradients moments = ModelGradients::zeros_like(model);
    std::vector<double> history;
    history.reserve(cfg.iterations);

    const double beta2 = 0.9;
    double initial = -1.0;
    int bad_streak = 0;

    for (int it = 1; it <= cfg.iterations; ++it) {
        Vector z(model.mapping.z_dim());
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();

        RegressionBatch batch;
        batch.x.resize(3, cfg.batch);
        batch.d_targets.resize(cfg.batch);
        for (int c = 0; c < cfg.batch; ++c) {
            const Vec3 p(rng.uniform(-cfg.box_halfwidth, cfg.box_halfwidth),
                         rng.uniform(-cfg.box_halfwidth, cfg.box_halfwidth),
                         rng.uniform(-cfg.box_halfwidth, cfg.box_halfwidth));
            batch.x.col(c) = p;
            batch.d_targets(c) = target.eval(p);
        }

        RegressionResult res = param_gradient_regression(model, z, batch);
        history.push_back(res.loss);
        if (initial < 0.0) initial = res.loss;
        if (!std::isfinite(res.loss) || res.loss > 10.0 * initial) {
            if (++bad_streak >= 100 || !std::isfinite(res.loss))
                throw TrainingError("sphere initialization diverged", history);
        } else {
            bad_streak = 0;
        }

        // cosine step decay; the momentum-free Adam otherwise plateaus at a
        // gradient-noise floor proportional to the step size
        const double lr = cfg.step_size * 0.5 *
                          (1.0 + std::cos(3.14159265358979323846 * (it - 1) / cfg.iterations));
        for_each_block(model, res.grads, moments, [&](AffineParams& p, AffineParams& g,
                                                      AffineParams& v) {
            adam_step(p, g, v, lr, beta2, it);
        });
    }
    return history;
}

double sphere_fit_residual(const FieldModel& model, double radius, int n_points, Rng& rng) {
    if (n_points < 1) throw ParamError("need at least one evaluation point");
    const AnalyticSdf target = AnalyticSdf::sphere(Vec3::Zero(), radius);
    const int chunk = 64;
    double total = 0.0;
    int done = 0;
    while (done < n_points) {
        const int b = std::min(chunk, n_points - done);
        Vector z(model.mapping.z_dim());
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
        const ModulationSignals mods = mapping_forward(model.mapping, z);

        Matrix x(3, b);
        for (int c = 0; c < b; ++c) {
            Vec3 dir(rng.normal(), rng.normal(), rng.normal());
            if (dir.norm() < 1e-12) dir = Vec3(1, 0, 0);
            dir.normalize();
            x.col(c) = dir * (radius * rng.uniform(0.5, 1.5));
        }
        RowVector d;
        field_query_batch(model.field, mods, x, Matrix(), d, nullptr, nullptr);
        for (int c = 0; c < b; ++c) total += std::abs(d(c) - target.eval(x.col(c)));
        done += b;
    }
    return total / n_points;
}

}  // namespace sdfvr
