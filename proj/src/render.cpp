#include "sdfvr/render.hpp"

#include <algorithm>
#include <cmath>

#include "sdfvr/errors.hpp"
#include "sdfvr/parallel.hpp"

namespace sdfvr {

void AnalyticEvaluator::evaluate(const Matrix& x, const Matrix& v, RowVector& d, Matrix* color,
                                 Matrix* feature) const {
    (void)v;
    const Eigen::Index B = x.cols();
    d.resize(B);
    for (Eigen::Index c = 0; c < B; ++c) d(c) = shape_.eval(x.col(c));
    if (feature) feature->resize(0, B);
    if (color) {
        color->resize(3, B);
        if (mode_ == ColorMode::Constant) {
            color->setConstant(0.5);
        } else {
            for (Eigen::Index c = 0; c < B; ++c) {
                const Vec3 p = (x.col(c) - shape_.center()) * color_scale_;
                for (int k = 0; k < 3; ++k)
                    (*color)(k, c) = std::clamp(0.5 + p(k), 0.0, 1.0);
            }
        }
    }
}

void NetworkEvaluator::evaluate(const Matrix& x, const Matrix& v, RowVector& d, Matrix* color,
                                Matrix* feature) const {
    field_query_batch(*net_, mods_, x, v, d, color, feature);
}

RenderBuffers render(const FieldEvaluator& field, const CameraPose& cam,
                     const RenderOptions& opts) {
    if (opts.n_samples < 1) throw ParamError("sample count must be at least 1");
    const int w = cam.width, h = cam.height, n = opts.n_samples;
    const bool want_color = opts.want_color;
    const bool want_feature = opts.want_feature && field.feature_width() > 0;
    const int fw = want_feature ? field.feature_width() : 0;

    RenderBuffers buf;
    buf.width = w;
    buf.height = h;
    buf.feature_width = fw;
    buf.color.assign(buf.pixels() * 3, 0.0);
    buf.feature.assign(buf.pixels() * fw, 0.0);
    buf.depth.assign(buf.pixels(), 0.0);
    buf.opacity.assign(buf.pixels(), 0.0);
    buf.valid.assign(buf.pixels(), 0);

    const std::vector<Ray> rays = generate_rays(cam);

    parallel_for(static_cast<std::size_t>(h), opts.threads, [&](std::size_t j0, std::size_t j1) {
        Matrix x(3, static_cast<Eigen::Index>(w) * n);
        Matrix v;
        if (want_color || want_feature) v.resize(3, static_cast<Eigen::Index>(w) * n);
        RowVector d;
        Matrix color, feature;

        for (std::size_t j = j0; j < j1; ++j) {
            std::vector<RaySamples> samples;
            samples.reserve(w);
            for (int i = 0; i < w; ++i) {
                const std::size_t pixel = j * w + i;
                Rng rng = Rng::for_stream(opts.seed, pixel);
                samples.push_back(sample_ray(cam.t_near, cam.t_far, n, rng));
                const Ray& ray = rays[pixel];
                const Vec3 view = opts.fixed_view ? *opts.fixed_view : ray.dir;
                for (int k = 0; k < n; ++k) {
                    const Eigen::Index col = static_cast<Eigen::Index>(i) * n + k;
                    x.col(col) = ray.origin + samples[i].t(k) * ray.dir;
                    if (v.size() != 0) v.col(col) = view;
                }
            }

            field.evaluate(x, v, d, want_color ? &color : nullptr,
                           want_feature ? &feature : nullptr);

            Vector densities(n);
            Matrix values(3 * want_color + fw, n);
            for (int i = 0; i < w; ++i) {
                const std::size_t pixel = j * w + i;
                for (int k = 0; k < n; ++k) {
                    const Eigen::Index col = static_cast<Eigen::Index>(i) * n + k;
                    densities(k) = sdf_to_density(d(col), opts.density);
                    if (want_color) values.block(0, k, 3, 1) = color.col(col);
                    if (fw > 0) values.block(3 * want_color, k, fw, 1) = feature.col(col);
                }
                auto [integrated, weights] = composite(samples[i], densities, values);
                const auto [depth, ok] = expected_depth(samples[i], weights);
                if (want_color)
                    for (int k = 0; k < 3; ++k) buf.color[pixel * 3 + k] = integrated(k);
                for (int k = 0; k < fw; ++k)
                    buf.feature[pixel * fw + k] = integrated(3 * want_color + k);
                buf.depth[pixel] = depth;
                buf.opacity[pixel] = weights.opacity;
                buf.valid[pixel] = ok ? 1 : 0;
            }
        }
    });

    return buf;
}

}  // namespace sdfvr
