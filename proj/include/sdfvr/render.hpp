#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "sdfvr/analytic_sdf.hpp"
#include "sdfvr/camera.hpp"
#include "sdfvr/density.hpp"
#include "sdfvr/field.hpp"

namespace sdfvr {

// Batch scene interface for the renderer and the grid sampler. Columns of
// `x` are query points. `v` may be empty when neither color nor feature is
// requested. Implementations must be safe for concurrent const calls.
class FieldEvaluator {
  public:
    virtual ~FieldEvaluator() = default;
    virtual int feature_width() const = 0;
    virtual void evaluate(const Matrix& x, const Matrix& v, RowVector& d, Matrix* color,
                          Matrix* feature) const = 0;
};

// Analytic primitive plus a simple view-independent color function.
class AnalyticEvaluator : public FieldEvaluator {
  public:
    enum class ColorMode { Position, Constant };

    explicit AnalyticEvaluator(AnalyticSdf shape, ColorMode mode = ColorMode::Position,
                               double color_scale = 2.0)
        : shape_(std::move(shape)), mode_(mode), color_scale_(color_scale) {}

    int feature_width() const override { return 0; }
    void evaluate(const Matrix& x, const Matrix& v, RowVector& d, Matrix* color,
                  Matrix* feature) const override;

    const AnalyticSdf& shape() const { return shape_; }

  private:
    AnalyticSdf shape_;
    ColorMode mode_;
    double color_scale_;
};

class NetworkEvaluator : public FieldEvaluator {
  public:
    NetworkEvaluator(const FieldNetwork& net, ModulationSignals mods)
        : net_(&net), mods_(std::move(mods)) {}

    int feature_width() const override { return net_->feature_width(); }
    void evaluate(const Matrix& x, const Matrix& v, RowVector& d, Matrix* color,
                  Matrix* feature) const override;

  private:
    const FieldNetwork* net_;
    ModulationSignals mods_;
};

struct RenderBuffers {
    int width = 0, height = 0, feature_width = 0;
    std::vector<double> color;    // 3 per pixel, interleaved
    std::vector<double> feature;  // feature_width per pixel, interleaved
    std::vector<double> depth;    // expected termination distance
    std::vector<double> opacity;
    std::vector<std::uint8_t> valid;  // opacity >= 0.5

    std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
};

struct RenderOptions {
    DensityParams density{0.1};
    int n_samples = 24;
    std::uint64_t seed = 0;
    int threads = 0;
    // When set, color/feature queries use this view direction instead of the
    // per-ray direction (inference-time frontal fixing).
    std::optional<Vec3> fixed_view;
    bool want_color = true;
    bool want_feature = true;
};

// One ray per pixel, even-bin single-offset sampling, alpha compositing.
// Per-ray sample offsets are derived from (seed, pixel index), so output is
// identical for any thread count.
RenderBuffers render(const FieldEvaluator& field, const CameraPose& cam,
                     const RenderOptions& opts);

}  // namespace sdfvr
