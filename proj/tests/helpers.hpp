#pragma once

#include "sdfvr/render.hpp"

namespace testutil {

// SDF fixed at a constant value everywhere (empty scene for large positives).
class ConstantField : public sdfvr::FieldEvaluator {
  public:
    explicit ConstantField(double d) : d_(d) {}
    int feature_width() const override { return 0; }
    void evaluate(const sdfvr::Matrix& x, const sdfvr::Matrix&, sdfvr::RowVector& d,
                  sdfvr::Matrix* color, sdfvr::Matrix* feature) const override {
        d = sdfvr::RowVector::Constant(x.cols(), d_);
        if (color) *color = sdfvr::Matrix::Constant(3, x.cols(), 0.5);
        if (feature) feature->resize(0, x.cols());
    }

  private:
    double d_;
};

}  // namespace testutil
