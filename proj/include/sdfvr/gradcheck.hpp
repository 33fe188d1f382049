#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdfvr/field.hpp"

namespace sdfvr {

struct GradCheckRow {
    std::string name;
    double input_err = 0.0;  // only set on the input-gradient row
    double param_err = 0.0;
    int checks = 0;
};

struct GradCheckReport {
    std::vector<GradCheckRow> rows;
    double worst = 0.0;
    int configurations = 0;  // (net, point) pairs exercised

    bool pass(double tolerance) const { return worst < tolerance; }
};

// Central finite differences (h = 1e-4) against the analytic input and
// parameter gradients over randomly sized small networks. `corrupt` is a
// test hook that biases the analytic input gradient so the check must fail.
GradCheckReport run_gradcheck(int n_nets, int points_per_net, std::uint64_t seed,
                              bool corrupt = false);

}  // namespace sdfvr
