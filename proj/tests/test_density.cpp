#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "sdfvr/analytic_sdf.hpp"
#include "sdfvr/density.hpp"
#include "sdfvr/errors.hpp"
#include "sdfvr/rng.hpp"

using namespace sdfvr;

TEST_CASE("sdf_to_density at the surface") {
    CHECK(sdf_to_density(0.0, {0.5}) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("sdf_to_density far outside is effectively zero") {
    CHECK(sdf_to_density(10.0, {0.01}) < 1e-300);
}

TEST_CASE("sdf_to_density one alpha inside the surface") {
    const double sigmoid1 = 1.0 / (1.0 + std::exp(-1.0));  // direct evaluation
    for (double alpha : {0.01, 0.5, 2.0})
        CHECK(sdf_to_density(-alpha, {alpha}) == doctest::Approx(sigmoid1 / alpha).epsilon(1e-14));
}

TEST_CASE("sdf_to_density rejects non-positive alpha") {
    CHECK_THROWS_AS(sdf_to_density(0.0, {0.0}), ParamError);
    CHECK_THROWS_AS(sdf_to_density(0.0, {-1.0}), ParamError);
}

TEST_CASE("sample_ray zero jitter") {
    const RaySamples s = RaySamples::with_offset(0.0, 1.0, 4, 0.0);
    CHECK(s.t(0) == doctest::Approx(0.0));
    CHECK(s.t(1) == doctest::Approx(0.25));
    CHECK(s.t(2) == doctest::Approx(0.5));
    CHECK(s.t(3) == doctest::Approx(0.75));
}

TEST_CASE("sample_ray bin size for the dataset camera range") {
    Rng rng(1);
    const RaySamples s = sample_ray(0.88, 1.12, 24, rng);
    CHECK(s.bin_size == doctest::Approx(0.01).epsilon(1e-15));
}

TEST_CASE("sample_ray structural properties over many draws") {
    Rng rng(2);
    for (int trial = 0; trial < 2000; ++trial) {
        const double t_near = rng.uniform(0.1, 2.0);
        const double t_far = t_near + rng.uniform(0.01, 3.0);
        const int n = 1 + static_cast<int>(rng.next_u64() % 128);
        const RaySamples s = sample_ray(t_near, t_far, n, rng);
        CHECK(s.t(n - 1) < t_far);
        CHECK(s.t(0) >= t_near);
        for (int i = 0; i + 1 < n; ++i) {
            CHECK(s.t(i + 1) > s.t(i));
            CHECK(std::abs((s.t(i + 1) - s.t(i)) - s.bin_size) < 1e-12);
        }
    }
}

TEST_CASE("sample_ray output is a function of delta alone") {
    const RaySamples a = RaySamples::with_offset(0.3, 0.9, 17, 0.013);
    const RaySamples b = RaySamples::with_offset(0.3, 0.9, 17, 0.013);
    CHECK(a.t == b.t);  // bitwise
}

TEST_CASE("sample_ray rejects bad parameters") {
    Rng rng(3);
    CHECK_THROWS_AS(sample_ray(1.0, 1.0, 4, rng), ParamError);
    CHECK_THROWS_AS(sample_ray(0.0, 1.0, 0, rng), ParamError);
}

TEST_CASE("composite with zero density is empty space") {
    const RaySamples s = RaySamples::with_offset(0.0, 1.0, 8, 0.0);
    const Matrix values = Matrix::Random(3, 8);
    const auto [integrated, w] = composite(s, Vector::Zero(8), values);
    CHECK(integrated.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK(w.opacity == doctest::Approx(0.0));
}

TEST_CASE("composite constant density telescopes exactly") {
    Rng rng(4);
    for (int n : {1, 24, 128}) {
        for (int trial = 0; trial < 20; ++trial) {
            const double t_near = 0.88, t_far = 1.12;
            const double sigma = rng.uniform(0.0, 50.0);
            const RaySamples s = sample_ray(t_near, t_far, n, rng);
            const auto w = composite_weights(s, Vector::Constant(n, sigma));
            const double expect = 1.0 - std::exp(-sigma * (t_far - t_near));
            CHECK(w.opacity == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("composite opaque first sample takes all weight") {
    const RaySamples s = RaySamples::with_offset(0.0, 1.0, 4, 0.0);
    Vector dens = Vector::Zero(4);
    dens(0) = 1e6;
    Matrix values(1, 4);
    values << 7.0, 1.0, 2.0, 3.0;
    const auto [integrated, w] = composite(s, dens, values);
    CHECK(w.weight(0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(integrated(0) == doctest::Approx(7.0).epsilon(1e-9));
}

TEST_CASE("composite rejects negative densities") {
    const RaySamples s = RaySamples::with_offset(0.0, 1.0, 2, 0.0);
    Vector dens(2);
    dens << 0.5, -0.1;
    CHECK_THROWS_AS(composite_weights(s, dens), ShapeError);
}

TEST_CASE("opacity bounds and transmittance monotonicity, many random rays") {
    Rng rng(5);
    for (int trial = 0; trial < 10000; ++trial) {
        const int n = 1 + static_cast<int>(rng.next_u64() % 32);
        const RaySamples s = sample_ray(0.5, 1.5, n, rng);
        Vector dens(n);
        for (int i = 0; i < n; ++i) dens(i) = rng.uniform(0.0, 200.0);
        const auto w = composite_weights(s, dens);
        CHECK(w.opacity >= 0.0);
        CHECK(w.opacity <= 1.0);
        CHECK(w.transmittance(0) == 1.0);
        for (int i = 0; i + 1 < n; ++i) CHECK(w.transmittance(i + 1) <= w.transmittance(i));
        for (int i = 0; i < n; ++i) CHECK(w.weight(i) >= 0.0);
    }
}

TEST_CASE("expected_depth on opaque first sample") {
    const RaySamples s = RaySamples::with_offset(0.0, 1.0, 4, 0.0);
    Vector dens = Vector::Zero(4);
    dens(0) = 1e7;
    const auto w = composite_weights(s, dens);
    const auto [depth, valid] = expected_depth(s, w);
    CHECK(valid);
    CHECK(depth == doctest::Approx(s.t(0)).epsilon(1e-6));
}

TEST_CASE("expected_depth of empty space is invalid") {
    const RaySamples s = RaySamples::with_offset(0.0, 1.0, 4, 0.0);
    const auto w = composite_weights(s, Vector::Zero(4));
    const auto [depth, valid] = expected_depth(s, w);
    CHECK(depth == doctest::Approx(0.0));
    CHECK_FALSE(valid);
}

TEST_CASE("expected depth converges to the ray-sphere intersection") {
    // camera at distance 1, central ray, sphere r = 0.25 at origin; the
    // sampled range brackets the surface hit at t = 0.75
    const Vec3 origin(0, 0, 1), dir(0, 0, -1);
    const AnalyticSdf sphere = AnalyticSdf::sphere(Vec3::Zero(), 0.25);
    const double t_hit = *oracle::ray_sphere(origin, dir, Vec3::Zero(), 0.25);
    CHECK(t_hit == doctest::Approx(0.75));

    Rng rng(6);
    const int n = 128;
    const RaySamples s = sample_ray(0.5, 1.0, n, rng);
    const DensityParams params{1e-3};
    Vector dens(n);
    for (int i = 0; i < n; ++i) dens(i) = sdf_to_density(sphere.eval(origin + s.t(i) * dir), params);
    const auto w = composite_weights(s, dens);
    const auto [depth, valid] = expected_depth(s, w);
    CHECK(valid);
    CHECK(std::abs(depth - t_hit) < s.bin_size);

    // for any sharper alpha the error stays below one bin (the quadrature
    // cannot localize the surface better than its sample spacing)
    for (double alpha : {1e-2, 1e-3, 1e-4, 1e-5}) {
        for (int i = 0; i < n; ++i)
            dens(i) = sdf_to_density(sphere.eval(origin + s.t(i) * dir), DensityParams{alpha});
        const auto wa = composite_weights(s, dens);
        CHECK(std::abs(expected_depth(s, wa).first - t_hit) < s.bin_size);
    }
}
