#include <cmath>

#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"
#include "voltgrid/bound_opt.hpp"
#include "voltgrid/grid_model.hpp"
#include "voltgrid/stability.hpp"

using namespace voltgrid;

namespace {

Mat paper_x() {
    Mat x(2);
    x(0, 0) = 0.20;
    x(0, 1) = -0.16;
    x(1, 0) = -0.16;
    x(1, 1) = 0.97;
    return x;
}

// Closed-form optimum for the 2x2 equal-weight problem, derived from the KKT
// stationarity condition on the det(A - diag(k)) = 0 boundary with
// A = 2 X^{-1}: the optimal slacks s_i = a_ii - k_i satisfy
// s_1 = |a_12| sqrt(a_11 / a_22) and s_2 = a_12^2 / s_1.
Vec kkt_oracle_2x2(const Mat& x) {
    const Eigen::MatrixXd a = 2.0 * vgtest::to_eigen(x).inverse();
    const double s1 = std::abs(a(0, 1)) * std::sqrt(a(0, 0) / a(1, 1));
    const double s2 = a(0, 1) * a(0, 1) / s1;
    return {a(0, 0) - s1, a(1, 1) - s2};
}

// Grid-search oracle for arbitrary weights on a 2x2 instance: scans the
// det = 0 boundary curve parameterized by k_1.
Vec grid_oracle_2x2(const Mat& x, const Vec& w) {
    const Eigen::MatrixXd a = 2.0 * vgtest::to_eigen(x).inverse();
    double best = -1e300;
    Vec best_k{0.0, 0.0};
    const int steps = 2000000;
    for (int i = 1; i < steps; ++i) {
        const double k1 = a(0, 0) * static_cast<double>(i) / steps;
        const double k2 = a(1, 1) - a(0, 1) * a(0, 1) / (a(0, 0) - k1);
        if (k2 <= 0.0) continue;
        const double vol = w[0] * std::log(k1) + w[1] * std::log(k2);
        if (vol > best) {
            best = vol;
            best_k = {k1, k2};
        }
    }
    return best_k;
}

}  // namespace

TEST_CASE("uniform bound sits just inside the spectral cap") {
    const Mat x = paper_x();
    const Vec k = uniform_bound(x);
    const double lam = vgtest::oracle_sym_eigs(x).back();
    REQUIRE(k[0] == Catch::Approx((1.0 - 1e-6) * 2.0 / lam).margin(1e-9));
    REQUIRE(k[0] == k[1]);
    REQUIRE(k[0] == Catch::Approx(1.9961).margin(1e-3));
    REQUIRE(in_stabilizing_set(x, k).inside);
}

TEST_CASE("optimized bounds match the kkt oracle within one percent") {
    const Mat x = paper_x();
    const LipschitzBounds bounds = optimize_bounds(x);
    const Vec oracle = kkt_oracle_2x2(x);
    REQUIRE(oracle[0] == Catch::Approx(7.3354).margin(5e-4));
    REQUIRE(oracle[1] == Catch::Approx(1.5124).margin(5e-4));
    REQUIRE(bounds.k[0] == Catch::Approx(oracle[0]).epsilon(0.01));
    REQUIRE(bounds.k[1] == Catch::Approx(oracle[1]).epsilon(0.01));
    REQUIRE(bounds.margin > 0.0);
    REQUIRE(in_stabilizing_set(x, bounds.k).inside);
}

TEST_CASE("optimized volume strictly beats the uniform box") {
    const Mat x = paper_x();
    const LipschitzBounds bounds = optimize_bounds(x);
    const Vec uni = uniform_bound(x);
    double uni_vol = 0.0;
    for (double k : uni) uni_vol += std::log(k);
    REQUIRE(bounds.log_volume > uni_vol);
    double recomputed = 0.0;
    for (double k : bounds.k) recomputed += std::log(k);
    REQUIRE(bounds.log_volume == Catch::Approx(recomputed).margin(1e-12));
}

TEST_CASE("weighted objective shifts the optimum per the grid oracle") {
    const Mat x = paper_x();
    const Vec w{2.0, 1.0};
    const LipschitzBounds bounds = optimize_bounds(x, w);
    const Vec oracle = grid_oracle_2x2(x, w);
    REQUIRE(bounds.k[0] == Catch::Approx(oracle[0]).epsilon(0.01));
    REQUIRE(bounds.k[1] == Catch::Approx(oracle[1]).epsilon(0.01));
    REQUIRE(bounds.w == w);
}

TEST_CASE("barrier gradient matches finite differences") {
    Rng rng(401);
    const Mat x = paper_x();
    const Vec w{1.0, 2.0};
    for (int rep = 0; rep < 25; ++rep) {
        const double mu = std::pow(10.0, -rng.uniform(0.0, 4.0));
        Vec k{rng.uniform(0.5, 4.0), rng.uniform(0.1, 1.0)};
        if (in_stabilizing_set(x, k).definiteness_margin <= 0.05) continue;
        const Vec g = barrier_gradient(x, k, w, mu);
        for (std::size_t i = 0; i < 2; ++i) {
            const double h = 1e-6 * k[i];
            Vec up = k, dn = k;
            up[i] += h;
            dn[i] -= h;
            const double fd = (barrier_value(x, up, w, mu) - barrier_value(x, dn, w, mu)) / (2.0 * h);
            REQUIRE(g[i] == Catch::Approx(fd).epsilon(1e-5).margin(1e-7));
        }
    }
}

TEST_CASE("barrier value rejects infeasible points") {
    const Mat x = paper_x();
    REQUIRE_THROWS_AS(barrier_value(x, {100.0, 100.0}, {1.0, 1.0}, 1.0), InfeasiblePoint);
    REQUIRE_THROWS_AS(barrier_value(x, {-1.0, 1.0}, {1.0, 1.0}, 1.0), InfeasiblePoint);
}

TEST_CASE("weight validation") {
    const Mat x = paper_x();
    REQUIRE_THROWS_AS(optimize_bounds(x, {1.0}), BadWeights);
    REQUIRE_THROWS_AS(optimize_bounds(x, {1.0, -1.0}), BadWeights);
    REQUIRE_THROWS_AS(optimize_bounds(x, {1.0, 0.0}), BadWeights);
}

TEST_CASE("optimizer is deterministic") {
    const Mat x = paper_x();
    const LipschitzBounds a = optimize_bounds(x);
    const LipschitzBounds b = optimize_bounds(x);
    REQUIRE(a.k == b.k);
    REQUIRE(a.log_volume == b.log_volume);
}

TEST_CASE("33 bus bounds are feasible and beat the uniform volume") {
    const FeederNetwork net = load_feeder(vgtest::data_path("ieee33_branches.csv"));
    const LipschitzBounds bounds = optimize_bounds(net.X());
    REQUIRE(bounds.k.size() == 32);
    for (double k : bounds.k) REQUIRE(k > 0.0);
    REQUIRE(bounds.margin > 0.0);
    REQUIRE(in_stabilizing_set(net.X(), bounds.k).inside);
    const Vec uni = uniform_bound(net.X());
    double uni_vol = 0.0;
    for (double k : uni) uni_vol += std::log(k);
    REQUIRE(bounds.log_volume > uni_vol);
}

TEST_CASE("bounds json round trip") {
    LipschitzBounds b;
    b.k = {7.33, 1.51};
    b.w = {1.0, 1.0};
    b.log_volume = 2.4;
    b.margin = 0.001;
    const LipschitzBounds back = bounds_from_json(bounds_to_json(b));
    REQUIRE(back.k == b.k);
    REQUIRE(back.w == b.w);
    REQUIRE(back.log_volume == b.log_volume);
    REQUIRE(back.margin == b.margin);
}
