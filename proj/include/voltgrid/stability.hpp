#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "voltgrid/eigen.hpp"
#include "voltgrid/errors.hpp"
#include "voltgrid/linalg.hpp"
#include "voltgrid/parallel.hpp"
#include "voltgrid/rng.hpp"

namespace voltgrid {

inline constexpr double kDefaultStabilityMargin = 1e-6;

struct StabilityCertificate {
    double rho = 0.0;  // spectral radius of I - X diag(d)
    bool stable = false;
    Vec eigenvalues;  // of I - X diag(d), ascending
};

inline nlohmann::json certificate_to_json(const StabilityCertificate& c) {
    nlohmann::json j;
    j["rho"] = c.rho;
    j["stable"] = c.stable;
    j["eigenvalues"] = c.eigenvalues;
    return j;
}

inline StabilityCertificate certificate_from_json(const nlohmann::json& j) {
    StabilityCertificate c;
    c.rho = j.at("rho").get<double>();
    c.stable = j.at("stable").get<bool>();
    c.eigenvalues = j.at("eigenvalues").get<Vec>();
    return c;
}

// Spectral radius of the closed-loop map I - X diag(d).
//
// For d > 0 the matrix is similar to the symmetric I - D^{1/2} X D^{1/2}
// (conjugate by D^{1/2}), so the symmetric solver applies. Mixed-sign or zero
// slopes break that route; then the spectrum is still real (X^{1/2}-congruence
// argument) and a seeded power iteration on B*B recovers the radius.
inline StabilityCertificate closed_loop_spectral_radius(const Mat& x, const Vec& slopes,
                                                        double margin = kDefaultStabilityMargin) {
    const std::size_t n = x.size();
    if (slopes.size() != n) throw DimensionMismatch("slope vector length does not match X");
    StabilityCertificate cert;
    const bool all_positive = std::all_of(slopes.begin(), slopes.end(), [](double k) { return k > 0.0; });
    if (all_positive) {
        Vec root(n);
        for (std::size_t i = 0; i < n; ++i) root[i] = std::sqrt(slopes[i]);
        Mat sym = x.diag_congruence(root);  // D^{1/2} X D^{1/2}
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) sym(i, j) = (i == j ? 1.0 : 0.0) - sym(i, j);
        cert.eigenvalues = sym_eigenvalues(sym);
        cert.rho = std::max(std::abs(cert.eigenvalues.front()), std::abs(cert.eigenvalues.back()));
    } else {
        Mat b = Mat::identity(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) b(i, j) -= x(i, j) * slopes[j];
        cert.rho = power_iteration_spectral_radius(b);
        cert.eigenvalues.clear();  // nonsymmetric route reports the radius only
    }
    cert.stable = cert.rho < 1.0 - margin;
    return cert;
}

// Membership in the provably stabilizing slope set:
//   k > 0 elementwise  and  2 X^{-1} - diag(k) positive definite.
// Reports both margins so callers can see how close the boundary is.
struct StabilizingSetResult {
    bool inside = false;
    double min_slope = 0.0;              // min_i k_i
    double definiteness_margin = 0.0;    // lambda_min(2 X^{-1} - diag(k))
};

inline StabilizingSetResult in_stabilizing_set(const Mat& x, const Vec& k) {
    const std::size_t n = x.size();
    if (k.size() != n) throw DimensionMismatch("slope vector length does not match X");
    StabilizingSetResult res;
    res.min_slope = *std::min_element(k.begin(), k.end());
    Mat gap = spd_inverse(x).scaled(2.0);
    for (std::size_t i = 0; i < n; ++i) gap(i, i) -= k[i];
    res.definiteness_margin = min_eigenvalue(gap);
    res.inside = res.min_slope > 0.0 && res.definiteness_margin > 0.0;
    return res;
}

struct SweepConfig {
    std::size_t samples = 100000;
    std::uint64_t seed = 0;
    double margin = kDefaultStabilityMargin;
    double scale = 1.0;               // slopes drawn from U(eps, scale * k_i)
    bool expect_all_stable = true;    // throw on an unstable draw unless disabled
};

struct SweepReport {
    std::size_t samples = 0;
    std::size_t unstable = 0;
    double max_rho = 0.0;
    Vec worst_slopes;
};

// Randomized certification sweep: draws per-bus slopes inside (0, scale*k)
// and certifies each draw. Interior offset keeps draws strictly positive.
inline SweepReport sample_stability_sweep(const Mat& x, const Vec& k, const SweepConfig& cfg) {
    const std::size_t n = x.size();
    if (k.size() != n) throw DimensionMismatch("slope vector length does not match X");
    if (cfg.samples == 0) throw EmptySweep("sweep sample count is zero");
    for (double ki : k)
        if (!(ki > 0.0)) throw InfeasibleBounds("sweep requires strictly positive slope bounds");

    std::vector<double> rho(cfg.samples, 0.0);
    std::vector<Vec> draws(cfg.samples);
    parallel_for(cfg.samples, [&](std::size_t s) {
        Rng rng(derive_seed(cfg.seed, /*stream=*/17, s));
        Vec d(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double hi = cfg.scale * k[i];
            const double eps = 1e-9 * hi;
            d[i] = rng.uniform(eps, hi);
        }
        rho[s] = closed_loop_spectral_radius(x, d, cfg.margin).rho;
        draws[s] = std::move(d);
    });

    SweepReport rep;
    rep.samples = cfg.samples;
    std::size_t worst = 0;
    for (std::size_t s = 0; s < cfg.samples; ++s) {
        if (rho[s] >= 1.0 - cfg.margin) ++rep.unstable;
        if (rho[s] > rho[worst]) worst = s;
    }
    rep.max_rho = rho[worst];
    rep.worst_slopes = draws[worst];
    if (cfg.expect_all_stable && rep.unstable > 0)
        throw NoConvergence("stability sweep found " + std::to_string(rep.unstable) +
                                " unstable draws (max rho " + std::to_string(rep.max_rho) + ")",
                            rep.max_rho);
    return rep;
}

}  // namespace voltgrid
