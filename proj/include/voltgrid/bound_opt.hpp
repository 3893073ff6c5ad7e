#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "voltgrid/eigen.hpp"
#include "voltgrid/errors.hpp"
#include "voltgrid/linalg.hpp"

namespace voltgrid {

inline constexpr double kUniformBoundShrink = 1e-6;

struct LipschitzBounds {
    Vec k;           // per-bus slope caps
    Vec w;           // weights used in the objective
    double log_volume = 0.0;  // sum_i w_i log k_i at the solution
    double margin = 0.0;      // lambda_min(2 X^{-1} - diag(k)) at the solution
};

inline nlohmann::json bounds_to_json(const LipschitzBounds& b) {
    nlohmann::json j;
    j["k"] = b.k;
    j["w"] = b.w;
    j["log_volume"] = b.log_volume;
    j["margin"] = b.margin;
    return j;
}

inline LipschitzBounds bounds_from_json(const nlohmann::json& j) {
    LipschitzBounds b;
    b.k = j.at("k").get<Vec>();
    b.w = j.at("w").get<Vec>();
    b.log_volume = j.at("log_volume").get<double>();
    b.margin = j.at("margin").get<double>();
    return b;
}

// Largest uniform slope cap: k_i = (1 - shrink) * 2 / lambda_max(X).
inline Vec uniform_bound(const Mat& x, double shrink = kUniformBoundShrink) {
    const double lam = max_eigenvalue(x);
    if (!(lam > 0.0)) throw NotPositiveDefinite("X has no positive spectrum", lam);
    return Vec(x.size(), (1.0 - shrink) * 2.0 / lam);
}

namespace detail {

// lambda_min of A - diag(k); negative means infeasible
inline double gap_min_eigenvalue(const Mat& a, const Vec& k) {
    Mat m = a;
    for (std::size_t i = 0; i < k.size(); ++i) m(i, i) -= k[i];
    return min_eigenvalue(m);
}

inline double barrier_value_at(const Mat& a, const Vec& k, const Vec& w, double mu) {
    double val = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (!(k[i] > 0.0)) throw InfeasiblePoint("nonpositive slope in barrier evaluation");
        val += w[i] * std::log(k[i]);
    }
    Mat m = a;
    for (std::size_t i = 0; i < k.size(); ++i) m(i, i) -= k[i];
    val += mu * spd_log_det(m);  // throws InfeasiblePoint outside the cone
    return val;
}

inline Vec barrier_gradient_at(const Mat& a, const Vec& k, const Vec& w, double mu) {
    Mat m = a;
    for (std::size_t i = 0; i < k.size(); ++i) m(i, i) -= k[i];
    Mat minv = spd_inverse(m);
    Vec g(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) g[i] = w[i] / k[i] - mu * minv(i, i);
    return g;
}

// Negated barrier Hessian, SPD everywhere in the interior:
//   (-H)_ij = delta_ij w_i / k_i^2 + mu ([M^-1]_ij)^2
inline Mat barrier_neg_hessian_at(const Mat& a, const Vec& k, const Vec& w, double mu) {
    const std::size_t n = k.size();
    Mat m = a;
    for (std::size_t i = 0; i < n; ++i) m(i, i) -= k[i];
    const Mat minv = spd_inverse(m);
    Mat nh(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) nh(i, j) = mu * minv(i, j) * minv(i, j);
    for (std::size_t i = 0; i < n; ++i) nh(i, i) += w[i] / (k[i] * k[i]);
    return nh;
}

}  // namespace detail

// Barrier objective sum_i w_i log k_i + mu log det(2 X^{-1} - diag(k)) and its
// gradient, exposed for verification against finite differences.
inline double barrier_value(const Mat& x, const Vec& k, const Vec& w, double mu) {
    return detail::barrier_value_at(spd_inverse(x).scaled(2.0), k, w, mu);
}

inline Vec barrier_gradient(const Mat& x, const Vec& k, const Vec& w, double mu) {
    return detail::barrier_gradient_at(spd_inverse(x).scaled(2.0), k, w, mu);
}

struct BoundOptOptions {
    double mu_start = 1.0;
    double mu_factor = 0.1;
    double mu_floor = 1e-8;
    double grad_tol = 1e-9;       // sup-norm target per barrier stage
    std::size_t max_iters = 20000;  // per stage
};

// Maximizes sum_i w_i log k_i over { k > 0 : diag(k) < 2 X^{-1} } with a
// log-det barrier on the matrix constraint. Stages sharpen the barrier weight
// mu geometrically; each stage runs damped Newton ascent (the barrier is
// strictly concave with an explicit Hessian) with Armijo backtracking and
// feasibility halving, warm-started from the previous stage.
inline LipschitzBounds optimize_bounds(const Mat& x, Vec w = {},
                                       const BoundOptOptions& opt = {}) {
    const std::size_t n = x.size();
    if (w.empty()) w.assign(n, 1.0);
    if (w.size() != n) throw BadWeights("weight vector length does not match X");
    for (double wi : w)
        if (!(wi > 0.0)) throw BadWeights("weights must be strictly positive");

    const Mat a = spd_inverse(x).scaled(2.0);
    Vec k = uniform_bound(x);
    for (auto& ki : k) ki *= 0.5;  // safely interior start

    constexpr double kStallStep = 1e-18;
    constexpr double kArmijo = 1e-4;

    for (double mu = opt.mu_start; mu >= opt.mu_floor * (1.0 - 1e-12); mu *= opt.mu_factor) {
        Vec g = detail::barrier_gradient_at(a, k, w, mu);
        double phi = detail::barrier_value_at(a, k, w, mu);
        bool progressing = true;
        std::size_t noise_steps = 0;
        std::size_t it = 0;
        for (; it < opt.max_iters; ++it) {
            if (norm_inf(g) <= opt.grad_tol) break;

            const Vec dir = spd_inverse(detail::barrier_neg_hessian_at(a, k, w, mu)) * g;
            const double ascent = dot(g, dir);  // > 0 by positive definiteness
            // a full Newton step promises a gain of ~ascent/2; once that drops
            // below the evaluation noise of phi the stage is stationary
            const double noise_floor = 1e-15 * std::max(1.0, std::abs(phi));
            if (ascent <= noise_floor) {
                progressing = false;
                break;
            }

            double step = 1.0;
            bool accepted = false;
            Vec trial(n);
            while (step >= kStallStep) {
                bool positive = true;
                for (std::size_t i = 0; i < n; ++i) {
                    trial[i] = k[i] + step * dir[i];
                    if (!(trial[i] > 0.0)) positive = false;
                }
                if (positive && detail::gap_min_eigenvalue(a, trial) > 0.0) {
                    const double phi_trial = detail::barrier_value_at(a, trial, w, mu);
                    if (phi_trial >= phi + kArmijo * step * ascent) {
                        noise_steps = phi_trial - phi <= noise_floor ? noise_steps + 1 : 0;
                        k = trial;
                        phi = phi_trial;
                        g = detail::barrier_gradient_at(a, k, w, mu);
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if (!accepted || noise_steps >= 3) {  // numerically stationary for this stage
                progressing = false;
                break;
            }
        }
        if (it == opt.max_iters && progressing && norm_inf(g) > opt.grad_tol)
            throw NoConvergence("bound optimization stage mu=" + std::to_string(mu) +
                                    " hit the iteration cap",
                                norm_inf(g));
    }

    LipschitzBounds res;
    res.k = k;
    res.w = w;
    res.log_volume = 0.0;
    for (std::size_t i = 0; i < n; ++i) res.log_volume += w[i] * std::log(k[i]);
    res.margin = detail::gap_min_eigenvalue(a, k);
    return res;
}

}  // namespace voltgrid
