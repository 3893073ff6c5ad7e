#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "voltgrid/errors.hpp"
#include "voltgrid/linalg.hpp"
#include "voltgrid/rng.hpp"

namespace voltgrid {

inline constexpr double kSymmetryTol = 1e-9;
inline constexpr int kJacobiSweepCap = 100;

struct EigenDecomposition {
    Vec eigenvalues;   // ascending
    Mat eigenvectors;  // column j pairs with eigenvalues[j]; empty unless requested
    double off_diagonal_residual = 0.0;
};

namespace detail {

// Cyclic Jacobi on a working copy held in a flat row-major buffer. Rotations
// are applied to full rows/columns; V accumulates rotations when requested.
inline EigenDecomposition jacobi_impl(const Mat& a_in, bool want_vectors) {
    const std::size_t n = a_in.size();
    if (a_in.max_asymmetry() > kSymmetryTol * std::max(1.0, a_in.frobenius_norm()))
        throw NotSymmetric("jacobi: matrix is not symmetric within tolerance");

    Mat a = a_in;
    // Work on the symmetrized matrix so tiny input asymmetry cannot leak
    // through the rotation updates.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double m = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = m;
            a(j, i) = m;
        }

    Mat v = want_vectors ? Mat::identity(n) : Mat();
    const double fro = std::max(a.frobenius_norm(), 1e-300);
    const double stop = 1e-12 * fro;

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    int sweep = 0;
    double off = off_norm();
    while (off > stop) {
        if (++sweep > kJacobiSweepCap)
            throw NoConvergence("jacobi: sweep cap exceeded", off);
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-300) {
                    a(p, q) = 0.0;
                    a(q, p) = 0.0;
                    continue;
                }
                const double app = a(p, p);
                const double aqq = a(q, q);
                const double theta = 0.5 * (aqq - app) / apq;
                double t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                if (theta < 0.0) t = -t;
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = akp - s * (akq + tau * akp);
                    a(p, k) = a(k, p);
                    a(k, q) = akq + s * (akp - tau * akq);
                    a(q, k) = a(k, q);
                }
                if (want_vectors) {
                    for (std::size_t k = 0; k < n; ++k) {
                        const double vkp = v(k, p);
                        const double vkq = v(k, q);
                        v(k, p) = vkp - s * (vkq + tau * vkp);
                        v(k, q) = vkq + s * (vkp - tau * vkq);
                    }
                }
            }
        }
        off = off_norm();
    }

    EigenDecomposition out;
    out.off_diagonal_residual = off;
    out.eigenvalues.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.eigenvalues[i] = a(i, i);
    if (want_vectors) {
        // Sort eigenpairs ascending, permuting columns of V alongside.
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t x, std::size_t y) { return out.eigenvalues[x] < out.eigenvalues[y]; });
        Vec sorted(n);
        Mat vs(n);
        for (std::size_t j = 0; j < n; ++j) {
            sorted[j] = out.eigenvalues[order[j]];
            for (std::size_t i = 0; i < n; ++i) vs(i, j) = v(i, order[j]);
        }
        out.eigenvalues = std::move(sorted);
        out.eigenvectors = std::move(vs);
    } else {
        std::sort(out.eigenvalues.begin(), out.eigenvalues.end());
    }
    return out;
}

}  // namespace detail

// Eigenvalues of a symmetric matrix, ascending.
inline Vec sym_eigenvalues(const Mat& a) { return detail::jacobi_impl(a, false).eigenvalues; }

inline EigenDecomposition sym_eigendecomposition(const Mat& a) { return detail::jacobi_impl(a, true); }

inline double min_eigenvalue(const Mat& a) { return sym_eigenvalues(a).front(); }

inline double max_eigenvalue(const Mat& a) { return sym_eigenvalues(a).back(); }

// Inverse of a symmetric positive definite matrix via V diag(1/lambda) V^T.
inline Mat spd_inverse(const Mat& a, double pd_tol = 1e-12) {
    const auto ed = sym_eigendecomposition(a);
    const std::size_t n = a.size();
    if (ed.eigenvalues.front() <= pd_tol)
        throw NotPositiveDefinite("spd_inverse: matrix not positive definite", ed.eigenvalues.front());
    Mat inv(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                s += ed.eigenvectors(i, k) * ed.eigenvectors(j, k) / ed.eigenvalues[k];
            inv(i, j) = s;
            inv(j, i) = s;
        }
    return inv;
}

// log det of a symmetric positive definite matrix as the sum of eigenvalue
// logs. Raises InfeasiblePoint on any nonpositive eigenvalue instead of
// returning -inf.
inline double spd_log_det(const Mat& a) {
    const Vec ev = sym_eigenvalues(a);
    double s = 0.0;
    for (double lambda : ev) {
        if (lambda <= 0.0) throw InfeasiblePoint("log det: matrix has a nonpositive eigenvalue");
        s += std::log(lambda);
    }
    return s;
}

// Spectral radius of a general (possibly nonsymmetric) real matrix by power
// iteration on B*B with seeded restarts. Squaring makes the dominant
// magnitude unique when the extreme eigenvalues come as a +/- pair, which is
// the common case for closed-loop voltage iteration matrices. Diagnostic
// accuracy only.
inline double power_iteration_spectral_radius(const Mat& b, std::uint64_t seed = 12345,
                                              int restarts = 4, int iters = 400) {
    const std::size_t n = b.size();
    if (n == 0) return 0.0;
    double best = 0.0;
    Rng rng(derive_seed(seed, 0x70776572ULL));
    for (int r = 0; r < restarts; ++r) {
        Vec x(n);
        for (auto& xi : x) xi = rng.uniform(-1.0, 1.0);
        double nx = norm2(x);
        if (nx == 0.0) continue;
        for (auto& xi : x) xi /= nx;
        double rho2 = 0.0;
        for (int it = 0; it < iters; ++it) {
            Vec y = b * (b * x);
            const double ny = norm2(y);
            if (ny == 0.0) {
                rho2 = 0.0;
                break;
            }
            rho2 = ny;  // ||B^2 x|| with ||x|| = 1 converges to rho(B)^2
            for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ny;
        }
        best = std::max(best, std::sqrt(rho2));
    }
    return best;
}

}  // namespace voltgrid
