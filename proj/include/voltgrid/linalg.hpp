#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "voltgrid/errors.hpp"

namespace voltgrid {

using Vec = std::vector<double>;

// Dense square matrix, row-major. Sized for distribution feeders (tens of
// buses), so no attempt at blocking or sparsity.
class Mat {
  public:
    Mat() = default;
    explicit Mat(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {}

    static Mat identity(std::size_t n) {
        Mat m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Mat diagonal(const Vec& d) {
        Mat m(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    std::size_t size() const { return n_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }

    Vec operator*(const Vec& x) const {
        if (x.size() != n_) throw DimensionMismatch("matrix-vector size mismatch");
        Vec y(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            double acc = 0.0;
            const double* row = a_.data() + i * n_;
            for (std::size_t j = 0; j < n_; ++j) acc += row[j] * x[j];
            y[i] = acc;
        }
        return y;
    }

    Mat operator*(const Mat& b) const {
        if (b.n_ != n_) throw DimensionMismatch("matrix-matrix size mismatch");
        Mat c(n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t k = 0; k < n_; ++k) {
                const double aik = (*this)(i, k);
                if (aik == 0.0) continue;
                for (std::size_t j = 0; j < n_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    Mat operator-(const Mat& b) const {
        Mat c(n_);
        for (std::size_t i = 0; i < a_.size(); ++i) c.a_[i] = a_[i] - b.a_[i];
        return c;
    }

    Mat operator+(const Mat& b) const {
        Mat c(n_);
        for (std::size_t i = 0; i < a_.size(); ++i) c.a_[i] = a_[i] + b.a_[i];
        return c;
    }

    Mat scaled(double s) const {
        Mat c(n_);
        for (std::size_t i = 0; i < a_.size(); ++i) c.a_[i] = a_[i] * s;
        return c;
    }

    Mat transposed() const {
        Mat c(n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) c(j, i) = (*this)(i, j);
        return c;
    }

    // Scale row i and column j by d[i], d[j]: returns diag(d) * A * diag(d).
    Mat diag_congruence(const Vec& d) const {
        if (d.size() != n_) throw DimensionMismatch("diag scale size mismatch");
        Mat c(n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) c(i, j) = d[i] * (*this)(i, j) * d[j];
        return c;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : a_) s += v * v;
        return std::sqrt(s);
    }

    double max_asymmetry() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i + 1; j < n_; ++j)
                worst = std::max(worst, std::abs((*this)(i, j) - (*this)(j, i)));
        return worst;
    }

    bool operator==(const Mat& b) const { return n_ == b.n_ && a_ == b.a_; }

  private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double norm1(const Vec& a) {
    double s = 0.0;
    for (double v : a) s += std::abs(v);
    return s;
}

inline double norm_inf(const Vec& a) {
    double s = 0.0;
    for (double v : a) s = std::max(s, std::abs(v));
    return s;
}

inline Vec operator+(const Vec& a, const Vec& b) {
    Vec c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
    return c;
}

inline Vec operator-(const Vec& a, const Vec& b) {
    Vec c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
    return c;
}

inline Vec operator*(double s, const Vec& a) {
    Vec c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = s * a[i];
    return c;
}

inline bool all_finite(const Vec& a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace voltgrid
