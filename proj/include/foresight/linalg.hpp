// Small dense linear algebra: row-major matrices over double plus the
// vector kernels used by the forward/backward passes. No external deps;
// everything stays in L1 at the dimensions this library runs at.

#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "foresight/errors.hpp"

namespace foresight {

using Vector = std::vector<double>;

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }
    double operator()(std::size_t i, std::size_t j) const {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }

    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// y = M x
inline void matvec(const Matrix& m, const Vector& x, Vector& y) {
    assert(x.size() == m.cols());
    y.assign(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
}

// y += M x
inline void matvec_add(const Matrix& m, const Vector& x, Vector& y) {
    assert(x.size() == m.cols() && y.size() == m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) acc += row[j] * x[j];
        y[i] += acc;
    }
}

// y += M^T x
inline void matvec_transposed_add(const Matrix& m, const Vector& x, Vector& y) {
    assert(x.size() == m.rows() && y.size() == m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.row(i);
        const double xi = x[i];
        if (xi == 0.0) continue;
        for (std::size_t j = 0; j < m.cols(); ++j) y[j] += row[j] * xi;
    }
}

// M += u v^T
inline void add_outer(Matrix& m, const Vector& u, const Vector& v) {
    assert(u.size() == m.rows() && v.size() == m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double* row = m.row(i);
        const double ui = u[i];
        if (ui == 0.0) continue;
        for (std::size_t j = 0; j < m.cols(); ++j) row[j] += ui * v[j];
    }
}

inline double dot(const Vector& a, const Vector& b) {
    assert(a.size() == b.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

// y += a x
inline void axpy(double a, const Vector& x, Vector& y) {
    assert(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void add_inplace(Vector& y, const Vector& x) { axpy(1.0, x, y); }

inline void scale_inplace(Vector& v, double a) {
    for (double& x : v) x *= a;
}

inline bool all_finite(const Vector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const Matrix& m) { return all_finite(m.raw()); }

inline void require_size(const Vector& v, std::size_t n, const char* what) {
    if (v.size() != n)
        throw shape_error(std::string(what) + ": expected length " +
                          std::to_string(n) + ", got " + std::to_string(v.size()));
}

} // namespace foresight
