#include "hwcl/matrix.hpp"

#include <cmath>
#include <cstddef>

#include "hwcl/error.hpp"

namespace hwcl {

bool all_finite(const Matrix& m) {
    for (double x : m.data) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(const double* v, std::size_t n) {
    return std::sqrt(dot(v, v, n));
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) throw Error(ErrorCode::ShapeMismatch, "matmul_nt inner dims");
    Matrix c(a.rows, b.rows);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const double* ai = a.row(static_cast<std::size_t>(i));
        for (std::size_t j = 0; j < b.rows; ++j) {
            c(static_cast<std::size_t>(i), j) = dot(ai, b.row(j), a.cols);
        }
    }
    return c;
}

Matrix matmul_nn(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw Error(ErrorCode::ShapeMismatch, "matmul_nn inner dims");
    Matrix c(a.rows, b.cols);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double* ci = c.row(static_cast<std::size_t>(i));
        const double* ai = a.row(static_cast<std::size_t>(i));
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = ai[k];
            const double* bk = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) throw Error(ErrorCode::ShapeMismatch, "matmul_tn inner dims");
    Matrix c(a.cols, b.cols);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(a.cols);
    // Parallel over output rows; each accumulates over the shared sample axis
    // in ascending order, independent of thread count.
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double* ci = c.row(static_cast<std::size_t>(i));
        for (std::size_t r = 0; r < a.rows; ++r) {
            const double ari = a(r, static_cast<std::size_t>(i));
            const double* br = b.row(r);
            for (std::size_t j = 0; j < b.cols; ++j) ci[j] += ari * br[j];
        }
    }
    return c;
}

} // namespace hwcl
