#pragma once

#include <cstddef>
#include <vector>

namespace hwcl {

// Dense row-major matrix of doubles. All numeric work in this library is
// 64-bit; sizes stay at desk scale so no sparse or blocked storage.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
    bool empty() const { return rows == 0 || cols == 0; }
};

bool all_finite(const Matrix& m);
bool all_finite(const std::vector<double>& v);

double dot(const double* a, const double* b, std::size_t n);
double norm2(const double* v, std::size_t n);

// C = A * B^T where A is n x k and B is m x k.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// C = A * B where A is n x k and B is k x m.
Matrix matmul_nn(const Matrix& a, const Matrix& b);
// C = A^T * B where A is n x k and B is n x m.
Matrix matmul_tn(const Matrix& a, const Matrix& b);

} // namespace hwcl
