#pragma once

#include <cstddef>
#include <vector>

namespace stratus::linalg {

// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    [[nodiscard]] Matrix transpose() const;
};

// Thin SVD a = u diag(s) v^T with k = min(rows, cols) components, singular
// values descending. Sign convention: the largest-magnitude entry of each
// left singular vector is positive. Vectors on the longer side that belong
// to zero singular values are returned as zero columns.
struct Svd {
    Matrix u;
    std::vector<double> s;
    Matrix v;
};

// One-sided (Hestenes) Jacobi rotations.
Svd jacobi_svd(const Matrix& a);

}  // namespace stratus::linalg
