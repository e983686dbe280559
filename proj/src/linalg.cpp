#include "stratus/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stratus/error.hpp"

namespace stratus::linalg {

Matrix Matrix::transpose() const {
    Matrix t(cols, rows);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
    }
    return t;
}

namespace {

Svd jacobi_tall(const Matrix& a) {
    const std::size_t m = a.rows;
    const std::size_t n = a.cols;
    Matrix u = a;
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    // Orthogonality reachable in floating point scales with the column length.
    const double eps = static_cast<double>(std::max<std::size_t>(m, 1)) * std::numeric_limits<double>::epsilon();
    // Columns below this squared norm are numerically null and left alone;
    // rotating them only chases rounding noise.
    double frob = 0.0;
    for (double x : a.data) frob += x * x;
    const double null_norm = frob * std::numeric_limits<double>::epsilon() * std::numeric_limits<double>::epsilon();
    bool rotated = true;
    for (int sweep = 0; sweep < 100 && rotated; ++sweep) {
        rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0;
                double beta = 0.0;
                double gamma = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    alpha += u(i, p) * u(i, p);
                    beta += u(i, q) * u(i, q);
                    gamma += u(i, p) * u(i, q);
                }
                if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
                if (alpha <= null_norm || beta <= null_norm) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double up = u(i, p);
                    u(i, p) = c * up - s * u(i, q);
                    u(i, q) = s * up + c * u(i, q);
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vp = v(i, p);
                    v(i, p) = c * vp - s * v(i, q);
                    v(i, q) = s * vp + c * v(i, q);
                }
            }
        }
        if (sweep == 99 && rotated) throw Error(ErrorCode::ConvergenceError, "Jacobi SVD did not converge");
    }

    std::vector<double> sv(n);
    for (std::size_t j = 0; j < n; ++j) {
        double norm = 0.0;
        for (std::size_t i = 0; i < m; ++i) norm += u(i, j) * u(i, j);
        sv[j] = std::sqrt(norm);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sv[x] > sv[y]; });
    const double largest = n ? sv[order.front()] : 0.0;

    Svd out;
    out.u = Matrix(m, n);
    out.v = Matrix(n, n);
    out.s.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        out.s[k] = sv[j];
        const bool null = !(sv[j] > 1e-13 * largest) || sv[j] == 0.0;
        for (std::size_t i = 0; i < m; ++i) out.u(i, k) = null ? 0.0 : u(i, j) / sv[j];
        for (std::size_t i = 0; i < n; ++i) out.v(i, k) = v(i, j);
        // Sign convention on the left vector (right vector when it is null).
        const Matrix& ref = null ? out.v : out.u;
        const std::size_t len = null ? n : m;
        std::size_t arg = 0;
        for (std::size_t i = 1; i < len; ++i) {
            if (std::abs(ref(i, k)) > std::abs(ref(arg, k)) * (1.0 + 1e-12)) arg = i;
        }
        if (ref(arg, k) < 0.0) {
            for (std::size_t i = 0; i < m; ++i) out.u(i, k) = -out.u(i, k);
            for (std::size_t i = 0; i < n; ++i) out.v(i, k) = -out.v(i, k);
        }
    }
    return out;
}

}  // namespace

Svd jacobi_svd(const Matrix& a) {
    if (a.rows >= a.cols) return jacobi_tall(a);
    Svd t = jacobi_tall(a.transpose());
    Svd out;
    out.s = std::move(t.s);
    out.u = std::move(t.v);
    out.v = std::move(t.u);
    // Re-apply the sign convention to the new left vectors.
    for (std::size_t k = 0; k < out.s.size(); ++k) {
        std::size_t arg = 0;
        for (std::size_t i = 1; i < out.u.rows; ++i) {
            if (std::abs(out.u(i, k)) > std::abs(out.u(arg, k)) * (1.0 + 1e-12)) arg = i;
        }
        if (out.u(arg, k) < 0.0) {
            for (std::size_t i = 0; i < out.u.rows; ++i) out.u(i, k) = -out.u(i, k);
            for (std::size_t i = 0; i < out.v.rows; ++i) out.v(i, k) = -out.v(i, k);
        }
    }
    return out;
}

}  // namespace stratus::linalg
