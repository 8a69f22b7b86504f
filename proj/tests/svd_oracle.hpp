#pragma once

// One-sided Jacobi SVD, independent of the library's linear algebra, used as a reference.

#include "fnnforge/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace oracle {

struct Svd {
    std::vector<double> singular_values;  // descending
    fnnforge::Matrix v;                   // right singular vectors as columns
    fnnforge::Matrix scores;              // a * v
};

inline Svd jacobi_svd(const fnnforge::Matrix& a) {
    const Eigen::Index n = a.rows();
    const Eigen::Index k = a.cols();
    fnnforge::Matrix u = a;
    fnnforge::Matrix v = fnnforge::Matrix::Identity(k, k);
    for (int sweep = 0; sweep < 100; ++sweep) {
        bool rotated = false;
        for (Eigen::Index p = 0; p < k; ++p) {
            for (Eigen::Index q = p + 1; q < k; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    alpha += u(i, p) * u(i, p);
                    beta += u(i, q) * u(i, q);
                    gamma += u(i, p) * u(i, q);
                }
                if (std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta) || gamma == 0.0) {
                    continue;
                }
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double up = u(i, p);
                    const double uq = u(i, q);
                    u(i, p) = c * up - s * uq;
                    u(i, q) = s * up + c * uq;
                }
                for (Eigen::Index i = 0; i < k; ++i) {
                    const double vp = v(i, p);
                    const double vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) {
            break;
        }
    }
    std::vector<double> norms(static_cast<std::size_t>(k));
    for (Eigen::Index c = 0; c < k; ++c) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) s += u(i, c) * u(i, c);
        norms[static_cast<std::size_t>(c)] = std::sqrt(s);
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
        return norms[static_cast<std::size_t>(x)] > norms[static_cast<std::size_t>(y)];
    });
    Svd out;
    out.v.resize(k, k);
    out.scores.resize(n, k);
    for (Eigen::Index c = 0; c < k; ++c) {
        const Eigen::Index src = order[static_cast<std::size_t>(c)];
        out.singular_values.push_back(norms[static_cast<std::size_t>(src)]);
        out.v.col(c) = v.col(src);
        out.scores.col(c) = u.col(src);
    }
    return out;
}

} // namespace oracle
