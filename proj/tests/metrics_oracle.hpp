#pragma once

// Brute-force references for the metrics: exhaustive enumeration, no shared code with the library.

#include "fnnforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

namespace oracle {

using fnnforge::Matrix;
using fnnforge::metrics::PersistencePair;

inline double row_dist(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
        s += (a(i, c) - b(j, c)) * (a(i, c) - b(j, c));
    }
    return std::sqrt(s);
}

/// Minimum over every monotone warping path from (0,0) to (n-1,m-1), by plain recursion.
inline double dtw_all_paths(const Matrix& a, const Matrix& b) {
    double best = std::numeric_limits<double>::infinity();
    std::function<void(Eigen::Index, Eigen::Index, double)> walk = [&](Eigen::Index i, Eigen::Index j, double acc) {
        acc += row_dist(a, i, b, j);
        if (acc >= best) {
            return;
        }
        if (i == a.rows() - 1 && j == b.rows() - 1) {
            best = acc;
            return;
        }
        if (i + 1 < a.rows() && j + 1 < b.rows()) walk(i + 1, j + 1, acc);
        if (i + 1 < a.rows()) walk(i + 1, j, acc);
        if (j + 1 < b.rows()) walk(i, j + 1, acc);
    };
    walk(0, 0, 0.0);
    return best;
}

/// Exhaustive partial matching: each point of a goes to an unused point of b or to the diagonal.
inline double wasserstein_all_matchings(const std::vector<PersistencePair>& a, const std::vector<PersistencePair>& b) {
    const auto diag = [](const PersistencePair& p) { return (p.death - p.birth) / std::sqrt(2.0); };
    std::vector<bool> used(b.size(), false);
    double best = std::numeric_limits<double>::infinity();
    std::function<void(std::size_t, double)> go = [&](std::size_t i, double acc) {
        if (i == a.size()) {
            for (std::size_t j = 0; j < b.size(); ++j) {
                if (!used[j]) acc += diag(b[j]);
            }
            best = std::min(best, acc);
            return;
        }
        go(i + 1, acc + diag(a[i]));
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (used[j]) continue;
            used[j] = true;
            go(i + 1, acc + std::hypot(a[i].birth - b[j].birth, a[i].death - b[j].death));
            used[j] = false;
        }
    };
    go(0, 0.0);
    return best;
}

inline double assignment_all_permutations(const Matrix& cost) {
    std::vector<int> perm(static_cast<std::size_t>(cost.rows()));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < perm.size(); ++i) s += cost(static_cast<Eigen::Index>(i), perm[i]);
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

/// Neighbor coverage straight from the definition: sets of the k nearest neighbors, intersected.
inline double coverage_by_sets(const Matrix& a, const Matrix& b) {
    const Eigen::Index n = a.rows();
    const auto order = [&](const Matrix& m, Eigen::Index i) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < n; ++j) if (j != i) idx.push_back(j);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](Eigen::Index x, Eigen::Index y) { return row_dist(m, i, m, x) < row_dist(m, i, m, y); });
        return idx;
    };
    double total = 0.0;
    for (Eigen::Index k = 1; k < n; ++k) {
        double kappa = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto la = order(a, i);
            const auto lb = order(b, i);
            std::set<Eigen::Index> sa(la.begin(), la.begin() + k);
            for (Eigen::Index r = 0; r < k; ++r) kappa += sa.count(lb[static_cast<std::size_t>(r)]);
        }
        kappa /= static_cast<double>(n);
        const double kk = static_cast<double>(k);
        const double chance = kk * kk / static_cast<double>(n);
        total += (kappa - chance) / (kk - chance);
    }
    return total / static_cast<double>(n - 1);
}

/// H1 pairs by dense homology reduction of the full triangle boundary matrix over Z/2.
/// Unpaired cycles are closed at `max_radius`; zero-length bars dropped.
inline std::vector<std::pair<double, double>> rips_h1_dense(const Matrix& pts, double max_radius) {
    const int n = static_cast<int>(pts.rows());
    struct Cell {
        double value;
        std::vector<int> verts;
    };
    std::vector<Cell> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) edges.push_back({row_dist(pts, i, pts, j), {i, j}});
    std::vector<Cell> tris;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k)
                tris.push_back({std::max({row_dist(pts, i, pts, j), row_dist(pts, i, pts, k), row_dist(pts, j, pts, k)}),
                                {i, j, k}});
    const auto by_value = [](const Cell& x, const Cell& y) { return x.value < y.value; };
    std::stable_sort(edges.begin(), edges.end(), by_value);
    std::stable_sort(tris.begin(), tris.end(), by_value);
    std::vector<std::vector<int>> id(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), -1));
    for (std::size_t e = 0; e < edges.size(); ++e) {
        id[static_cast<std::size_t>(edges[e].verts[0])][static_cast<std::size_t>(edges[e].verts[1])] = static_cast<int>(e);
    }
    // edges that merge components are negative in H0
    std::vector<int> comp(static_cast<std::size_t>(n));
    std::iota(comp.begin(), comp.end(), 0);
    std::vector<bool> kills_component(edges.size(), false);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const int cu = comp[static_cast<std::size_t>(edges[e].verts[0])];
        const int cv = comp[static_cast<std::size_t>(edges[e].verts[1])];
        if (cu != cv) {
            kills_component[e] = true;
            for (auto& c : comp) if (c == cv) c = cu;
        }
    }
    std::vector<int> low_owner(edges.size(), -1);
    std::vector<std::set<int>> reduced(tris.size());
    std::vector<std::pair<double, double>> bars;
    for (std::size_t t = 0; t < tris.size(); ++t) {
        const auto& v = tris[t].verts;
        std::set<int> col{id[static_cast<std::size_t>(v[0])][static_cast<std::size_t>(v[1])],
                          id[static_cast<std::size_t>(v[0])][static_cast<std::size_t>(v[2])],
                          id[static_cast<std::size_t>(v[1])][static_cast<std::size_t>(v[2])]};
        while (!col.empty()) {
            const int owner = low_owner[static_cast<std::size_t>(*col.rbegin())];
            if (owner < 0) break;
            for (int e : reduced[static_cast<std::size_t>(owner)]) {
                if (!col.erase(e)) col.insert(e);
            }
        }
        if (!col.empty()) {
            const int low = *col.rbegin();
            low_owner[static_cast<std::size_t>(low)] = static_cast<int>(t);
            if (tris[t].value > edges[static_cast<std::size_t>(low)].value) {
                bars.emplace_back(edges[static_cast<std::size_t>(low)].value, tris[t].value);
            }
        }
        reduced[t] = std::move(col);
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (!kills_component[e] && low_owner[e] < 0 && max_radius > edges[e].value) {
            bars.emplace_back(edges[e].value, max_radius);
        }
    }
    std::sort(bars.begin(), bars.end());
    return bars;
}

} // namespace oracle
