#include "fnnforge/metrics.hpp"

#include "fnnforge/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <string>
#include <unordered_map>

namespace fnnforge::metrics {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_pair(const Matrix& yhat, const Matrix& y) {
    if (yhat.rows() != y.rows()) {
        throw InvalidArgument("clouds have different row counts (" + std::to_string(yhat.rows()) + " vs " +
                              std::to_string(y.rows()) + ")");
    }
}

Matrix normalize_cloud(const Matrix& m) {
    Matrix c = m.rowwise() - m.colwise().mean();
    const double norm = c.norm();
    if (norm > 0.0) {
        c /= norm;
    }
    return c;
}

/// Euclidean pairwise distances, full symmetric matrix.
Matrix pairwise_distances(const Matrix& x) {
    const Eigen::Index n = x.rows();
    Matrix d(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = (x.row(i) - x.row(j)).norm();
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

std::vector<Eigen::Index> seeded_subsample(Eigen::Index n, Eigen::Index count, std::uint64_t seed) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    // partial Fisher-Yates
    for (Eigen::Index i = 0; i < count; ++i) {
        std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
    }
    idx.resize(static_cast<std::size_t>(count));
    std::sort(idx.begin(), idx.end());
    return idx;
}

Matrix take_rows(const Matrix& m, const std::vector<Eigen::Index>& idx) {
    Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        out.row(static_cast<Eigen::Index>(r)) = m.row(idx[r]);
    }
    return out;
}

/// Neighbor list of point i, nearest first, ties by index, self excluded.
void neighbor_list(const Matrix& d, Eigen::Index i, std::vector<Eigen::Index>& out) {
    out.clear();
    for (Eigen::Index j = 0; j < d.rows(); ++j) {
        if (j != i) {
            out.push_back(j);
        }
    }
    std::sort(out.begin(), out.end(), [&](Eigen::Index a, Eigen::Index b) {
        return d(i, a) != d(i, b) ? d(i, a) < d(i, b) : a < b;
    });
}

double diagonal_distance(const PersistencePair& p) {
    return (p.death - p.birth) / std::sqrt(2.0);
}

// --- Rips helpers ----------------------------------------------------------

std::int64_t choose2(std::int64_t n) {
    return n * (n - 1) / 2;
}

std::int64_t choose3(std::int64_t n) {
    return n * (n - 1) * (n - 2) / 6;
}

struct Simplex {
    double diam;
    std::int64_t index;

    bool operator<(const Simplex& o) const { return diam != o.diam ? diam < o.diam : index < o.index; }
    bool operator>(const Simplex& o) const { return o < *this; }
};

struct Edge {
    double diam;
    std::int64_t index;
    int u;
    int v;  // u < v
};

std::int64_t triangle_index(int a, int b, int c) {
    int hi = std::max({a, b, c});
    int lo = std::min({a, b, c});
    int mid = a + b + c - hi - lo;
    return choose3(hi) + choose2(mid) + lo;
}

class UnionFind {
public:
    explicit UnionFind(int n) : parent_(static_cast<std::size_t>(n)) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    int find(int x) {
        while (parent_[static_cast<std::size_t>(x)] != x) {
            auto& p = parent_[static_cast<std::size_t>(x)];
            p = parent_[static_cast<std::size_t>(p)];
            x = p;
        }
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) {
            return false;
        }
        parent_[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
        return true;
    }

private:
    std::vector<int> parent_;
};

} // namespace

// --- padding / Procrustes --------------------------------------------------

PointCloud pad_attractor(const PointCloud& y, Eigen::Index latent) {
    if (y.dim() > latent) {
        throw InvalidArgument("cannot pad a " + std::to_string(y.dim()) + "-dimensional cloud to " +
                              std::to_string(latent) + " columns");
    }
    Matrix out = Matrix::Zero(y.size(), latent);
    out.leftCols(y.dim()) = y.points();
    return PointCloud(std::move(out), y.dt());
}

Procrustes procrustes_align(const Matrix& yhat, const Matrix& y) {
    check_pair(yhat, y);
    if (y.rows() < 2) {
        throw InvalidArgument("Procrustes alignment needs at least 2 points");
    }
    if (yhat.cols() != y.cols()) {
        throw ShapeError("Procrustes alignment needs equal column counts; pad the truth first");
    }
    Procrustes p;
    p.reference = normalize_cloud(y);
    const Matrix source = normalize_cloud(yhat);
    const Eigen::MatrixXd cross = source.transpose() * p.reference;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    p.rotation = svd.matrixU() * svd.matrixV().transpose();
    p.scale = svd.singularValues().sum();
    p.aligned = p.scale * source * p.rotation;
    return p;
}

double s_proc(const Matrix& yhat, const Matrix& y) {
    check_pair(yhat, y);
    const Matrix centered = y.rowwise() - y.colwise().mean();
    if (!(centered.norm() > 0.0)) {
        throw DegenerateReferenceError("reference cloud has no spread");
    }
    const Procrustes p = procrustes_align(yhat, y);
    return 1.0 - (p.aligned - p.reference).norm() / p.reference.norm();
}

// --- DTW -------------------------------------------------------------------

double dtw_distance(const Matrix& a, const Matrix& b) {
    if (a.rows() < 1 || b.rows() < 1) {
        throw InvalidArgument("DTW needs non-empty sequences");
    }
    if (a.cols() != b.cols()) {
        throw ShapeError("DTW sequences need equal widths");
    }
    const Eigen::Index m = b.rows();
    std::vector<double> prev(static_cast<std::size_t>(m) + 1, kInf);
    std::vector<double> cur(static_cast<std::size_t>(m) + 1, kInf);
    prev[0] = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        cur[0] = kInf;
        for (Eigen::Index j = 0; j < m; ++j) {
            const double cost = (a.row(i) - b.row(j)).norm();
            const auto jj = static_cast<std::size_t>(j);
            cur[jj + 1] = cost + std::min({prev[jj], prev[jj + 1], cur[jj]});
        }
        std::swap(prev, cur);
    }
    return prev[static_cast<std::size_t>(m)];
}

double s_dtw(const Matrix& yhat, const Matrix& y) {
    check_pair(yhat, y);
    const Procrustes p = procrustes_align(yhat, y);
    const Matrix centroid = Matrix::Zero(p.reference.rows(), p.reference.cols());
    const double reference = dtw_distance(centroid, p.reference);
    if (!(reference > 0.0)) {
        throw DegenerateReferenceError("reference cloud has no spread");
    }
    return 1.0 - dtw_distance(p.aligned, p.reference) / reference;
}

// --- simplex ---------------------------------------------------------------

double simplex_skill(const Matrix& yhat, const Matrix& y, Eigen::Index tau, Eigen::Index theiler) {
    check_pair(yhat, y);
    if (tau < 0 || theiler < 0) {
        throw InvalidArgument("tau and Theiler window must be non-negative");
    }
    const Eigen::Index n = y.rows();
    const Eigen::Index k = yhat.cols() + 1;
    const Eigen::Index library = n - tau;
    if (library <= k + 2 * theiler + 1) {
        throw InsufficientDataError("too few samples for simplex forecasting with k=" + std::to_string(k) +
                                    " and tau=" + std::to_string(tau));
    }
    const double total_var = column_variances(y).sum();
    if (!(total_var > 0.0)) {
        throw DegenerateReferenceError("forecast target has zero variance");
    }

    std::vector<std::pair<double, Eigen::Index>> cand;
    double sq_err = 0.0;
    for (Eigen::Index i = 0; i < library; ++i) {
        cand.clear();
        for (Eigen::Index j = 0; j < library; ++j) {
            if (std::abs(i - j) <= theiler) {
                continue;
            }
            cand.emplace_back((yhat.row(i) - yhat.row(j)).squaredNorm(), j);
        }
        std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
        Eigen::RowVectorXd prediction = Eigen::RowVectorXd::Zero(y.cols());
        for (Eigen::Index r = 0; r < k; ++r) {
            prediction += y.row(cand[static_cast<std::size_t>(r)].second + tau);
        }
        prediction /= static_cast<double>(k);
        sq_err += (prediction - y.row(i + tau)).squaredNorm();
    }
    return 1.0 - (sq_err / static_cast<double>(library)) / total_var;
}

// --- neighbor coverage -----------------------------------------------------

std::vector<int> coverage_counts(std::span<const Eigen::Index> a, std::span<const Eigen::Index> b) {
    if (a.size() != b.size()) {
        throw InvalidArgument("neighbor lists differ in length");
    }
    std::unordered_map<Eigen::Index, int> seen;  // bit 1: in a, bit 2: in b
    std::vector<int> kappa;
    int overlap = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        int& fa = seen[a[k]];
        if ((fa & 1) == 0) {
            fa |= 1;
            if (fa & 2) ++overlap;
        }
        int& fb = seen[b[k]];
        if ((fb & 2) == 0) {
            fb |= 2;
            if (fb & 1) ++overlap;
        }
        kappa.push_back(overlap);
    }
    return kappa;
}

CoverageResult neighbor_coverage(const Matrix& yhat, const Matrix& y, const CoverageConfig& cfg) {
    check_pair(yhat, y);
    if (y.rows() < 3) {
        throw InvalidArgument("neighbor coverage needs at least 3 points");
    }
    CoverageResult result;
    Matrix a = yhat;
    Matrix b = y;
    if (cfg.max_points >= 3 && y.rows() > cfg.max_points) {
        const auto idx = seeded_subsample(y.rows(), cfg.max_points, cfg.seed);
        a = take_rows(yhat, idx);
        b = take_rows(y, idx);
        result.subsampled = true;
    }
    const Eigen::Index n = b.rows();
    result.points_used = n;
    const Matrix da = pairwise_distances(a);
    const Matrix db = pairwise_distances(b);

    const auto m = static_cast<std::size_t>(n - 1);
    std::vector<double> kappa_sum(m, 0.0);
    std::vector<Eigen::Index> la;
    std::vector<Eigen::Index> lb;
    std::vector<unsigned char> mark(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        neighbor_list(da, i, la);
        neighbor_list(db, i, lb);
        std::fill(mark.begin(), mark.end(), 0);
        int overlap = 0;
        for (std::size_t k = 0; k < m; ++k) {
            auto& ma = mark[static_cast<std::size_t>(la[k])];
            ma |= 1;
            if (ma == 3) ++overlap;
            auto& mb = mark[static_cast<std::size_t>(lb[k])];
            if ((mb & 2) == 0) {
                mb |= 2;
                if (mb == 3) ++overlap;
            }
            kappa_sum[k] += overlap;
        }
    }
    const double nn = static_cast<double>(n);
    double total = 0.0;
    for (std::size_t idx = 0; idx < m; ++idx) {
        const double k = static_cast<double>(idx + 1);
        const double mean_kappa = kappa_sum[idx] / nn;
        const double chance = k * k / nn;
        total += (mean_kappa - chance) / (k - chance);
    }
    result.score = total / static_cast<double>(m);
    return result;
}

// --- variance profile ------------------------------------------------------

double s_dim(const Vector& var_truth, const Vector& var_embed) {
    if (var_truth.size() != var_embed.size()) {
        throw ShapeError("variance profiles differ in length; pad the truth first");
    }
    const double truth_total = var_truth.sum();
    if (!(truth_total > 0.0)) {
        throw DegenerateReferenceError("truth variance profile is all zero");
    }
    Vector t = var_truth / truth_total;
    const double embed_total = var_embed.sum();
    Vector e = embed_total > 0.0 ? Vector(var_embed / embed_total) : Vector(Vector::Zero(var_embed.size()));
    std::sort(t.data(), t.data() + t.size(), std::greater<>());
    std::sort(e.data(), e.data() + e.size(), std::greater<>());
    return 1.0 - (t - e).norm() / t.norm();
}

EffectiveDimension effective_dimension(const Vector& variances, double threshold) {
    if ((variances.array() < 0.0).any()) {
        throw InvalidArgument("variances must be non-negative");
    }
    const double total = variances.sum();
    if (!(total > 0.0)) {
        throw DegenerateReferenceError("variance profile is all zero");
    }
    EffectiveDimension d;
    d.threshold_count = static_cast<int>(((variances.array() / total) > threshold).count());
    d.participation_ratio = total * total / variances.squaredNorm();
    return d;
}

// --- correlation dimension -------------------------------------------------

CorrelationDimension correlation_dimension(const Matrix& cloud, const CorrelationDimensionConfig& cfg) {
    if (cloud.rows() < 100) {
        throw InsufficientDataError("correlation dimension needs at least 100 points");
    }
    if (cfg.radii < 4 || !(cfg.low_percentile > 0.0) || !(cfg.high_percentile > cfg.low_percentile) ||
        cfg.high_percentile > 100.0 || !(cfg.fit_begin >= 0.0) || !(cfg.fit_end > cfg.fit_begin) ||
        cfg.fit_end > 1.0) {
        throw InvalidArgument("invalid correlation-dimension configuration");
    }
    CorrelationDimension out;
    Matrix pts = cloud;
    if (cfg.max_points > 0 && cloud.rows() > cfg.max_points) {
        pts = take_rows(cloud, seeded_subsample(cloud.rows(), cfg.max_points, cfg.seed));
    }
    const Eigen::Index n = pts.rows();
    out.points_used = n;
    std::vector<double> dist;
    dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            dist.push_back((pts.row(i) - pts.row(j)).norm());
        }
    }
    std::sort(dist.begin(), dist.end());
    const auto quantile = [&](double pct) {
        const double pos = pct / 100.0 * static_cast<double>(dist.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, dist.size() - 1);
        return dist[lo] + (pos - static_cast<double>(lo)) * (dist[hi] - dist[lo]);
    };
    out.r_low = quantile(cfg.low_percentile);
    out.r_high = quantile(cfg.high_percentile);
    if (!(out.r_low > 0.0) || !(out.r_high > out.r_low)) {
        throw DegenerateReferenceError("pairwise distances do not span a usable radius range");
    }
    const int begin = static_cast<int>(std::floor(cfg.fit_begin * (cfg.radii - 1)));
    const int end = static_cast<int>(std::ceil(cfg.fit_end * (cfg.radii - 1)));
    const double log_lo = std::log(out.r_low);
    const double log_hi = std::log(out.r_high);
    const double pairs = static_cast<double>(dist.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int used = 0;
    for (int r = begin; r <= end; ++r) {
        const double log_r = log_lo + (log_hi - log_lo) * r / (cfg.radii - 1);
        const auto below = std::lower_bound(dist.begin(), dist.end(), std::exp(log_r)) - dist.begin();
        if (below == 0) {
            continue;
        }
        const double log_c = std::log(static_cast<double>(below) / pairs);
        sx += log_r;
        sy += log_c;
        sxx += log_r * log_r;
        sxy += log_r * log_c;
        ++used;
    }
    if (used < 2) {
        throw DegenerateReferenceError("correlation integral is empty over the fit window");
    }
    out.dimension = (used * sxy - sx * sy) / (used * sxx - sx * sx);
    return out;
}

double s_corr(double c_truth, double c_embed) {
    if (!(c_truth > 0.0) || !(c_embed > 0.0)) {
        throw InvalidArgument("correlation dimensions must be positive");
    }
    return 1.0 - std::abs(c_truth - c_embed) / (std::abs(c_truth) + std::abs(c_embed));
}

// --- persistence -----------------------------------------------------------

std::vector<PersistencePair> PersistenceDiagram::in_dim(int dim) const {
    std::vector<PersistencePair> out;
    std::copy_if(points.begin(), points.end(), std::back_inserter(out),
                 [dim](const PersistencePair& p) { return p.dim == dim; });
    return out;
}

std::vector<Eigen::Index> farthest_point_sample(const Matrix& cloud, Eigen::Index count, std::uint64_t seed) {
    const Eigen::Index n = cloud.rows();
    count = std::min(count, n);
    std::vector<Eigen::Index> chosen;
    if (count <= 0) {
        return chosen;
    }
    std::mt19937_64 rng(seed);
    Eigen::Index next = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
    std::vector<double> gap(static_cast<std::size_t>(n), kInf);
    while (static_cast<Eigen::Index>(chosen.size()) < count) {
        chosen.push_back(next);
        Eigen::Index best = -1;
        double best_gap = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            auto& g = gap[static_cast<std::size_t>(i)];
            g = std::min(g, (cloud.row(i) - cloud.row(next)).norm());
            if (g > best_gap) {
                best_gap = g;
                best = i;
            }
        }
        next = best;
    }
    return chosen;
}

PersistenceDiagram rips_persistence(const Matrix& cloud, const RipsConfig& cfg) {
    if (cloud.rows() < 3) {
        throw InsufficientDataError("Rips persistence needs at least 3 points");
    }
    Matrix pts = cloud;
    if (cfg.max_points > 0 && cloud.rows() > cfg.max_points) {
        pts = take_rows(cloud, farthest_point_sample(cloud, cfg.max_points, cfg.seed));
    }
    const int n = static_cast<int>(pts.rows());
    const Matrix d = pairwise_distances(pts);
    const double diameter = d.maxCoeff();
    const double max_radius = cfg.max_radius.value_or(diameter);
    double enclosing = kInf;
    for (int i = 0; i < n; ++i) {
        enclosing = std::min(enclosing, d.row(i).maxCoeff());
    }
    const double threshold = std::min(enclosing, max_radius);

    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(choose2(n)));
    for (int v = 1; v < n; ++v) {
        for (int u = 0; u < v; ++u) {
            edges.push_back({d(u, v), choose2(v) + u, u, v});
        }
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        return a.diam != b.diam ? a.diam < b.diam : a.index < b.index;
    });

    PersistenceDiagram diagram;
    // H0 and the spanning-tree edges, which never create 1-cycles
    std::vector<bool> tree(edges.size(), false);
    UnionFind components(n);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (components.unite(edges[e].u, edges[e].v)) {
            tree[e] = true;
            const double death = std::min(edges[e].diam, max_radius);
            if (death > 0.0) {
                diagram.points.push_back({0.0, death, 0});
            }
        }
    }
    if (max_radius > 0.0) {
        diagram.points.push_back({0.0, max_radius, 0});
    }

    // H1 by cohomology: edges in decreasing filtration order, coboundary pivot = earliest cofacet
    const auto coboundary = [&](std::size_t e, auto&& emit) {
        const Edge& ed = edges[e];
        for (int w = 0; w < n; ++w) {
            if (w == ed.u || w == ed.v) {
                continue;
            }
            const double diam = std::max({ed.diam, d(ed.u, w), d(ed.v, w)});
            if (diam <= threshold) {
                emit(Simplex{diam, triangle_index(ed.u, ed.v, w)});
            }
        }
    };
    std::unordered_map<std::int64_t, std::size_t> pivot_owner;        // triangle index -> edge position
    std::unordered_map<std::size_t, std::vector<std::size_t>> reduction;  // extra edges added to a column

    using Heap = std::priority_queue<Simplex, std::vector<Simplex>, std::greater<>>;
    const auto pop_pivot = [](Heap& heap) -> std::optional<Simplex> {
        while (!heap.empty()) {
            const Simplex top = heap.top();
            heap.pop();
            if (!heap.empty() && heap.top().index == top.index) {
                heap.pop();
                continue;
            }
            heap.push(top);
            return top;
        }
        return std::nullopt;
    };

    for (std::size_t pos = edges.size(); pos-- > 0;) {
        const Edge& ed = edges[pos];
        if (tree[pos] || ed.diam > threshold) {
            continue;
        }
        // cheap path: the unreduced pivot is free
        std::optional<Simplex> first;
        coboundary(pos, [&](const Simplex& s) {
            if (!first || s < *first) first = s;
        });
        if (first && pivot_owner.find(first->index) == pivot_owner.end()) {
            pivot_owner.emplace(first->index, pos);
            if (first->diam > ed.diam) {
                diagram.points.push_back({ed.diam, first->diam, 1});
            }
            continue;
        }
        Heap heap;
        std::vector<std::size_t> added;
        const auto push_column = [&](std::size_t e) { coboundary(e, [&](const Simplex& s) { heap.push(s); }); };
        push_column(pos);
        std::optional<Simplex> pivot = pop_pivot(heap);
        while (pivot) {
            const auto owner = pivot_owner.find(pivot->index);
            if (owner == pivot_owner.end()) {
                break;
            }
            const std::size_t other = owner->second;
            push_column(other);
            added.push_back(other);
            if (const auto r = reduction.find(other); r != reduction.end()) {
                for (std::size_t e : r->second) {
                    push_column(e);
                    added.push_back(e);
                }
            }
            pivot = pop_pivot(heap);
        }
        if (pivot) {
            pivot_owner.emplace(pivot->index, pos);
            // keep the column combination modulo 2
            std::sort(added.begin(), added.end());
            std::vector<std::size_t> odd;
            for (std::size_t i = 0; i < added.size();) {
                std::size_t j = i;
                while (j < added.size() && added[j] == added[i]) ++j;
                if ((j - i) % 2 == 1) odd.push_back(added[i]);
                i = j;
            }
            if (!odd.empty()) {
                reduction.emplace(pos, std::move(odd));
            }
            if (pivot->diam > ed.diam) {
                diagram.points.push_back({ed.diam, pivot->diam, 1});
            }
        } else if (max_radius > ed.diam) {
            // cocycle alive through the truncated filtration
            diagram.points.push_back({ed.diam, max_radius, 1});
        }
    }
    return diagram;
}

std::pair<double, std::vector<int>> hungarian(const Matrix& cost) {
    if (cost.rows() != cost.cols()) {
        throw ShapeError("assignment cost matrix must be square");
    }
    const int n = static_cast<int>(cost.rows());
    if (n == 0) {
        return {0.0, {}};
    }
    // potentials method, 1-based
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
        std::vector<bool> used(static_cast<std::size_t>(n) + 1, false);
        do {
            used[static_cast<std::size_t>(j0)] = true;
            const int i0 = match[static_cast<std::size_t>(j0)];
            double delta = kInf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    continue;
                }
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assignment(static_cast<std::size_t>(n), -1);
    double total = 0.0;
    for (int j = 1; j <= n; ++j) {
        const int i = match[static_cast<std::size_t>(j)];
        assignment[static_cast<std::size_t>(i - 1)] = j - 1;
        total += cost(i - 1, j - 1);
    }
    return {total, assignment};
}

double wasserstein(std::span<const PersistencePair> a, std::span<const PersistencePair> b) {
    const auto na = static_cast<Eigen::Index>(a.size());
    const auto nb = static_cast<Eigen::Index>(b.size());
    const Eigen::Index size = na + nb;
    if (size == 0) {
        return 0.0;
    }
    // rows: a points then diagonal slots for b; columns: b points then diagonal slots for a
    Matrix cost = Matrix::Zero(size, size);
    for (Eigen::Index i = 0; i < na; ++i) {
        const auto& p = a[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < nb; ++j) {
            const auto& q = b[static_cast<std::size_t>(j)];
            cost(i, j) = std::hypot(p.birth - q.birth, p.death - q.death);
        }
        cost.block(i, nb, 1, na).setConstant(diagonal_distance(p));
    }
    for (Eigen::Index j = 0; j < nb; ++j) {
        cost.block(na, j, nb, 1).setConstant(diagonal_distance(b[static_cast<std::size_t>(j)]));
    }
    return hungarian(cost).first;
}

double wasserstein(const PersistenceDiagram& a, const PersistenceDiagram& b) {
    double total = 0.0;
    for (int dim = 0; dim <= 1; ++dim) {
        const auto pa = a.in_dim(dim);
        const auto pb = b.in_dim(dim);
        total += wasserstein(std::span<const PersistencePair>(pa), std::span<const PersistencePair>(pb));
    }
    return total;
}

double s_homol(const Matrix& yhat, const Matrix& y, const RipsConfig& cfg) {
    check_pair(yhat, y);
    const PersistenceDiagram truth = rips_persistence(normalize_cloud(y), cfg);
    const PersistenceDiagram estimate = rips_persistence(normalize_cloud(yhat), cfg);
    const double reference = wasserstein(truth, PersistenceDiagram{});
    if (!(reference > 0.0)) {
        throw DegenerateReferenceError("reference persistence diagram is empty");
    }
    return 1.0 - wasserstein(truth, estimate) / reference;
}

// --- full comparison -------------------------------------------------------

MetricsReport compare_all(const PointCloud& yhat, const PointCloud& y, const CompareConfig& cfg) {
    check_pair(yhat.points(), y.points());
    MetricsReport r;
    const PointCloud padded = pad_attractor(y, yhat.dim());
    const Matrix& est = yhat.points();
    const Matrix& truth = padded.points();

    const auto guarded = [](const char* name, auto&& fn) {
        const auto tag = [name](const Error& e) { return std::string(name) + ": " + e.what(); };
        try {
            return fn();
        } catch (const DegenerateReferenceError& e) {
            throw DegenerateReferenceError(tag(e));
        } catch (const InsufficientDataError& e) {
            throw InsufficientDataError(tag(e));
        } catch (const ShapeError& e) {
            throw ShapeError(tag(e));
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(tag(e));
        }
    };

    const Vector var_truth = column_variances(truth);
    const Vector var_embed = column_variances(est);
    r.s_dim = guarded("s_dim", [&] { return s_dim(var_truth, var_embed); });
    r.effective = guarded("effective_dimension", [&] { return effective_dimension(var_embed); });
    r.s_proc = guarded("s_proc", [&] { return s_proc(est, truth); });
    r.s_dtw = guarded("s_dtw", [&] { return s_dtw(est, truth); });
    for (const auto tau : cfg.taus) {
        r.s_simp.emplace_back(tau, guarded("s_simp", [&] { return simplex_skill(est, truth, tau, cfg.theiler); }));
    }
    const CoverageResult coverage = guarded("s_nn", [&] { return neighbor_coverage(est, truth, cfg.coverage); });
    r.s_nn = coverage.score;
    const CorrelationDimension c_truth =
        guarded("s_corr", [&] { return correlation_dimension(y.points(), cfg.correlation); });
    const CorrelationDimension c_embed =
        guarded("s_corr", [&] { return correlation_dimension(est, cfg.correlation); });
    r.c_truth = c_truth.dimension;
    r.c_embed = c_embed.dimension;
    r.s_corr = guarded("s_corr", [&] { return s_corr(std::abs(r.c_truth), std::abs(r.c_embed)); });
    r.s_homol = guarded("s_homol", [&] { return s_homol(est, truth, cfg.rips); });

    r.params = json{
        {"points", y.size()},
        {"latent_width", yhat.dim()},
        {"truth_width", y.dim()},
        {"procrustes", {{"normalization", "centered, unit Frobenius norm"}, {"reflection", true}, {"scale", "optimal"}}},
        {"dtw", {{"local_cost", "euclidean"}, {"window", "full"}, {"normalizer", "centroid path"}}},
        {"simplex", {{"taus", cfg.taus}, {"theiler_window", cfg.theiler}, {"neighbors", yhat.dim() + 1}}},
        {"neighbor_coverage",
         {{"max_points", cfg.coverage.max_points},
          {"seed", cfg.coverage.seed},
          {"points_used", coverage.points_used},
          {"subsampled", coverage.subsampled}}},
        {"correlation_dimension",
         {{"radii", cfg.correlation.radii},
          {"low_percentile", cfg.correlation.low_percentile},
          {"high_percentile", cfg.correlation.high_percentile},
          {"fit_begin", cfg.correlation.fit_begin},
          {"fit_end", cfg.correlation.fit_end},
          {"max_points", cfg.correlation.max_points},
          {"seed", cfg.correlation.seed},
          {"truth_radius_range", {c_truth.r_low, c_truth.r_high}},
          {"embed_radius_range", {c_embed.r_low, c_embed.r_high}}}},
        {"persistence",
         {{"max_points", cfg.rips.max_points},
          {"seed", cfg.rips.seed},
          {"subsample", "farthest point"},
          {"max_radius", cfg.rips.max_radius ? json(*cfg.rips.max_radius) : json("diameter")},
          {"wasserstein_order", 1},
          {"ground_metric", "euclidean"},
          {"null_diagram", "empty"}}},
    };
    return r;
}

void to_json(json& j, const MetricsReport& r) {
    json simp = json::array();
    for (const auto& [tau, score] : r.s_simp) {
        simp.push_back({{"tau", tau}, {"score", score}});
    }
    j = json{{"s_dim", r.s_dim},
             {"s_proc", r.s_proc},
             {"s_dtw", r.s_dtw},
             {"s_simp", std::move(simp)},
             {"s_nn", r.s_nn},
             {"s_corr", r.s_corr},
             {"s_homol", r.s_homol},
             {"correlation_dimension", {{"truth", r.c_truth}, {"embed", r.c_embed}}},
             {"effective_dimension",
              {{"threshold_count", r.effective.threshold_count},
               {"participation_ratio", r.effective.participation_ratio}}},
             {"params", r.params}};
}

} // namespace fnnforge::metrics
