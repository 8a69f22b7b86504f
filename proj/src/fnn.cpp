#include "fnnforge/fnn.hpp"

#include "fnnforge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fnnforge::fnn {

namespace {

void check_batch(const Matrix& h) {
    if (h.rows() < 2) {
        throw ShapeError("latent batch needs at least 2 samples");
    }
    if (h.cols() < 1) {
        throw ShapeError("latent batch needs at least 1 unit");
    }
    if (!h.allFinite()) {
        throw InvalidArgument("latent batch contains non-finite values");
    }
}

/// Orders batch members as neighbors of `self`: self first, then by distance, then by index.
struct NeighborOrder {
    Eigen::Index self;
    const double* dist; // distances from self, indexed by batch member

    bool operator()(Eigen::Index x, Eigen::Index y) const {
        if (x == self || y == self) {
            return x == self && y != self;
        }
        if (dist[x] != dist[y]) {
            return dist[x] < dist[y];
        }
        return x < y;
    }
};

} // namespace

int FnnConfig::neighbors_for(Eigen::Index batch) const {
    if (k > 0) {
        return k;
    }
    return std::max(1, static_cast<int>(std::ceil(0.01 * static_cast<double>(batch))));
}

DistanceTensor::DistanceTensor(Eigen::Index batch, Eigen::Index latent)
    : batch_(batch), latent_(latent), data_(static_cast<std::size_t>(batch * batch * latent), 0.0) {}

NeighborIndex::NeighborIndex(Eigen::Index batch, Eigen::Index latent)
    : batch_(batch), latent_(latent), data_(static_cast<std::size_t>(batch * batch * latent), 0) {}

DistanceTensor dim_indexed_distances(const Matrix& h) {
    check_batch(h);
    const Eigen::Index B = h.rows();
    const Eigen::Index L = h.cols();
    DistanceTensor d(B, L);
    for (Eigen::Index a = 0; a < B; ++a) {
        for (Eigen::Index b = a + 1; b < B; ++b) {
            double sq = 0.0;
            for (Eigen::Index m = 0; m < L; ++m) {
                const double diff = h(a, m) - h(b, m);
                sq += diff * diff;
                const double dist = std::sqrt(sq);
                d(a, b, m) = dist;
                d(b, a, m) = dist;
            }
        }
    }
    return d;
}

NeighborIndex neighbor_sort(const DistanceTensor& d) {
    const Eigen::Index B = d.batch();
    const Eigen::Index L = d.latent();
    NeighborIndex g(B, L);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(B));
    std::vector<double> row(static_cast<std::size_t>(B));
    for (Eigen::Index a = 0; a < B; ++a) {
        for (Eigen::Index m = 0; m < L; ++m) {
            for (Eigen::Index b = 0; b < B; ++b) {
                row[static_cast<std::size_t>(b)] = d(a, b, m);
            }
            std::iota(order.begin(), order.end(), Eigen::Index{0});
            std::sort(order.begin(), order.end(), NeighborOrder{a, row.data()});
            for (Eigen::Index r = 0; r < B; ++r) {
                g(a, r, m) = order[static_cast<std::size_t>(r)];
            }
        }
    }
    return g;
}

Vector attractor_sizes(const Matrix& h) {
    check_batch(h);
    const Vector var = column_variances(h);
    Vector size(h.cols());
    double cumulative = 0.0;
    for (Eigen::Index m = 0; m < h.cols(); ++m) {
        cumulative += var(m);
        size(m) = std::sqrt(cumulative / static_cast<double>(m + 1));
    }
    return size;
}

Vector unit_activity(const Matrix& h, Activity activity) {
    if (activity == Activity::SecondMoment) {
        return h.array().square().colwise().mean().transpose();
    }
    return h.colwise().mean().array().square().transpose();
}

FnnDiagnostics false_neighbor_fractions(const Matrix& h, const FnnConfig& cfg) {
    check_batch(h);
    const Eigen::Index B = h.rows();
    const Eigen::Index L = h.cols();
    const int K = cfg.neighbors_for(B);
    if (K < 1 || K > B - 1) {
        throw InvalidArgument("neighbor count K=" + std::to_string(K) + " needs 1 <= K <= B-1 (B=" +
                              std::to_string(B) + ")");
    }
    if (!(cfg.r_tol > 0.0) || !(cfg.a_tol > 0.0)) {
        throw InvalidArgument("R_tol and A_tol must be positive");
    }

    FnnDiagnostics diag;
    diag.attractor_size = attractor_sizes(h);
    Vector false_count = Vector::Zero(L);

    // Per-point distance rows for every leading-coordinate count, then the K+1 nearest per count.
    const auto nb = static_cast<std::size_t>(B);
    const auto kk = static_cast<std::size_t>(K) + 1;
    std::vector<double> dist(nb * static_cast<std::size_t>(L));
    std::vector<Eigen::Index> order(nb);
    std::vector<Eigen::Index> prev_top(kk);
    std::vector<Eigen::Index> top(kk);
    std::vector<double> row(nb);
    for (Eigen::Index a = 0; a < B; ++a) {
        for (Eigen::Index b = 0; b < B; ++b) {
            double sq = 0.0;
            for (Eigen::Index m = 0; m < L; ++m) {
                const double diff = h(a, m) - h(b, m);
                sq += diff * diff;
                dist[static_cast<std::size_t>(m) * nb + static_cast<std::size_t>(b)] = std::sqrt(sq);
            }
        }
        for (Eigen::Index m = 0; m < L; ++m) {
            const double* dm = dist.data() + static_cast<std::size_t>(m) * nb;
            std::iota(order.begin(), order.end(), Eigen::Index{0});
            std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk), order.end(),
                              NeighborOrder{a, dm});
            std::copy_n(order.begin(), kk, top.begin());
            if (m > 0) {
                const double size_threshold = cfg.a_tol * diag.attractor_size(m);
                for (std::size_t r = 1; r < kk; ++r) {
                    const double sorted = dm[top[r]];
                    const double carried = dm[prev_top[r]];
                    const double rel = (carried * carried - sorted * sorted) / std::max(sorted * sorted, cfg.eps);
                    const bool jump = rel >= cfg.r_tol;
                    const bool far = size_threshold > 0.0 && sorted >= size_threshold;
                    if (jump || far) {
                        false_count(m) += 1.0;
                    }
                }
            }
            std::swap(prev_top, top);
        }
    }

    diag.f_bar = false_count / (static_cast<double>(K) * static_cast<double>(B));
    diag.f_bar(0) = 1.0;
    diag.loss = fnn_loss_frozen(h, diag.f_bar, cfg.activity);
    return diag;
}

double fnn_loss_frozen(const Matrix& h, const Vector& f_bar, Activity activity) {
    if (f_bar.size() != h.cols()) {
        throw ShapeError("false-neighbor vector length does not match latent width");
    }
    const Vector act = unit_activity(h, activity);
    double loss = 0.0;
    for (Eigen::Index m = 1; m < h.cols(); ++m) {
        loss += (1.0 - f_bar(m)) * act(m);
    }
    return loss;
}

double fnn_loss(const Matrix& h, const FnnConfig& cfg) {
    return false_neighbor_fractions(h, cfg).loss;
}

Matrix fnn_loss_grad_frozen(const Matrix& h, const Vector& f_bar, Activity activity) {
    if (f_bar.size() != h.cols()) {
        throw ShapeError("false-neighbor vector length does not match latent width");
    }
    const double inv_b = 1.0 / static_cast<double>(h.rows());
    Matrix grad = Matrix::Zero(h.rows(), h.cols());
    for (Eigen::Index m = 1; m < h.cols(); ++m) {
        const double w = 1.0 - f_bar(m);
        if (activity == Activity::SecondMoment) {
            grad.col(m) = (2.0 * w * inv_b) * h.col(m);
        } else {
            const double mean = h.col(m).mean();
            grad.col(m).setConstant(2.0 * w * mean * inv_b);
        }
    }
    return grad;
}

Matrix fnn_loss_grad(const Matrix& h, const FnnConfig& cfg) {
    const auto diag = false_neighbor_fractions(h, cfg);
    return fnn_loss_grad_frozen(h, diag.f_bar, cfg.activity);
}

void to_json(nlohmann::json& j, const FnnDiagnostics& d) {
    j = nlohmann::json{{"f_bar", std::vector<double>(d.f_bar.begin(), d.f_bar.end())},
                       {"attractor_size", std::vector<double>(d.attractor_size.begin(), d.attractor_size.end())},
                       {"loss", d.loss}};
}

} // namespace fnnforge::fnn
