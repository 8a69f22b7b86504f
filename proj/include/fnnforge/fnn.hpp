#pragma once

#include "fnnforge/timeseries.hpp"

#include <json.hpp>

#include <vector>

namespace fnnforge::fnn {

/// How the per-unit batch activity entering the loss is formed.
enum class Activity {
    SecondMoment, ///< (1/B) sum_b h[b,m]^2
    SquaredMean,  ///< ((1/B) sum_b h[b,m])^2
};

struct FnnConfig {
    double r_tol = 10.0;
    double a_tol = 2.0;
    /// Neighbors per point; 0 selects max(1, ceil(0.01 B)).
    int k = 0;
    Activity activity = Activity::SecondMoment;
    /// Floor on the squared reference distance in the relative-jump ratio.
    double eps = 1e-12;

    int neighbors_for(Eigen::Index batch) const;
};

/// Batch false-neighbor statistics. f_bar[0] is 1 by convention, so unit 0 is never penalized.
struct FnnDiagnostics {
    Vector f_bar;
    Vector attractor_size;
    double loss = 0.0;
};

/// B x B x L tensor of pairwise distances using the leading m+1 latent coordinates.
class DistanceTensor {
public:
    DistanceTensor(Eigen::Index batch, Eigen::Index latent);

    double operator()(Eigen::Index a, Eigen::Index b, Eigen::Index m) const {
        return data_[static_cast<std::size_t>((a * batch_ + b) * latent_ + m)];
    }
    double& operator()(Eigen::Index a, Eigen::Index b, Eigen::Index m) {
        return data_[static_cast<std::size_t>((a * batch_ + b) * latent_ + m)];
    }
    Eigen::Index batch() const noexcept { return batch_; }
    Eigen::Index latent() const noexcept { return latent_; }

private:
    Eigen::Index batch_;
    Eigen::Index latent_;
    std::vector<double> data_;
};

/// g(a, rank, m): batch index of a's rank-th neighbor using the first m+1 coordinates.
/// Rank 0 is always a itself; remaining ties go to the smaller index.
class NeighborIndex {
public:
    NeighborIndex(Eigen::Index batch, Eigen::Index latent);

    Eigen::Index operator()(Eigen::Index a, Eigen::Index rank, Eigen::Index m) const {
        return data_[static_cast<std::size_t>((a * latent_ + m) * batch_ + rank)];
    }
    Eigen::Index& operator()(Eigen::Index a, Eigen::Index rank, Eigen::Index m) {
        return data_[static_cast<std::size_t>((a * latent_ + m) * batch_ + rank)];
    }
    Eigen::Index batch() const noexcept { return batch_; }
    Eigen::Index latent() const noexcept { return latent_; }

private:
    Eigen::Index batch_;
    Eigen::Index latent_;
    std::vector<Eigen::Index> data_;
};

DistanceTensor dim_indexed_distances(const Matrix& h);
NeighborIndex neighbor_sort(const DistanceTensor& d);

/// R_m: RMS spread of the batch over its first m+1 coordinates.
Vector attractor_sizes(const Matrix& h);

/// Per-unit activity (second moment or squared mean, per config).
Vector unit_activity(const Matrix& h, Activity activity);

FnnDiagnostics false_neighbor_fractions(const Matrix& h, const FnnConfig& cfg = {});

double fnn_loss(const Matrix& h, const FnnConfig& cfg = {});
/// Loss with a fixed false-neighbor vector.
double fnn_loss_frozen(const Matrix& h, const Vector& f_bar, Activity activity = Activity::SecondMoment);

/// Gradient of the loss with f_bar treated as a batch constant.
Matrix fnn_loss_grad(const Matrix& h, const FnnConfig& cfg = {});
Matrix fnn_loss_grad_frozen(const Matrix& h, const Vector& f_bar, Activity activity = Activity::SecondMoment);

void to_json(nlohmann::json& j, const FnnDiagnostics& d);

} // namespace fnnforge::fnn
