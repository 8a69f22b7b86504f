#pragma once

#include "fnnforge/timeseries.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace fnnforge::metrics {

/// Appends latent - d zero columns.
PointCloud pad_attractor(const PointCloud& y, Eigen::Index latent);

// --- Procrustes ------------------------------------------------------------

struct Procrustes {
    Matrix rotation;   ///< orthogonal d x d, applied on the right of the normalized estimate
    double scale = 0;  ///< optimal isotropic scale after normalization
    Matrix aligned;    ///< scale * normalized(yhat) * rotation
    Matrix reference;  ///< normalized y: centered, unit Frobenius norm
};

/// Centers both clouds, scales each to unit Frobenius norm, then finds the best rotation/reflection and scale.
Procrustes procrustes_align(const Matrix& yhat, const Matrix& y);

/// 1 - ||aligned - reference|| / ||reference||.
double s_proc(const Matrix& yhat, const Matrix& y);

// --- dynamic time warping --------------------------------------------------

/// Classic full-window DTW with Euclidean local cost; the path starts and ends at both sequences' ends.
double dtw_distance(const Matrix& a, const Matrix& b);

/// 1 - DTW(aligned, reference) / DTW(centroid path, reference), on Procrustes-normalized clouds.
double s_dtw(const Matrix& yhat, const Matrix& y);

// --- simplex cross-mapping -------------------------------------------------

/// Predicts y[i + tau] from the k = dim(yhat) + 1 nearest neighbors of yhat[i] (Theiler window excluded)
/// and returns 1 - mse / (summed variance of y).
double simplex_skill(const Matrix& yhat, const Matrix& y, Eigen::Index tau, Eigen::Index theiler = 10);

// --- neighbor coverage -----------------------------------------------------

/// kappa(k) for k = 1..n: overlap of the first k entries of two neighbor lists.
std::vector<int> coverage_counts(std::span<const Eigen::Index> a, std::span<const Eigen::Index> b);

struct CoverageConfig {
    Eigen::Index max_points = 2000;
    std::uint64_t seed = 0;
};

struct CoverageResult {
    double score = 0.0;
    Eigen::Index points_used = 0;
    bool subsampled = false;
};

CoverageResult neighbor_coverage(const Matrix& yhat, const Matrix& y, const CoverageConfig& cfg = {});

// --- variance profile ------------------------------------------------------

double s_dim(const Vector& var_truth, const Vector& var_embed);

struct EffectiveDimension {
    int threshold_count = 0;
    double participation_ratio = 0.0;
};
EffectiveDimension effective_dimension(const Vector& variances, double threshold = 0.01);

// --- correlation dimension -------------------------------------------------

struct CorrelationDimensionConfig {
    int radii = 32;
    /// Radii span these percentiles of the pairwise distances.
    double low_percentile = 0.1;
    double high_percentile = 10.0;
    /// Fraction of the (log-spaced) radii, from the small end, bounding the fit.
    double fit_begin = 0.25;
    double fit_end = 0.75;
    Eigen::Index max_points = 3000;
    std::uint64_t seed = 0;
};

struct CorrelationDimension {
    double dimension = 0.0;
    double r_low = 0.0;
    double r_high = 0.0;
    Eigen::Index points_used = 0;
};

CorrelationDimension correlation_dimension(const Matrix& cloud, const CorrelationDimensionConfig& cfg = {});

/// 1 - |c_truth - c_embed| / (|c_truth| + |c_embed|).
double s_corr(double c_truth, double c_embed);

// --- persistence -----------------------------------------------------------

struct PersistencePair {
    double birth = 0.0;
    double death = 0.0;
    int dim = 0;
};

struct PersistenceDiagram {
    std::vector<PersistencePair> points;

    std::vector<PersistencePair> in_dim(int dim) const;
};

struct RipsConfig {
    Eigen::Index max_points = 400;
    /// Truncation value for essential classes; the cloud diameter when unset.
    std::optional<double> max_radius;
    std::uint64_t seed = 0;
};

/// Seeded greedy farthest-point subsample (row indices in selection order).
std::vector<Eigen::Index> farthest_point_sample(const Matrix& cloud, Eigen::Index count, std::uint64_t seed);

/// H0 and H1 Vietoris-Rips persistence. Zero-persistence pairs are dropped.
PersistenceDiagram rips_persistence(const Matrix& cloud, const RipsConfig& cfg = {});

/// Minimum-cost perfect assignment on a square matrix; returns (cost, column for each row).
std::pair<double, std::vector<int>> hungarian(const Matrix& cost);

/// Order-1 Wasserstein distance with Euclidean ground metric, diagonal matching allowed.
double wasserstein(std::span<const PersistencePair> a, std::span<const PersistencePair> b);
/// Sum of per-dimension distances over dimensions 0 and 1.
double wasserstein(const PersistenceDiagram& a, const PersistenceDiagram& b);

/// 1 - W(P_Y, P_Yhat) / W(P_Y, empty), diagrams of Procrustes-normalized clouds.
double s_homol(const Matrix& yhat, const Matrix& y, const RipsConfig& cfg = {});

// --- full comparison -------------------------------------------------------

struct CompareConfig {
    std::vector<Eigen::Index> taus{0, 1, 10, 20};
    Eigen::Index theiler = 10;
    CoverageConfig coverage;
    CorrelationDimensionConfig correlation;
    RipsConfig rips;
};

struct MetricsReport {
    double s_dim = 0.0;
    double s_proc = 0.0;
    double s_dtw = 0.0;
    std::vector<std::pair<Eigen::Index, double>> s_simp;
    double s_nn = 0.0;
    double s_corr = 0.0;
    double s_homol = 0.0;
    double c_truth = 0.0;
    double c_embed = 0.0;
    EffectiveDimension effective;
    nlohmann::json params;
};

/// Pads the truth to the embedding width and runs every metric.
MetricsReport compare_all(const PointCloud& yhat, const PointCloud& y, const CompareConfig& cfg = {});

void to_json(nlohmann::json& j, const MetricsReport& r);

} // namespace fnnforge::metrics
