#pragma once

#include "fnnforge/timeseries.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace fnnforge::baselines {

enum class LinearKind { Etd, Tica };

/// Linear map from Hankel rows to coordinates: scores = (rows - center) * projection.
struct LinearEmbedding {
    Matrix projection;  ///< T x L, columns ordered by decreasing spectrum value
    Vector center;      ///< length T
    Vector spectrum;    ///< all T singular values (ETD) or eigenvalues (tICA), descending
    LinearKind kind = LinearKind::Etd;
    Eigen::Index lag = 0;
};

struct EmbeddingResult {
    LinearEmbedding model;
    PointCloud scores;
};

/// Principal components of the centered Hankel rows (eigen-time-delay coordinates).
EmbeddingResult etd_embed(const HankelMatrix& x, Eigen::Index latent);

/// Time-lagged independent components from the symmetrized lagged covariance.
EmbeddingResult tica_embed(const HankelMatrix& x, Eigen::Index lag, Eigen::Index latent);

/// Applies a fitted linear embedding to new rows.
PointCloud project(const LinearEmbedding& model, const Matrix& rows);

/// Instantaneous and symmetrized lag-tau covariances used by tICA (before regularization).
struct LaggedCovariances {
    Matrix c0;
    Matrix c_tau;
};
LaggedCovariances lagged_covariances(const Matrix& rows, Eigen::Index lag);

/// Row i holds [x_{i-(d-1)tau}, ..., x_{i-tau}, x_i] for every i with a full history.
PointCloud lagged_embed(const TimeSeries& series, Eigen::Index dim, Eigen::Index tau);

/// First lag at which the sample autocorrelation is <= 0; the series length if it never is.
Eigen::Index first_autocorrelation_zero(const TimeSeries& series);

struct KennelResult {
    int dimension = 0;
    bool saturated = false;           ///< no dimension up to d_max fell below the threshold
    std::vector<double> fractions;    ///< fractions[d-1]: false neighbors going from d to d+1
};

/// Classical single-neighbor false-nearest-neighbor dimension estimate. A neighbor is false when the added
/// coordinate separates it by at least r_tol times its d-dimensional distance, or when the lifted distance
/// reaches a_tol times the series standard deviation.
KennelResult kennel_fnn_dimension(const TimeSeries& series, Eigen::Index tau, int d_max, double r_tol = 10.0,
                                  double a_tol = 2.0, double threshold = 0.01);

std::string kind_name(LinearKind kind);
void to_json(nlohmann::json& j, const LinearEmbedding& e);
void from_json(const nlohmann::json& j, LinearEmbedding& e);

} // namespace fnnforge::baselines
