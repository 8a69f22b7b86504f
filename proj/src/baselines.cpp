#include "fnnforge/baselines.hpp"

#include "fnnforge/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace fnnforge::baselines {

using nlohmann::json;

namespace {

/// Flips each column so that its largest-magnitude entry is positive.
void fix_signs(Matrix& vectors) {
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        Eigen::Index at = 0;
        vectors.col(c).cwiseAbs().maxCoeff(&at);
        if (vectors(at, c) < 0.0) {
            vectors.col(c) *= -1.0;
        }
    }
}

void check_latent(Eigen::Index latent, Eigen::Index lags) {
    if (latent < 1 || latent > lags) {
        throw InvalidArgument("latent width " + std::to_string(latent) + " must be in [1, " + std::to_string(lags) +
                              "]");
    }
}

std::vector<double> to_vec(const Vector& v) {
    return {v.data(), v.data() + v.size()};
}

} // namespace

EmbeddingResult etd_embed(const HankelMatrix& x, Eigen::Index latent) {
    const Eigen::Index T = x.lags();
    check_latent(latent, T);
    if (x.size() < T) {
        throw InsufficientDataError("ETD needs at least as many rows as lags");
    }
    LinearEmbedding model;
    model.kind = LinearKind::Etd;
    model.center = column_means(x.rows());
    const Eigen::MatrixXd centered = (x.rows().rowwise() - model.center.transpose());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    model.spectrum = svd.singularValues();
    Matrix v = svd.matrixV();
    fix_signs(v);
    model.projection = v.leftCols(latent);
    PointCloud scores = project(model, x.rows());
    return {std::move(model), std::move(scores)};
}

LaggedCovariances lagged_covariances(const Matrix& rows, Eigen::Index lag) {
    const Eigen::Index n = rows.rows();
    if (lag < 0 || n <= lag) {
        throw InsufficientDataError("lag " + std::to_string(lag) + " needs more than " + std::to_string(lag) +
                                    " rows");
    }
    const Vector mean = column_means(rows);
    const Matrix centered = rows.rowwise() - mean.transpose();
    const Eigen::Index m = n - lag;
    const auto head = centered.topRows(m);
    const auto tail = centered.bottomRows(m);
    LaggedCovariances cov;
    cov.c0 = (head.transpose() * head + tail.transpose() * tail) / (2.0 * static_cast<double>(m));
    const Matrix cross = head.transpose() * tail / static_cast<double>(m);
    cov.c_tau = 0.5 * (cross + cross.transpose());
    return cov;
}

EmbeddingResult tica_embed(const HankelMatrix& x, Eigen::Index lag, Eigen::Index latent) {
    const Eigen::Index T = x.lags();
    check_latent(latent, T);
    const LaggedCovariances cov = lagged_covariances(x.rows(), lag);
    // ridge only for rank-deficient inputs (e.g. a pure sinusoid)
    Eigen::MatrixXd c0 = cov.c0;
    if (Eigen::LLT<Eigen::MatrixXd>(c0).info() != Eigen::Success || cov.c0.diagonal().minCoeff() <= 0.0) {
        c0 += 1e-10 * std::max(cov.c0.trace() / static_cast<double>(T), 1.0) * Matrix::Identity(T, T);
    }
    const Eigen::MatrixXd ct = cov.c_tau;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(ct, c0);
    if (solver.info() != Eigen::Success) {
        throw Error("tICA generalized eigenproblem did not converge");
    }
    // Eigen returns ascending eigenvalues
    LinearEmbedding model;
    model.kind = LinearKind::Tica;
    model.lag = lag;
    model.center = column_means(x.rows());
    model.spectrum = solver.eigenvalues().reverse();
    Matrix w = solver.eigenvectors().rowwise().reverse();
    fix_signs(w);
    model.projection = w.leftCols(latent);
    PointCloud scores = project(model, x.rows());
    return {std::move(model), std::move(scores)};
}

PointCloud project(const LinearEmbedding& model, const Matrix& rows) {
    if (rows.cols() != model.center.size()) {
        throw ShapeError("row width does not match the embedding input width");
    }
    return PointCloud((rows.rowwise() - model.center.transpose()) * model.projection);
}

PointCloud lagged_embed(const TimeSeries& series, Eigen::Index dim, Eigen::Index tau) {
    if (series.channels() != 1) {
        throw InvalidArgument("lagged_embed expects a univariate series");
    }
    if (dim < 1 || tau < 1) {
        throw InvalidArgument("embedding dimension and delay must be positive");
    }
    const Eigen::Index n = series.length();
    const Eigen::Index span = (dim - 1) * tau;
    if (n <= span) {
        throw InsufficientDataError("series of length " + std::to_string(n) + " is too short for dimension " +
                                    std::to_string(dim) + " and delay " + std::to_string(tau));
    }
    const auto& x = series.values();
    Matrix out(n - span, dim);
    for (Eigen::Index i = span; i < n; ++i) {
        for (Eigen::Index c = 0; c < dim; ++c) {
            out(i - span, c) = x(i - (dim - 1 - c) * tau, 0);
        }
    }
    return PointCloud(std::move(out), series.dt());
}

Eigen::Index first_autocorrelation_zero(const TimeSeries& series) {
    const Vector x = series.values().col(0).array() - series.values().col(0).mean();
    const double var = x.squaredNorm();
    if (!(var > 0.0)) {
        throw ZeroVarianceError("autocorrelation of a constant series is undefined");
    }
    const Eigen::Index n = x.size();
    for (Eigen::Index lag = 1; lag < n; ++lag) {
        const double c = x.head(n - lag).dot(x.tail(n - lag));
        if (c <= 0.0) {
            return lag;
        }
    }
    return n;
}

KennelResult kennel_fnn_dimension(const TimeSeries& series, Eigen::Index tau, int d_max, double r_tol,
                                  double a_tol, double threshold) {
    if (d_max < 1) {
        throw InvalidArgument("d_max must be at least 1");
    }
    // every dimension is evaluated on the same samples: those with a full (d_max + 1)-lag history
    const PointCloud full = lagged_embed(series, d_max + 1, tau);
    const Matrix& rows = full.points();
    const Eigen::Index n = rows.rows();
    if (n < 3) {
        throw InsufficientDataError("too few delay vectors for the false-neighbor test");
    }
    const double spread = std::sqrt(column_variances(series.values())(0));
    const auto ncols = rows.cols();

    KennelResult result;
    std::vector<double> sq(static_cast<std::size_t>(n));
    for (int d = 1; d <= d_max; ++d) {
        // coordinates d-dim: the last d columns; the extra coordinate is the column before them
        const Eigen::Index first = ncols - d;
        const Eigen::Index extra = first - 1;
        long false_count = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            Eigen::Index nearest = -1;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) {
                    continue;
                }
                double s = 0.0;
                for (Eigen::Index c = first; c < ncols; ++c) {
                    const double diff = rows(i, c) - rows(j, c);
                    s += diff * diff;
                }
                if (s < best) {
                    best = s;
                    nearest = j;
                }
            }
            const double gap = rows(i, extra) - rows(nearest, extra);
            const double lifted = std::sqrt(best + gap * gap);
            const bool jump = std::abs(gap) >= r_tol * std::max(std::sqrt(best), 1e-12);
            if (jump || lifted >= a_tol * spread) {
                ++false_count;
            }
        }
        result.fractions.push_back(static_cast<double>(false_count) / static_cast<double>(n));
        if (result.dimension == 0 && result.fractions.back() < threshold) {
            result.dimension = d;
        }
    }
    if (result.dimension == 0) {
        result.dimension = d_max;
        result.saturated = true;
    }
    return result;
}

std::string kind_name(LinearKind kind) {
    return kind == LinearKind::Etd ? "etd" : "tica";
}

void to_json(json& j, const LinearEmbedding& e) {
    j = json{{"kind", kind_name(e.kind)},
             {"lag", e.lag},
             {"lags", e.projection.rows()},
             {"latent", e.projection.cols()},
             {"projection", std::vector<double>(e.projection.data(), e.projection.data() + e.projection.size())},
             {"center", to_vec(e.center)},
             {"spectrum", to_vec(e.spectrum)}};
}

void from_json(const json& j, LinearEmbedding& e) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind != "etd" && kind != "tica") {
        throw InvalidArgument("unknown linear embedding kind: " + kind);
    }
    e.kind = kind == "etd" ? LinearKind::Etd : LinearKind::Tica;
    e.lag = j.at("lag").get<Eigen::Index>();
    const auto rows = j.at("lags").get<Eigen::Index>();
    const auto cols = j.at("latent").get<Eigen::Index>();
    const auto p = j.at("projection").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(p.size()) != rows * cols) {
        throw InvalidArgument("projection size does not match its shape");
    }
    e.projection = Eigen::Map<const Matrix>(p.data(), rows, cols);
    const auto c = j.at("center").get<std::vector<double>>();
    e.center = Eigen::Map<const Vector>(c.data(), static_cast<Eigen::Index>(c.size()));
    const auto s = j.at("spectrum").get<std::vector<double>>();
    e.spectrum = Eigen::Map<const Vector>(s.data(), static_cast<Eigen::Index>(s.size()));
}

} // namespace fnnforge::baselines
