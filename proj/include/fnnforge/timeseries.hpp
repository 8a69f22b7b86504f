#pragma once

#include <Eigen/Dense>

#include <string>
#include <tuple>
#include <vector>

namespace fnnforge {

/// Row-major dense matrix; rows are samples (time order), columns are channels/coordinates.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Uniformly sampled signal with one or more channels.
/// Invariants: at least two samples, dt > 0, every entry finite.
class TimeSeries {
public:
    TimeSeries(Matrix values, double dt, std::string name = {});

    /// Univariate convenience constructor.
    static TimeSeries univariate(const std::vector<double>& values, double dt, std::string name = {});

    const Matrix& values() const noexcept { return values_; }
    double dt() const noexcept { return dt_; }
    const std::string& name() const noexcept { return name_; }
    Eigen::Index length() const noexcept { return values_.rows(); }
    Eigen::Index channels() const noexcept { return values_.cols(); }

    /// Single channel as a new univariate series.
    TimeSeries channel(Eigen::Index c) const;
    /// Contiguous sample range [begin, begin + count).
    TimeSeries slice(Eigen::Index begin, Eigen::Index count) const;

private:
    Matrix values_;
    double dt_;
    std::string name_;
};

/// Lag-lifted measurement matrix. Row i holds samples x_i ... x_{i+T-1}.
class HankelMatrix {
public:
    HankelMatrix(Matrix rows, double source_dt);

    const Matrix& rows() const noexcept { return rows_; }
    Eigen::Index lags() const noexcept { return rows_.cols(); }
    Eigen::Index size() const noexcept { return rows_.rows(); }
    double source_dt() const noexcept { return source_dt_; }

private:
    Matrix rows_;
    double source_dt_;
};

/// Time-ordered set of attractor states (ground truth or embedding).
class PointCloud {
public:
    PointCloud(Matrix points, double dt = 1.0);

    const Matrix& points() const noexcept { return points_; }
    Eigen::Index size() const noexcept { return points_.rows(); }
    Eigen::Index dim() const noexcept { return points_.cols(); }
    double dt() const noexcept { return dt_; }

private:
    Matrix points_;
    double dt_;
};

/// Per-channel z-score with the population (1/N) variance.
TimeSeries standardize(const TimeSeries& series);

/// Hankel matrix of a univariate series with consecutive lags.
HankelMatrix build_hankel(const TimeSeries& series, Eigen::Index lags);

/// Keeps every factor-th sample starting at index 0.
TimeSeries downsample(const TimeSeries& series, Eigen::Index factor);

struct Partition {
    TimeSeries train;
    TimeSeries validation;
    TimeSeries test;
};

/// Three disjoint, ordered segments of segment_len samples with at least `gap` samples between them.
Partition split_train_val_test(const TimeSeries& series, Eigen::Index segment_len = 5000,
                               Eigen::Index gap = 1000);

/// Population mean and variance per column.
Vector column_means(const Matrix& m);
Vector column_variances(const Matrix& m);

} // namespace fnnforge
