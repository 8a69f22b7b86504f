#include "fnnforge/timeseries.hpp"

#include "fnnforge/errors.hpp"

#include <cmath>
#include <utility>

namespace fnnforge {

TimeSeries::TimeSeries(Matrix values, double dt, std::string name)
    : values_(std::move(values)), dt_(dt), name_(std::move(name)) {
    if (values_.rows() < 2) {
        throw InsufficientDataError("time series needs at least 2 samples, got " +
                                    std::to_string(values_.rows()));
    }
    if (values_.cols() < 1) {
        throw InvalidArgument("time series needs at least one channel");
    }
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) {
        throw InvalidArgument("sampling interval must be positive and finite");
    }
    if (!values_.allFinite()) {
        throw InvalidArgument("time series contains non-finite values");
    }
}

TimeSeries TimeSeries::univariate(const std::vector<double>& values, double dt, std::string name) {
    Matrix m(static_cast<Eigen::Index>(values.size()), 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
        m(static_cast<Eigen::Index>(i), 0) = values[i];
    }
    return TimeSeries(std::move(m), dt, std::move(name));
}

TimeSeries TimeSeries::channel(Eigen::Index c) const {
    if (c < 0 || c >= channels()) {
        throw InvalidArgument("channel index out of range");
    }
    return TimeSeries(values_.col(c), dt_, name_);
}

TimeSeries TimeSeries::slice(Eigen::Index begin, Eigen::Index count) const {
    if (begin < 0 || count < 0 || begin + count > length()) {
        throw InvalidArgument("slice out of range");
    }
    return TimeSeries(values_.middleRows(begin, count), dt_, name_);
}

HankelMatrix::HankelMatrix(Matrix rows, double source_dt)
    : rows_(std::move(rows)), source_dt_(source_dt) {
    if (rows_.cols() < 2) {
        throw InvalidArgument("Hankel matrix needs at least 2 lags");
    }
}

PointCloud::PointCloud(Matrix points, double dt) : points_(std::move(points)), dt_(dt) {
    if (points_.cols() < 1) {
        throw InvalidArgument("point cloud needs at least one coordinate");
    }
    if (!points_.allFinite()) {
        throw InvalidArgument("point cloud contains non-finite values");
    }
}

Vector column_means(const Matrix& m) {
    return m.colwise().mean().transpose();
}

Vector column_variances(const Matrix& m) {
    const Vector mu = column_means(m);
    Vector var(m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        var(c) = (m.col(c).array() - mu(c)).square().mean();
    }
    return var;
}

TimeSeries standardize(const TimeSeries& series) {
    const Matrix& x = series.values();
    const Vector mu = column_means(x);
    const Vector var = column_variances(x);
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        if (!(var(c) > 0.0)) {
            throw ZeroVarianceError("channel " + std::to_string(c) + " has zero variance");
        }
        out.col(c) = (x.col(c).array() - mu(c)) / std::sqrt(var(c));
    }
    return TimeSeries(std::move(out), series.dt(), series.name());
}

HankelMatrix build_hankel(const TimeSeries& series, Eigen::Index lags) {
    if (series.channels() != 1) {
        throw InvalidArgument("build_hankel expects a univariate series");
    }
    if (lags < 2) {
        throw InvalidArgument("Hankel lag count must be at least 2");
    }
    const Eigen::Index n = series.length();
    if (n < lags) {
        throw InsufficientDataError("series of length " + std::to_string(n) +
                                    " is shorter than lag count " + std::to_string(lags));
    }
    const auto& x = series.values();
    Matrix rows(n - lags + 1, lags);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        for (Eigen::Index j = 0; j < lags; ++j) {
            rows(i, j) = x(i + j, 0);
        }
    }
    return HankelMatrix(std::move(rows), series.dt());
}

TimeSeries downsample(const TimeSeries& series, Eigen::Index factor) {
    if (factor < 1) {
        throw InvalidArgument("downsample factor must be >= 1");
    }
    const Eigen::Index n = (series.length() + factor - 1) / factor;
    Matrix out(n, series.channels());
    for (Eigen::Index i = 0; i < n; ++i) {
        out.row(i) = series.values().row(i * factor);
    }
    return TimeSeries(std::move(out), series.dt() * static_cast<double>(factor), series.name());
}

Partition split_train_val_test(const TimeSeries& series, Eigen::Index segment_len, Eigen::Index gap) {
    if (segment_len < 2 || gap < 0) {
        throw InvalidArgument("segment length must be >= 2 and gap >= 0");
    }
    const Eigen::Index needed = 3 * segment_len + 2 * gap;
    if (series.length() < needed) {
        throw InsufficientDataError("split needs " + std::to_string(needed) + " samples, got " +
                                    std::to_string(series.length()));
    }
    const Eigen::Index stride = segment_len + gap;
    return Partition{series.slice(0, segment_len), series.slice(stride, segment_len),
                     series.slice(2 * stride, segment_len)};
}

} // namespace fnnforge
