#pragma once

#include "fnnforge/autoencoder.hpp"
#include "fnnforge/metrics.hpp"
#include "fnnforge/timeseries.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fnnforge::pipeline {

inline constexpr const char* kToolVersion = "0.1.0";

// --- run configuration -----------------------------------------------------

struct DatasetSpec {
    /// Builtin system name; empty when `csv` is set.
    std::string system = "lorenz";
    std::uint64_t seed = 0;
    std::map<std::string, double> params;
    double noise = 0.0;
    /// CSV input: the series is column `column`, the truth attractor the `truth_columns` (may be empty).
    std::string csv;
    Eigen::Index column = 0;
    std::vector<Eigen::Index> truth_columns;
    Eigen::Index segment = 5000;
    Eigen::Index gap = 1000;
};

struct HankelSpec {
    Eigen::Index lags = 10;
    bool standardize = true;
};

struct ModelSpec {
    ae::TrainConfig train;
    std::vector<std::uint64_t> seeds{0};
};

struct BaselineSpec {
    Eigen::Index tica_lag = 1;
    Eigen::Index lagged_dim = 3;
    /// Delay for the lagged baseline; 0 picks the first autocorrelation zero.
    Eigen::Index lagged_tau = 0;
};

struct RunConfig {
    DatasetSpec dataset;
    HankelSpec hankel;
    ModelSpec model;
    metrics::CompareConfig metrics;
    BaselineSpec baseline;
    std::string output = "runs/default";
};

/// Schema-checked parse; unknown keys and wrong types raise InvalidArgument naming the key.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

/// 64-bit FNV-1a over the compact JSON text, as "fnv1a64:<16 hex digits>".
std::string config_hash(const nlohmann::json& doc);

// --- data ------------------------------------------------------------------

/// Hankel matrices for the three partitions plus the test-split truth, one state per Hankel row
/// (the state at the row's last lag).
struct PreparedData {
    TimeSeries train_series;  ///< univariate, standardized when configured
    TimeSeries test_series;
    HankelMatrix train;
    HankelMatrix validation;
    HankelMatrix test;
    std::optional<Matrix> test_states;  ///< every truth coordinate of the test split
    std::optional<Matrix> truth;        ///< test_states aligned to the Hankel rows
};

/// Builtin systems draw train/validation/test from seeds s, s+1, s+2; CSV input is split in time.
PreparedData prepare_data(const RunConfig& cfg);

/// Truth rows matching the Hankel rows of a series of the given length.
Matrix align_truth(const Matrix& states, Eigen::Index hankel_rows);

// --- experiments -----------------------------------------------------------

struct Replicate {
    std::uint64_t seed = 0;
    ae::TrainedAutoencoder trained;
    PointCloud embedding;
};

/// Trains one replicate on the train split and embeds the test split.
Replicate train_replicate(const PreparedData& data, ae::TrainConfig cfg, std::uint64_t seed);

/// Runs fn(0..count-1) on up to `jobs` threads. Results must be written by index.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

/// Worker count: `requested` if positive, else 1; capped by FNN_FORGE_THREADS when set.
int resolve_jobs(int requested);

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;  ///< NaN for a single value
    std::size_t n = 0;
};
MeanSe mean_se(const std::vector<double>& values);

/// Variances sorted descending and normalized to unit sum.
Vector variance_profile(const Matrix& cloud);

struct SweepRow {
    double lambda = 0.0;
    std::uint64_t seed = 0;
    double s_dim = 0.0;
    double top3 = 0.0;
    metrics::EffectiveDimension effective;
    Vector profile;
};

struct SweepResult {
    std::vector<double> lambdas;
    std::vector<SweepRow> rows;           ///< lambda-major, seed-minor
    std::vector<MeanSe> dimension_error;  ///< 1 - s_dim per lambda
    std::size_t best = 0;                 ///< index of the smallest mean error
    Vector truth_profile;
};

SweepResult sweep_lambda(const RunConfig& cfg, const std::vector<double>& lambdas, int jobs);

struct ForecastRow {
    double noise = 0.0;
    bool regularized = false;
    std::uint64_t seed = 0;
    std::vector<std::pair<Eigen::Index, double>> skill;
};

struct ForecastResult {
    std::vector<double> noise_levels;
    std::vector<Eigen::Index> taus;
    std::vector<ForecastRow> rows;  ///< noise-major, then unregularized/regularized, then seed
};

/// Stochastic Lorenz at each noise level; regularized (cfg lambda) and unregularized (lambda 0) models.
ForecastResult forecast_noise(const RunConfig& cfg, const std::vector<double>& noise_levels,
                              const std::vector<Eigen::Index>& taus, int jobs);

// --- artifacts -------------------------------------------------------------

/// Static scatter plot of two columns (0-based) with axes.
std::string scatter_svg(const Matrix& points, Eigen::Index x_col, Eigen::Index y_col, const std::string& title);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);

/// Collects outputs and stage timings; written last as manifest.json.
class Manifest {
public:
    Manifest(nlohmann::json invocation, std::filesystem::path out_dir);

    /// Records a file written under the output directory.
    void add_output(const std::string& stage, const std::filesystem::path& path);
    void add_timing(const std::string& stage, double seconds);
    void write() const;

    const std::filesystem::path& out_dir() const noexcept { return out_dir_; }

private:
    nlohmann::json invocation_;
    std::filesystem::path out_dir_;
    nlohmann::json outputs_ = nlohmann::json::array();
    nlohmann::json timings_ = nlohmann::json::object();
};

} // namespace fnnforge::pipeline
