#pragma once

#include "fnnforge/errors.hpp"
#include "fnnforge/fnn.hpp"
#include "fnnforge/timeseries.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

namespace fnnforge::ae {

// --- layers ----------------------------------------------------------------

/// Additive N(0, sigma^2) noise, active in training mode only.
struct GaussianNoise {
    double sigma = 0.5;
};

/// y = x W^T + b, with W of shape out x in.
struct Affine {
    Matrix weight;
    Vector bias;
};

struct BatchNorm {
    Vector gamma;
    Vector beta;
    Vector running_mean;
    Vector running_var;
    double momentum = 0.99;
    double eps = 1e-3;
};

struct Elu {
    double alpha = 1.0;
};

using Layer = std::variant<GaussianNoise, Affine, BatchNorm, Elu>;

struct LayerStack {
    std::vector<Layer> layers;
    Eigen::Index in_dim = 0;
    Eigen::Index out_dim = 0;
};

/// Encoder: GN-FC-BN-ELU-FC-BN-ELU-FC-BN. Decoder: GN-FC-BN-ELU-FC-BN-ELU-FC-BN-ELU-FC(out).
struct Model {
    LayerStack encoder;
    LayerStack decoder;
    Eigen::Index lags = 0;
    Eigen::Index latent = 0;
};

struct Architecture {
    Eigen::Index lags = 10;
    Eigen::Index latent = 10;
    Eigen::Index hidden = 10;
    double gn_sigma = 0.5;
    double bn_momentum = 0.99;
    double bn_eps = 1e-3;
};

/// Glorot-uniform weights and zero biases from `seed`; BatchNorm gamma = 1, beta = 0.
Model init_model(const Architecture& arch, std::uint64_t seed);
Model init_model(Eigen::Index lags, Eigen::Index latent, std::uint64_t seed);

/// Views over every trainable parameter block, in a fixed order shared by models and gradients.
std::vector<std::span<double>> parameter_views(Model& model);
std::size_t trainable_parameter_count(const Model& model);
/// Encoder parameter count including BatchNorm running statistics.
std::size_t encoder_parameter_count(const Model& model);

// --- forward / backward ----------------------------------------------------

enum class Mode { Train, Infer };

/// Supplies Gaussian-noise samples in training mode.
class NoiseSource {
public:
    virtual ~NoiseSource() = default;
    virtual Matrix draw(Eigen::Index rows, Eigen::Index cols, double sigma) = 0;
};

class RandomNoise final : public NoiseSource {
public:
    explicit RandomNoise(std::uint64_t seed) : rng_(seed) {}
    Matrix draw(Eigen::Index rows, Eigen::Index cols, double sigma) override;

private:
    std::mt19937_64 rng_;
};

/// Replays recorded noise samples in order.
class FixedNoise final : public NoiseSource {
public:
    explicit FixedNoise(std::vector<Matrix> samples) : samples_(std::move(samples)) {}
    Matrix draw(Eigen::Index rows, Eigen::Index cols, double sigma) override;

private:
    std::vector<Matrix> samples_;
    std::size_t next_ = 0;
};

struct LayerCache {
    Matrix input;
    Matrix output;
    Matrix noise;
    Vector batch_mean;
    Vector batch_var;
    Matrix normalized;
};

struct ForwardResult {
    Matrix latent;
    Matrix reconstruction;
    std::vector<LayerCache> encoder_cache;
    std::vector<LayerCache> decoder_cache;

    /// Noise drawn by every Gaussian-noise layer, encoder first.
    std::vector<Matrix> noise_samples() const;
};

/// Train mode draws noise and normalizes with batch statistics; infer mode does neither.
/// Running statistics are not touched (see update_running_stats).
ForwardResult forward(const Model& model, const Matrix& batch, Mode mode, NoiseSource* noise = nullptr);

/// Folds the batch statistics of a train-mode pass into the BatchNorm running estimates.
void update_running_stats(Model& model, const ForwardResult& pass);

struct LossGrad {
    double total = 0.0;
    double reconstruction = 0.0;
    double fnn = 0.0;
    Vector f_bar;
    Model gradient;
    ForwardResult pass;
};

/// Mean squared reconstruction error plus lambda times the false-neighbor loss of the latent batch.
/// When `frozen_f_bar` is given it replaces the batch false-neighbor fractions.
LossGrad loss_and_grad(const Model& model, const Matrix& batch, double lambda, const fnn::FnnConfig& fnn_cfg,
                       NoiseSource& noise, const std::optional<Vector>& frozen_f_bar = std::nullopt);

// --- training --------------------------------------------------------------

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    double lambda = 0.01;
    double learning_rate = 1e-3;
    int epochs = 100;
    int batch_size = 512;
    std::uint64_t seed = 0;
    double gn_sigma = 0.5;
    Eigen::Index latent = 10;
    Eigen::Index hidden = 10;
    double bn_momentum = 0.99;
    double bn_eps = 1e-3;
    fnn::FnnConfig fnn;
    AdamConfig adam;
};

struct EpochRecord {
    int epoch = 0;
    double reconstruction = 0.0;
    double fnn = 0.0;
    double validation = 0.0;
    Vector f_bar;
};

struct TrainedAutoencoder {
    Model model;
    TrainConfig config;
    std::vector<EpochRecord> history;
};

/// Training stopped on a non-finite loss. Carries the epochs completed so far.
class TrainingFailure : public NumericalError {
public:
    TrainingFailure(const std::string& what, int epoch, int batch, std::vector<EpochRecord> partial)
        : NumericalError(what, epoch, batch), partial_(std::move(partial)) {}
    const std::vector<EpochRecord>& partial_history() const noexcept { return partial_; }

private:
    std::vector<EpochRecord> partial_;
};

/// Adam on shuffled mini-batches. Deterministic given cfg.seed.
TrainedAutoencoder train(const HankelMatrix& x_train, const HankelMatrix& x_val, const TrainConfig& cfg);

/// Mean squared reconstruction error in inference mode.
double reconstruction_error(const Model& model, const Matrix& rows);

/// Inference-mode encoder output, one latent row per Hankel row.
PointCloud embed(const Model& model, const HankelMatrix& x);

// --- checkpoints -----------------------------------------------------------

nlohmann::json checkpoint_json(const TrainedAutoencoder& trained);
TrainedAutoencoder load_checkpoint(const nlohmann::json& doc);

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);
void to_json(nlohmann::json& j, const EpochRecord& rec);

} // namespace fnnforge::ae
