#include "fnnforge/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace fnnforge::ae {

using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Affine glorot_affine(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Affine layer{Matrix(out, in), Vector::Zero(out)};
    for (Eigen::Index r = 0; r < out; ++r) {
        for (Eigen::Index c = 0; c < in; ++c) {
            layer.weight(r, c) = dist(rng);
        }
    }
    return layer;
}

BatchNorm make_batch_norm(Eigen::Index width, const Architecture& arch) {
    return BatchNorm{Vector::Ones(width), Vector::Zero(width), Vector::Zero(width), Vector::Ones(width),
                     arch.bn_momentum, arch.bn_eps};
}

Matrix affine_forward(const Affine& layer, const Matrix& x) {
    Matrix y = x * layer.weight.transpose();
    y.rowwise() += layer.bias.transpose();
    return y;
}

Matrix elu_forward(const Elu& layer, const Matrix& x) {
    return x.unaryExpr([alpha = layer.alpha](double v) { return v > 0.0 ? v : alpha * std::expm1(v); });
}

Matrix bn_apply(const BatchNorm& layer, const Matrix& x, const Vector& mean, const Vector& var, Matrix& normalized) {
    const Eigen::ArrayXd inv_std = (var.array() + layer.eps).rsqrt();
    normalized = ((x.rowwise() - mean.transpose()).array().rowwise() * inv_std.transpose()).matrix();
    Matrix y = (normalized.array().rowwise() * layer.gamma.transpose().array()).matrix();
    y.rowwise() += layer.beta.transpose();
    return y;
}

Matrix stack_forward(const LayerStack& stack, const Matrix& input, Mode mode, NoiseSource* noise,
                     std::vector<LayerCache>& cache) {
    cache.assign(stack.layers.size(), LayerCache{});
    Matrix x = input;
    for (std::size_t i = 0; i < stack.layers.size(); ++i) {
        LayerCache& c = cache[i];
        c.input = x;
        x = std::visit(Overloaded{
                           [&](const GaussianNoise& l) -> Matrix {
                               if (mode == Mode::Train && l.sigma > 0.0 && noise != nullptr) {
                                   c.noise = noise->draw(x.rows(), x.cols(), l.sigma);
                                   return x + c.noise;
                               }
                               return x;
                           },
                           [&](const Affine& l) -> Matrix { return affine_forward(l, x); },
                           [&](const BatchNorm& l) -> Matrix {
                               if (mode == Mode::Train) {
                                   c.batch_mean = x.colwise().mean().transpose();
                                   c.batch_var = (x.rowwise() - c.batch_mean.transpose())
                                                     .array()
                                                     .square()
                                                     .colwise()
                                                     .mean()
                                                     .transpose();
                                   return bn_apply(l, x, c.batch_mean, c.batch_var, c.normalized);
                               }
                               return bn_apply(l, x, l.running_mean, l.running_var, c.normalized);
                           },
                           [&](const Elu& l) -> Matrix { return elu_forward(l, x); },
                       },
                       stack.layers[i]);
        c.output = x;
    }
    return x;
}

/// Backpropagates `grad` (w.r.t. the stack output) through the stack; fills `out` with parameter gradients
/// and returns the gradient w.r.t. the stack input.
Matrix stack_backward(const LayerStack& stack, const std::vector<LayerCache>& cache, Mode mode, Matrix grad,
                      LayerStack& out) {
    for (std::size_t idx = stack.layers.size(); idx-- > 0;) {
        const LayerCache& c = cache[idx];
        std::visit(Overloaded{
                       [&](const GaussianNoise&) {},
                       [&](const Affine& l) {
                           auto& g = std::get<Affine>(out.layers[idx]);
                           g.weight = grad.transpose() * c.input;
                           g.bias = grad.colwise().sum().transpose();
                           grad = grad * l.weight;
                       },
                       [&](const BatchNorm& l) {
                           auto& g = std::get<BatchNorm>(out.layers[idx]);
                           g.gamma = (grad.array() * c.normalized.array()).colwise().sum().transpose();
                           g.beta = grad.colwise().sum().transpose();
                           const Vector& var = mode == Mode::Train ? c.batch_var : l.running_var;
                           const Eigen::ArrayXd inv_std = (var.array() + l.eps).rsqrt();
                           const Eigen::ArrayXXd dxhat = grad.array().rowwise() * l.gamma.transpose().array();
                           if (mode == Mode::Train) {
                               const double n = static_cast<double>(grad.rows());
                               const Eigen::ArrayXd sum_d = dxhat.colwise().sum().transpose();
                               const Eigen::ArrayXd sum_dx =
                                   (dxhat * c.normalized.array()).colwise().sum().transpose();
                               Eigen::ArrayXXd dx = n * dxhat;
                               dx.rowwise() -= sum_d.transpose();
                               dx -= c.normalized.array().rowwise() * sum_dx.transpose();
                               dx.rowwise() *= (inv_std / n).transpose();
                               grad = dx.matrix();
                           } else {
                               grad = (dxhat.rowwise() * inv_std.transpose()).matrix();
                           }
                       },
                       [&](const Elu& l) {
                           const Eigen::ArrayXXd slope = (c.input.array() > 0.0)
                                                             .select(Eigen::ArrayXXd::Ones(c.input.rows(), c.input.cols()),
                                                                     c.output.array() + l.alpha);
                           grad = (grad.array() * slope).matrix();
                       },
                   },
                   stack.layers[idx]);
    }
    return grad;
}

void zero_parameters(LayerStack& stack) {
    for (auto& layer : stack.layers) {
        std::visit(Overloaded{
                       [](GaussianNoise&) {},
                       [](Affine& l) {
                           l.weight.setZero();
                           l.bias.setZero();
                       },
                       [](BatchNorm& l) {
                           l.gamma.setZero();
                           l.beta.setZero();
                           l.running_mean.setZero();
                           l.running_var.setZero();
                       },
                       [](Elu&) {},
                   },
                   layer);
    }
}

void collect_views(LayerStack& stack, std::vector<std::span<double>>& views) {
    for (auto& layer : stack.layers) {
        if (auto* a = std::get_if<Affine>(&layer)) {
            views.emplace_back(a->weight.data(), static_cast<std::size_t>(a->weight.size()));
            views.emplace_back(a->bias.data(), static_cast<std::size_t>(a->bias.size()));
        } else if (auto* bn = std::get_if<BatchNorm>(&layer)) {
            views.emplace_back(bn->gamma.data(), static_cast<std::size_t>(bn->gamma.size()));
            views.emplace_back(bn->beta.data(), static_cast<std::size_t>(bn->beta.size()));
        }
    }
}

std::size_t count_parameters(const LayerStack& stack, bool with_running_stats) {
    std::size_t total = 0;
    for (const auto& layer : stack.layers) {
        if (const auto* a = std::get_if<Affine>(&layer)) {
            total += static_cast<std::size_t>(a->weight.size() + a->bias.size());
        } else if (const auto* bn = std::get_if<BatchNorm>(&layer)) {
            total += static_cast<std::size_t>(bn->gamma.size() * (with_running_stats ? 4 : 2));
        }
    }
    return total;
}

void check_width(const Matrix& batch, Eigen::Index width, const char* what) {
    if (batch.cols() != width) {
        throw ShapeError(std::string(what) + " width " + std::to_string(batch.cols()) + " does not match model width " +
                         std::to_string(width));
    }
}

std::vector<double> to_vec(const Eigen::Ref<const Eigen::VectorXd>& v) {
    return {v.data(), v.data() + v.size()};
}

Vector to_vector(const json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json layer_json(const Layer& layer) {
    return std::visit(Overloaded{
                          [](const GaussianNoise& l) { return json{{"type", "gaussian_noise"}, {"sigma", l.sigma}}; },
                          [](const Affine& l) {
                              return json{{"type", "affine"},
                                          {"in", l.weight.cols()},
                                          {"out", l.weight.rows()},
                                          {"weight", std::vector<double>(l.weight.data(),
                                                                         l.weight.data() + l.weight.size())},
                                          {"bias", to_vec(l.bias)}};
                          },
                          [](const BatchNorm& l) {
                              return json{{"type", "batch_norm"},       {"gamma", to_vec(l.gamma)},
                                          {"beta", to_vec(l.beta)},     {"running_mean", to_vec(l.running_mean)},
                                          {"running_var", to_vec(l.running_var)}, {"momentum", l.momentum},
                                          {"eps", l.eps}};
                          },
                          [](const Elu& l) { return json{{"type", "elu"}, {"alpha", l.alpha}}; },
                      },
                      layer);
}

Layer layer_from_json(const json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "gaussian_noise") {
        return GaussianNoise{j.at("sigma").get<double>()};
    }
    if (type == "affine") {
        const auto in = j.at("in").get<Eigen::Index>();
        const auto out = j.at("out").get<Eigen::Index>();
        const auto w = j.at("weight").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(w.size()) != in * out) {
            throw InvalidArgument("checkpoint affine weight has wrong size");
        }
        Affine l{Eigen::Map<const Matrix>(w.data(), out, in), to_vector(j.at("bias"))};
        if (l.bias.size() != out) {
            throw InvalidArgument("checkpoint affine bias has wrong size");
        }
        return l;
    }
    if (type == "batch_norm") {
        BatchNorm l{to_vector(j.at("gamma")),       to_vector(j.at("beta")),     to_vector(j.at("running_mean")),
                    to_vector(j.at("running_var")), j.at("momentum").get<double>(), j.at("eps").get<double>()};
        const auto w = l.gamma.size();
        if (l.beta.size() != w || l.running_mean.size() != w || l.running_var.size() != w) {
            throw InvalidArgument("checkpoint batch-norm vectors differ in length");
        }
        return l;
    }
    if (type == "elu") {
        return Elu{j.at("alpha").get<double>()};
    }
    throw InvalidArgument("unknown layer type in checkpoint: " + type);
}

LayerStack stack_from_json(const json& j, Eigen::Index in_dim, Eigen::Index out_dim) {
    LayerStack stack;
    stack.in_dim = in_dim;
    stack.out_dim = out_dim;
    Eigen::Index width = in_dim;
    for (const auto& item : j) {
        stack.layers.push_back(layer_from_json(item));
        if (const auto* a = std::get_if<Affine>(&stack.layers.back())) {
            if (a->weight.cols() != width) {
                throw ShapeError("checkpoint layer dimensions are inconsistent");
            }
            width = a->weight.rows();
        } else if (const auto* bn = std::get_if<BatchNorm>(&stack.layers.back())) {
            if (bn->gamma.size() != width) {
                throw ShapeError("checkpoint layer dimensions are inconsistent");
            }
        }
    }
    if (width != out_dim) {
        throw ShapeError("checkpoint stack output width does not match");
    }
    return stack;
}

const char* activity_name(fnn::Activity a) {
    return a == fnn::Activity::SecondMoment ? "second_moment" : "squared_mean";
}

fnn::Activity activity_from_name(const std::string& s) {
    if (s == "second_moment") {
        return fnn::Activity::SecondMoment;
    }
    if (s == "squared_mean") {
        return fnn::Activity::SquaredMean;
    }
    throw InvalidArgument("unknown activity mode: " + s);
}

} // namespace

// --- construction ----------------------------------------------------------

Model init_model(const Architecture& arch, std::uint64_t seed) {
    if (arch.lags < 2 || arch.latent < 2 || arch.hidden < 1) {
        throw InvalidArgument("autoencoder needs T >= 2, L >= 2 and a positive hidden width");
    }
    if (arch.gn_sigma < 0.0) {
        throw InvalidArgument("noise level must be non-negative");
    }
    std::mt19937_64 rng(seed);
    const Eigen::Index T = arch.lags;
    const Eigen::Index L = arch.latent;
    const Eigen::Index H = arch.hidden;

    Model model;
    model.lags = T;
    model.latent = L;
    model.encoder.in_dim = T;
    model.encoder.out_dim = L;
    model.encoder.layers = {GaussianNoise{arch.gn_sigma}, glorot_affine(T, H, rng), make_batch_norm(H, arch), Elu{},
                            glorot_affine(H, H, rng),    make_batch_norm(H, arch), Elu{},
                            glorot_affine(H, L, rng),    make_batch_norm(L, arch)};
    model.decoder.in_dim = L;
    model.decoder.out_dim = T;
    model.decoder.layers = {GaussianNoise{arch.gn_sigma}, glorot_affine(L, H, rng), make_batch_norm(H, arch), Elu{},
                            glorot_affine(H, H, rng),    make_batch_norm(H, arch), Elu{},
                            glorot_affine(H, H, rng),    make_batch_norm(H, arch), Elu{},
                            glorot_affine(H, T, rng)};
    return model;
}

Model init_model(Eigen::Index lags, Eigen::Index latent, std::uint64_t seed) {
    Architecture arch;
    arch.lags = lags;
    arch.latent = latent;
    return init_model(arch, seed);
}

std::vector<std::span<double>> parameter_views(Model& model) {
    std::vector<std::span<double>> views;
    collect_views(model.encoder, views);
    collect_views(model.decoder, views);
    return views;
}

std::size_t trainable_parameter_count(const Model& model) {
    return count_parameters(model.encoder, false) + count_parameters(model.decoder, false);
}

std::size_t encoder_parameter_count(const Model& model) {
    return count_parameters(model.encoder, true);
}

// --- noise -----------------------------------------------------------------

Matrix RandomNoise::draw(Eigen::Index rows, Eigen::Index cols, double sigma) {
    std::normal_distribution<double> dist(0.0, sigma);
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = dist(rng_);
        }
    }
    return m;
}

Matrix FixedNoise::draw(Eigen::Index rows, Eigen::Index cols, double) {
    if (next_ >= samples_.size()) {
        throw InvalidArgument("recorded noise exhausted");
    }
    const Matrix& m = samples_[next_++];
    if (m.rows() != rows || m.cols() != cols) {
        throw ShapeError("recorded noise sample has the wrong shape");
    }
    return m;
}

std::vector<Matrix> ForwardResult::noise_samples() const {
    std::vector<Matrix> out;
    for (const auto* cache : {&encoder_cache, &decoder_cache}) {
        for (const auto& c : *cache) {
            if (c.noise.size() > 0) {
                out.push_back(c.noise);
            }
        }
    }
    return out;
}

// --- forward / backward ----------------------------------------------------

ForwardResult forward(const Model& model, const Matrix& batch, Mode mode, NoiseSource* noise) {
    check_width(batch, model.lags, "input");
    if (mode == Mode::Train && batch.rows() < 2) {
        throw ShapeError("training batches need at least 2 rows");
    }
    ForwardResult r;
    r.latent = stack_forward(model.encoder, batch, mode, noise, r.encoder_cache);
    r.reconstruction = stack_forward(model.decoder, r.latent, mode, noise, r.decoder_cache);
    return r;
}

void update_running_stats(Model& model, const ForwardResult& pass) {
    const auto fold = [](LayerStack& stack, const std::vector<LayerCache>& cache) {
        for (std::size_t i = 0; i < stack.layers.size() && i < cache.size(); ++i) {
            auto* bn = std::get_if<BatchNorm>(&stack.layers[i]);
            if (bn == nullptr || cache[i].batch_mean.size() == 0) {
                continue;
            }
            bn->running_mean = bn->momentum * bn->running_mean + (1.0 - bn->momentum) * cache[i].batch_mean;
            bn->running_var = bn->momentum * bn->running_var + (1.0 - bn->momentum) * cache[i].batch_var;
        }
    };
    fold(model.encoder, pass.encoder_cache);
    fold(model.decoder, pass.decoder_cache);
}

LossGrad loss_and_grad(const Model& model, const Matrix& batch, double lambda, const fnn::FnnConfig& fnn_cfg,
                       NoiseSource& noise, const std::optional<Vector>& frozen_f_bar) {
    LossGrad out;
    out.pass = forward(model, batch, Mode::Train, &noise);
    if (!out.pass.latent.allFinite() || !out.pass.reconstruction.allFinite()) {
        out.total = out.reconstruction = std::numeric_limits<double>::quiet_NaN();
        out.gradient = model;
        return out;
    }
    const Matrix residual = out.pass.reconstruction - batch;
    const double count = static_cast<double>(residual.size());
    out.reconstruction = residual.squaredNorm() / count;

    Matrix latent_grad = Matrix::Zero(out.pass.latent.rows(), out.pass.latent.cols());
    if (frozen_f_bar) {
        out.f_bar = *frozen_f_bar;
    } else {
        out.f_bar = fnn::false_neighbor_fractions(out.pass.latent, fnn_cfg).f_bar;
    }
    if (out.f_bar.size() > 0) {
        out.fnn = fnn::fnn_loss_frozen(out.pass.latent, out.f_bar, fnn_cfg.activity);
        if (lambda != 0.0) {
            latent_grad = lambda * fnn::fnn_loss_grad_frozen(out.pass.latent, out.f_bar, fnn_cfg.activity);
        }
    }
    out.total = out.reconstruction + lambda * out.fnn;

    out.gradient = model;
    zero_parameters(out.gradient.encoder);
    zero_parameters(out.gradient.decoder);
    const Matrix d_recon = (2.0 / count) * residual;
    Matrix d_latent = stack_backward(model.decoder, out.pass.decoder_cache, Mode::Train, d_recon, out.gradient.decoder);
    d_latent += latent_grad;
    stack_backward(model.encoder, out.pass.encoder_cache, Mode::Train, d_latent, out.gradient.encoder);
    return out;
}

// --- training --------------------------------------------------------------

TrainedAutoencoder train(const HankelMatrix& x_train, const HankelMatrix& x_val, const TrainConfig& cfg) {
    if (!(cfg.lambda >= 0.0)) {
        throw InvalidArgument("lambda must be non-negative");
    }
    if (cfg.epochs < 1) {
        throw InvalidArgument("epochs must be at least 1");
    }
    if (cfg.batch_size < 2) {
        throw InvalidArgument("batch size must be at least 2");
    }
    if (!(cfg.learning_rate > 0.0)) {
        throw InvalidArgument("learning rate must be positive");
    }
    if (x_train.size() < cfg.batch_size) {
        throw InsufficientDataError("training set has " + std::to_string(x_train.size()) +
                                    " rows, fewer than the batch size " + std::to_string(cfg.batch_size));
    }
    if (x_val.lags() != x_train.lags()) {
        throw ShapeError("validation and training Hankel widths differ");
    }

    Architecture arch;
    arch.lags = x_train.lags();
    arch.latent = cfg.latent;
    arch.hidden = cfg.hidden;
    arch.gn_sigma = cfg.gn_sigma;
    arch.bn_momentum = cfg.bn_momentum;
    arch.bn_eps = cfg.bn_eps;

    TrainedAutoencoder result{init_model(arch, cfg.seed), cfg, {}};
    Model& model = result.model;

    std::mt19937_64 shuffle_rng(cfg.seed ^ 0x5851F42D4C957F2DULL);
    RandomNoise noise(cfg.seed ^ 0x2545F4914F6CDD1DULL);

    auto params = parameter_views(model);
    std::vector<std::vector<double>> first(params.size());
    std::vector<std::vector<double>> second(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
        first[p].assign(params[p].size(), 0.0);
        second[p].assign(params[p].size(), 0.0);
    }
    long step = 0;

    const Matrix& rows = x_train.rows();
    const Eigen::Index n = rows.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double recon_sum = 0.0;
        double fnn_sum = 0.0;
        double seen = 0.0;
        Vector f_bar_sum = Vector::Zero(cfg.latent);
        int batches_with_fnn = 0;
        int batch_index = 0;
        for (Eigen::Index start = 0; start < n; start += cfg.batch_size, ++batch_index) {
            const Eigen::Index count = std::min<Eigen::Index>(cfg.batch_size, n - start);
            if (count < 2) {
                break;
            }
            Matrix batch(count, rows.cols());
            for (Eigen::Index r = 0; r < count; ++r) {
                batch.row(r) = rows.row(order[static_cast<std::size_t>(start + r)]);
            }
            LossGrad lg = loss_and_grad(model, batch, cfg.lambda, cfg.fnn, noise);
            if (!std::isfinite(lg.total)) {
                throw TrainingFailure("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                          std::to_string(batch_index),
                                      epoch, batch_index, result.history);
            }

            ++step;
            const double lr_t = cfg.learning_rate * std::sqrt(1.0 - std::pow(cfg.adam.beta2, step)) /
                                (1.0 - std::pow(cfg.adam.beta1, step));
            auto grads = parameter_views(lg.gradient);
            for (std::size_t p = 0; p < params.size(); ++p) {
                auto& m1 = first[p];
                auto& m2 = second[p];
                for (std::size_t i = 0; i < params[p].size(); ++i) {
                    const double g = grads[p][i];
                    m1[i] = cfg.adam.beta1 * m1[i] + (1.0 - cfg.adam.beta1) * g;
                    m2[i] = cfg.adam.beta2 * m2[i] + (1.0 - cfg.adam.beta2) * g * g;
                    params[p][i] -= lr_t * m1[i] / (std::sqrt(m2[i]) + cfg.adam.eps);
                }
            }
            update_running_stats(model, lg.pass);

            const double w = static_cast<double>(count);
            recon_sum += w * lg.reconstruction;
            fnn_sum += w * lg.fnn;
            seen += w;
            if (lg.f_bar.size() == f_bar_sum.size()) {
                f_bar_sum += lg.f_bar;
                ++batches_with_fnn;
            }
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.reconstruction = recon_sum / seen;
        rec.fnn = fnn_sum / seen;
        rec.validation = reconstruction_error(model, x_val.rows());
        rec.f_bar = batches_with_fnn > 0 ? Vector(f_bar_sum / batches_with_fnn) : Vector();
        if (!std::isfinite(rec.validation)) {
            throw TrainingFailure("non-finite validation loss at epoch " + std::to_string(epoch), epoch, batch_index,
                                  result.history);
        }
        result.history.push_back(std::move(rec));
    }
    return result;
}

double reconstruction_error(const Model& model, const Matrix& rows) {
    const ForwardResult r = forward(model, rows, Mode::Infer);
    return (r.reconstruction - rows).squaredNorm() / static_cast<double>(rows.size());
}

PointCloud embed(const Model& model, const HankelMatrix& x) {
    check_width(x.rows(), model.lags, "Hankel");
    std::vector<LayerCache> cache;
    Matrix latent = stack_forward(model.encoder, x.rows(), Mode::Infer, nullptr, cache);
    return PointCloud(std::move(latent), x.source_dt());
}

// --- serialization ---------------------------------------------------------

void to_json(json& j, const TrainConfig& cfg) {
    j = json{{"lambda", cfg.lambda},
             {"learning_rate", cfg.learning_rate},
             {"epochs", cfg.epochs},
             {"batch_size", cfg.batch_size},
             {"seed", cfg.seed},
             {"gn_sigma", cfg.gn_sigma},
             {"latent", cfg.latent},
             {"hidden", cfg.hidden},
             {"bn_momentum", cfg.bn_momentum},
             {"bn_eps", cfg.bn_eps},
             {"fnn",
              {{"r_tol", cfg.fnn.r_tol},
               {"a_tol", cfg.fnn.a_tol},
               {"k", cfg.fnn.k},
               {"activity", activity_name(cfg.fnn.activity)},
               {"eps", cfg.fnn.eps}}},
             {"adam", {{"beta1", cfg.adam.beta1}, {"beta2", cfg.adam.beta2}, {"eps", cfg.adam.eps}}}};
}

void from_json(const json& j, TrainConfig& cfg) {
    cfg.lambda = j.at("lambda").get<double>();
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.epochs = j.at("epochs").get<int>();
    cfg.batch_size = j.at("batch_size").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.gn_sigma = j.at("gn_sigma").get<double>();
    cfg.latent = j.at("latent").get<Eigen::Index>();
    cfg.hidden = j.at("hidden").get<Eigen::Index>();
    cfg.bn_momentum = j.at("bn_momentum").get<double>();
    cfg.bn_eps = j.at("bn_eps").get<double>();
    const auto& f = j.at("fnn");
    cfg.fnn.r_tol = f.at("r_tol").get<double>();
    cfg.fnn.a_tol = f.at("a_tol").get<double>();
    cfg.fnn.k = f.at("k").get<int>();
    cfg.fnn.activity = activity_from_name(f.at("activity").get<std::string>());
    cfg.fnn.eps = f.at("eps").get<double>();
    const auto& a = j.at("adam");
    cfg.adam.beta1 = a.at("beta1").get<double>();
    cfg.adam.beta2 = a.at("beta2").get<double>();
    cfg.adam.eps = a.at("eps").get<double>();
}

void to_json(json& j, const EpochRecord& rec) {
    j = json{{"epoch", rec.epoch},
             {"reconstruction", rec.reconstruction},
             {"fnn", rec.fnn},
             {"validation", rec.validation},
             {"f_bar", to_vec(rec.f_bar)}};
}

json checkpoint_json(const TrainedAutoencoder& trained) {
    json enc = json::array();
    for (const auto& l : trained.model.encoder.layers) {
        enc.push_back(layer_json(l));
    }
    json dec = json::array();
    for (const auto& l : trained.model.decoder.layers) {
        dec.push_back(layer_json(l));
    }
    return json{{"version", "fnnae-1"},
                {"architecture", {{"lags", trained.model.lags}, {"latent", trained.model.latent}}},
                {"encoder", std::move(enc)},
                {"decoder", std::move(dec)},
                {"config", trained.config},
                {"seed", trained.config.seed},
                {"history", trained.history}};
}

TrainedAutoencoder load_checkpoint(const json& doc) {
    if (doc.value("version", std::string{}) != "fnnae-1") {
        throw InvalidArgument("unsupported checkpoint version");
    }
    TrainedAutoencoder t;
    t.model.lags = doc.at("architecture").at("lags").get<Eigen::Index>();
    t.model.latent = doc.at("architecture").at("latent").get<Eigen::Index>();
    t.model.encoder = stack_from_json(doc.at("encoder"), t.model.lags, t.model.latent);
    t.model.decoder = stack_from_json(doc.at("decoder"), t.model.latent, t.model.lags);
    t.config = doc.at("config").get<TrainConfig>();
    for (const auto& item : doc.at("history")) {
        EpochRecord rec;
        rec.epoch = item.at("epoch").get<int>();
        rec.reconstruction = item.at("reconstruction").get<double>();
        rec.fnn = item.at("fnn").get<double>();
        rec.validation = item.at("validation").get<double>();
        rec.f_bar = to_vector(item.at("f_bar"));
        t.history.push_back(std::move(rec));
    }
    return t;
}

} // namespace fnnforge::ae
