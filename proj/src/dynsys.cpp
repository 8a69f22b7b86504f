#include "fnnforge/dynsys.hpp"

#include "fnnforge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace fnnforge::dynsys {

namespace {

bool all_finite(std::span<const double> y) {
    return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

void check_step_args(const OdeSystem& system, const std::vector<double>& y0, double dt, long steps) {
    if (!(dt > 0.0)) {
        throw InvalidArgument("integration step must be positive");
    }
    if (steps < 1) {
        throw InvalidArgument("need at least one integration step");
    }
    if (static_cast<int>(y0.size()) != system.dimension) {
        throw ShapeError("initial state has dimension " + std::to_string(y0.size()) + ", system " +
                         system.name + " expects " + std::to_string(system.dimension));
    }
}

/// Calls `step(y, t)` `steps` times, handing every state (including y0) to `record(index, y)`.
template <class Step, class Record>
void march(const OdeSystem& system, const std::vector<double>& y0, double dt, long steps, double t0,
           Step&& step, Record&& record) {
    std::vector<double> y = y0;
    if (!all_finite(y)) {
        throw DivergenceError(system.name + ": non-finite initial state", 0);
    }
    record(0L, std::span<const double>(y));
    for (long n = 1; n <= steps; ++n) {
        const double t = t0 + static_cast<double>(n - 1) * dt;
        step(y, t);
        if (!all_finite(y)) {
            throw DivergenceError(system.name + ": non-finite state at step " + std::to_string(n), n);
        }
        record(n, std::span<const double>(y));
    }
}

class Rk4Step {
public:
    Rk4Step(const OdeSystem& system, double dt)
        : f_(system.vector_field), dt_(dt), k1_(system.dimension), k2_(system.dimension),
          k3_(system.dimension), k4_(system.dimension), tmp_(system.dimension) {}

    void operator()(std::vector<double>& y, double t) {
        const std::size_t d = y.size();
        f_(y, t, k1_);
        for (std::size_t i = 0; i < d; ++i) tmp_[i] = y[i] + 0.5 * dt_ * k1_[i];
        f_(tmp_, t + 0.5 * dt_, k2_);
        for (std::size_t i = 0; i < d; ++i) tmp_[i] = y[i] + 0.5 * dt_ * k2_[i];
        f_(tmp_, t + 0.5 * dt_, k3_);
        for (std::size_t i = 0; i < d; ++i) tmp_[i] = y[i] + dt_ * k3_[i];
        f_(tmp_, t + dt_, k4_);
        for (std::size_t i = 0; i < d; ++i) {
            y[i] += dt_ / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
        }
    }

private:
    const OdeSystem::Field& f_;
    double dt_;
    std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

class EulerMaruyamaStep {
public:
    EulerMaruyamaStep(const OdeSystem& system, double dt, double xi0, std::uint64_t seed)
        : f_(system.vector_field), dt_(dt), amp_(xi0 * std::sqrt(dt)), rng_(seed), k_(system.dimension) {}

    void operator()(std::vector<double>& y, double t) {
        f_(y, t, k_);
        for (std::size_t i = 0; i < y.size(); ++i) {
            y[i] = y[i] + k_[i] * dt_ + amp_ * normal_(rng_);
        }
    }

private:
    const OdeSystem::Field& f_;
    double dt_;
    double amp_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::vector<double> k_;
};

class EulerStep {
public:
    EulerStep(const OdeSystem& system, double dt) : f_(system.vector_field), dt_(dt), k_(system.dimension) {}

    void operator()(std::vector<double>& y, double t) {
        f_(y, t, k_);
        for (std::size_t i = 0; i < y.size(); ++i) {
            y[i] = y[i] + k_[i] * dt_;
        }
    }

private:
    const OdeSystem::Field& f_;
    double dt_;
    std::vector<double> k_;
};

template <class Step>
Trajectory integrate_all(const OdeSystem& system, const std::vector<double>& y0, double dt, long steps,
                         double t0, Step step) {
    Matrix states(steps + 1, system.dimension);
    march(system, y0, dt, steps, t0, step, [&](long n, std::span<const double> y) {
        for (int i = 0; i < system.dimension; ++i) states(n, i) = y[static_cast<std::size_t>(i)];
    });
    return Trajectory{PointCloud(std::move(states), dt), dt, 0, t0};
}

// Noise stream decorrelated from the initial-condition stream of the same seed.
std::uint64_t noise_seed(std::uint64_t seed) {
    return seed ^ 0x9E3779B97F4A7C15ULL;
}

double param_or(const std::map<std::string, double>& params, const std::string& key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

} // namespace

Trajectory integrate_rk4(const OdeSystem& system, const std::vector<double>& y0, double dt, long steps,
                         double t0) {
    check_step_args(system, y0, dt, steps);
    return integrate_all(system, y0, dt, steps, t0, Rk4Step(system, dt));
}

Trajectory integrate_euler(const OdeSystem& system, const std::vector<double>& y0, double dt, long steps,
                           double t0) {
    check_step_args(system, y0, dt, steps);
    return integrate_all(system, y0, dt, steps, t0, EulerStep(system, dt));
}

Trajectory integrate_euler_maruyama(const OdeSystem& system, const std::vector<double>& y0, double dt,
                                    long steps, double xi0, std::uint64_t seed, double t0) {
    check_step_args(system, y0, dt, steps);
    if (!(xi0 >= 0.0)) {
        throw InvalidArgument("noise amplitude must be non-negative");
    }
    return integrate_all(system, y0, dt, steps, t0, EulerMaruyamaStep(system, dt, xi0, seed));
}

Trajectory discard_transient(const Trajectory& traj, long count) {
    const Eigen::Index n = traj.states.size();
    if (count < 0 || count >= n) {
        throw InsufficientDataError("transient of " + std::to_string(count) +
                                    " steps leaves no states (trajectory has " + std::to_string(n) + ")");
    }
    Matrix kept = traj.states.points().bottomRows(n - count);
    return Trajectory{PointCloud(std::move(kept), traj.dt), traj.dt, traj.discarded_transient + count,
                      traj.t0 + static_cast<double>(count) * traj.dt};
}

OdeSystem lorenz(const LorenzParams& p) {
    OdeSystem s;
    s.name = "lorenz";
    s.dimension = 3;
    s.params = {{"sigma", p.sigma}, {"rho", p.rho}, {"beta", p.beta}};
    s.vector_field = [p](std::span<const double> y, double, std::span<double> dy) {
        dy[0] = p.sigma * (y[1] - y[0]);
        dy[1] = y[0] * (p.rho - y[2]) - y[1];
        dy[2] = y[0] * y[1] - p.beta * y[2];
    };
    return s;
}

OdeSystem rossler(const RosslerParams& p) {
    OdeSystem s;
    s.name = "rossler";
    s.dimension = 3;
    s.params = {{"a", p.a}, {"b", p.b}, {"c", p.c}};
    s.vector_field = [p](std::span<const double> y, double, std::span<double> dy) {
        dy[0] = -y[1] - y[2];
        dy[1] = y[0] + p.a * y[1];
        dy[2] = p.b + y[2] * (y[0] - p.c);
    };
    return s;
}

double ecosystem_growth_rate(const EcosystemParams& p, int species, std::span<const double> resources) {
    double mu = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < 5; ++j) {
        const double rj = resources[j];
        mu = std::min(mu, p.r * rj / (p.K[j][static_cast<std::size_t>(species)] + rj));
    }
    return mu;
}

OdeSystem ecosystem(const EcosystemParams& p) {
    OdeSystem s;
    s.name = "ecosystem";
    s.dimension = 10;
    s.params = {{"D", p.D}, {"r", p.r}, {"m", p.m}};
    s.vector_field = [p](std::span<const double> y, double, std::span<double> dy) {
        const auto resources = y.subspan(5, 5);
        std::array<double, 5> mu{};
        for (int i = 0; i < 5; ++i) {
            mu[static_cast<std::size_t>(i)] = ecosystem_growth_rate(p, i, resources);
        }
        for (std::size_t i = 0; i < 5; ++i) {
            dy[i] = y[i] * (mu[i] - p.m);
        }
        for (std::size_t j = 0; j < 5; ++j) {
            double uptake = 0.0;
            for (std::size_t i = 0; i < 5; ++i) {
                uptake += p.c[j][i] * mu[i] * y[i];
            }
            dy[5 + j] = p.D * (p.S[j] - resources[j]) - uptake;
        }
    };
    return s;
}

OdeSystem torus(const TorusParams& p) {
    OdeSystem s;
    s.name = "torus";
    s.dimension = 3;
    s.params = {{"r", p.r}, {"a", p.a}, {"n", p.n}};
    s.vector_field = [p](std::span<const double>, double t, std::span<double> dy) {
        const double ring = p.r + p.a * std::cos(p.n * t);
        dy[0] = -p.a * p.n * std::sin(p.n * t) * std::cos(t) - ring * std::sin(t);
        dy[1] = -p.a * p.n * std::sin(p.n * t) * std::sin(t) + ring * std::cos(t);
        dy[2] = p.a * p.n * std::cos(p.n * t);
    };
    return s;
}

std::vector<double> torus_point(const TorusParams& p, double t) {
    const double ring = p.r + p.a * std::cos(p.n * t);
    return {ring * std::cos(t), ring * std::sin(t), p.a * std::sin(p.n * t)};
}

Trajectory simulate_lorenz(const LorenzParams& p, const std::vector<double>& y0, double dt, long steps,
                           long transient) {
    return discard_transient(integrate_rk4(lorenz(p), y0, dt, steps), transient);
}

Trajectory simulate_lorenz_stochastic(const LorenzParams& p, double xi0, std::uint64_t seed,
                                      const std::vector<double>& y0, double dt, long steps, long transient) {
    if (xi0 < 0.0 || xi0 > 1.0) {
        throw InvalidArgument("noise amplitude xi0 must lie in [0, 1]");
    }
    return discard_transient(integrate_euler_maruyama(lorenz(p), y0, dt, steps, xi0, seed), transient);
}

Trajectory simulate_rossler(const RosslerParams& p, const std::vector<double>& y0, double dt, long steps,
                            long transient) {
    return discard_transient(integrate_rk4(rossler(p), y0, dt, steps), transient);
}

Trajectory simulate_ecosystem(const EcosystemParams& p, const std::vector<double>& y0, double dt, long steps,
                              long transient) {
    return discard_transient(integrate_rk4(ecosystem(p), y0, dt, steps), transient);
}

Trajectory simulate_torus(const TorusParams& p, double t0, double dt, long steps, long transient) {
    return discard_transient(integrate_rk4(torus(p), torus_point(p, t0), dt, steps, t0), transient);
}

Protocol default_protocol(const std::string& system) {
    if (system == "lorenz") return {0.004, 125000, 75000, 10, 5000};
    if (system == "lorenz-stochastic") return {0.0004, 1250000, 750000, 100, 5000};
    if (system == "rossler") return {0.125, 2500, 0, 10, 0};
    if (system == "ecosystem") return {0.1, 2000000, 1000000, 10, 0};
    if (system == "torus") return {0.02, 2000, 0, 8, 0};
    throw InvalidArgument("unknown system '" + system + "'");
}

const std::vector<std::string>& system_names() {
    static const std::vector<std::string> names{"lorenz", "lorenz-stochastic", "rossler", "ecosystem", "torus"};
    return names;
}

std::vector<double> default_initial_state(const std::string& system, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    if (system == "lorenz" || system == "lorenz-stochastic") {
        return {uniform(-15.0, 15.0), uniform(-20.0, 20.0), uniform(5.0, 45.0)};
    }
    if (system == "rossler") {
        return {uniform(-5.0, 5.0), uniform(-5.0, 5.0), uniform(0.0, 1.0)};
    }
    if (system == "ecosystem") {
        EcosystemParams p;
        std::vector<double> y(10);
        for (std::size_t i = 0; i < 5; ++i) y[i] = uniform(0.05, 0.2);
        for (std::size_t j = 0; j < 5; ++j) y[5 + j] = p.S[j];
        return y;
    }
    if (system == "torus") {
        return {uniform(0.0, 2.0 * std::numbers::pi)};
    }
    throw InvalidArgument("unknown system '" + system + "'");
}

TimeSeries run_protocol(const SimulationRequest& req) {
    const Protocol& pr = req.protocol;
    if (pr.downsample < 1 || pr.transient < 0 || pr.transient >= pr.steps) {
        throw InvalidArgument("invalid protocol: need downsample >= 1 and 0 <= transient < steps");
    }
    const auto& params = req.params;
    std::vector<double> y0 = default_initial_state(req.system, req.seed);
    double t0 = 0.0;
    OdeSystem system;
    if (req.system == "lorenz" || req.system == "lorenz-stochastic") {
        LorenzParams lp;
        lp.sigma = param_or(params, "sigma", lp.sigma);
        lp.rho = param_or(params, "rho", lp.rho);
        lp.beta = param_or(params, "beta", lp.beta);
        system = lorenz(lp);
    } else if (req.system == "rossler") {
        RosslerParams rp;
        rp.a = param_or(params, "a", rp.a);
        rp.b = param_or(params, "b", rp.b);
        rp.c = param_or(params, "c", rp.c);
        system = rossler(rp);
    } else if (req.system == "ecosystem") {
        EcosystemParams ep;
        ep.D = param_or(params, "D", ep.D);
        ep.r = param_or(params, "r", ep.r);
        ep.m = param_or(params, "m", ep.m);
        system = ecosystem(ep);
    } else if (req.system == "torus") {
        TorusParams tp;
        tp.r = param_or(params, "r", tp.r);
        tp.a = param_or(params, "a", tp.a);
        tp.n = param_or(params, "n", tp.n);
        system = torus(tp);
        t0 = y0[0];
        y0 = torus_point(tp, t0);
    } else {
        throw InvalidArgument("unknown system '" + req.system + "'");
    }
    check_step_args(system, y0, pr.dt, pr.steps);

    std::vector<double> kept;
    auto record = [&](long n, std::span<const double> y) {
        if (n >= pr.transient && (n - pr.transient) % pr.downsample == 0) {
            kept.insert(kept.end(), y.begin(), y.end());
        }
    };
    if (req.system == "lorenz-stochastic") {
        if (req.noise < 0.0 || req.noise > 1.0) {
            throw InvalidArgument("noise amplitude xi0 must lie in [0, 1]");
        }
        march(system, y0, pr.dt, pr.steps, t0, EulerMaruyamaStep(system, pr.dt, req.noise, noise_seed(req.seed)), record);
    } else {
        march(system, y0, pr.dt, pr.steps, t0, Rk4Step(system, pr.dt), record);
    }
    const auto dim = static_cast<Eigen::Index>(system.dimension);
    Eigen::Index rows = static_cast<Eigen::Index>(kept.size()) / dim;
    Eigen::Index first = 0;
    if (pr.keep_last > 0) {
        if (rows < pr.keep_last) {
            throw InsufficientDataError("protocol yields " + std::to_string(rows) + " samples, fewer than " +
                                        std::to_string(pr.keep_last));
        }
        first = rows - pr.keep_last;
        rows = pr.keep_last;
    }
    Matrix values(rows, dim);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index c = 0; c < dim; ++c) {
            values(i, c) = kept[static_cast<std::size_t>((first + i) * dim + c)];
        }
    }
    return TimeSeries(std::move(values), pr.dt * static_cast<double>(pr.downsample), req.system);
}

} // namespace fnnforge::dynsys
