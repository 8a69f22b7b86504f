#pragma once

#include "fnnforge/timeseries.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace fnnforge::dynsys {

/// dy/dt = f(y, t). The field writes the derivative into `dydt`.
struct OdeSystem {
    using Field = std::function<void(std::span<const double> y, double t, std::span<double> dydt)>;

    std::string name;
    int dimension = 0;
    Field vector_field;
    std::map<std::string, double> params;
};

struct Trajectory {
    PointCloud states;
    double dt;
    long discarded_transient = 0;
    double t0 = 0.0;
};

/// Classical fixed-step 4th-order Runge-Kutta. Returns steps + 1 states including y0.
/// Throws DivergenceError naming the first step whose state is non-finite.
Trajectory integrate_rk4(const OdeSystem& system, const std::vector<double>& y0, double dt, long steps,
                         double t0 = 0.0);

/// Explicit Euler; the zero-noise reference for the stochastic integrator.
Trajectory integrate_euler(const OdeSystem& system, const std::vector<double>& y0, double dt, long steps,
                           double t0 = 0.0);

/// Euler-Maruyama with additive isotropic noise:
/// y_{n+1} = y_n + f(y_n) dt + xi0 * sqrt(dt) * eta_n, eta_n ~ N(0, I), seeded.
Trajectory integrate_euler_maruyama(const OdeSystem& system, const std::vector<double>& y0, double dt,
                                    long steps, double xi0, std::uint64_t seed, double t0 = 0.0);

/// Drops the first `count` states of a trajectory.
Trajectory discard_transient(const Trajectory& traj, long count);

// --- benchmark systems ----------------------------------------------------

struct LorenzParams {
    double sigma = 10.0;
    double rho = 28.0;
    double beta = 2.667;
};
OdeSystem lorenz(const LorenzParams& p = {});

struct RosslerParams {
    double a = 0.2;
    double b = 0.2;
    double c = 5.7;
};
OdeSystem rossler(const RosslerParams& p = {});

/// Resource competition model with n = 5 species and k = 5 resources.
/// State layout: [N_1 .. N_5, R_1 .. R_5].
struct EcosystemParams {
    double D = 0.25;
    double r = 1.0;
    double m = 0.25;
    std::array<double, 5> S{6.0, 10.0, 14.0, 4.0, 9.0};
    /// Half-saturation constants K[j][i]: resource j, species i.
    std::array<std::array<double, 5>, 5> K{{{0.39, 0.34, 0.30, 0.24, 0.23},
                                            {0.22, 0.39, 0.34, 0.30, 0.27},
                                            {0.27, 0.22, 0.39, 0.34, 0.30},
                                            {0.30, 0.24, 0.22, 0.39, 0.34},
                                            {0.34, 0.30, 0.22, 0.20, 0.39}}};
    /// Content of resource j in species i, c[j][i].
    std::array<std::array<double, 5>, 5> c{{{0.04, 0.04, 0.07, 0.04, 0.04},
                                            {0.08, 0.08, 0.08, 0.10, 0.08},
                                            {0.10, 0.10, 0.10, 0.10, 0.14},
                                            {0.05, 0.03, 0.03, 0.03, 0.03},
                                            {0.07, 0.09, 0.07, 0.07, 0.07}}};
};
OdeSystem ecosystem(const EcosystemParams& p = {});

/// Growth rate mu_i = min_j r R_j / (K_ji + R_j).
double ecosystem_growth_rate(const EcosystemParams& p, int species, std::span<const double> resources);

/// Quasiperiodic flow on a torus with outer radius r, tube radius a and winding number n.
struct TorusParams {
    double r = 1.0;
    double a = 0.5;
    double n = 15.3;
};
OdeSystem torus(const TorusParams& p = {});
/// Point of the parametric torus curve at time t.
std::vector<double> torus_point(const TorusParams& p, double t);

// --- simulation protocols --------------------------------------------------

/// Integration length and post-processing for one benchmark trajectory.
struct Protocol {
    double dt;
    long steps;
    long transient;  ///< raw integration steps dropped before downsampling
    long downsample;
    long keep_last;  ///< 0 keeps every downsampled sample
};

Protocol default_protocol(const std::string& system);
const std::vector<std::string>& system_names();

/// Full trajectory simulations with the integrator each system uses.
Trajectory simulate_lorenz(const LorenzParams& p, const std::vector<double>& y0, double dt, long steps,
                           long transient);
Trajectory simulate_lorenz_stochastic(const LorenzParams& p, double xi0, std::uint64_t seed,
                                      const std::vector<double>& y0, double dt, long steps, long transient);
Trajectory simulate_rossler(const RosslerParams& p, const std::vector<double>& y0, double dt, long steps,
                            long transient);
Trajectory simulate_ecosystem(const EcosystemParams& p, const std::vector<double>& y0, double dt, long steps,
                              long transient);
Trajectory simulate_torus(const TorusParams& p, double t0, double dt, long steps, long transient);

/// Seeded initial condition for a named system (uniform box draws; torus draws a phase).
std::vector<double> default_initial_state(const std::string& system, std::uint64_t seed);

/// Options for a complete protocol run of a named system.
struct SimulationRequest {
    std::string system;
    std::uint64_t seed = 0;
    Protocol protocol;
    std::map<std::string, double> params;  ///< overrides, e.g. {"rho", 28}
    double noise = 0.0;                    ///< xi0 for lorenz-stochastic
};

/// Runs the integrator, drops the transient, downsamples and keeps the trailing samples.
/// The returned series holds every state coordinate as a channel.
TimeSeries run_protocol(const SimulationRequest& request);

} // namespace fnnforge::dynsys
