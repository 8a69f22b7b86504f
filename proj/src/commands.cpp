#include "fnnforge/commands.hpp"

#include "fnnforge/autoencoder.hpp"
#include "fnnforge/baselines.hpp"
#include "fnnforge/dynsys.hpp"
#include "fnnforge/errors.hpp"
#include "fnnforge/io.hpp"
#include "fnnforge/metrics.hpp"
#include "fnnforge/pipeline.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <optional>
#include <ostream>
#include <sstream>

namespace fnnforge::cli {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace fnnforge::pipeline;

namespace {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::vector<std::string> numbered(const std::string& prefix, Eigen::Index count) {
    std::vector<std::string> names;
    for (Eigen::Index i = 1; i <= count; ++i) names.push_back(prefix + std::to_string(i));
    return names;
}

std::vector<std::string> state_names(Eigen::Index count) {
    if (count == 3) return {"x", "y", "z"};
    return numbered("u", count);
}

/// CSV with free-form cells; numbers go through io::format_double.
void write_table(const fs::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream out;
    const auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
        out << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    write_text(path, out.str());
}

std::string num(double v) {
    return io::format_double(v);
}

json drop_output(json cfg) {
    cfg.erase("output");
    return cfg;
}

RunConfig config_from(const json& invocation) {
    json cfg = invocation.at("config");
    cfg["output"] = ".";
    return parse_run_config(cfg);
}

void write_matrix(Manifest& manifest, const std::string& stage, const fs::path& path, const Matrix& m,
                  const std::vector<std::string>& header) {
    fs::create_directories(path.parent_path());
    io::write_csv(path, m, header);
    manifest.add_output(stage, path);
}

// --- simulate --------------------------------------------------------------

void run_simulate(const json& inv, Manifest& manifest, std::ostream& log) {
    const Stopwatch clock;
    dynsys::SimulationRequest req;
    req.system = inv.at("system").get<std::string>();
    req.seed = inv.at("seed").get<std::uint64_t>();
    req.noise = inv.at("noise").get<double>();
    req.params = inv.at("params").get<std::map<std::string, double>>();
    req.protocol = dynsys::default_protocol(req.system);
    const TimeSeries ts = dynsys::run_protocol(req);
    const fs::path csv = manifest.out_dir() / "trajectory.csv";
    write_matrix(manifest, "simulate", csv, ts.values(), state_names(ts.channels()));
    const json sidecar{{"system", req.system},
                       {"seed", req.seed},
                       {"params", req.params},
                       {"noise", req.noise},
                       {"dt", ts.dt()},
                       {"integration_dt", req.protocol.dt},
                       {"steps", req.protocol.steps},
                       {"transient", req.protocol.transient},
                       {"downsample", req.protocol.downsample},
                       {"keep_last", req.protocol.keep_last},
                       {"rows", ts.length()},
                       {"columns", state_names(ts.channels())}};
    write_json(manifest.out_dir() / "trajectory.json", sidecar);
    manifest.add_output("simulate", manifest.out_dir() / "trajectory.json");
    manifest.add_timing("simulate", clock.seconds());
    log << "simulated " << req.system << ": " << ts.length() << " x " << ts.channels() << '\n';
}

// --- embed -----------------------------------------------------------------

void write_truth(Manifest& manifest, const PreparedData& data) {
    if (data.truth) {
        write_matrix(manifest, "data", manifest.out_dir() / "truth.csv", *data.truth, state_names(data.truth->cols()));
    }
}

void run_embed(const json& inv, Manifest& manifest, int jobs, std::ostream& log) {
    const RunConfig cfg = config_from(inv);
    Stopwatch clock;
    const PreparedData data = prepare_data(cfg);
    write_truth(manifest, data);
    manifest.add_timing("data", clock.seconds());

    const auto& seeds = cfg.model.seeds;
    std::vector<std::vector<fs::path>> written(seeds.size());
    std::vector<double> seconds(seeds.size(), 0.0);
    std::optional<std::string> failure;
    try {
        parallel_for(seeds.size(), jobs, [&](std::size_t i) {
            const Stopwatch watch;
            const fs::path dir = manifest.out_dir() / ("seed_" + std::to_string(seeds[i]));
            fs::create_directories(dir);
            try {
                const Replicate rep = train_replicate(data, cfg.model.train, seeds[i]);
                const Matrix& z = rep.embedding.points();
                io::write_csv(dir / "embedding.csv", z, numbered("z", z.cols()));
                write_json(dir / "checkpoint.json", ae::checkpoint_json(rep.trained));
                write_json(dir / "history.json", json(rep.trained.history));
                written[i] = {dir / "embedding.csv", dir / "checkpoint.json", dir / "history.json"};
                if (z.cols() >= 2) {
                    write_text(dir / "latent_1_2.svg", scatter_svg(z, 0, 1, "latent 1 vs 2, seed " + std::to_string(seeds[i])));
                    written[i].push_back(dir / "latent_1_2.svg");
                }
                if (z.cols() >= 3) {
                    write_text(dir / "latent_1_3.svg", scatter_svg(z, 0, 2, "latent 1 vs 3, seed " + std::to_string(seeds[i])));
                    written[i].push_back(dir / "latent_1_3.svg");
                }
            } catch (const ae::TrainingFailure& e) {
                write_json(dir / "history_partial.json",
                           json{{"error", e.what()},
                                {"epoch", e.epoch()},
                                {"batch", e.batch()},
                                {"history", e.partial_history()}});
                written[i] = {dir / "history_partial.json"};
                throw;
            }
            seconds[i] = watch.seconds();
        });
    } catch (const NumericalError&) {
        for (const auto& files : written)
            for (const auto& f : files) manifest.add_output("train", f);
        manifest.write();
        throw;
    }
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        for (const auto& f : written[i]) manifest.add_output("train", f);
        manifest.add_timing("train", seconds[i]);
    }
    log << "trained " << seeds.size() << " replicate(s)\n";
}

// --- baseline --------------------------------------------------------------

void run_baseline(const json& inv, Manifest& manifest, std::ostream& log) {
    const RunConfig cfg = config_from(inv);
    const std::string method = inv.at("method").get<std::string>();
    const Stopwatch clock;
    const PreparedData data = prepare_data(cfg);
    const Eigen::Index width = std::min(cfg.model.train.latent, cfg.hankel.lags);
    Matrix embedding;
    std::optional<Matrix> truth = data.truth;
    json model;
    if (method == "etd" || method == "tica") {
        const auto result = method == "etd" ? baselines::etd_embed(data.train, width)
                                            : baselines::tica_embed(data.train, cfg.baseline.tica_lag, width);
        embedding = baselines::project(result.model, data.test.rows()).points();
        model = result.model;
    } else if (method == "lagged") {
        Eigen::Index tau = cfg.baseline.lagged_tau;
        if (tau == 0) tau = baselines::first_autocorrelation_zero(data.train_series);
        embedding = baselines::lagged_embed(data.test_series, cfg.baseline.lagged_dim, tau).points();
        if (data.test_states) truth = align_truth(*data.test_states, embedding.rows());
        model = {{"method", "lagged"}, {"dim", cfg.baseline.lagged_dim}, {"tau", tau}};
    } else {
        throw InvalidArgument("unknown baseline method '" + method + "' (etd, tica or lagged)");
    }
    write_matrix(manifest, "baseline", manifest.out_dir() / "embedding.csv", embedding,
                 numbered("z", embedding.cols()));
    write_json(manifest.out_dir() / "model.json", model);
    manifest.add_output("baseline", manifest.out_dir() / "model.json");
    if (truth) {
        write_matrix(manifest, "data", manifest.out_dir() / "truth.csv", *truth, state_names(truth->cols()));
    }
    manifest.add_timing("baseline", clock.seconds());
    log << method << " embedding: " << embedding.rows() << " x " << embedding.cols() << '\n';
}

// --- compare ---------------------------------------------------------------

std::vector<std::pair<std::string, double>> score_list(const metrics::MetricsReport& r) {
    std::vector<std::pair<std::string, double>> s{{"s_dim", r.s_dim},   {"s_proc", r.s_proc}, {"s_dtw", r.s_dtw},
                                                  {"s_nn", r.s_nn},     {"s_corr", r.s_corr}, {"s_homol", r.s_homol}};
    for (const auto& [tau, v] : r.s_simp) s.emplace_back("s_simp_tau" + std::to_string(tau), v);
    return s;
}

void run_compare(const json& inv, Manifest& manifest, std::ostream& log) {
    const Stopwatch clock;
    metrics::CompareConfig cc = config_from(inv).metrics;
    cc.taus = inv.at("taus").get<std::vector<Eigen::Index>>();
    const auto truth_path = inv.at("truth").get<std::string>();
    const io::CsvTable truth = io::read_csv(truth_path);
    json replicates = json::array();
    std::vector<std::vector<std::pair<std::string, double>>> scores;
    json params;
    for (const auto& path : inv.at("embed").get<std::vector<std::string>>()) {
        const io::CsvTable est = io::read_csv(path);
        if (est.values.rows() != truth.values.rows()) {
            throw InvalidArgument("row count mismatch: " + path + " has " + std::to_string(est.values.rows()) +
                                  " rows, " + truth_path + " has " + std::to_string(truth.values.rows()));
        }
        const auto report = metrics::compare_all(PointCloud(est.values), PointCloud(truth.values), cc);
        replicates.push_back({{"embedding", fs::path(path).filename().string()}, {"report", report}});
        scores.push_back(score_list(report));
        params = report.params;
    }
    json summary = json::object();
    std::vector<std::vector<std::string>> table;
    for (std::size_t k = 0; k < scores.front().size(); ++k) {
        std::vector<double> values;
        for (const auto& s : scores) values.push_back(s[k].second);
        const MeanSe m = mean_se(values);
        const auto& name = scores.front()[k].first;
        summary[name] = {{"mean", m.mean}, {"standard_error", std::isnan(m.se) ? json(nullptr) : json(m.se)},
                         {"replicates", m.n}};
        table.push_back({name, num(m.mean), num(m.se), std::to_string(m.n)});
    }
    write_json(manifest.out_dir() / "report.json",
               json{{"replicates", replicates}, {"summary", summary}, {"params", params}});
    manifest.add_output("compare", manifest.out_dir() / "report.json");
    write_table(manifest.out_dir() / "table.csv", {"metric", "mean", "standard_error", "replicates"}, table);
    manifest.add_output("compare", manifest.out_dir() / "table.csv");
    manifest.add_timing("compare", clock.seconds());
    log << "compared " << scores.size() << " embedding(s)\n";
}

// --- sweep-lambda ----------------------------------------------------------

void run_sweep(const json& inv, Manifest& manifest, int jobs, std::ostream& log) {
    const RunConfig cfg = config_from(inv);
    const Stopwatch clock;
    const auto grid = inv.at("grid").get<std::vector<double>>();
    const SweepResult r = sweep_lambda(cfg, grid, jobs);
    const fs::path dir = manifest.out_dir();

    std::vector<std::vector<std::string>> rows;
    std::vector<std::vector<std::string>> profiles;
    for (const auto& row : r.rows) {
        rows.push_back({num(row.lambda), std::to_string(row.seed), num(row.s_dim), num(1.0 - row.s_dim), num(row.top3),
                        std::to_string(row.effective.threshold_count), num(row.effective.participation_ratio)});
        std::vector<std::string> p{num(row.lambda), std::to_string(row.seed)};
        for (Eigen::Index i = 0; i < row.profile.size(); ++i) p.push_back(num(row.profile(i)));
        profiles.push_back(std::move(p));
    }
    write_table(dir / "sweep.csv",
                {"lambda", "seed", "s_dim", "dimension_error", "top3_fraction", "threshold_count", "participation_ratio"},
                rows);
    std::vector<std::string> header{"lambda", "seed"};
    for (const auto& n : numbered("v", cfg.model.train.latent)) header.push_back(n);
    write_table(dir / "profiles.csv", header, profiles);
    write_matrix(manifest, "sweep", dir / "truth_profile.csv", r.truth_profile.transpose(),
                 numbered("v", r.truth_profile.size()));

    std::vector<std::vector<std::string>> summary;
    json errors = json::array();
    for (std::size_t l = 0; l < grid.size(); ++l) {
        const auto& e = r.dimension_error[l];
        summary.push_back({num(grid[l]), num(e.mean), num(e.se), std::to_string(e.n)});
        errors.push_back({{"lambda", grid[l]},
                          {"mean", e.mean},
                          {"standard_error", std::isnan(e.se) ? json(nullptr) : json(e.se)},
                          {"replicates", e.n}});
    }
    write_table(dir / "summary.csv", {"lambda", "mean_dimension_error", "standard_error", "replicates"}, summary);
    write_json(dir / "summary.json", json{{"dimension_error", errors},
                                          {"minimum_lambda", grid[r.best]},
                                          {"interior_minimum", r.best > 0 && r.best + 1 < grid.size()}});
    for (const char* f : {"sweep.csv", "profiles.csv", "summary.csv", "summary.json"}) {
        manifest.add_output("sweep", dir / f);
    }
    manifest.add_timing("sweep", clock.seconds());
    log << "lambda sweep: minimum mean dimension error at lambda = " << grid[r.best] << '\n';
}

// --- forecast-noise --------------------------------------------------------

void run_forecast(const json& inv, Manifest& manifest, int jobs, std::ostream& log) {
    const RunConfig cfg = config_from(inv);
    const Stopwatch clock;
    const auto noise = inv.at("noise").get<std::vector<double>>();
    const auto taus = inv.at("taus").get<std::vector<Eigen::Index>>();
    const ForecastResult r = forecast_noise(cfg, noise, taus, jobs);
    const fs::path dir = manifest.out_dir();

    std::vector<std::vector<std::string>> raw;
    for (const auto& row : r.rows) {
        for (const auto& [tau, v] : row.skill) {
            raw.push_back({num(row.noise), row.regularized ? "regularized" : "unregularized", std::to_string(row.seed),
                           std::to_string(tau), num(v)});
        }
    }
    write_table(dir / "forecast.csv", {"noise", "model", "seed", "tau", "s_simp"}, raw);

    std::vector<std::vector<std::string>> table;
    json summary = json::array();
    for (const double xi : noise) {
        for (const bool reg : {false, true}) {
            for (std::size_t t = 0; t < taus.size(); ++t) {
                std::vector<double> values;
                for (const auto& row : r.rows) {
                    if (row.noise == xi && row.regularized == reg) values.push_back(row.skill[t].second);
                }
                const MeanSe m = mean_se(values);
                const char* model = reg ? "regularized" : "unregularized";
                table.push_back({num(xi), model, std::to_string(taus[t]), num(m.mean), num(m.se), std::to_string(m.n)});
                summary.push_back({{"noise", xi},
                                   {"model", model},
                                   {"tau", taus[t]},
                                   {"mean", m.mean},
                                   {"standard_error", std::isnan(m.se) ? json(nullptr) : json(m.se)},
                                   {"replicates", m.n}});
            }
        }
    }
    write_table(dir / "table.csv", {"noise", "model", "tau", "mean", "standard_error", "replicates"}, table);
    write_json(dir / "summary.json", summary);
    for (const char* f : {"forecast.csv", "table.csv", "summary.json"}) manifest.add_output("forecast", dir / f);
    manifest.add_timing("forecast", clock.seconds());
    log << "forecast table: " << table.size() << " rows\n";
}

// --- argument handling -----------------------------------------------------

struct ConfigFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<double> lambda;
    std::optional<int> epochs;
    std::string out;

    void attach(CLI::App* app, bool config_required) {
        auto* opt = app->add_option("--config", config, "run configuration JSON");
        if (config_required) opt->required();
        app->add_option("--seed", seed, "single model seed (replaces model.seeds)");
        app->add_option("--lambda", lambda, "regularizer strength");
        app->add_option("--epochs", epochs, "training epochs");
        app->add_option("--out", out, "output directory (default: the config's output)");
    }

    /// Loads the config, applies overrides and returns (resolved config JSON, output directory).
    std::pair<json, fs::path> resolve() const {
        RunConfig cfg = config.empty() ? RunConfig{} : load_run_config(config);
        if (seed) cfg.model.seeds = {*seed};
        if (lambda) cfg.model.train.lambda = *lambda;
        if (epochs) cfg.model.train.epochs = *epochs;
        if (!out.empty()) cfg.output = out;
        const json full = to_json(cfg);
        parse_run_config(full);  // re-validate after overrides
        return {drop_output(full), fs::path(cfg.output)};
    }
};

std::map<std::string, double> parse_params(const std::vector<std::string>& items) {
    std::map<std::string, double> params;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw InvalidArgument("--param expects name=value, got '" + item + "'");
        }
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item.substr(eq + 1), &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size() - eq - 1) {
            throw InvalidArgument("--param value is not a number: '" + item + "'");
        }
        params[item.substr(0, eq)] = v;
    }
    return params;
}

std::vector<std::string> absolute_paths(const std::vector<std::string>& paths) {
    std::vector<std::string> out;
    for (const auto& p : paths) out.push_back(fs::absolute(p).lexically_normal().string());
    return out;
}

} // namespace

void execute(const json& invocation, const fs::path& out_dir, int jobs, std::ostream& log) {
    const auto command = invocation.at("command").get<std::string>();
    fs::create_directories(out_dir);
    Manifest manifest(invocation, out_dir);
    if (command == "simulate") {
        run_simulate(invocation, manifest, log);
    } else if (command == "embed") {
        run_embed(invocation, manifest, jobs, log);
    } else if (command == "baseline") {
        run_baseline(invocation, manifest, log);
    } else if (command == "compare") {
        run_compare(invocation, manifest, log);
    } else if (command == "sweep-lambda") {
        run_sweep(invocation, manifest, jobs, log);
    } else if (command == "forecast-noise") {
        run_forecast(invocation, manifest, jobs, log);
    } else {
        throw InvalidArgument("manifest names an unknown command '" + command + "'");
    }
    manifest.write();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Attractor reconstruction from univariate time series with a false-neighbor regularized autoencoder"};
    app.name("fnnforge");
    app.require_subcommand(1);
    app.fallthrough();
    int jobs = 1;
    app.add_option("--jobs", jobs, "parallel replicates (capped by FNN_FORGE_THREADS)");

    auto* simulate = app.add_subcommand("simulate", "simulate a builtin system to CSV");
    std::string system;
    std::uint64_t sim_seed = 0;
    double noise = 0.0;
    std::vector<std::string> params;
    std::string sim_out = "runs/simulate";
    simulate->add_option("system", system, "lorenz, lorenz-stochastic, rossler, ecosystem or torus")->required();
    simulate->add_option("--seed", sim_seed, "initial-condition seed");
    simulate->add_option("--noise", noise, "noise amplitude for lorenz-stochastic");
    simulate->add_option("--param", params, "parameter override name=value (repeatable)");
    simulate->add_option("--out", sim_out, "output directory");

    auto* embed = app.add_subcommand("embed", "train autoencoder replicates and embed the test split");
    ConfigFlags embed_flags;
    embed_flags.attach(embed, true);

    auto* baseline = app.add_subcommand("baseline", "linear or lagged baseline embedding");
    ConfigFlags base_flags;
    base_flags.attach(baseline, true);
    std::string method;
    std::optional<Eigen::Index> lag_dim;
    std::optional<Eigen::Index> lag_tau;
    baseline->add_option("method", method, "etd, tica or lagged")->required();
    baseline->add_option("--d", lag_dim, "lagged embedding dimension");
    baseline->add_option("--tau", lag_tau, "lag (tica lag or lagged delay)");

    auto* compare = app.add_subcommand("compare", "score embeddings against a truth attractor");
    std::vector<std::string> embed_paths;
    std::string truth_path;
    std::vector<Eigen::Index> taus;
    std::string compare_config;
    std::optional<std::uint64_t> compare_seed;
    std::string compare_out = "runs/compare";
    compare->add_option("--embed", embed_paths, "embedding CSV (repeat for replicates)")->required();
    compare->add_option("--truth", truth_path, "truth CSV with the same row count")->required();
    compare->add_option("--tau", taus, "forecast horizons")->delimiter(',');
    compare->add_option("--config", compare_config, "run configuration supplying the metric settings");
    compare->add_option("--seed", compare_seed, "subsampling seed");
    compare->add_option("--out", compare_out, "output directory");

    auto* sweep = app.add_subcommand("sweep-lambda", "train replicates over a grid of regularizer strengths");
    ConfigFlags sweep_flags;
    sweep_flags.attach(sweep, true);
    std::vector<double> grid{0.0, 0.003, 0.01, 0.03, 0.1, 0.3};
    sweep->add_option("--grid", grid, "lambda values")->delimiter(',');

    auto* forecast = app.add_subcommand("forecast-noise", "simplex forecasting on stochastic Lorenz");
    ConfigFlags forecast_flags;
    forecast_flags.attach(forecast, true);
    std::vector<double> noise_grid{0.0, 0.25, 0.5};
    std::vector<Eigen::Index> forecast_taus{1, 10, 20};
    forecast->add_option("--noise", noise_grid, "noise amplitudes")->delimiter(',');
    forecast->add_option("--tau", forecast_taus, "forecast horizons")->delimiter(',');

    auto* rerun = app.add_subcommand("rerun", "re-execute the command recorded in a manifest");
    std::string manifest_path;
    std::string rerun_out;
    rerun->add_option("manifest", manifest_path, "manifest.json")->required();
    rerun->add_option("--out", rerun_out, "output directory (default: the manifest's directory)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        json inv;
        fs::path out_dir;
        if (*simulate) {
            inv = {{"command", "simulate"},
                   {"system", system},
                   {"seed", sim_seed},
                   {"noise", noise},
                   {"params", parse_params(params)}};
            dynsys::default_protocol(system);  // rejects unknown names before any work
            out_dir = sim_out;
        } else if (*embed) {
            auto [cfg, dir] = embed_flags.resolve();
            inv = {{"command", "embed"}, {"config", cfg}};
            out_dir = dir;
        } else if (*baseline) {
            auto [cfg, dir] = base_flags.resolve();
            if (lag_dim) cfg["baseline"]["lagged_dim"] = *lag_dim;
            if (lag_tau) cfg["baseline"][method == "tica" ? "tica_lag" : "lagged_tau"] = *lag_tau;
            json check = cfg;
            check["output"] = dir.string();
            parse_run_config(check);
            inv = {{"command", "baseline"}, {"method", method}, {"config", cfg}};
            out_dir = dir;
        } else if (*compare) {
            RunConfig cfg = compare_config.empty() ? RunConfig{} : load_run_config(compare_config);
            if (compare_seed) {
                cfg.metrics.coverage.seed = cfg.metrics.correlation.seed = cfg.metrics.rips.seed = *compare_seed;
            }
            if (!taus.empty()) cfg.metrics.taus = taus;
            inv = {{"command", "compare"},
                   {"embed", absolute_paths(embed_paths)},
                   {"truth", absolute_paths({truth_path}).front()},
                   {"taus", cfg.metrics.taus},
                   {"config", drop_output(to_json(cfg))}};
            out_dir = compare_out;
        } else if (*sweep) {
            auto [cfg, dir] = sweep_flags.resolve();
            inv = {{"command", "sweep-lambda"}, {"config", cfg}, {"grid", grid}};
            out_dir = dir;
        } else if (*forecast) {
            auto [cfg, dir] = forecast_flags.resolve();
            inv = {{"command", "forecast-noise"}, {"config", cfg}, {"noise", noise_grid}, {"taus", forecast_taus}};
            out_dir = dir;
        } else if (*rerun) {
            const json manifest = read_json(manifest_path);
            if (!manifest.contains("invocation")) {
                throw InvalidArgument(manifest_path + " is not a manifest (no 'invocation')");
            }
            inv = manifest.at("invocation");
            out_dir = rerun_out.empty() ? fs::absolute(manifest_path).parent_path() : fs::path(rerun_out);
        }
        execute(inv, out_dir, resolve_jobs(jobs), out);
        out << "wrote " << out_dir.string() << '\n';
        return kOk;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const DivergenceError& e) {
        err << "numerical failure: " << e.what() << " (step " << e.step() << ")\n";
        return kNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const json::exception& e) {
        err << "error: malformed JSON input: " << e.what() << '\n';
        return kUsage;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
}

} // namespace fnnforge::cli
