// End-to-end acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--only 1,5,8] [--expect-fail 3,6] [--report path] [--jobs n] [--scratch dir]
//
// Exits 0 when every failing criterion is listed in --expect-fail.

#include "fnnforge/autoencoder.hpp"
#include "fnnforge/baselines.hpp"
#include "fnnforge/commands.hpp"
#include "fnnforge/dynsys.hpp"
#include "fnnforge/fnn.hpp"
#include "fnnforge/io.hpp"
#include "fnnforge/metrics.hpp"
#include "fnnforge/pipeline.hpp"

#include "fnn_oracle.hpp"
#include "metrics_oracle.hpp"
#include "svd_oracle.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

using namespace fnnforge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int precision = 3) {
    std::ostringstream s;
    s.precision(precision);
    s << v;
    return s.str();
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
    return m;
}

Matrix uniform(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = ud(rng);
    return m;
}

Matrix circle(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    Matrix m(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = angle(rng);
        m(i, 0) = std::cos(t);
        m(i, 1) = std::sin(t);
    }
    return m;
}

Matrix shuffled_rows(const Matrix& m, std::uint64_t seed) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m.rows()));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.row(i) = m.row(order[static_cast<std::size_t>(i)]);
    return out;
}

TimeSeries lorenz(std::uint64_t seed) {
    return dynsys::run_protocol({"lorenz", seed, dynsys::default_protocol("lorenz"), {}, 0.0});
}

TimeSeries sine(Eigen::Index n, double period) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = std::sin(2.0 * M_PI * static_cast<double>(i) / period);
    return TimeSeries::univariate(v, 1.0);
}

// --- 1 ---------------------------------------------------------------------

Outcome fnn_oracle_equivalence() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> pick_b(4, 64);
    std::uniform_int_distribution<int> pick_l(2, 8);
    std::normal_distribution<double> nd;
    double worst = 0.0;
    const int trials = 150;
    for (int t = 0; t < trials; ++t) {
        const int B = pick_b(rng);
        const int L = pick_l(rng);
        Matrix h(B, L);
        for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = nd(rng);
        for (int m = 0; m < L; ++m) h.col(m) *= std::pow(0.6, m);
        fnn::FnnConfig cfg;
        if (t % 4 == 0) cfg.k = 1;
        const auto ref = oracle::false_neighbors(h, cfg.neighbors_for(B), cfg.r_tol, cfg.a_tol, cfg.eps);
        const auto got = fnn::false_neighbor_fractions(h, cfg);
        for (int m = 0; m < L; ++m) worst = std::max(worst, std::abs(got.f_bar(m) - ref.f_bar[static_cast<std::size_t>(m)]));
        worst = std::max(worst, std::abs(got.loss - ref.loss));
        worst = std::max(worst, std::abs(fnn::fnn_loss(h, cfg) - ref.loss));
    }
    return {worst <= 1e-12, std::to_string(trials) + " batches, max |diff| = " + fmt(worst)};
}

// --- 2 ---------------------------------------------------------------------

Outcome gradient_check() {
    ae::Architecture arch;
    arch.lags = 6;
    arch.latent = 4;
    const auto model = ae::init_model(arch, 31);
    const Matrix batch = gaussian(8, 6, 32);
    const fnn::FnnConfig cfg;
    const double lambda = 0.5;
    ae::RandomNoise noise(33);
    const auto base = ae::loss_and_grad(model, batch, lambda, cfg, noise);
    const auto samples = base.pass.noise_samples();
    const Vector f_bar = base.f_bar;

    auto grad_model = base.gradient;
    const auto grads = ae::parameter_views(grad_model);
    auto probe = model;
    auto views = ae::parameter_views(probe);
    const double step = 1e-6;
    double worst = 0.0;
    std::size_t count = 0;
    for (std::size_t p = 0; p < views.size(); ++p) {
        for (std::size_t i = 0; i < views[p].size(); ++i) {
            const double keep = views[p][i];
            const auto loss_at = [&](double v) {
                views[p][i] = v;
                ae::FixedNoise replay(samples);
                return ae::loss_and_grad(probe, batch, lambda, cfg, replay, f_bar).total;
            };
            const double fd = (loss_at(keep + step) - loss_at(keep - step)) / (2.0 * step);
            views[p][i] = keep;
            const double g = grads[p][i];
            worst = std::max(worst, std::abs(fd - g) / std::max({std::abs(fd), std::abs(g), 1e-5}));
            ++count;
        }
    }
    return {worst < 1e-4, std::to_string(count) + " parameters, max relative error = " + fmt(worst)};
}

// --- 3 and 4 ---------------------------------------------------------------

pipeline::RunConfig lorenz_config(std::size_t replicates) {
    pipeline::RunConfig cfg;
    cfg.model.seeds.clear();
    for (std::uint64_t s = 0; s < replicates; ++s) cfg.model.seeds.push_back(s);
    return cfg;
}

struct SweepOutcomes {
    Outcome recovery;
    Outcome nonlinearity;
};

SweepOutcomes lambda_sweep(int jobs, double& seconds) {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<double> grid{0.0, 0.003, 0.01, 0.03, 0.1, 0.3};
    const auto cfg = lorenz_config(5);
    const double chosen = cfg.model.train.lambda;
    const auto result = pipeline::sweep_lambda(cfg, grid, jobs);
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const auto at = std::find(grid.begin(), grid.end(), chosen);
    if (at == grid.end()) throw std::logic_error("default lambda is not on the acceptance grid");
    double reg = 0.0, ctl = 0.0;
    int top3 = 0;
    std::string per_seed;
    for (const auto& row : result.rows) {
        if (row.lambda == chosen) {
            reg += row.s_dim / 5.0;
            top3 += row.top3 >= 0.9;
            per_seed += " " + fmt(row.top3, 2);
        }
        if (row.lambda == 0.0) ctl += row.s_dim / 5.0;
    }
    // interior minimum of the mean dimension error
    std::string curve;
    for (std::size_t l = 0; l < grid.size(); ++l) {
        curve += (l ? ", " : "") + fmt(grid[l]) + ":" + fmt(result.dimension_error[l].mean);
    }
    const bool interior = result.best > 0 && result.best + 1 < grid.size();
    return {{reg >= 0.5 && reg > ctl && top3 >= 3,
             "lambda " + fmt(chosen) + ": mean S_dim " + fmt(reg) + " vs control " + fmt(ctl) +
                 "; top-3 fraction >= 0.9 in " + std::to_string(top3) + "/5 seeds (" + per_seed.substr(1) +
                 "); needs S_dim >= 0.5 and 3/5"},
            {interior, "mean 1-S_dim per lambda {" + curve + "}, minimum at lambda " + fmt(grid[result.best])}};
}

// --- 5 ---------------------------------------------------------------------

Outcome correlation_dimensions() {
    metrics::CorrelationDimensionConfig cfg;
    const double square = metrics::correlation_dimension(uniform(2000, 2, 1), cfg).dimension;
    const double ring = metrics::correlation_dimension(circle(2000, 2), cfg).dimension;
    const Matrix states = lorenz(0).values();
    const double attractor = metrics::correlation_dimension(states, cfg).dimension;
    const double again = metrics::correlation_dimension(states, cfg).dimension;
    const bool ok = std::abs(square - 2.0) <= 0.15 && std::abs(ring - 1.0) <= 0.1 && attractor >= 1.8 &&
                    attractor <= 2.3 && again == attractor;
    return {ok, "square " + fmt(square) + ", circle " + fmt(ring) + ", Lorenz " + fmt(attractor) +
                    (again == attractor ? ", repeat identical" : ", repeat differs")};
}

// --- 6 ---------------------------------------------------------------------

Outcome kennel_dimensions() {
    const auto wave = sine(2000, 40.0);
    const auto w = baselines::kennel_fnn_dimension(wave, baselines::first_autocorrelation_zero(wave), 6);
    const TimeSeries x = lorenz(0).channel(0);
    const Eigen::Index tau = baselines::first_autocorrelation_zero(x);
    const auto l = baselines::kennel_fnn_dimension(x, tau, 6);
    const auto short_delay = baselines::kennel_fnn_dimension(x, 2, 6);
    std::string fractions;
    for (const double f : l.fractions) fractions += " " + fmt(f, 2);
    return {w.dimension == 2 && l.dimension == 3,
            "sine d* = " + std::to_string(w.dimension) + "; Lorenz x tau " + std::to_string(tau) + " d* = " +
                std::to_string(l.dimension) + " (fractions" + fractions + "); at tau 2 d* = " +
                std::to_string(short_delay.dimension)};
}

// --- 7 ---------------------------------------------------------------------

Outcome baseline_oracles() {
    const HankelMatrix x = build_hankel(standardize(lorenz(1).channel(0)), 10);
    const auto etd = baselines::etd_embed(x, 10);
    const Matrix centered = x.rows().rowwise() - x.rows().colwise().mean();
    const auto ref = oracle::jacobi_svd(centered);
    double etd_err = 0.0;
    for (Eigen::Index c = 0; c < 10; ++c) {
        const Vector mine = etd.scores.points().col(c);
        const Vector theirs = ref.scores.col(c);
        etd_err = std::max(etd_err, std::min((mine - theirs).cwiseAbs().maxCoeff(), (mine + theirs).cwiseAbs().maxCoeff()));
    }
    const auto tica = baselines::tica_embed(x, 1, 10);
    const auto cov = baselines::lagged_covariances(x.rows(), 1);
    const Matrix gram = tica.model.projection.transpose() * cov.c0 * tica.model.projection;
    const double ortho = (gram - Matrix::Identity(10, 10)).cwiseAbs().maxCoeff();
    const auto wave = baselines::etd_embed(build_hankel(sine(1000, 37.0), 10), 10);
    int significant = 0;
    for (Eigen::Index i = 0; i < wave.model.spectrum.size(); ++i) significant += wave.model.spectrum(i) > 1e-8 * wave.model.spectrum(0);
    return {etd_err <= 1e-8 && ortho <= 1e-8 && significant == 2,
            "ETD vs dense SVD " + fmt(etd_err) + ", tICA |W'C0W - I| " + fmt(ortho) + ", sine rank " +
                std::to_string(significant)};
}

// --- 8 ---------------------------------------------------------------------

std::vector<metrics::PersistencePair> random_diagram(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> ud(0.0, 2.0);
    std::vector<metrics::PersistencePair> d;
    for (int i = 0; i < n; ++i) {
        const double b = ud(rng);
        d.push_back({b, b + ud(rng), 1});
    }
    return d;
}

Outcome metric_invariants() {
    std::vector<std::string> failed;
    const Matrix y = lorenz(2).values().topRows(2000);
    const auto self = metrics::compare_all(PointCloud(metrics::pad_attractor(PointCloud(y), 10).points()), PointCloud(y));
    double self_err = 0.0;
    for (const double s : {self.s_dim, self.s_proc, self.s_dtw, self.s_nn, self.s_corr, self.s_homol}) {
        self_err = std::max(self_err, std::abs(s - 1.0));
    }
    if (self_err > 1e-6) failed.push_back("self " + fmt(self_err));
    if (std::abs(self.s_simp.front().second - 1.0) > 0.01) failed.push_back("self s_simp(0)");

    double shuffle_worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Matrix shuffled = shuffled_rows(y, seed);
        shuffle_worst = std::max({shuffle_worst, std::abs(metrics::neighbor_coverage(shuffled, y).score),
                                  std::abs(metrics::s_proc(shuffled, y))});
    }
    if (shuffle_worst > 0.15) failed.push_back("shuffled " + fmt(shuffle_worst));

    std::mt19937_64 rng(17);
    int diagrams = 0;
    double w_err = 0.0;
    for (int na = 0; na <= 6; ++na) {
        for (int nb = 0; na + nb <= 6; ++nb) {
            for (int rep = 0; rep < 3; ++rep) {
                const auto a = random_diagram(rng, na);
                const auto b = random_diagram(rng, nb);
                const double fast = metrics::wasserstein(std::span<const metrics::PersistencePair>(a),
                                                         std::span<const metrics::PersistencePair>(b));
                w_err = std::max(w_err, std::abs(fast - oracle::wasserstein_all_matchings(a, b)));
                ++diagrams;
            }
        }
    }
    if (w_err > 1e-9) failed.push_back("wasserstein " + fmt(w_err));

    double dtw_err = 0.0;
    for (int n = 1; n <= 10; ++n) {
        const Matrix a = gaussian(n, 2, 100 + n);
        const Matrix b = gaussian(11 - n, 2, 200 + n);
        dtw_err = std::max(dtw_err, std::abs(metrics::dtw_distance(a, b) - oracle::dtw_all_paths(a, b)));
    }
    const Matrix a10 = gaussian(10, 3, 300);
    const Matrix b10 = gaussian(10, 3, 301);
    dtw_err = std::max(dtw_err, std::abs(metrics::dtw_distance(a10, b10) - oracle::dtw_all_paths(a10, b10)));
    if (dtw_err > 1e-9) failed.push_back("dtw " + fmt(dtw_err));

    const auto h1 = metrics::rips_persistence(circle(100, 5)).in_dim(1);
    int dominant = 0;
    for (const auto& p : h1) dominant += p.death - p.birth > 0.5;
    if (dominant != 1) failed.push_back("circle bars " + std::to_string(dominant));

    std::string detail = "self max|1-s| " + fmt(self_err) + ", shuffled max|s| " + fmt(shuffle_worst) + ", " +
                         std::to_string(diagrams) + " diagram pairs |W-brute| " + fmt(w_err) + ", DTW |diff| " +
                         fmt(dtw_err) + ", circle long H1 bars " + std::to_string(dominant);
    for (const auto& f : failed) detail += "; failed: " + f;
    return {failed.empty(), detail};
}

// --- 9 ---------------------------------------------------------------------

Outcome noisy_forecasting(int jobs) {
    const std::vector<double> noise{0.0, 0.25, 0.5};
    const std::vector<Eigen::Index> taus{1, 10, 20};
    const auto r = pipeline::forecast_noise(lorenz_config(5), noise, taus, jobs);
    bool decreasing = true;
    std::string means;
    for (const double xi : noise) {
        for (const bool reg : {false, true}) {
            std::vector<double> mean(taus.size(), 0.0);
            for (const auto& row : r.rows) {
                if (row.noise != xi || row.regularized != reg) continue;
                for (std::size_t t = 0; t < taus.size(); ++t) mean[t] += row.skill[t].second / 5.0;
            }
            for (std::size_t t = 0; t + 1 < taus.size(); ++t) decreasing = decreasing && mean[t + 1] < mean[t];
            means += " xi " + fmt(xi) + (reg ? " reg" : " unreg") + " [" + fmt(mean[0]) + " " + fmt(mean[1]) + " " +
                     fmt(mean[2]) + "];";
        }
    }
    int wins = 0;
    std::map<std::uint64_t, double> unreg;
    for (const auto& row : r.rows) {
        if (row.noise == 0.5 && !row.regularized) unreg[row.seed] = row.skill[2].second;
    }
    for (const auto& row : r.rows) {
        if (row.noise == 0.5 && row.regularized) wins += row.skill[2].second >= unreg.at(row.seed);
    }
    return {decreasing && wins >= 3, std::string(decreasing ? "decreasing in tau" : "NOT decreasing in tau") +
                                         "; regularized >= unregularized at xi 0.5, tau 20 in " + std::to_string(wins) +
                                         "/5 seeds;" + means};
}

// --- 10 --------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome cli_determinism(const fs::path& scratch) {
    fs::remove_all(scratch);
    fs::create_directories(scratch);
    const auto cfg_path = scratch / "small.json";
    std::ofstream(cfg_path) << R"({"model": {"epochs": 2, "seeds": [0, 1]}})";
    const std::string cfg = cfg_path.string();
    const auto out = [&](const char* name) { return (scratch / name).string(); };
    const std::vector<std::pair<std::string, std::vector<std::string>>> runs{
        {"simulate", {"simulate", "lorenz", "--seed", "1", "--out", out("simulate")}},
        {"simulate_eco", {"simulate", "ecosystem", "--out", out("simulate_eco")}},
        {"embed", {"embed", "--config", cfg, "--out", out("embed")}},
        {"etd", {"baseline", "etd", "--config", cfg, "--out", out("etd")}},
        {"tica", {"baseline", "tica", "--config", cfg, "--out", out("tica")}},
        {"lagged", {"baseline", "lagged", "--config", cfg, "--d", "3", "--out", out("lagged")}},
        {"compare",
         {"compare", "--embed", out("embed") + "/seed_0/embedding.csv", "--embed", out("embed") + "/seed_1/embedding.csv",
          "--truth", out("embed") + "/truth.csv", "--out", out("compare")}},
        {"sweep", {"sweep-lambda", "--config", cfg, "--epochs", "1", "--grid", "0,0.01,0.1", "--out", out("sweep")}},
        {"forecast",
         {"forecast-noise", "--config", cfg, "--epochs", "1", "--noise", "0.25", "--tau", "1,10", "--out", out("forecast")}},
    };
    std::ostringstream sink;
    int files = 0;
    std::vector<std::string> mismatched;
    for (const auto& [name, args] : runs) {
        if (cli::run(args, sink, sink) != 0) return {false, name + " failed: " + sink.str()};
        const fs::path first = scratch / name;
        const fs::path second = scratch / (name + "_rerun");
        if (cli::run({"rerun", (first / "manifest.json").string(), "--out", second.string()}, sink, sink) != 0) {
            return {false, "rerun of " + name + " failed: " + sink.str()};
        }
        const json ma = pipeline::read_json(first / "manifest.json");
        const json mb = pipeline::read_json(second / "manifest.json");
        if (ma["outputs"] != mb["outputs"] || ma["config_hash"] != mb["config_hash"]) mismatched.push_back(name + "/manifest");
        for (const auto& o : ma["outputs"]) {
            const auto rel = o["path"].get<std::string>();
            ++files;
            if (slurp(first / rel) != slurp(second / rel)) mismatched.push_back(name + "/" + rel);
        }
    }
    std::string detail = std::to_string(runs.size()) + " commands, " + std::to_string(files) + " outputs compared";
    for (const auto& m : mismatched) detail += "; differs: " + m;
    return {mismatched.empty(), detail};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::vector<int> only;
    std::vector<int> expected_failures;
    std::string report_path;
    std::string scratch = "acceptance_scratch";
    int jobs = 1;
    app.add_option("--only", only, "criteria to run")->delimiter(',');
    app.add_option("--expect-fail", expected_failures, "criteria documented as failing")->delimiter(',');
    app.add_option("--report", report_path, "also write the result lines here");
    app.add_option("--scratch", scratch, "working directory for the CLI run");
    app.add_option("--jobs", jobs, "parallel replicates");
    CLI11_PARSE(app, argc, argv);
    jobs = pipeline::resolve_jobs(jobs);

    std::ofstream report;
    if (!report_path.empty()) report.open(report_path);
    const auto selected = [&](int id) { return only.empty() || std::count(only.begin(), only.end(), id) > 0; };
    std::set<int> failures;
    const auto emit = [&](int id, const std::string& name, const Outcome& o, double seconds, double budget) {
        const bool in_time = budget <= 0.0 || seconds < budget;
        const bool pass = o.pass && in_time;
        if (!pass) failures.insert(id);
        std::ostringstream line;
        line << (pass ? "PASS" : "FAIL") << "  criterion " << id << " " << name << ": " << o.detail << " ("
             << fmt(seconds, 3) << " s" << (in_time ? "" : ", over budget") << ")";
        std::cout << line.str() << std::endl;
        if (report) report << line.str() << std::endl;
    };
    const auto timed = [&](int id, const std::string& name, double budget, const std::function<Outcome()>& fn) {
        if (!selected(id)) return;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        emit(id, name, o, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), budget);
    };

    timed(1, "fnn-loss oracle equivalence", 10.0, fnn_oracle_equivalence);
    timed(2, "gradient correctness", 30.0, gradient_check);
    if (selected(3) || selected(4)) {
        double seconds = 0.0;
        SweepOutcomes s;
        try {
            s = lambda_sweep(jobs, seconds);
        } catch (const std::exception& e) {
            s.recovery = s.nonlinearity = {false, std::string("exception: ") + e.what()};
        }
        // criterion 3 uses the lambda-0 and default-lambda rows of the sweep: 10 of its 30 trainings
        if (selected(3)) emit(3, "dimensionality recovery", s.recovery, seconds * 10.0 / 30.0, 5400.0);
        if (selected(4)) emit(4, "lambda-sweep nonlinearity", s.nonlinearity, seconds, 6 * 5400.0);
    }
    timed(5, "correlation dimension", 60.0, correlation_dimensions);
    timed(6, "classical Kennel FNN", 60.0, kennel_dimensions);
    timed(7, "baseline oracles", 60.0, baseline_oracles);
    timed(8, "metric invariant suite", 300.0, metric_invariants);
    timed(9, "noisy forecasting trend", 0.0, [&] { return noisy_forecasting(jobs); });
    timed(10, "CLI determinism", 0.0, [&] { return cli_determinism(scratch); });

    const std::set<int> expected(expected_failures.begin(), expected_failures.end());
    std::vector<int> unexpected;
    std::set_difference(failures.begin(), failures.end(), expected.begin(), expected.end(), std::back_inserter(unexpected));
    std::ostringstream tail;
    tail << failures.size() << " failing";
    for (const int id : expected) {
        if (!failures.count(id) && selected(id)) tail << "; criterion " << id << " listed as failing but passed";
    }
    if (!unexpected.empty()) tail << "; unexpected failures present";
    std::cout << tail.str() << std::endl;
    if (report) report << tail.str() << std::endl;
    return unexpected.empty() ? 0 : 1;
}
