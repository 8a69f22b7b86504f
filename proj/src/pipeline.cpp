#include "fnnforge/pipeline.hpp"

#include "fnnforge/dynsys.hpp"
#include "fnnforge/errors.hpp"
#include "fnnforge/io.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace fnnforge::pipeline {

using nlohmann::json;

namespace {

/// Reads one JSON object, remembering which keys were consumed so leftovers can be rejected.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw InvalidArgument(where() + " must be a JSON object");
        }
    }

    void number(const char* key, double& out) {
        if (const json* v = take(key)) {
            if (!v->is_number()) throw InvalidArgument(where(key) + " must be a number");
            out = v->get<double>();
        }
    }

    template <typename Int>
    void integer(const char* key, Int& out) {
        if (const json* v = take(key)) {
            if (!v->is_number_integer()) throw InvalidArgument(where(key) + " must be an integer");
            if constexpr (std::is_unsigned_v<Int>) {
                if (v->is_number_unsigned()) {
                    out = static_cast<Int>(v->get<std::uint64_t>());
                    return;
                }
                if (v->get<std::int64_t>() < 0) throw InvalidArgument(where(key) + " must be non-negative");
            }
            out = static_cast<Int>(v->get<std::int64_t>());
        }
    }

    /// Number or null.
    void nullable_number(const char* key, std::optional<double>& out) {
        if (const json* v = take(key)) {
            if (v->is_null()) {
                out.reset();
                return;
            }
            if (!v->is_number()) throw InvalidArgument(where(key) + " must be a number or null");
            out = v->get<double>();
        }
    }

    void boolean(const char* key, bool& out) {
        if (const json* v = take(key)) {
            if (!v->is_boolean()) throw InvalidArgument(where(key) + " must be true or false");
            out = v->get<bool>();
        }
    }

    void string(const char* key, std::string& out) {
        if (const json* v = take(key)) {
            if (!v->is_string()) throw InvalidArgument(where(key) + " must be a string");
            out = v->get<std::string>();
        }
    }

    template <typename T>
    void list(const char* key, std::vector<T>& out) {
        if (const json* v = take(key)) {
            if (!v->is_array()) throw InvalidArgument(where(key) + " must be an array");
            std::vector<T> items;
            for (const auto& e : *v) {
                const bool ok = std::is_integral_v<T> ? e.is_number_integer() : e.is_number();
                if (!ok || (std::is_unsigned_v<T> && e.is_number_integer() && !e.is_number_unsigned() &&
                            e.get<std::int64_t>() < 0)) {
                    throw InvalidArgument(where(key) + " has an element of the wrong type");
                }
                items.push_back(e.get<T>());
            }
            out = std::move(items);
        }
    }

    void number_map(const char* key, std::map<std::string, double>& out) {
        if (const json* v = take(key)) {
            if (!v->is_object()) throw InvalidArgument(where(key) + " must be an object");
            out.clear();
            for (const auto& [k, e] : v->items()) {
                if (!e.is_number()) throw InvalidArgument(where(key) + "." + k + " must be a number");
                out[k] = e.get<double>();
            }
        }
    }

    /// Nested object, or nullptr when absent.
    std::optional<ObjectReader> child(const char* key) {
        if (const json* v = take(key)) {
            return ObjectReader(*v, joined(key));
        }
        return std::nullopt;
    }

    bool has(const char* key) const { return j_.contains(key); }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) {
                throw InvalidArgument("unknown configuration key " + where(k.c_str()));
            }
        }
    }

private:
    const json* take(const char* key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    std::string joined(const char* key) const {
        return path_.empty() ? std::string(key) : path_ + "." + key;
    }
    std::string where(const char* key = nullptr) const {
        const std::string p = key ? joined(key) : path_;
        return "'" + (p.empty() ? std::string("<root>") : p) + "'";
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& message) {
    if (!ok) throw InvalidArgument(message);
}

void read_fnn(ObjectReader r, fnn::FnnConfig& f) {
    r.number("r_tol", f.r_tol);
    r.number("a_tol", f.a_tol);
    r.integer("k", f.k);
    std::string activity = f.activity == fnn::Activity::SecondMoment ? "second_moment" : "squared_mean";
    r.string("activity", activity);
    if (activity == "second_moment") {
        f.activity = fnn::Activity::SecondMoment;
    } else if (activity == "squared_mean") {
        f.activity = fnn::Activity::SquaredMean;
    } else {
        throw InvalidArgument("'model.fnn.activity' must be \"second_moment\" or \"squared_mean\"");
    }
    r.number("eps", f.eps);
    r.finish();
    require(f.r_tol > 0.0 && f.a_tol > 0.0 && f.k >= 0 && f.eps > 0.0, "'model.fnn' values out of range");
}

void validate(const RunConfig& c) {
    const auto& d = c.dataset;
    if (d.csv.empty()) {
        const auto& names = dynsys::system_names();
        require(std::find(names.begin(), names.end(), d.system) != names.end(),
                "'dataset.system' must be one of lorenz, lorenz-stochastic, rossler, ecosystem, torus");
        require(d.noise >= 0.0 && d.noise <= 1.0, "'dataset.noise' must lie in [0, 1]");
    } else {
        require(d.column >= 0, "'dataset.column' must be non-negative");
        require(d.segment >= 2 && d.gap >= 0, "'dataset.segment' must be >= 2 and 'dataset.gap' >= 0");
    }
    require(c.hankel.lags >= 2, "'hankel.lags' must be at least 2");
    const auto& t = c.model.train;
    require(t.latent >= 1 && t.hidden >= 1, "'model.latent' and 'model.hidden' must be positive");
    require(t.lambda >= 0.0, "'model.lambda' must be non-negative");
    require(t.learning_rate > 0.0, "'model.learning_rate' must be positive");
    require(t.epochs >= 1, "'model.epochs' must be at least 1");
    require(t.batch_size >= 2, "'model.batch_size' must be at least 2");
    require(t.gn_sigma >= 0.0, "'model.gn_sigma' must be non-negative");
    require(!c.model.seeds.empty(), "'model.seeds' must not be empty");
    const auto& m = c.metrics;
    require(!m.taus.empty(), "'metrics.taus' must not be empty");
    require(std::all_of(m.taus.begin(), m.taus.end(), [](Eigen::Index v) { return v >= 0; }),
            "'metrics.taus' must be non-negative");
    require(m.theiler >= 0, "'metrics.theiler' must be non-negative");
    require(c.baseline.tica_lag >= 0 && c.baseline.lagged_dim >= 1 && c.baseline.lagged_tau >= 0,
            "'baseline' values out of range");
    require(!c.output.empty(), "'output' must not be empty");
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

TimeSeries prepared_series(const TimeSeries& s, bool standardize_it) {
    return standardize_it ? standardize(s) : s;
}

} // namespace

// --- run configuration -----------------------------------------------------

RunConfig parse_run_config(const json& doc) {
    RunConfig c;
    ObjectReader root(doc, "");
    if (auto r = root.child("dataset")) {
        const bool has_csv = r->has("csv");
        require(!(has_csv && r->has("system")), "'dataset' takes either 'system' or 'csv', not both");
        r->string("system", c.dataset.system);
        r->integer("seed", c.dataset.seed);
        r->number_map("params", c.dataset.params);
        r->number("noise", c.dataset.noise);
        r->string("csv", c.dataset.csv);
        r->integer("column", c.dataset.column);
        r->list("truth_columns", c.dataset.truth_columns);
        r->integer("segment", c.dataset.segment);
        r->integer("gap", c.dataset.gap);
        r->finish();
        if (has_csv) {
            require(!c.dataset.csv.empty(), "'dataset.csv' must not be empty");
            c.dataset.system.clear();
        }
    }
    if (auto r = root.child("hankel")) {
        r->integer("lags", c.hankel.lags);
        r->boolean("standardize", c.hankel.standardize);
        r->finish();
    }
    if (auto r = root.child("model")) {
        auto& t = c.model.train;
        r->integer("latent", t.latent);
        r->integer("hidden", t.hidden);
        r->number("lambda", t.lambda);
        r->number("learning_rate", t.learning_rate);
        r->integer("epochs", t.epochs);
        r->integer("batch_size", t.batch_size);
        r->list("seeds", c.model.seeds);
        r->number("gn_sigma", t.gn_sigma);
        r->number("bn_momentum", t.bn_momentum);
        r->number("bn_eps", t.bn_eps);
        if (auto f = r->child("fnn")) read_fnn(*f, t.fnn);
        if (auto a = r->child("adam")) {
            a->number("beta1", t.adam.beta1);
            a->number("beta2", t.adam.beta2);
            a->number("eps", t.adam.eps);
            a->finish();
        }
        r->finish();
    }
    if (auto r = root.child("metrics")) {
        auto& m = c.metrics;
        r->list("taus", m.taus);
        r->integer("theiler", m.theiler);
        r->integer("coverage_points", m.coverage.max_points);
        r->integer("correlation_points", m.correlation.max_points);
        r->integer("correlation_radii", m.correlation.radii);
        std::vector<double> pct{m.correlation.low_percentile, m.correlation.high_percentile};
        r->list("correlation_percentiles", pct);
        require(pct.size() == 2, "'metrics.correlation_percentiles' needs two values");
        m.correlation.low_percentile = pct[0];
        m.correlation.high_percentile = pct[1];
        std::vector<double> fit{m.correlation.fit_begin, m.correlation.fit_end};
        r->list("correlation_fit", fit);
        require(fit.size() == 2, "'metrics.correlation_fit' needs two values");
        m.correlation.fit_begin = fit[0];
        m.correlation.fit_end = fit[1];
        r->integer("rips_points", m.rips.max_points);
        r->nullable_number("rips_max_radius", m.rips.max_radius);
        require(!m.rips.max_radius || *m.rips.max_radius > 0.0, "'metrics.rips_max_radius' must be positive");
        std::uint64_t seed = 0;
        r->integer("seed", seed);
        m.coverage.seed = seed;
        m.correlation.seed = seed;
        m.rips.seed = seed;
        r->finish();
    }
    if (auto r = root.child("baseline")) {
        r->integer("tica_lag", c.baseline.tica_lag);
        r->integer("lagged_dim", c.baseline.lagged_dim);
        r->integer("lagged_tau", c.baseline.lagged_tau);
        r->finish();
    }
    root.string("output", c.output);
    root.finish();
    validate(c);
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    return parse_run_config(read_json(path));
}

json to_json(const RunConfig& c) {
    json dataset;
    if (c.dataset.csv.empty()) {
        dataset = {{"system", c.dataset.system},
                   {"seed", c.dataset.seed},
                   {"params", c.dataset.params},
                   {"noise", c.dataset.noise}};
    } else {
        dataset = {{"csv", c.dataset.csv},
                   {"column", c.dataset.column},
                   {"truth_columns", c.dataset.truth_columns},
                   {"segment", c.dataset.segment},
                   {"gap", c.dataset.gap}};
    }
    const auto& t = c.model.train;
    const auto& m = c.metrics;
    return json{
        {"dataset", dataset},
        {"hankel", {{"lags", c.hankel.lags}, {"standardize", c.hankel.standardize}}},
        {"model",
         {{"latent", t.latent},
          {"hidden", t.hidden},
          {"lambda", t.lambda},
          {"learning_rate", t.learning_rate},
          {"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"seeds", c.model.seeds},
          {"gn_sigma", t.gn_sigma},
          {"bn_momentum", t.bn_momentum},
          {"bn_eps", t.bn_eps},
          {"fnn",
           {{"r_tol", t.fnn.r_tol},
            {"a_tol", t.fnn.a_tol},
            {"k", t.fnn.k},
            {"activity", t.fnn.activity == fnn::Activity::SecondMoment ? "second_moment" : "squared_mean"},
            {"eps", t.fnn.eps}}},
          {"adam", {{"beta1", t.adam.beta1}, {"beta2", t.adam.beta2}, {"eps", t.adam.eps}}}}},
        {"metrics",
         {{"taus", m.taus},
          {"theiler", m.theiler},
          {"coverage_points", m.coverage.max_points},
          {"correlation_points", m.correlation.max_points},
          {"correlation_radii", m.correlation.radii},
          {"correlation_percentiles", {m.correlation.low_percentile, m.correlation.high_percentile}},
          {"correlation_fit", {m.correlation.fit_begin, m.correlation.fit_end}},
          {"rips_points", m.rips.max_points},
          {"rips_max_radius", m.rips.max_radius ? json(*m.rips.max_radius) : json(nullptr)},
          {"seed", m.coverage.seed}}},
        {"baseline",
         {{"tica_lag", c.baseline.tica_lag},
          {"lagged_dim", c.baseline.lagged_dim},
          {"lagged_tau", c.baseline.lagged_tau}}},
        {"output", c.output}};
}

std::string config_hash(const json& doc) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : doc.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return "fnv1a64:" + hex64(h);
}

// --- data ------------------------------------------------------------------

Matrix align_truth(const Matrix& states, Eigen::Index hankel_rows) {
    if (hankel_rows > states.rows()) {
        throw ShapeError("more Hankel rows than truth states");
    }
    return states.bottomRows(hankel_rows);
}

PreparedData prepare_data(const RunConfig& cfg) {
    const auto lags = cfg.hankel.lags;
    const bool z = cfg.hankel.standardize;
    const auto& d = cfg.dataset;
    const auto assemble = [&](TimeSeries train, TimeSeries validation, TimeSeries test,
                              std::optional<Matrix> states) {
        auto train_h = build_hankel(train, lags);
        auto val_h = build_hankel(validation, lags);
        auto test_h = build_hankel(test, lags);
        std::optional<Matrix> truth;
        if (states) truth = align_truth(*states, test_h.size());
        return PreparedData{std::move(train),  std::move(test),    std::move(train_h), std::move(val_h),
                            std::move(test_h), std::move(states), std::move(truth)};
    };
    if (d.csv.empty()) {
        std::vector<TimeSeries> parts;
        for (std::uint64_t k = 0; k < 3; ++k) {
            parts.push_back(
                dynsys::run_protocol({d.system, d.seed + k, dynsys::default_protocol(d.system), d.params, d.noise}));
        }
        return assemble(prepared_series(parts[0].channel(0), z), prepared_series(parts[1].channel(0), z),
                        prepared_series(parts[2].channel(0), z), parts[2].values());
    }
    const io::CsvTable table = io::read_csv(d.csv);
    if (d.column >= table.values.cols()) {
        throw InvalidArgument("'dataset.column' " + std::to_string(d.column) + " is out of range for " + d.csv);
    }
    for (const auto c : d.truth_columns) {
        if (c < 0 || c >= table.values.cols()) {
            throw InvalidArgument("'dataset.truth_columns' entry " + std::to_string(c) + " is out of range");
        }
    }
    const Partition split = split_train_val_test(TimeSeries(table.values, 1.0), d.segment, d.gap);
    std::optional<Matrix> states;
    if (!d.truth_columns.empty()) {
        states = Matrix(split.test.length(), static_cast<Eigen::Index>(d.truth_columns.size()));
        for (std::size_t c = 0; c < d.truth_columns.size(); ++c) {
            states->col(static_cast<Eigen::Index>(c)) = split.test.values().col(d.truth_columns[c]);
        }
    }
    return assemble(prepared_series(split.train.channel(d.column), z),
                    prepared_series(split.validation.channel(d.column), z),
                    prepared_series(split.test.channel(d.column), z), std::move(states));
}

// --- experiments -----------------------------------------------------------

Replicate train_replicate(const PreparedData& data, ae::TrainConfig cfg, std::uint64_t seed) {
    cfg.seed = seed;
    auto trained = ae::train(data.train, data.validation, cfg);
    PointCloud embedding = ae::embed(trained.model, data.test);
    return Replicate{seed, std::move(trained), std::move(embedding)};
}

int resolve_jobs(int requested) {
    int jobs = std::max(1, requested);
    if (const char* env = std::getenv("FNN_FORGE_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && cap >= 1) {
            jobs = std::min<int>(jobs, static_cast<int>(cap));
        }
    }
    return jobs;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
    const auto workers = static_cast<std::size_t>(std::clamp<long>(jobs, 1, static_cast<long>(std::max<std::size_t>(count, 1))));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    // report the lowest-index failure so parallel and serial runs fail alike
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

MeanSe mean_se(const std::vector<double>& values) {
    MeanSe r;
    r.n = values.size();
    if (values.empty()) {
        r.mean = std::numeric_limits<double>::quiet_NaN();
        r.se = r.mean;
        return r;
    }
    r.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(r.n);
    if (r.n < 2) {
        r.se = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    double ss = 0.0;
    for (const double v : values) ss += (v - r.mean) * (v - r.mean);
    r.se = std::sqrt(ss / static_cast<double>(r.n - 1)) / std::sqrt(static_cast<double>(r.n));
    return r;
}

Vector variance_profile(const Matrix& cloud) {
    Vector v = column_variances(cloud);
    std::sort(v.data(), v.data() + v.size(), std::greater<>());
    const double total = v.sum();
    return total > 0.0 ? Vector(v / total) : v;
}

SweepResult sweep_lambda(const RunConfig& cfg, const std::vector<double>& lambdas, int jobs) {
    if (lambdas.size() < 3) {
        throw InvalidArgument("a lambda sweep needs at least 3 grid values");
    }
    if (std::any_of(lambdas.begin(), lambdas.end(), [](double l) { return !(l >= 0.0); })) {
        throw InvalidArgument("lambda values must be non-negative");
    }
    const PreparedData data = prepare_data(cfg);
    if (!data.truth) {
        throw InvalidArgument("a lambda sweep needs a truth attractor (builtin system or 'dataset.truth_columns')");
    }
    const Eigen::Index latent = cfg.model.train.latent;
    const Vector var_truth = column_variances(metrics::pad_attractor(PointCloud(*data.truth), latent).points());

    SweepResult out;
    out.lambdas = lambdas;
    out.truth_profile = variance_profile(metrics::pad_attractor(PointCloud(*data.truth), latent).points());
    const auto& seeds = cfg.model.seeds;
    out.rows.resize(lambdas.size() * seeds.size());
    parallel_for(out.rows.size(), jobs, [&](std::size_t idx) {
        ae::TrainConfig tc = cfg.model.train;
        tc.lambda = lambdas[idx / seeds.size()];
        const auto rep = train_replicate(data, tc, seeds[idx % seeds.size()]);
        const Matrix& pts = rep.embedding.points();
        SweepRow row;
        row.lambda = tc.lambda;
        row.seed = rep.seed;
        const Vector var_embed = column_variances(pts);
        row.s_dim = metrics::s_dim(var_truth, var_embed);
        row.profile = variance_profile(pts);
        row.top3 = row.profile.head(std::min<Eigen::Index>(3, row.profile.size())).sum();
        if (var_embed.sum() > 0.0) {
            row.effective = metrics::effective_dimension(var_embed);
        }
        out.rows[idx] = std::move(row);
    });
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
        std::vector<double> errors;
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            errors.push_back(1.0 - out.rows[l * seeds.size() + s].s_dim);
        }
        out.dimension_error.push_back(mean_se(errors));
        if (out.dimension_error.back().mean < best) {
            best = out.dimension_error.back().mean;
            out.best = l;
        }
    }
    return out;
}

ForecastResult forecast_noise(const RunConfig& cfg, const std::vector<double>& noise_levels,
                              const std::vector<Eigen::Index>& taus, int jobs) {
    if (noise_levels.empty() || taus.empty()) {
        throw InvalidArgument("forecasting needs at least one noise level and one horizon");
    }
    std::vector<PreparedData> data;
    for (const double xi : noise_levels) {
        RunConfig c = cfg;
        c.dataset.csv.clear();
        c.dataset.system = "lorenz-stochastic";
        c.dataset.noise = xi;
        validate(c);
        data.push_back(prepare_data(c));
    }
    ForecastResult out{noise_levels, taus, {}};
    const auto& seeds = cfg.model.seeds;
    const std::size_t per_noise = 2 * seeds.size();
    out.rows.resize(noise_levels.size() * per_noise);
    parallel_for(out.rows.size(), jobs, [&](std::size_t idx) {
        const std::size_t n = idx / per_noise;
        const bool regularized = (idx % per_noise) / seeds.size() == 1;
        ae::TrainConfig tc = cfg.model.train;
        if (!regularized) tc.lambda = 0.0;
        const auto rep = train_replicate(data[n], tc, seeds[idx % seeds.size()]);
        ForecastRow row{noise_levels[n], regularized, rep.seed, {}};
        for (const auto tau : taus) {
            row.skill.emplace_back(tau, metrics::simplex_skill(rep.embedding.points(), *data[n].truth, tau,
                                                               cfg.metrics.theiler));
        }
        out.rows[idx] = std::move(row);
    });
    return out;
}

// --- artifacts -------------------------------------------------------------

std::string scatter_svg(const Matrix& points, Eigen::Index x_col, Eigen::Index y_col, const std::string& title) {
    if (x_col < 0 || y_col < 0 || x_col >= points.cols() || y_col >= points.cols()) {
        throw InvalidArgument("scatter plot column out of range");
    }
    constexpr double size = 400.0;
    constexpr double margin = 40.0;
    const auto range = [&](Eigen::Index c) {
        double lo = points.rows() ? points.col(c).minCoeff() : 0.0;
        double hi = points.rows() ? points.col(c).maxCoeff() : 1.0;
        if (!(hi > lo)) {
            lo -= 0.5;
            hi += 0.5;
        }
        return std::pair{lo, hi};
    };
    const auto [x_lo, x_hi] = range(x_col);
    const auto [y_lo, y_hi] = range(y_col);
    const double span = size - 2 * margin;
    std::ostringstream svg;
    svg.precision(6);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
        << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << size / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << title << "</text>\n";
    svg << "<line x1=\"" << margin << "\" y1=\"" << size - margin << "\" x2=\"" << size - margin << "\" y2=\""
        << size - margin << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\"" << size - margin
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << size / 2 << "\" y=\"" << size - 10
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">latent " << x_col + 1 << "</text>\n";
    svg << "<text x=\"14\" y=\"" << size / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\""
        << " transform=\"rotate(-90 14 " << size / 2 << ")\">latent " << y_col + 1 << "</text>\n";
    svg << "<g fill=\"steelblue\" fill-opacity=\"0.5\">\n";
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const double x = margin + span * (points(i, x_col) - x_lo) / (x_hi - x_lo);
        const double y = size - margin - span * (points(i, y_col) - y_lo) / (y_hi - y_lo);
        svg << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"1.2\"/>\n";
    }
    svg << "</g>\n</svg>\n";
    return svg.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    out << text;
}

void write_json(const std::filesystem::path& path, const json& doc) {
    write_text(path, doc.dump(2) + "\n");
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidArgument("cannot read " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(path.string() + ": " + e.what());
    }
}

Manifest::Manifest(json invocation, std::filesystem::path out_dir)
    : invocation_(std::move(invocation)), out_dir_(std::move(out_dir)) {}

void Manifest::add_output(const std::string& stage, const std::filesystem::path& path) {
    outputs_.push_back({{"stage", stage}, {"path", path.lexically_relative(out_dir_).generic_string()}});
}

void Manifest::add_timing(const std::string& stage, double seconds) {
    timings_[stage] = timings_.value(stage, 0.0) + seconds;
}

void Manifest::write() const {
    json doc{{"tool", "fnnforge"},
             {"version", kToolVersion},
             {"command", invocation_.at("command")},
             {"config_hash", config_hash(invocation_)},
             {"invocation", invocation_},
             {"outputs", outputs_},
             {"timings_seconds", timings_}};
    for (const auto& o : outputs_) {
        if (!std::filesystem::exists(out_dir_ / o.at("path").get<std::string>())) {
            throw Error("manifest output missing: " + o.at("path").get<std::string>());
        }
    }
    write_json(out_dir_ / "manifest.json", doc);
}

} // namespace fnnforge::pipeline
