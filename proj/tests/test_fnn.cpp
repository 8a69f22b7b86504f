#include "fnn_oracle.hpp"

#include "fnnforge/dynsys.hpp"
#include "fnnforge/errors.hpp"
#include "fnnforge/fnn.hpp"

#include <doctest.h>

#include <random>

using namespace fnnforge;

namespace {

Matrix random_batch(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Matrix h(rows, cols);
    for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = nd(rng);
    return h;
}

} // namespace

TEST_CASE("dimension-indexed distances") {
    Matrix h1(2, 1);
    h1 << 0, 3;
    CHECK(fnn::dim_indexed_distances(h1)(0, 1, 0) == 3.0);

    Matrix h2(2, 2);
    h2 << 0, 0, 3, 4;
    const auto d = fnn::dim_indexed_distances(h2);
    CHECK(d(0, 1, 0) == 3.0);
    CHECK(d(0, 1, 1) == 5.0);

    std::mt19937_64 rng(1);
    const Matrix h = random_batch(8, 4, rng);
    const auto dd = fnn::dim_indexed_distances(h);
    for (int a = 0; a < 8; ++a) {
        for (int b = 0; b < 8; ++b) {
            double s = 0.0;
            for (int m = 0; m < 4; ++m) {
                s += (h(a, m) - h(b, m)) * (h(a, m) - h(b, m));
                CHECK(std::abs(dd(a, b, m) - std::sqrt(s)) <= 1e-12);
                CHECK(dd(a, b, m) == dd(b, a, m));
            }
        }
    }
}

TEST_CASE("neighbor sort") {
    Matrix line(3, 1);
    line << 0, 1, 3;
    const auto g = fnn::neighbor_sort(fnn::dim_indexed_distances(line));
    CHECK(g(1, 0, 0) == 1);
    CHECK(g(1, 1, 0) == 0);
    CHECK(g(1, 2, 0) == 2);

    Matrix dup(4, 1);
    dup << 5, 0, 5, 5;
    const auto gd = fnn::neighbor_sort(fnn::dim_indexed_distances(dup));
    CHECK(gd(2, 0, 0) == 2);
    CHECK(gd(2, 1, 0) == 0);
    CHECK(gd(2, 2, 0) == 3);

    std::mt19937_64 rng(2);
    const Matrix h = random_batch(20, 3, rng);
    const auto gr = fnn::neighbor_sort(fnn::dim_indexed_distances(h));
    for (int a = 0; a < 20; ++a) {
        for (int m = 0; m < 3; ++m) {
            std::vector<int> seen(20, 0);
            for (int r = 0; r < 20; ++r) ++seen[static_cast<std::size_t>(gr(a, r, m))];
            CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
            CHECK(gr(a, 0, m) == a);
        }
    }
}

TEST_CASE("false-neighbor fractions match the loop oracle") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> pick_b(4, 64);
    std::uniform_int_distribution<int> pick_l(2, 8);
    for (int trial = 0; trial < 120; ++trial) {
        const int B = pick_b(rng);
        const int L = pick_l(rng);
        Matrix h = random_batch(B, L, rng);
        // vary the column scales so both criteria fire
        for (int m = 0; m < L; ++m) h.col(m) *= std::pow(0.5, m);
        fnn::FnnConfig cfg;
        if (trial % 3 == 0) cfg.k = 1;
        const int K = cfg.neighbors_for(B);
        const auto ref = oracle::false_neighbors(h, K);
        const auto got = fnn::false_neighbor_fractions(h, cfg);
        for (int m = 0; m < L; ++m) {
            CHECK(std::abs(got.f_bar(m) - ref.f_bar[static_cast<std::size_t>(m)]) <= 1e-12);
            CHECK(got.f_bar(m) >= 0.0);
            CHECK(got.f_bar(m) <= 1.0);
        }
        CHECK(std::abs(got.loss - ref.loss) <= 1e-12);
        CHECK(std::abs(fnn::fnn_loss(h, cfg) - ref.loss) <= 1e-12);
    }
}

TEST_CASE("duplicated columns create no false neighbors") {
    std::mt19937_64 rng(4);
    const Matrix col = random_batch(64, 1, rng);
    Matrix h(64, 5);
    for (int m = 0; m < 5; ++m) h.col(m) = col;
    const auto d = fnn::false_neighbor_fractions(h);
    CHECK(d.f_bar(0) == 1.0);
    for (int m = 1; m < 5; ++m) CHECK(d.f_bar(m) == 0.0);

    const Matrix same = Matrix::Ones(10, 3);
    const auto flat = fnn::false_neighbor_fractions(same);
    CHECK(flat.f_bar(1) == 0.0);
    CHECK(flat.f_bar(2) == 0.0);
}

TEST_CASE("Lorenz delay coordinates show a three-dimensional signature") {
    const auto ts = dynsys::run_protocol({"lorenz", 1, dynsys::default_protocol("lorenz"), {}, 0.0});
    const auto x = standardize(ts.channel(0));
    const auto hank = build_hankel(x, 10);
    Matrix centered = hank.rows().rowwise() - hank.rows().colwise().mean();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const Matrix pcs = centered * svd.matrixV();
    const Matrix batch = pcs.topRows(512);
    const auto d = fnn::false_neighbor_fractions(batch);
    const auto ref = oracle::false_neighbors(batch, 6);
    for (int m = 0; m < 10; ++m) CHECK(d.f_bar(m) == ref.f_bar[static_cast<std::size_t>(m)]);
    CHECK(d.f_bar(1) > 0.2);
    CHECK(d.f_bar.tail(6).maxCoeff() < 0.05);
}

TEST_CASE("loss conventions") {
    std::mt19937_64 rng(5);
    Matrix h = random_batch(32, 4, rng);
    Matrix zero_tail = h;
    zero_tail.rightCols(3).setZero();
    CHECK(fnn::fnn_loss(zero_tail) == 0.0);
    CHECK(fnn::fnn_loss_grad(zero_tail).cwiseAbs().maxCoeff() == 0.0);

    const Vector ones = Vector::Ones(4);
    CHECK(fnn::fnn_loss_frozen(h, ones) == 0.0);

    // scale invariance of the fractions, quadratic scaling of the loss
    const auto base = fnn::false_neighbor_fractions(h);
    const auto scaled = fnn::false_neighbor_fractions(2.0 * h);
    CHECK(base.f_bar == scaled.f_bar);
    CHECK(scaled.loss == doctest::Approx(4.0 * base.loss));

    // row-order invariance
    Matrix rev = h.colwise().reverse();
    const auto reversed = fnn::false_neighbor_fractions(rev);
    CHECK(reversed.f_bar == base.f_bar);
    CHECK(reversed.loss == doctest::Approx(base.loss).epsilon(1e-12));

    // appending a duplicate column as the last unit never lowers the loss
    Matrix wider(32, 5);
    wider.leftCols(4) = h;
    wider.col(4) = h.col(1);
    CHECK(fnn::fnn_loss(wider) >= base.loss);

    // swapping latent columns breaks the index symmetry
    Matrix swapped = h;
    swapped.col(0).swap(swapped.col(2));
    swapped.col(0) *= 3.0;
    CHECK(fnn::fnn_loss(swapped) != doctest::Approx(fnn::fnn_loss(h)));

    // squared-mean activity switch
    fnn::FnnConfig sq;
    sq.activity = fnn::Activity::SquaredMean;
    const double expected = [&] {
        double s = 0.0;
        for (int m = 1; m < 4; ++m) s += (1.0 - base.f_bar(m)) * h.col(m).mean() * h.col(m).mean();
        return s;
    }();
    CHECK(fnn::fnn_loss(h, sq) == doctest::Approx(expected));

    CHECK_THROWS_AS(fnn::false_neighbor_fractions(Matrix::Zero(1, 3)), ShapeError);
    fnn::FnnConfig too_many;
    too_many.k = 5;
    CHECK_THROWS_AS(fnn::false_neighbor_fractions(Matrix::Random(5, 3), too_many), InvalidArgument);
}

TEST_CASE("loss gradient matches finite differences") {
    std::mt19937_64 rng(6);
    for (auto activity : {fnn::Activity::SecondMoment, fnn::Activity::SquaredMean}) {
        const Matrix h = random_batch(12, 5, rng);
        fnn::FnnConfig cfg;
        cfg.activity = activity;
        const auto diag = fnn::false_neighbor_fractions(h, cfg);
        const Matrix grad = fnn::fnn_loss_grad(h, cfg);
        const double step = 1e-6;
        for (Eigen::Index i = 0; i < h.size(); ++i) {
            Matrix up = h;
            Matrix down = h;
            up.data()[i] += step;
            down.data()[i] -= step;
            const double fd = (fnn::fnn_loss_frozen(up, diag.f_bar, activity) -
                               fnn::fnn_loss_frozen(down, diag.f_bar, activity)) /
                              (2.0 * step);
            const double g = grad.data()[i];
            CHECK(std::abs(fd - g) <= 1e-6 * std::max(1.0, std::abs(g)));
            // tiny perturbations flip no masks here, so the full loss agrees too
            const double fd_full = (fnn::fnn_loss(up, cfg) - fnn::fnn_loss(down, cfg)) / (2.0 * step);
            CHECK(std::abs(fd_full - g) <= 1e-6 * std::max(1.0, std::abs(g)));
        }
    }
}

TEST_CASE("diagnostics serialize") {
    std::mt19937_64 rng(7);
    const auto d = fnn::false_neighbor_fractions(random_batch(16, 3, rng));
    const nlohmann::json j = d;
    CHECK(j.at("f_bar").size() == 3);
    CHECK(j.at("loss").get<double>() == d.loss);
}
