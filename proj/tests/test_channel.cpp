#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "tlmp/channel.hpp"
#include "tlmp/sparc.hpp"

using namespace tlmp;

TEST_CASE("gm_pdf point values") {
    channel::GmParams p{{1.0}, {1.0}};
    CHECK(channel::gm_pdf(0.0, p) ==
          doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi))
              .epsilon(1e-12));

    channel::GmParams mix{{0.5, 0.5}, {1.0, 1.0}};
    CHECK(channel::gm_pdf(0.7, mix) ==
          doctest::Approx(channel::gm_pdf(0.7, p)).epsilon(1e-12));

    CHECK_THROWS_AS(channel::gm_pdf(0.0, channel::GmParams{{0.5}, {1.0}}),
                    std::invalid_argument);
}

TEST_CASE("gm_pdf integrates to one and is symmetric") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int it = 0; it < 5; ++it) {
        const int g = 1 + static_cast<int>(rng() % 3);
        channel::GmParams p;
        double sum = 0.0;
        for (int i = 0; i < g; ++i) {
            p.weights.push_back(u(rng) + 0.1);
            sum += p.weights.back();
            p.precisions.push_back(std::pow(10.0, -1.0 + 2.0 * u(rng)));
        }
        for (auto& w : p.weights) w /= sum;
        double hi = 0.0;
        for (double prec : p.precisions)
            hi = std::max(hi, 12.0 / std::sqrt(prec));
        const double mass = oracles::simpson(
            [&](double h) { return channel::gm_pdf(h, p); }, -hi, hi, 40000);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(channel::gm_pdf(0.37, p) ==
              doctest::Approx(channel::gm_pdf(-0.37, p)).epsilon(1e-12));
        CHECK(channel::gm_pdf(3.0, p) >= 0.0);
    }
}

TEST_CASE("sample_gm_channel moments") {
    std::mt19937_64 rng(12);

    channel::GmParams tight{{1.0}, {1e12}};
    const Eigen::MatrixXd h0 = channel::sample_gm_channel(tight, 10, 10, rng);
    CHECK(h0.cwiseAbs().maxCoeff() < 1e-5);

    channel::GmParams unit{{1.0}, {1.0}};
    const Eigen::MatrixXd h1 = channel::sample_gm_channel(unit, 500, 200, rng);
    CHECK(h1.array().square().mean() == doctest::Approx(1.0).epsilon(0.03));

    channel::GmParams mix{{0.5, 0.5}, {1.0, 100.0}};
    const Eigen::MatrixXd h2 = channel::sample_gm_channel(mix, 500, 200, rng);
    const double m4 = h2.array().pow(4).mean();
    const double expected = 3.0 * (0.5 * 1.0 + 0.5 * 1e-4);
    CHECK(m4 == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("one_ring_covariance structure") {
    const auto r = channel::one_ring_covariance(8, 0.4, 0.5);
    CHECK(r.rows() == 8);
    // Hermitian
    CHECK((r - r.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    // unit diagonal after trace normalization
    for (int i = 0; i < 8; ++i)
        CHECK(std::abs(r(i, i).real() - 1.0) < 1e-12);
    // PSD
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);
}

TEST_CASE("one_ring_covariance point-source limit is rank one") {
    const auto r = channel::one_ring_covariance(6, 0.9, 1e-4);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r);
    const auto& ev = es.eigenvalues();
    CHECK(ev(ev.size() - 1) == doctest::Approx(6.0).epsilon(1e-4));
    CHECK(ev(ev.size() - 2) < 1e-6 * 6.0);
}

TEST_CASE("one_ring_covariance matches a brute-force Riemann sum") {
    // Instances where the default 512-point midpoint rule is converged to
    // 1e-6 against a 10^4-point reference: small arrays / small spreads.
    struct Case {
        int m;
        double az;
        double spread_deg;
    };
    for (const Case c : {Case{2, 0.7, 40.0}, Case{4, -0.3, 8.0}}) {
        const double spread = c.spread_deg * std::numbers::pi / 180.0;
        const auto fast = channel::one_ring_covariance(c.m, c.az, spread);
        const auto ref = oracles::one_ring_riemann(c.m, c.az, spread, 10000);
        CHECK((fast - ref).cwiseAbs().maxCoeff() < 1e-6);
    }
    // Larger arrays converge too, at the quadrature's own accuracy level.
    const double spread = 40.0 * std::numbers::pi / 180.0;
    const auto fast = channel::one_ring_covariance(32, 0.7, spread);
    const auto ref = oracles::one_ring_riemann(32, 0.7, spread, 10000);
    CHECK((fast - ref).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("sample_one_ring_virtual identity covariance halves") {
    std::mt19937_64 rng(13);
    const int m = 6;
    const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(m, m);
    Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(2 * m);
    const int reps = 20000;
    for (int it = 0; it < reps; ++it)
        acc += channel::sample_one_ring_virtual(eye, rng).array().square();
    acc /= reps;
    for (int i = 0; i < 2 * m; ++i)
        CHECK(acc(i) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("sample_one_ring_virtual rank-one covariance sparsity") {
    std::mt19937_64 rng(14);
    const auto cov = channel::one_ring_covariance(6, 0.3, 1e-4);
    for (int it = 0; it < 20; ++it) {
        const Eigen::VectorXd v = channel::sample_one_ring_virtual(cov, rng);
        int big = 0;
        for (int i = 0; i < v.size(); ++i)
            if (std::abs(v(i)) > 1e-4 * v.cwiseAbs().maxCoeff()) ++big;
        CHECK(big <= 2);
    }
}

TEST_CASE("virtual coordinates are decorrelated") {
    std::mt19937_64 rng(15);
    const int m = 4;
    const auto cov = channel::one_ring_covariance(m, 0.5, 0.6);
    const auto basis = channel::virtual_basis(cov, channel::VirtualBasis::kEigen);
    const int reps = 10000;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    for (int it = 0; it < reps; ++it) {
        const Eigen::VectorXd v =
            channel::sample_one_ring_virtual(cov, basis, rng);
        acc += v * v.transpose();
    }
    acc /= reps;
    for (int i = 0; i < 2 * m; ++i)
        for (int j = 0; j < 2 * m; ++j)
            if (i != j) CHECK(std::abs(acc(i, j)) < 0.05);
}

TEST_CASE("virtual_basis dft is unitary") {
    const auto cov = channel::one_ring_covariance(5, 0.1, 0.4);
    const auto f = channel::virtual_basis(cov, channel::VirtualBasis::kDft);
    CHECK((f.adjoint() * f - Eigen::MatrixXcd::Identity(5, 5))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("synthesize_observation") {
    auto cb = sparc::build_codebook(30, 64, 2, 3);
    std::mt19937_64 rng(16);

    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(cb.width(), 2);
    x.col(0) = sparc::sparse_embed({1, 4}, 3);
    x.col(1) = sparc::sparse_embed({0, 7}, 3);
    const Eigen::MatrixXd h = oracles::randn(2, 5, rng);

    SUBCASE("noiseless equals the product") {
        auto obs = channel::synthesize_observation(cb, x, h, 0.0, rng);
        CHECK((obs.y - cb.a * x * h).cwiseAbs().maxCoeff() < 1e-12);
    }

    SUBCASE("pure-noise variance") {
        const Eigen::MatrixXd x0 = Eigen::MatrixXd::Zero(cb.width(), 2);
        auto cb_big = sparc::build_codebook(31, 500, 2, 3);
        const Eigen::MatrixXd x_big = Eigen::MatrixXd::Zero(cb_big.width(), 2);
        const Eigen::MatrixXd h_big = Eigen::MatrixXd::Zero(2, 200);
        auto obs =
            channel::synthesize_observation(cb_big, x_big, h_big, 0.25, rng);
        CHECK(obs.y.array().square().mean() ==
              doctest::Approx(0.25).epsilon(0.03));
    }

    SUBCASE("K=1, J=1 one-hot channels pick a column") {
        auto cb1 = sparc::build_codebook(32, 48, 1, 3);
        Eigen::MatrixXd x1 = sparc::sparse_embed({5}, 3);
        Eigen::MatrixXd h1 = Eigen::MatrixXd::Ones(1, 3);
        auto obs = channel::synthesize_observation(cb1, x1, h1, 0.0, rng);
        for (int c = 0; c < 3; ++c)
            CHECK((obs.y.col(c) - cb1.a.col(5)).cwiseAbs().maxCoeff() < 1e-12);
    }

    SUBCASE("deterministic for a fixed seed") {
        std::mt19937_64 r1(77), r2(77);
        auto o1 = channel::synthesize_observation(cb, x, h, 0.1, r1);
        auto o2 = channel::synthesize_observation(cb, x, h, 0.1, r2);
        CHECK(o1.y == o2.y);
    }

    SUBCASE("dimension mismatch throws") {
        const Eigen::MatrixXd h_bad = oracles::randn(3, 5, rng);
        CHECK_THROWS_AS(
            channel::synthesize_observation(cb, x, h_bad, 0.0, rng),
            std::invalid_argument);
    }
}
