#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tlmp/dp_gm.hpp"
#include "tlmp/math_util.hpp"

using namespace tlmp;

namespace {

// Coordinate-ascent loop with frozen <|h|^2>; returns after the parameters
// stop moving. Mirrors the engine's VMP block ordering.
dpgm::GmPosterior fit_gm(const Eigen::MatrixXd& h2, const dpgm::DpHyper& hyper,
                         int max_cycles = 500) {
    dpgm::GmPosterior post = dpgm::GmPosterior::make_initial(
        static_cast<int>(h2.rows()), static_cast<int>(h2.cols()), hyper, 1.0);
    // break the symmetry of the uniform start
    for (Eigen::Index r = 0; r < post.resp.rows(); ++r)
        for (int g = 0; g < post.components(); ++g)
            post.resp(r, g) *= 1.0 + 1e-3 * ((r + g) % 7);
    for (Eigen::Index r = 0; r < post.resp.rows(); ++r)
        post.resp.row(r) /= post.resp.row(r).sum();

    for (int cycle = 0; cycle < max_cycles; ++cycle) {
        const Eigen::VectorXd gamma_prev = post.gamma_mean;
        dpgm::update_beta(post, hyper.alpha);
        dpgm::prune_components(post, hyper.prune_threshold);
        dpgm::update_gamma(post, h2, hyper.a, hyper.b);
        dpgm::update_omega(post, h2);
        dpgm::effective_precision(post);
        if (gamma_prev.size() == post.gamma_mean.size()) {
            const double rel =
                (post.gamma_mean - gamma_prev).cwiseAbs().maxCoeff() /
                post.gamma_mean.cwiseAbs().maxCoeff();
            if (rel < 1e-10) break;
        }
    }
    return post;
}

}  // namespace

TEST_CASE("digamma against reference values") {
    // psi(1) = -EulerGamma
    CHECK(digamma(1.0) == doctest::Approx(-0.5772156649015329).epsilon(1e-12));
    CHECK(digamma(0.5) ==
          doctest::Approx(-1.9635100260214235).epsilon(1e-12));
    CHECK(digamma(10.0) == doctest::Approx(2.2517525890667211).epsilon(1e-12));
    for (double x : {0.1, 0.7, 1.5, 3.0, 17.0, 123.4, 5000.0})
        CHECK(digamma(x) == doctest::Approx(oracles::digamma_ref(x)).epsilon(1e-7));
}

TEST_CASE("second_moment") {
    Eigen::MatrixXd h(1, 2);
    h << 3.0, 0.0;
    const Eigen::MatrixXd m = dpgm::second_moment(h, 1.0);
    CHECK(m(0, 0) == doctest::Approx(10.0));
    const Eigen::MatrixXd z = dpgm::second_moment(Eigen::MatrixXd::Zero(1, 1),
                                                  0.0);
    CHECK(z(0, 0) == 0.0);
    CHECK_THROWS_AS(dpgm::second_moment(h, -0.1), std::invalid_argument);
}

TEST_CASE("second_moment matches Monte-Carlo E[h^2]") {
    std::mt19937_64 rng(21);
    const double mu = 1.3, var = 0.7;
    std::normal_distribution<double> g(mu, std::sqrt(var));
    double acc = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        const double x = g(rng);
        acc += x * x;
    }
    Eigen::MatrixXd h(1, 1);
    h << mu;
    CHECK(dpgm::second_moment(h, var)(0, 0) ==
          doctest::Approx(acc / n).epsilon(0.01));
}

TEST_CASE("update_beta direct substitution") {
    dpgm::DpHyper hyper;
    hyper.alpha = 1.0;
    hyper.g_init = 2;
    auto post = dpgm::GmPosterior::make_initial(1, 1, hyper, 1.0);
    post.resp << 0.5, 0.5;
    dpgm::update_beta(post, 1.0);
    CHECK(post.tau(0) == doctest::Approx(1.5));
    CHECK(post.tau(1) == doctest::Approx(1.5));
    CHECK(post.tau_tilde(0) == doctest::Approx(1.5));
    CHECK(post.tau_tilde(1) == doctest::Approx(1.0));
    // psi(1.5) - psi(3)
    CHECK(post.ln_beta(0) ==
          doctest::Approx(-0.8862943611198906).epsilon(1e-10));
}

TEST_CASE("update_beta with all mass on the first component") {
    dpgm::DpHyper hyper;
    hyper.alpha = 0.25;
    hyper.g_init = 2;
    const int km = 12;
    auto post = dpgm::GmPosterior::make_initial(3, 4, hyper, 1.0);
    post.resp.col(0).setOnes();
    post.resp.col(1).setZero();
    dpgm::update_beta(post, hyper.alpha);
    CHECK(post.tau(0) == doctest::Approx(km + 1.0));
    CHECK(post.tau(1) == doctest::Approx(1.0));
    CHECK(post.tau_tilde(0) == doctest::Approx(hyper.alpha));
    CHECK(post.tau_tilde(1) == doctest::Approx(hyper.alpha));
}

TEST_CASE("update_gamma substitution and prior recovery") {
    dpgm::DpHyper hyper;
    hyper.g_init = 1;
    auto post = dpgm::GmPosterior::make_initial(1, 1, hyper, 1.0);
    Eigen::MatrixXd h2(1, 1);
    h2 << 2.0;

    post.resp.setOnes();
    dpgm::update_gamma(post, h2, 1e-6, 1e-6);
    CHECK(post.a_tilde(0) == doctest::Approx(0.500001));
    CHECK(post.b_tilde(0) == doctest::Approx(1.000001));
    CHECK(post.gamma_mean(0) == doctest::Approx(0.5).epsilon(1e-5));

    post.resp.setZero();
    dpgm::update_gamma(post, h2, 1e-3, 2e-3);
    CHECK(post.a_tilde(0) == doctest::Approx(1e-3));
    CHECK(post.b_tilde(0) == doctest::Approx(2e-3));
    CHECK(post.gamma_mean(0) == doctest::Approx(0.5));
}

TEST_CASE("update_gamma recovers the generating precision") {
    std::mt19937_64 rng(22);
    const double gamma_true = 4.0;
    const int km = 10000;
    std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(gamma_true));
    Eigen::MatrixXd h2(km, 1);
    for (int i = 0; i < km; ++i) {
        const double x = g(rng);
        h2(i, 0) = x * x;
    }
    dpgm::DpHyper hyper;
    hyper.g_init = 1;
    auto post = dpgm::GmPosterior::make_initial(km, 1, hyper, 1.0);
    post.resp.setOnes();
    dpgm::update_gamma(post, h2, 1e-6, 1e-6);
    CHECK(post.gamma_mean(0) == doctest::Approx(gamma_true).epsilon(0.10));
}

TEST_CASE("update_omega basics") {
    dpgm::DpHyper hyper;

    SUBCASE("single component gives certainty") {
        hyper.g_init = 1;
        auto post = dpgm::GmPosterior::make_initial(2, 2, hyper, 1.0);
        dpgm::update_omega(post, Eigen::MatrixXd::Random(2, 2).cwiseAbs());
        CHECK((post.resp.array() == 1.0).all());
    }

    SUBCASE("identical statistics split evenly") {
        hyper.g_init = 2;
        auto post = dpgm::GmPosterior::make_initial(1, 1, hyper, 1.0);
        post.gamma_mean << 2.0, 2.0;
        post.ln_gamma << 0.7, 0.7;
        post.ln_pi << -0.3, -0.3;
        Eigen::MatrixXd h2(1, 1);
        h2 << 1.1;
        dpgm::update_omega(post, h2);
        CHECK(post.resp(0, 0) == doctest::Approx(0.5));
        CHECK(post.resp(0, 1) == doctest::Approx(0.5));
    }

    SUBCASE("zero-moment entries weight sqrt(gamma)") {
        hyper.g_init = 2;
        auto post = dpgm::GmPosterior::make_initial(1, 1, hyper, 1.0);
        post.gamma_mean << 1.0, 100.0;
        post.ln_gamma << std::log(1.0), std::log(100.0);
        post.ln_pi << -1.0, -1.0;
        Eigen::MatrixXd h2 = Eigen::MatrixXd::Zero(1, 1);
        dpgm::update_omega(post, h2);
        CHECK(post.resp(0, 0) == doctest::Approx(1.0 / 11.0).epsilon(1e-9));
        CHECK(post.resp(0, 1) == doctest::Approx(10.0 / 11.0).epsilon(1e-9));
    }
}

TEST_CASE("responsibility rows sum to one after update_omega") {
    std::mt19937_64 rng(23);
    dpgm::DpHyper hyper;
    hyper.g_init = 6;
    auto post = dpgm::GmPosterior::make_initial(20, 10, hyper, 1.0);
    Eigen::MatrixXd h2 = oracles::randn(20, 10, rng).cwiseAbs2();
    dpgm::update_beta(post, hyper.alpha);
    dpgm::update_gamma(post, h2, hyper.a, hyper.b);
    dpgm::update_omega(post, h2);
    const Eigen::VectorXd sums = post.resp.rowwise().sum();
    for (Eigen::Index i = 0; i < sums.size(); ++i)
        CHECK(std::abs(sums(i) - 1.0) < 1e-9);
}

TEST_CASE("tau and a_tilde are monotone in responsibility mass") {
    dpgm::DpHyper hyper;
    hyper.g_init = 3;
    auto post = dpgm::GmPosterior::make_initial(4, 4, hyper, 1.0);
    Eigen::MatrixXd h2 = Eigen::MatrixXd::Constant(4, 4, 0.5);

    dpgm::update_beta(post, hyper.alpha);
    dpgm::update_gamma(post, h2, hyper.a, hyper.b);
    const double tau_before = post.tau(1);
    const double a_before = post.a_tilde(1);

    // move mass toward component 1
    post.resp.col(1).array() += 0.2;
    post.resp.col(0).array() -= 0.1;
    post.resp.col(2).array() -= 0.1;
    dpgm::update_beta(post, hyper.alpha);
    dpgm::update_gamma(post, h2, hyper.a, hyper.b);
    CHECK(post.tau(1) > tau_before);
    CHECK(post.a_tilde(1) > a_before);
}

TEST_CASE("effective_precision convex combination") {
    dpgm::DpHyper hyper;
    hyper.g_init = 2;
    auto post = dpgm::GmPosterior::make_initial(1, 1, hyper, 1.0);
    post.resp << 0.25, 0.75;
    post.gamma_mean << 4.0, 8.0;
    dpgm::effective_precision(post);
    CHECK(post.gamma_bar(0, 0) == doctest::Approx(7.0));

    hyper.g_init = 1;
    auto single = dpgm::GmPosterior::make_initial(3, 2, hyper, 1.0);
    single.gamma_mean << 2.5;
    dpgm::effective_precision(single);
    CHECK((single.gamma_bar.array() == 2.5).all());
}

TEST_CASE("effective_precision stays inside the component range") {
    std::mt19937_64 rng(24);
    dpgm::DpHyper hyper;
    hyper.g_init = 5;
    auto post = dpgm::GmPosterior::make_initial(10, 10, hyper, 1.0);
    Eigen::MatrixXd h2 = oracles::randn(10, 10, rng).cwiseAbs2();
    dpgm::update_beta(post, hyper.alpha);
    dpgm::update_gamma(post, h2, hyper.a, hyper.b);
    dpgm::update_omega(post, h2);
    dpgm::effective_precision(post);
    const double lo = post.gamma_mean.minCoeff();
    const double hi = post.gamma_mean.maxCoeff();
    CHECK(post.gamma_bar.minCoeff() >= lo - 1e-12);
    CHECK(post.gamma_bar.maxCoeff() <= hi + 1e-12);
}

TEST_CASE("prune_components") {
    dpgm::DpHyper hyper;
    hyper.g_init = 2;

    SUBCASE("threshold zero is the identity") {
        auto post = dpgm::GmPosterior::make_initial(2, 2, hyper, 1.0);
        CHECK(dpgm::prune_components(post, 0.0) == 0);
        CHECK(post.components() == 2);
    }

    SUBCASE("zero-mass component is removed and rows renormalize") {
        auto post = dpgm::GmPosterior::make_initial(2, 2, hyper, 1.0);
        post.resp.col(0).setOnes();
        post.resp.col(1).setZero();
        CHECK(dpgm::prune_components(post, 1e-3) == 1);
        CHECK(post.components() == 1);
        CHECK((post.resp.array() == 1.0).all());
        CHECK(post.tau.size() == 1);
        CHECK(post.gamma_mean.size() == 1);
    }

    SUBCASE("the last component survives any threshold") {
        hyper.g_init = 1;
        auto post = dpgm::GmPosterior::make_initial(2, 2, hyper, 1.0);
        CHECK(dpgm::prune_components(post, 10.0) == 0);
        CHECK(post.components() == 1);
    }
}

TEST_CASE("vmp fit discovers a well-separated two-component mixture") {
    std::mt19937_64 rng(25);
    const int km = 10000;
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd h2(km, 1);
    for (int i = 0; i < km; ++i) {
        const double sd = (i % 2 == 0) ? 1.0 : 0.1;  // precisions 1 and 100
        const double x = sd * g(rng);
        h2(i, 0) = x * x;
    }
    dpgm::DpHyper hyper;
    hyper.g_init = 8;
    const auto post = fit_gm(h2, hyper);
    CHECK(post.components() == 2);

    Eigen::VectorXd mass = post.resp.colwise().sum() / km;
    const int hi = post.gamma_mean(0) > post.gamma_mean(1) ? 0 : 1;
    CHECK(mass(hi) == doctest::Approx(0.5).epsilon(0.1));
    CHECK(post.gamma_mean(hi) == doctest::Approx(100.0).epsilon(0.2));
    CHECK(post.gamma_mean(1 - hi) == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("vmp coordinate ascent reaches a fixed point") {
    std::mt19937_64 rng(26);
    Eigen::MatrixXd h2 = oracles::randn(50, 20, rng).cwiseAbs2();
    dpgm::DpHyper hyper;
    hyper.g_init = 4;
    auto post = fit_gm(h2, hyper);

    // one further cycle moves every parameter by < 1e-8 relative
    auto before = post;
    dpgm::update_beta(post, hyper.alpha);
    dpgm::prune_components(post, hyper.prune_threshold);
    dpgm::update_gamma(post, h2, hyper.a, hyper.b);
    dpgm::update_omega(post, h2);
    dpgm::effective_precision(post);
    REQUIRE(post.components() == before.components());
    auto rel = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        return (a - b).cwiseAbs().maxCoeff() /
               std::max(1e-300, b.cwiseAbs().maxCoeff());
    };
    CHECK(rel(post.tau, before.tau) < 1e-8);
    CHECK(rel(post.tau_tilde, before.tau_tilde) < 1e-8);
    CHECK(rel(post.a_tilde, before.a_tilde) < 1e-8);
    CHECK(rel(post.b_tilde, before.b_tilde) < 1e-8);
    CHECK(rel(post.gamma_mean, before.gamma_mean) < 1e-8);
    CHECK((post.resp - before.resp).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("fitted precision scales inversely with the moment scale") {
    std::mt19937_64 rng(27);
    Eigen::MatrixXd h2 = oracles::randn(100, 50, rng).cwiseAbs2();
    dpgm::DpHyper hyper;
    hyper.g_init = 1;

    const auto base = fit_gm(h2, hyper);
    const double c = 3.7;
    const auto scaled = fit_gm((c * h2.array()).matrix(), hyper);
    CHECK(scaled.gamma_mean(0) * c ==
          doctest::Approx(base.gamma_mean(0)).epsilon(1e-3));
}
