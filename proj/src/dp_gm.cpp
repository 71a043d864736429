#include "tlmp/dp_gm.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "tlmp/math_util.hpp"

namespace tlmp::dpgm {

void DpHyper::validate() const {
    if (!(alpha > 0.0) || !(a > 0.0) || !(b > 0.0))
        throw std::invalid_argument("DpHyper: alpha, a, b must be > 0");
    if (g_init < 1) throw std::invalid_argument("DpHyper: g_init < 1");
    if (prune_threshold < 0.0)
        throw std::invalid_argument("DpHyper: negative prune threshold");
}

GmPosterior GmPosterior::make_initial(int k, int m, const DpHyper& hyper,
                                      double gamma_bar0) {
    hyper.validate();
    GmPosterior post;
    const int g = hyper.g_init;
    post.resp = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(k) * m, g,
                                          1.0 / g);
    post.tau = Eigen::VectorXd::Ones(g);
    post.tau_tilde = Eigen::VectorXd::Constant(g, hyper.alpha);
    post.a_tilde = Eigen::VectorXd::Constant(g, hyper.a);
    post.b_tilde = Eigen::VectorXd::Constant(g, hyper.b);
    post.gamma_mean = Eigen::VectorXd::Constant(g, hyper.a / hyper.b);
    post.ln_gamma = Eigen::VectorXd::Constant(
        g, digamma(hyper.a) - std::log(hyper.b));
    post.ln_beta.resize(g);
    post.ln_one_m_beta.resize(g);
    post.ln_pi.resize(g);
    post.pi_hat.resize(g);
    double prefix_ln = 0.0, prefix_prod = 1.0;
    for (int i = 0; i < g; ++i) {
        const double t = post.tau(i), tt = post.tau_tilde(i);
        post.ln_beta(i) = digamma(t) - digamma(t + tt);
        post.ln_one_m_beta(i) = digamma(tt) - digamma(t + tt);
        post.ln_pi(i) = post.ln_beta(i) + prefix_ln;
        const double eb = t / (t + tt);
        post.pi_hat(i) = eb * prefix_prod;
        prefix_ln += post.ln_one_m_beta(i);
        prefix_prod *= 1.0 - eb;
    }
    post.gamma_bar = Eigen::MatrixXd::Constant(k, m, gamma_bar0);
    return post;
}

Eigen::MatrixXd second_moment(const Eigen::MatrixXd& h_hat, double v_h) {
    if (v_h < 0.0)
        throw std::invalid_argument("second_moment: negative variance");
    return (h_hat.array().square() + v_h).matrix();
}

void update_beta(GmPosterior& post, double alpha) {
    const int g = post.components();
    const Eigen::VectorXd mass = post.resp.colwise().sum();
    post.tau = mass.array() + 1.0;
    // tail mass: sum over components after g
    post.tau_tilde.resize(g);
    double tail = 0.0;
    for (int i = g - 1; i >= 0; --i) {
        post.tau_tilde(i) = tail + alpha;
        tail += mass(i);
    }
    post.ln_beta.resize(g);
    post.ln_one_m_beta.resize(g);
    post.ln_pi.resize(g);
    post.pi_hat.resize(g);
    double prefix_ln = 0.0, prefix_prod = 1.0;
    for (int i = 0; i < g; ++i) {
        const double t = post.tau(i), tt = post.tau_tilde(i);
        const double d_sum = digamma(t + tt);
        post.ln_beta(i) = digamma(t) - d_sum;
        post.ln_one_m_beta(i) = digamma(tt) - d_sum;
        post.ln_pi(i) = post.ln_beta(i) + prefix_ln;
        const double eb = t / (t + tt);
        post.pi_hat(i) = eb * prefix_prod;
        prefix_ln += post.ln_one_m_beta(i);
        prefix_prod *= 1.0 - eb;
    }
}

void update_gamma(GmPosterior& post, const Eigen::MatrixXd& h_second_moment,
                  double a, double b) {
    if (h_second_moment.size() != post.resp.rows())
        throw std::invalid_argument("update_gamma: second-moment size mismatch");
    const Eigen::VectorXd h2 =
        Eigen::Map<const Eigen::VectorXd>(h_second_moment.data(),
                                          h_second_moment.size());
    post.a_tilde = 0.5 * post.resp.colwise().sum().transpose().array() + a;
    post.b_tilde = (0.5 * (post.resp.transpose() * h2)).array() + b;
    post.gamma_mean = post.a_tilde.array() / post.b_tilde.array();
    post.ln_gamma.resize(post.components());
    for (int i = 0; i < post.components(); ++i)
        post.ln_gamma(i) = digamma(post.a_tilde(i)) - std::log(post.b_tilde(i));
}

void update_omega(GmPosterior& post, const Eigen::MatrixXd& h_second_moment) {
    if (h_second_moment.size() != post.resp.rows())
        throw std::invalid_argument("update_omega: second-moment size mismatch");
    const int g = post.components();
    const Eigen::Map<const Eigen::VectorXd> h2(h_second_moment.data(),
                                               h_second_moment.size());
    Eigen::ArrayXd logits(g);
    for (Eigen::Index r = 0; r < post.resp.rows(); ++r) {
        for (int i = 0; i < g; ++i)
            logits(i) = 0.5 * post.ln_gamma(i) -
                        0.5 * post.gamma_mean(i) * h2(r) + post.ln_pi(i);
        const double lse = log_sum_exp(logits);
        for (int i = 0; i < g; ++i) post.resp(r, i) = std::exp(logits(i) - lse);
    }
}

void effective_precision(GmPosterior& post) {
    const Eigen::VectorXd flat = post.resp * post.gamma_mean;
    post.gamma_bar = Eigen::Map<const Eigen::MatrixXd>(
        flat.data(), post.gamma_bar.rows(), post.gamma_bar.cols());
}

namespace {

Eigen::VectorXd select(const Eigen::VectorXd& v, const std::vector<int>& keep) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) out(i) = v(keep[i]);
    return out;
}

}  // namespace

int prune_components(GmPosterior& post, double threshold) {
    const int g = post.components();
    if (g <= 1) return 0;
    const Eigen::VectorXd mass = post.resp.colwise().sum();
    const double cutoff = threshold * static_cast<double>(post.resp.rows());
    std::vector<int> keep;
    for (int i = 0; i < g; ++i)
        if (mass(i) >= cutoff) keep.push_back(i);
    if (keep.empty()) {
        int best = 0;
        mass.maxCoeff(&best);
        keep.push_back(best);
    }
    if (static_cast<int>(keep.size()) == g) return 0;

    Eigen::MatrixXd resp(post.resp.rows(),
                         static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i)
        resp.col(i) = post.resp.col(keep[i]);
    const Eigen::VectorXd row_sum = resp.rowwise().sum();
    for (Eigen::Index r = 0; r < resp.rows(); ++r) {
        const double s = row_sum(r);
        if (s > 0.0)
            resp.row(r) /= s;
        else
            resp.row(r).setConstant(1.0 / static_cast<double>(keep.size()));
    }
    post.resp = std::move(resp);
    post.tau = select(post.tau, keep);
    post.tau_tilde = select(post.tau_tilde, keep);
    post.ln_beta = select(post.ln_beta, keep);
    post.ln_one_m_beta = select(post.ln_one_m_beta, keep);
    post.ln_pi = select(post.ln_pi, keep);
    post.pi_hat = select(post.pi_hat, keep);
    post.a_tilde = select(post.a_tilde, keep);
    post.b_tilde = select(post.b_tilde, keep);
    post.gamma_mean = select(post.gamma_mean, keep);
    post.ln_gamma = select(post.ln_gamma, keep);
    return g - static_cast<int>(keep.size());
}

}  // namespace tlmp::dpgm
