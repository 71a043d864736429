#include "tlmp/engine.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tlmp/math_util.hpp"

namespace tlmp::engine {

namespace {

constexpr double kLnTiny = -690.0;  // ln of ~1e-300, clamp for log arguments

double safe_log(double x) { return x > 0.0 ? std::log(x) : kLnTiny; }

double ln_beta_fn(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

}  // namespace

void EngineConfig::validate() const {
    if (!(theta1 > 0.0 && theta1 <= 1.0 && theta2 > 0.0 && theta2 <= 1.0))
        throw std::invalid_argument("EngineConfig: damping factors in (0,1]");
    if (t_max < 1) throw std::invalid_argument("EngineConfig: t_max >= 1");
    if (!(eps > 0.0)) throw std::invalid_argument("EngineConfig: eps > 0");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("EngineConfig: sigma2 > 0");
    dp_hyper.validate();
}

TlmpState initialize(const EngineConfig& cfg, const sparc::Codebook& cb,
                     const Eigen::MatrixXd& y, int k_users,
                     const Eigen::MatrixXd* h_truth, std::mt19937_64& rng) {
    cfg.validate();
    if (k_users < 1) throw std::invalid_argument("initialize: k_users >= 1");
    if (y.rows() != cb.n)
        throw std::invalid_argument("initialize: observation/codebook mismatch");
    const int n = cb.n;
    const int m = static_cast<int>(y.cols());
    const int k = k_users;
    const int section = cb.section_size();

    TlmpState st;
    st.theta1 = cfg.theta1;
    st.theta2 = cfg.theta2;

    // Decoder side: random one-hot sections, variances at 10x prior.
    st.dec.x_hat = Eigen::MatrixXd::Zero(cb.width(), k);
    std::uniform_int_distribution<int> pick(0, section - 1);
    for (int col = 0; col < k; ++col)
        for (int j = 0; j < cb.j_blocks; ++j)
            st.dec.x_hat(static_cast<Eigen::Index>(j) * section + pick(rng),
                         col) = 1.0;
    st.dec.x_bar = st.dec.x_hat;
    const double p = 1.0 / section;
    st.dec.v_x = 10.0 * p * (1.0 - p);
    st.dec.q_hat = Eigen::MatrixXd::Zero(n, k);
    st.dec.v_q = 1.0 / n;
    st.dec.t_hat = Eigen::MatrixXd::Zero(n, k);
    st.dec.v_t = 0.0;
    st.dec.d_hat = Eigen::MatrixXd::Zero(cb.width(), k);
    st.dec.v_d = 0.0;

    // Equalizer side.
    st.eq.r_hat.noalias() = cb.a * st.dec.x_hat;
    st.eq.r_bar = st.eq.r_hat;
    st.eq.v_r = 10.0 / n;  // 10x the unit-power codeword prior variance 1/N
    st.eq.v_h = 10.0;
    if (cfg.init_mode == InitMode::kNoisyOracle) {
        if (h_truth == nullptr)
            throw std::invalid_argument(
                "initialize: noisy_oracle init needs the true channel");
        if (h_truth->rows() != k || h_truth->cols() != m)
            throw std::invalid_argument("initialize: h_truth shape mismatch");
        const double power = h_truth->squaredNorm() / h_truth->size();
        const double noise_var = power * std::pow(10.0, -cfg.init_snr_db / 10.0);
        std::normal_distribution<double> gauss(0.0, std::sqrt(noise_var));
        st.eq.h_hat = *h_truth;
        for (Eigen::Index c = 0; c < st.eq.h_hat.cols(); ++c)
            for (Eigen::Index r = 0; r < st.eq.h_hat.rows(); ++r)
                st.eq.h_hat(r, c) += gauss(rng);
    } else {
        std::normal_distribution<double> gauss(0.0, 1.0);
        st.eq.h_hat.resize(k, m);
        for (Eigen::Index c = 0; c < st.eq.h_hat.cols(); ++c)
            for (Eigen::Index r = 0; r < st.eq.h_hat.rows(); ++r)
                st.eq.h_hat(r, c) = gauss(rng);
    }
    st.eq.h_bar = st.eq.h_hat;
    st.eq.s_hat = Eigen::MatrixXd::Zero(n, m);
    st.eq.v_s = 0.0;
    st.eq.p_bar = Eigen::MatrixXd::Zero(n, m);
    st.eq.p_hat = Eigen::MatrixXd::Zero(n, m);
    st.eq.v_p_bar = 0.0;
    st.eq.v_p = 0.0;
    st.eq.u_hat = Eigen::MatrixXd::Zero(n, k);
    st.eq.v_u = 0.0;
    st.eq.w_hat = Eigen::MatrixXd::Zero(k, m);
    st.eq.v_w = 0.0;

    st.gm = dpgm::GmPosterior::make_initial(k, m, cfg.dp_hyper, 0.1);
    return st;
}

void iterate_once(TlmpState& st, const Eigen::MatrixXd& y,
                  const sparc::Codebook& cb, const EngineConfig& cfg) {
    // BiG-AMP block
    bigamp::plant_update(st.eq, y, cfg.sigma2, st.theta1);
    bigamp::r_extrinsic(st.eq);
    bigamp::h_extrinsic(st.eq);
    bigamp::r_posterior(st.eq, st.dec.q_hat, st.dec.v_q, st.theta1);
    bigamp::h_posterior(st.eq, st.gm.gamma_bar, st.theta1);
    // Ve-GAMP block
    vegamp::pseudo_prior(st.dec, cb, st.theta2);
    vegamp::residual_update(st.dec, st.eq.u_hat, st.eq.v_u, st.theta2);
    vegamp::denoiser_input(st.dec, cb);
    vegamp::sparc_denoise(st.dec, cb.j_blocks, cb.l_bits, st.theta2);
    // VMP block
    const Eigen::MatrixXd h2 = dpgm::second_moment(st.eq.h_hat, st.eq.v_h);
    dpgm::update_beta(st.gm, cfg.dp_hyper.alpha);
    dpgm::prune_components(st.gm, cfg.dp_hyper.prune_threshold);
    dpgm::update_gamma(st.gm, h2, cfg.dp_hyper.a, cfg.dp_hyper.b);
    dpgm::update_omega(st.gm, h2);
    dpgm::effective_precision(st.gm);
}

double kl_cost(const TlmpState& st, const Eigen::MatrixXd& y,
               const sparc::Codebook& cb, const EngineConfig& cfg) {
    const auto& eq = st.eq;
    const auto& dec = st.dec;
    const auto& gm = st.gm;
    const double sigma2 = cfg.sigma2;

    // (i) Gaussian KL of the channel posterior vs N(0, gamma_bar^{-1}).
    double kl_h = 0.0;
    for (Eigen::Index c = 0; c < eq.h_hat.cols(); ++c)
        for (Eigen::Index r = 0; r < eq.h_hat.rows(); ++r) {
            const double g = gm.gamma_bar(r, c);
            const double hh = eq.h_hat(r, c);
            kl_h += 0.5 * ((eq.v_h + hh * hh) * g - 1.0 - safe_log(eq.v_h * g));
        }

    // (ii) Categorical KL of the section posteriors vs the uniform prior.
    // Each section sums to 1, so sum x ln(x 2^L) splits into the entropy part
    // plus (#sections) * ln(2^L).
    double kl_x = 0.0;
    for (Eigen::Index i = 0; i < dec.x_hat.size(); ++i) {
        const double v = dec.x_hat(i);
        if (v > 0.0) kl_x += v * std::log(v);
    }
    kl_x += static_cast<double>(cb.j_blocks) * dec.x_hat.cols() * cb.l_bits *
            std::log(2.0);

    // (iii) VMP factor KLs.
    const double alpha = cfg.dp_hyper.alpha;
    const double a0 = cfg.dp_hyper.a;
    const double b0 = cfg.dp_hyper.b;
    double kl_vmp = 0.0;
    for (int g = 0; g < gm.components(); ++g) {
        const double t = gm.tau(g), tt = gm.tau_tilde(g);
        kl_vmp += ln_beta_fn(1.0, alpha) - ln_beta_fn(t, tt) +
                  (t - 1.0) * digamma(t) + (tt - alpha) * digamma(tt) +
                  (1.0 + alpha - t - tt) * digamma(t + tt);
        const double at = gm.a_tilde(g), bt = gm.b_tilde(g);
        kl_vmp += (at - a0) * digamma(at) - std::lgamma(at) + std::lgamma(a0) +
                  a0 * (std::log(bt) - std::log(b0)) + at * (b0 - bt) / bt;
    }
    for (Eigen::Index r = 0; r < gm.resp.rows(); ++r)
        for (int g = 0; g < gm.components(); ++g) {
            const double w = gm.resp(r, g);
            if (w > 0.0) kl_vmp += w * (std::log(w) - safe_log(gm.pi_hat(g)));
        }

    // (iv) minus the expected log-likelihood with the Gaussian surrogate.
    const double nm = static_cast<double>(y.size());
    const double nll = 0.5 * nm * std::log(2.0 * std::numbers::pi * sigma2) +
                       ((y - eq.p_bar).squaredNorm() + nm * eq.v_p) /
                           (2.0 * sigma2);

    return kl_h + kl_x + kl_vmp + nll;
}

DampingDecision adapt_damping(const std::vector<double>& cost_trace,
                              double theta1, double theta2, double cap1,
                              double cap2) {
    if (cost_trace.empty())
        throw std::invalid_argument("adapt_damping: needs >= 1 recorded cost");
    DampingDecision d;
    const std::size_t n = cost_trace.size();
    if (n >= 2 && cost_trace[n - 1] > cost_trace[n - 2]) {
        d.rollback = true;
        d.theta1 = std::max(kThetaFloor, kThetaDecay * theta1);
        d.theta2 = std::max(kThetaFloor, kThetaDecay * theta2);
    } else {
        d.rollback = false;
        d.theta1 = std::min(cap1, kThetaGrow * theta1);
        d.theta2 = std::min(cap2, kThetaGrow * theta2);
    }
    return d;
}

bool check_stop(const Eigen::MatrixXd& x_hat_now,
                const Eigen::MatrixXd& x_hat_prev, double eps, int t,
                int t_max) {
    if (x_hat_now.rows() != x_hat_prev.rows() ||
        x_hat_now.cols() != x_hat_prev.cols())
        throw std::invalid_argument("check_stop: shape mismatch");
    if (t >= t_max) return true;
    const double change = (x_hat_now - x_hat_prev).squaredNorm();
    return change <= eps * x_hat_prev.squaredNorm();
}

DecodeResult decode(const Eigen::MatrixXd& y, const sparc::Codebook& cb,
                    int k_users, const EngineConfig& cfg, std::mt19937_64& rng,
                    const Eigen::MatrixXd* h_truth) {
    TlmpState st = initialize(cfg, cb, y, k_users, h_truth, rng);
    DecodeResult out;
    auto& diag = out.diagnostics;

    const int attempt_cap = 4 * cfg.t_max + 50;
    int attempts = 0;
    int accepted = 0;
    Eigen::MatrixXd x_prev = st.dec.x_hat;
    TlmpState snapshot;

    while (true) {
        if (cfg.adaptive_damping) snapshot = st;
        iterate_once(st, y, cb, cfg);
        ++attempts;
        const double cost = kl_cost(st, y, cb, cfg);

        if (cfg.adaptive_damping && !diag.cost_trace.empty()) {
            std::vector<double> tentative = diag.cost_trace;
            tentative.push_back(cost);
            const DampingDecision d = adapt_damping(tentative, st.theta1,
                                                    st.theta2, cfg.theta1,
                                                    cfg.theta2);
            if (d.rollback) {
                const bool at_floor = st.theta1 <= kThetaFloor + 1e-15 &&
                                      st.theta2 <= kThetaFloor + 1e-15;
                st = snapshot;
                if (at_floor || attempts >= attempt_cap) break;
                st.theta1 = d.theta1;
                st.theta2 = d.theta2;
                continue;
            }
            st.theta1 = d.theta1;
            st.theta2 = d.theta2;
        }

        diag.cost_trace.push_back(cost);
        ++accepted;
        const double denom = x_prev.squaredNorm();
        diag.x_change_trace.push_back(
            denom > 0.0 ? (st.dec.x_hat - x_prev).squaredNorm() / denom : 0.0);
        const bool stop =
            check_stop(st.dec.x_hat, x_prev, cfg.eps, accepted, cfg.t_max);
        x_prev = st.dec.x_hat;
        if (stop || attempts >= attempt_cap) break;
    }

    diag.iterations_used = accepted;
    diag.final_g = st.gm.components();
    if (h_truth != nullptr && h_truth->squaredNorm() > 0.0)
        diag.channel_nmse =
            (st.eq.h_hat - *h_truth).squaredNorm() / h_truth->squaredNorm();

    out.messages.reserve(k_users);
    for (int k = 0; k < k_users; ++k) {
        const sparc::BlockIndices idx =
            sparc::hard_decision(st.dec.x_hat.col(k), cb.j_blocks, cb.l_bits);
        out.messages.push_back(sparc::assemble_message(idx, cb.l_bits));
    }
    return out;
}

double spectral_efficiency(int b, int k, int n, int n0) {
    if (n + n0 <= 0) throw std::invalid_argument("spectral_efficiency: N+N0 > 0");
    return static_cast<double>(b) * k / static_cast<double>(n + n0);
}

}  // namespace tlmp::engine
