#include "tlmp/bigamp.hpp"

#include <stdexcept>

#include "tlmp/math_util.hpp"

namespace tlmp::bigamp {

void awgn_posterior(double y, double p_hat, double v_p, double sigma2,
                    double& z_hat, double& v_z) {
    const double denom = floored(v_p + sigma2);
    z_hat = (y * v_p + p_hat * sigma2) / denom;
    v_z = v_p * sigma2 / denom;
}

void plant_update(EqualizerState& st, const Eigen::MatrixXd& y, double sigma2,
                  double theta1) {
    if (!(sigma2 > 0.0))
        throw std::invalid_argument("plant_update: sigma2 must be > 0");
    const auto n = static_cast<double>(st.r_hat.rows());
    const auto k = static_cast<double>(st.r_hat.cols());
    const auto m = static_cast<double>(st.h_hat.cols());

    st.p_bar.noalias() = st.r_hat * st.h_bar;
    const double vp_bar_new = st.v_r * st.h_bar.squaredNorm() / m +
                              st.v_h * st.r_bar.squaredNorm() / n;
    st.v_p_bar = damp(theta1, vp_bar_new, st.v_p_bar);
    st.v_p = damp(theta1, st.v_p_bar + k * st.v_r * st.v_h, st.v_p);
    st.p_hat = st.p_bar - st.v_p_bar * st.s_hat;
    const double denom = floored(st.v_p + sigma2);
    st.s_hat = damp(theta1, ((y - st.p_hat) / denom).eval(), st.s_hat);
    st.v_s = damp(theta1, 1.0 / denom, st.v_s);
}

void r_extrinsic(EqualizerState& st) {
    const double h_norm2 = st.h_bar.squaredNorm();
    if (h_norm2 == 0.0)
        throw std::domain_error("r_extrinsic: degenerate state, ||h_bar|| = 0");
    const auto k = static_cast<double>(st.r_hat.cols());
    const auto m = static_cast<double>(st.h_hat.cols());
    st.v_u = k / floored(st.v_s * h_norm2);
    st.u_hat.noalias() = st.v_u * (st.s_hat * st.h_bar.transpose());
    st.u_hat += (1.0 - m * st.v_u * st.v_s * st.v_h) * st.r_bar;
}

void h_extrinsic(EqualizerState& st) {
    const double r_norm2 = st.r_bar.squaredNorm();
    if (r_norm2 == 0.0)
        throw std::domain_error("h_extrinsic: degenerate state, ||r_bar|| = 0");
    const auto n = static_cast<double>(st.r_hat.rows());
    const auto k = static_cast<double>(st.r_hat.cols());
    st.v_w = k / floored(st.v_s * r_norm2);
    st.w_hat.noalias() = st.v_w * (st.r_bar.transpose() * st.s_hat);
    st.w_hat += (1.0 - n * st.v_w * st.v_s * st.v_r) * st.h_bar;
}

void r_posterior(EqualizerState& st, const Eigen::MatrixXd& q_hat, double v_q,
                 double theta1) {
    const double denom = floored(v_q + st.v_u);
    st.r_hat = (st.u_hat * v_q + q_hat * st.v_u) / denom;
    st.v_r = v_q * st.v_u / denom;
    st.r_bar = damp(theta1, st.r_hat, st.r_bar);
}

void h_posterior(EqualizerState& st, const Eigen::MatrixXd& gamma_bar,
                 double theta1) {
    if ((gamma_bar.array() <= 0.0).any())
        throw std::invalid_argument("h_posterior: gamma_bar must be > 0");
    const Eigen::ArrayXXd prior_var = gamma_bar.array().inverse();
    const Eigen::ArrayXXd denom = (prior_var + st.v_w).max(kVarFloor);
    st.h_hat = (st.w_hat.array() * prior_var / denom).matrix();
    st.v_h = (prior_var * st.v_w / denom).mean();
    st.h_bar = damp(theta1, st.h_hat, st.h_bar);
}

}  // namespace tlmp::bigamp
