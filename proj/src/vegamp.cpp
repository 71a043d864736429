#include "tlmp/vegamp.hpp"

#include <cmath>
#include <stdexcept>

#include "tlmp/math_util.hpp"

namespace tlmp::vegamp {

void pseudo_prior(DecoderState& st, const sparc::Codebook& cb, double theta2) {
    const auto n = static_cast<double>(cb.n);
    st.v_q = damp(theta2, cb.fro_sq * st.v_x / n, st.v_q);
    st.q_hat.noalias() = cb.a * st.x_hat;
    st.q_hat -= st.v_q * st.t_hat;
}

void residual_update(DecoderState& st, const Eigen::MatrixXd& u_hat,
                     double v_u, double theta2) {
    const double denom = floored(st.v_q + v_u);
    st.t_hat = damp(theta2, ((u_hat - st.q_hat) / denom).eval(), st.t_hat);
    st.v_t = damp(theta2, 1.0 / denom, st.v_t);
}

void denoiser_input(DecoderState& st, const sparc::Codebook& cb) {
    st.v_d = static_cast<double>(cb.width()) / floored(st.v_t * cb.fro_sq);
    st.d_hat.noalias() = cb.a.transpose() * st.t_hat;
    st.d_hat = st.x_bar + st.v_d * st.d_hat;
}

void sparc_denoise(DecoderState& st, int j_blocks, int l_bits, double theta2) {
    if (!(st.v_d > 0.0))
        throw std::invalid_argument("sparc_denoise: v_d must be > 0");
    const int section = 1 << l_bits;
    Eigen::MatrixXd fresh(st.d_hat.rows(), st.d_hat.cols());
    Eigen::ArrayXd logits(section);
    double var_acc = 0.0;
    for (Eigen::Index k = 0; k < st.d_hat.cols(); ++k) {
        for (int j = 0; j < j_blocks; ++j) {
            const Eigen::Index off = static_cast<Eigen::Index>(j) * section;
            logits = (2.0 * st.d_hat.col(k).segment(off, section).array() - 1.0) /
                     (2.0 * st.v_d);
            const double lse = log_sum_exp(logits);
            for (int l = 0; l < section; ++l) {
                const double p = std::exp(logits(l) - lse);
                fresh(off + l, k) = p;
                var_acc += p * (1.0 - p);
            }
        }
    }
    st.v_x = var_acc / static_cast<double>(fresh.size());
    st.x_bar = damp(theta2, fresh, st.x_bar);
    st.x_hat = std::move(fresh);
}

}  // namespace tlmp::vegamp
