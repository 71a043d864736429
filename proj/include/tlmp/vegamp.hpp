#pragma once

#include <Eigen/Dense>

#include "tlmp/sparc.hpp"

namespace tlmp::vegamp {

/// Vector-valued GAMP state for the linear model r = A x with one-hot
/// section blocks. Every 2^L block of each x_hat column lies on the simplex.
struct DecoderState {
    Eigen::MatrixXd x_hat, x_bar;  // (J*2^L) x K
    double v_x = 0.0;
    Eigen::MatrixXd q_hat;         // N x K pseudo-prior mean toward BiG-AMP
    double v_q = 0.0;
    Eigen::MatrixXd t_hat;         // N x K scaled residual
    double v_t = 0.0;
    Eigen::MatrixXd d_hat;         // (J*2^L) x K denoiser input
    double v_d = 0.0;
};

/// v_q = theta2 ||A||_F^2 v_x / N + carry; q_hat = A x_hat - v_q t_hat
/// (Onsager-corrected).
void pseudo_prior(DecoderState& st, const sparc::Codebook& cb, double theta2);

/// t_hat = theta2 (u_hat - q_hat)/(v_q + v_u) + carry; v_t likewise.
void residual_update(DecoderState& st, const Eigen::MatrixXd& u_hat,
                     double v_u, double theta2);

/// v_d = J 2^L/(v_t ||A||_F^2); d_hat = x_bar + v_d A^T t_hat.
void denoiser_input(DecoderState& st, const sparc::Codebook& cb);

/// Posterior mean over the 2^L one-hot candidates under N(d_hat, v_d I):
/// softmax of (2 d - 1)/(2 v_d) per block, evaluated in the log domain.
/// Also refreshes v_x = mean x(1-x) and the damped x_bar.
void sparc_denoise(DecoderState& st, int j_blocks, int l_bits, double theta2);

}  // namespace tlmp::vegamp
