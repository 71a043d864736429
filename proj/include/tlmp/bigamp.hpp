#pragma once

#include <Eigen/Dense>

namespace tlmp::bigamp {

/// Scalar-variance BiG-AMP state for the bilinear model Y ~ R H. Hatted
/// matrices are posterior means, barred ones their damped companions used
/// inside the update products.
struct EqualizerState {
    Eigen::MatrixXd r_hat, r_bar;  // N x K
    double v_r = 0.0;
    Eigen::MatrixXd h_hat, h_bar;  // K x M
    double v_h = 0.0;
    Eigen::MatrixXd s_hat;         // N x M scaled residual
    double v_s = 0.0;
    Eigen::MatrixXd p_bar, p_hat;  // N x M
    double v_p_bar = 0.0;
    double v_p = 0.0;
    Eigen::MatrixXd u_hat;         // N x K extrinsic toward the decoder
    double v_u = 0.0;
    Eigen::MatrixXd w_hat;         // K x M extrinsic toward the channel prior
    double v_w = 0.0;
};

/// Posterior of z under y = z + noise: z_hat = (y v_p + p_hat s2)/(v_p + s2),
/// v_z = v_p s2/(v_p + s2). Exposed for testing; plant_update inlines the
/// equivalent scaled-residual form.
void awgn_posterior(double y, double p_hat, double v_p, double sigma2,
                    double& z_hat, double& v_z);

/// Output-side block: p_bar/p_hat, the damped variance ladder and the scaled
/// residual s_hat, v_s.
void plant_update(EqualizerState& st, const Eigen::MatrixXd& y, double sigma2,
                  double theta1);

/// Extrinsic message toward R: v_u = K/(v_s ||h_bar||_F^2),
/// u_hat = (1 - M v_u v_s v_h) r_bar + v_u s_hat h_bar^T.
void r_extrinsic(EqualizerState& st);

/// Extrinsic message toward H: v_w = K/(v_s ||r_bar||_F^2),
/// w_hat = (1 - N v_w v_s v_r) h_bar + v_w r_bar^T s_hat.
void h_extrinsic(EqualizerState& st);

/// Gaussian combine of the extrinsic (u_hat, v_u) with the decoder-side
/// pseudo-prior (q_hat, v_q); updates r_hat, v_r and the damped r_bar.
void r_posterior(EqualizerState& st, const Eigen::MatrixXd& q_hat, double v_q,
                 double theta1);

/// Per-entry Gaussian combine of (w_hat, v_w) with the learned zero-mean
/// prior of precision gamma_bar; v_h is the entry variance averaged over KxM.
void h_posterior(EqualizerState& st, const Eigen::MatrixXd& gamma_bar,
                 double theta1);

}  // namespace tlmp::bigamp
