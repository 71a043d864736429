#pragma once

#include <Eigen/Dense>

namespace tlmp::dpgm {

/// Hyperparameters of the Dirichlet-process Gaussian-mixture channel prior.
struct DpHyper {
    double alpha = 1e-2;          // DP concentration
    double a = 1e-6;              // gamma shape
    double b = 1e-6;              // gamma rate
    int g_init = 10;              // initial truncation
    double prune_threshold = 1e-3;  // relative-mass pruning level

    void validate() const;
};

/// Variational statistics of the mixture posterior. Responsibilities are
/// stored as a (K*M) x G matrix whose rows sum to 1; all per-component
/// vectors are kept aligned with the responsibility columns so pruning and
/// relabeling permute them together.
struct GmPosterior {
    Eigen::MatrixXd resp;       // (K*M) x G
    Eigen::VectorXd tau;        // beta posterior first parameter
    Eigen::VectorXd tau_tilde;  // beta posterior second parameter
    Eigen::VectorXd ln_beta;        // <ln beta_g>
    Eigen::VectorXd ln_one_m_beta;  // <ln (1-beta_g)>
    Eigen::VectorXd ln_pi;      // <ln beta_g> + sum_{p<g} <ln(1-beta_p)>
    Eigen::VectorXd pi_hat;     // plug-in stick weights E[beta]*prod(1-E[beta])
    Eigen::VectorXd a_tilde;    // gamma posterior shape
    Eigen::VectorXd b_tilde;    // gamma posterior rate
    Eigen::VectorXd gamma_mean;    // <gamma_g>
    Eigen::VectorXd ln_gamma;      // <ln gamma_g>
    Eigen::MatrixXd gamma_bar;  // K x M effective precisions

    int components() const { return static_cast<int>(resp.cols()); }

    /// Uniform responsibilities, prior-valued statistics, gamma_bar filled
    /// with `gamma_bar0`.
    static GmPosterior make_initial(int k, int m, const DpHyper& hyper,
                                    double gamma_bar0);
};

/// <|h|^2> = h_hat^2 + v_h elementwise.
Eigen::MatrixXd second_moment(const Eigen::MatrixXd& h_hat, double v_h);

/// Stick-breaking beta update from responsibilities; refreshes tau, tau_tilde
/// and every cached beta statistic including the plug-in weights.
void update_beta(GmPosterior& post, double alpha);

/// Gamma precision update; <|h|^2> is a K x M matrix flattened in the same
/// order as the responsibility rows.
void update_gamma(GmPosterior& post, const Eigen::MatrixXd& h_second_moment,
                  double a, double b);

/// Responsibility update in the log domain (log-sum-exp normalized).
void update_omega(GmPosterior& post, const Eigen::MatrixXd& h_second_moment);

/// gamma_bar_km = sum_g resp * <gamma_g>.
void effective_precision(GmPosterior& post);

/// Drops components with responsibility mass below threshold*K*M, renormalizes
/// the remaining rows, and slices every per-component vector. Never removes
/// the last component. Returns the number of dropped components.
int prune_components(GmPosterior& post, double threshold);

}  // namespace tlmp::dpgm
