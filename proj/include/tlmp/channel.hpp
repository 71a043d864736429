#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "tlmp/sparc.hpp"

namespace tlmp::channel {

/// Gaussian-mixture prior over each channel coefficient:
/// p(h) = sum_g w_g N(h; 0, 1/gamma_g).
struct GmParams {
    std::vector<double> weights;     // sum to 1
    std::vector<double> precisions;  // all > 0

    void validate() const;
};

struct Observation {
    Eigen::MatrixXd y;  // N x M
    double noise_var = 0.0;
};

double gm_pdf(double h, const GmParams& params);

/// Entrywise mixture draw: component g with prob w_g, then N(0, 1/gamma_g).
Eigen::MatrixXd sample_gm_channel(const GmParams& params, int k, int m,
                                  std::mt19937_64& rng);

/// One-ring spatial covariance for a half-wavelength ULA:
/// R = (1/2D) * int_{az-D}^{az+D} a(phi) a(phi)^H dphi, midpoint rule,
/// trace-normalized to M. `angular_spread` is the half-width D in radians.
Eigen::MatrixXcd one_ring_covariance(int m, double azimuth,
                                     double angular_spread,
                                     int quad_points = 512);

enum class VirtualBasis { kEigen, kDft };

/// Unitary basis used to decorrelate the spatial channel: eigenbasis of `cov`
/// or the length-M DFT.
Eigen::MatrixXcd virtual_basis(const Eigen::MatrixXcd& cov, VirtualBasis kind);

/// Draws h ~ CN(0, cov) (Re and Im parts each N(0, cov), scaled by 1/sqrt(2)),
/// projects onto `basis`, and stacks (Re, Im) into a length-2M real row.
/// Identity covariance gives i.i.d. entries of variance 1/2 in each half.
Eigen::VectorXd sample_one_ring_virtual(const Eigen::MatrixXcd& cov,
                                        const Eigen::MatrixXcd& basis,
                                        std::mt19937_64& rng);

/// Convenience overload: basis = eigenbasis of cov itself.
Eigen::VectorXd sample_one_ring_virtual(const Eigen::MatrixXcd& cov,
                                        std::mt19937_64& rng);

/// Y = A X H + W with W i.i.d. N(0, sigma2).
Observation synthesize_observation(const sparc::Codebook& cb,
                                   const Eigen::MatrixXd& x,
                                   const Eigen::MatrixXd& h, double sigma2,
                                   std::mt19937_64& rng);

}  // namespace tlmp::channel
