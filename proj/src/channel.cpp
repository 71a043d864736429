#include "tlmp/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tlmp::channel {

namespace {
constexpr double kPi = std::numbers::pi;
}

void GmParams::validate() const {
    if (weights.empty() || weights.size() != precisions.size())
        throw std::invalid_argument("GmParams: weights/precisions mismatch");
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("GmParams: negative weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("GmParams: weights must sum to 1");
    for (double g : precisions)
        if (!(g > 0.0)) throw std::invalid_argument("GmParams: precision <= 0");
}

double gm_pdf(double h, const GmParams& params) {
    params.validate();
    double p = 0.0;
    for (std::size_t g = 0; g < params.weights.size(); ++g) {
        const double var = 1.0 / params.precisions[g];
        p += params.weights[g] * std::exp(-0.5 * h * h / var) /
             std::sqrt(2.0 * kPi * var);
    }
    return p;
}

Eigen::MatrixXd sample_gm_channel(const GmParams& params, int k, int m,
                                  std::mt19937_64& rng) {
    params.validate();
    std::discrete_distribution<int> comp(params.weights.begin(),
                                         params.weights.end());
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd h(k, m);
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < m; ++c) {
            const int g = comp(rng);
            h(r, c) = gauss(rng) / std::sqrt(params.precisions[g]);
        }
    return h;
}

Eigen::MatrixXcd one_ring_covariance(int m, double azimuth,
                                     double angular_spread, int quad_points) {
    if (!(angular_spread > 0.0))
        throw std::invalid_argument("one_ring_covariance: spread must be > 0");
    if (quad_points < 1)
        throw std::invalid_argument("one_ring_covariance: need >= 1 point");
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(m, m);
    const double lo = azimuth - angular_spread;
    const double h = 2.0 * angular_spread / quad_points;
    Eigen::VectorXcd steer(m);
    for (int q = 0; q < quad_points; ++q) {
        const double phi = lo + (q + 0.5) * h;
        const double s = std::sin(phi);
        for (int i = 0; i < m; ++i)
            steer(i) = std::polar(1.0, kPi * i * s);
        r.noalias() += steer * steer.adjoint();
    }
    r /= static_cast<double>(quad_points);
    r *= static_cast<double>(m) / r.real().trace();
    return r;
}

Eigen::MatrixXcd virtual_basis(const Eigen::MatrixXcd& cov, VirtualBasis kind) {
    const int m = static_cast<int>(cov.rows());
    if (kind == VirtualBasis::kDft) {
        Eigen::MatrixXcd f(m, m);
        const double scale = 1.0 / std::sqrt(static_cast<double>(m));
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c)
                f(r, c) = std::polar(scale, -2.0 * kPi * r * c / m);
        return f;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(cov);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("virtual_basis: eigendecomposition failed");
    return es.eigenvectors();
}

Eigen::VectorXd sample_one_ring_virtual(const Eigen::MatrixXcd& cov,
                                        const Eigen::MatrixXcd& basis,
                                        std::mt19937_64& rng) {
    const int m = static_cast<int>(cov.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(cov);
    if (es.info() != Eigen::Success)
        throw std::invalid_argument("sample_one_ring_virtual: not decomposable");
    Eigen::VectorXd evals = es.eigenvalues();
    if ((evals.array() < -1e-8 * evals.cwiseAbs().maxCoeff()).any())
        throw std::invalid_argument("sample_one_ring_virtual: covariance not PSD");
    evals = evals.cwiseMax(0.0);

    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXcd z(m);
    for (int i = 0; i < m; ++i)
        z(i) = std::complex<double>(gauss(rng), gauss(rng)) *
               std::sqrt(evals(i));
    const Eigen::VectorXcd h_spatial = es.eigenvectors() * z;
    const Eigen::VectorXcd v = basis.adjoint() * h_spatial;

    Eigen::VectorXd out(2 * m);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    out.head(m) = v.real() * inv_sqrt2;
    out.tail(m) = v.imag() * inv_sqrt2;
    return out;
}

Eigen::VectorXd sample_one_ring_virtual(const Eigen::MatrixXcd& cov,
                                        std::mt19937_64& rng) {
    return sample_one_ring_virtual(cov, virtual_basis(cov, VirtualBasis::kEigen),
                                   rng);
}

Observation synthesize_observation(const sparc::Codebook& cb,
                                   const Eigen::MatrixXd& x,
                                   const Eigen::MatrixXd& h, double sigma2,
                                   std::mt19937_64& rng) {
    if (x.rows() != cb.a.cols() || x.cols() != h.rows())
        throw std::invalid_argument("synthesize_observation: dimension mismatch");
    if (sigma2 < 0.0)
        throw std::invalid_argument("synthesize_observation: sigma2 < 0");
    Observation obs;
    obs.noise_var = sigma2;
    obs.y.noalias() = cb.a * x * h;
    if (sigma2 > 0.0) {
        std::normal_distribution<double> gauss(0.0, std::sqrt(sigma2));
        for (Eigen::Index c = 0; c < obs.y.cols(); ++c)
            for (Eigen::Index r = 0; r < obs.y.rows(); ++r)
                obs.y(r, c) += gauss(rng);
    }
    return obs;
}

}  // namespace tlmp::channel
