#pragma once

#include <Eigen/Dense>
#include <limits>
#include <random>
#include <vector>

#include "tlmp/bigamp.hpp"
#include "tlmp/dp_gm.hpp"
#include "tlmp/sparc.hpp"
#include "tlmp/vegamp.hpp"

namespace tlmp::engine {

enum class InitMode { kRandom, kNoisyOracle };

struct EngineConfig {
    double theta1 = 0.05;  // channel-equalization damping (start and cap)
    double theta2 = 0.05;  // decoding damping (start and cap)
    int t_max = 200;
    double eps = 1e-4;     // relative-change stop threshold
    bool adaptive_damping = false;
    InitMode init_mode = InitMode::kRandom;
    double init_snr_db = 0.0;  // noisy-oracle only
    dpgm::DpHyper dp_hyper;
    double sigma2 = 1e-2;

    void validate() const;
};

struct DecodeDiagnostics {
    std::vector<double> cost_trace;     // accepted iterations only
    int iterations_used = 0;
    std::vector<double> x_change_trace;
    int final_g = 0;
    double channel_nmse = std::numeric_limits<double>::quiet_NaN();
};

/// Everything one decode owns: the three message-passing states plus the
/// damping factors currently in force.
struct TlmpState {
    bigamp::EqualizerState eq;
    vegamp::DecoderState dec;
    dpgm::GmPosterior gm;
    double theta1 = 1.0;
    double theta2 = 1.0;
};

/// State initialization: random one-hot X(0), R(0) = A X(0), inflated scalar
/// variances, zeroed residual chain and the channel estimate per init_mode.
/// `h_truth` is required by the noisy-oracle mode.
TlmpState initialize(const EngineConfig& cfg, const sparc::Codebook& cb,
                     const Eigen::MatrixXd& y, int k_users,
                     const Eigen::MatrixXd* h_truth, std::mt19937_64& rng);

/// One full TLMP sweep: BiG-AMP block, Ve-GAMP block, VMP block.
void iterate_once(TlmpState& st, const Eigen::MatrixXd& y,
                  const sparc::Codebook& cb, const EngineConfig& cfg);

/// Variational cost of the current state (additive constant dropped):
/// Gaussian KL of the channel posterior vs the learned prior, categorical KL
/// of the section posteriors vs uniform, the beta/gamma/multinomial KLs of
/// the VMP factors, minus the Gaussian-surrogate expected log-likelihood.
double kl_cost(const TlmpState& st, const Eigen::MatrixXd& y,
               const sparc::Codebook& cb, const EngineConfig& cfg);

struct DampingDecision {
    double theta1 = 0.0;
    double theta2 = 0.0;
    bool rollback = false;
};

inline constexpr double kThetaFloor = 0.05;
inline constexpr double kThetaDecay = 0.8;
inline constexpr double kThetaGrow = 1.05;

/// Cost-monitoring rule: if the newest cost exceeds the previous one, decay
/// both factors by 0.8 (floored at 0.05) and request a rollback; otherwise
/// grow them by 1.05 up to the configured caps.
DampingDecision adapt_damping(const std::vector<double>& cost_trace,
                              double theta1, double theta2, double cap1,
                              double cap2);

/// True when the relative squared change of x_hat fell to eps or t >= t_max.
bool check_stop(const Eigen::MatrixXd& x_hat_now,
                const Eigen::MatrixXd& x_hat_prev, double eps, int t,
                int t_max);

struct DecodeResult {
    std::vector<sparc::MessageBits> messages;  // exactly K entries
    DecodeDiagnostics diagnostics;
};

/// Full decode: initialize, iterate with optional cost-rollback damping
/// adaptation, hard decisions, message assembly.
DecodeResult decode(const Eigen::MatrixXd& y, const sparc::Codebook& cb,
                    int k_users, const EngineConfig& cfg, std::mt19937_64& rng,
                    const Eigen::MatrixXd* h_truth = nullptr);

/// Accounting helper: B*K/(N + N0) with N0 the channel uses spent on the
/// rough channel estimate.
double spectral_efficiency(int b, int k, int n, int n0);

}  // namespace tlmp::engine
