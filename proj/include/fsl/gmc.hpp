#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fsl/noise_field.hpp"

namespace fsl {

struct GmcSample {
    double gamma = 0;
    double eps = 0;
    GridField weights;  // exp(gamma v - gamma^2/2 Q_eps(0))
    std::uint64_t seed = 0;
};

GmcSample gmc_weights(const GridField& v, double gamma, double q_eps0, double eps = 0, std::uint64_t seed = 0);

// lim_{eps->0} Q_eps(0) - (1/2pi) ln(1/eps), by Richardson extrapolation of two offsets
// (the offsets converge at rate eps^2).
double variance_offset_limit(const KernelParams& prm, const Mollifier& m = mollifier_rho(), double eps = 1.0 / 64);

// A(rho) eps^{gamma^2/4pi} e^{gamma v} divided by the Wick form, with A(rho) = exp(-gamma^2 c / 2)
// and c the offset limit. Deterministic; tends to 1 as eps -> 0.
double normalization_ratio(const KernelParams& prm, double gamma, double eps, double offset_limit,
                           const Mollifier& m = mollifier_rho());

// Quadrature of the weights against S^delta_z f.
double pair(const GmcSample& X, const TestFunction& f, double delta, Point z);

struct GmcConfig {
    int n_x = 256;
    double dt = 1.0 / 256;
    double eps = 1.0 / 16;
    KernelParams prm{};
    long n_samples = 2000;
    std::uint64_t seed = 1;
    int replicas = 4;  // test-function centres spread along x within each realization
    int bootstrap = 400;
};

struct MomentFit {
    int p = 1;
    double gamma = 0;
    double eps = 0;
    std::vector<double> deltas;
    std::vector<double> moment;  // E |<X, S^delta f>|^p
    std::vector<double> stderr_;
    long n = 0;
    double slope = 0;  // d log moment / d log delta
    double ci_lo = 0, ci_hi = 0;
    double bound = 0;  // -p(p-1) gamma^2 / 4pi
};

MomentFit moment_scaling(double gamma, int p, const std::vector<double>& deltas, const GmcConfig& cfg,
                         const TestFunction& f = standard_bump());

struct DiffEstimate {
    double estimate = 0;
    double stderr_ = 0;
    long n = 0;
};

// E |<X_eps - X_eps', S^delta f>|^2 with both fields built from the same noise.
DiffEstimate l2_cauchy(double gamma, double eps, double eps2, double delta, const TestFunction& f, const GmcConfig& cfg);

// E |<X^rho_eps - X^theta_eps, S^delta f>|^2 from one noise.
DiffEstimate mollifier_independence(double gamma, double eps, double delta, const TestFunction& f,
                                    const Mollifier& rho, const Mollifier& theta, const GmcConfig& cfg);

// E <X, S^delta f> per gamma, same seeds for every gamma.
struct MeanOneRow {
    double gamma = 0;
    double estimate = 0, stderr_ = 0, target = 0, variance = 0;
};
std::vector<MeanOneRow> mean_one_check(const std::vector<double>& gammas, double delta, const TestFunction& f,
                                       const GmcConfig& cfg);

struct PartitionEstimate {
    double estimate = 0;
    double stderr_ = 0;
    double ess = 0;  // (sum w)^2 / sum w^2
    long n = 0;
};

// Z(p, r) = int_{B(0,r)^p} prod_{i<j} ||z_j - z_i||^{-a} by uniform sampling on the l1 ball power.
PartitionEstimate partition_integral_mc(double a, int p, double r, long n_samples, std::uint64_t seed);

// CSV columns gamma, p, delta, eps, estimate, stderr, n.
void write_moment_csv(const std::string& path, const std::vector<MomentFit>& fits);

}  // namespace fsl
