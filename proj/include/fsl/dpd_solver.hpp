#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fsl/gmc.hpp"
#include "fsl/noise_field.hpp"
#include "fsl/torus_spectral.hpp"

namespace fsl {

enum class Nonlinearity { sinh, exp };

struct HolderOptions {
    long n_random = 100000;  // stratified random pairs on top of the dyadic offsets
    std::uint64_t seed = 0x401DE5;
};

struct SolverConfig {
    double gamma = 0.4431134627263791;  // sqrt(pi / 16)
    double alpha = -0.4;
    double kappa = 0.05;
    KernelParams prm{};
    double eps = 1.0 / 16;
    Mollifier mollifier = mollifier_rho();
    int n_x = 256;
    double dt = 1.0 / 256;
    double T = 1.0 / 8;
    std::vector<double> u0;  // samples on the n_x torus grid; empty means 0
    int max_iter = 60;
    double tol = 1e-8;
    Nonlinearity mode = Nonlinearity::sinh;
    double halve_ratio = 0.9;  // two consecutive ratios above this halve T
    HolderOptions holder{};

    double beta() const { return alpha + 1 - 2 * kappa; }
};

// Throws std::invalid_argument naming the violated constraint. gamma = 0 skips the
// alpha < alpha_gamma bound (alpha_gamma needs gamma != 0).
void validate(const SolverConfig& cfg);

// Fields of one noise realization on the solver grid [0, T].
struct NoiseFields {
    GridField v, xi, R;  // v_eps, xi_eps, remainder by the kernel route
    double q_eps0 = 0;   // exact variance of the sampled v
};

NoiseFields sample_noise_fields(const SolverConfig& cfg, std::uint64_t seed, bool negate = false);

// Right-hand side of the fixed-point map.
struct Forcing {
    GridField X_plus, X_minus;  // GMC weights for +gamma and -gamma (X_minus unused in exp mode)
    GridField R;
};

Forcing make_forcing(const SolverConfig& cfg, const NoiseFields& nf);

struct RemainderCheck {
    GridField R_ops;     // d_t v + (-Delta)^{1/2} v - xi_eps with 8th-order differences in time
    GridField R_kernel;  // int h(t - s) xi_eps(s) ds, h = (d_t + (-Delta)^{1/2})(q - p)
    double rel_l2 = 0;   // ||R_ops - R_kernel|| / ||R_kernel||
};

// Both routes from one noise, sampled on a time grid refined to eps / 128 or finer and reported on
// the solver grid; throws std::runtime_error when rel_l2 > tol.
RemainderCheck remainder_R(const SolverConfig& cfg, std::uint64_t seed, double tol = 0.05);
// Same check driven by a given white noise on remainder_noise_grid(cfg).
RemainderCheck remainder_R(const SolverConfig& cfg, const NoiseRealization& xi, double tol = 0.05);
int remainder_refinement(const SolverConfig& cfg);  // solver dt / check dt
SpaceTimeGrid remainder_noise_grid(const SolverConfig& cfg);

// Psi(w)(t) = P_t u0 - int_0^t P_{t-s} [N(s) + R(s)] ds with N = X_+ e^{gamma w} (exp) or
// (X_+ e^{gamma w} - X_- e^{-gamma w}) / 2 (sinh). Each Fourier mode integrates the semigroup
// exactly against the piecewise linear interpolant of N + R in time.
GridField psi_map(const SolverConfig& cfg, const Forcing& F, const GridField& w);

// P_t u0 on the solver grid.
GridField semigroup_apply(const SolverConfig& cfg, double T);

struct SolutionBundle {
    GridField w, u;
    int iterations = 0;             // number of Psi applications to reach the returned iterate
    std::vector<double> residuals;  // ||Psi(w_k) - w_k||_{C^beta} per step of the final horizon
    std::vector<double> ratios;     // residuals[k] / residuals[k - 1]
    std::vector<double> norms;      // ||w_k||_{C^beta}
    double final_residual = 0;
    double tau_used = 0;
    int halvings = 0;
    double ball_B = 0;        // 2 max(||w_0||, ||Psi(w_0)||) at the start of the final horizon
    int ball_violations = 0;  // steps with ||w_k|| <= B < ||Psi(w_k)||
};

// Picard iteration from w_0 = P_t u0; halves T when the ratio stalls above halve_ratio twice in a
// row, the iterates blow up, or max_iter is reached. Throws std::runtime_error once T is below
// four time steps.
SolutionBundle picard_solve(const SolverConfig& cfg, const Forcing& F);

// Samples the fields, solves for w and sets u = v + w.
SolutionBundle full_solution(const SolverConfig& cfg, std::uint64_t seed, bool negate = false);
SolutionBundle full_solution(const SolverConfig& cfg, const NoiseFields& nf);

// Pairings of d_t u + (-Delta)^{1/2} u + N(u) - xi_eps against bumps in time times cos/sin
// modes 0..4 in space, the time derivative moved onto the test function.
struct WeakResidual {
    std::vector<double> residual;
    std::vector<double> scale;  // sum of the absolute term pairings
    double worst_relative = 0;
};

WeakResidual weak_residual(const SolverConfig& cfg, const NoiseFields& nf, const SolutionBundle& sol);

struct EpsStudyRow {
    std::uint64_t seed = 0;
    std::vector<double> eps;
    std::vector<double> dist;  // ||w_{eps_k} - w_{eps_{k+1}}||_{C^beta([0, tau])}
    bool decreasing = false;
    double swap_dist = 0;  // ||w^rho - w^theta|| at swap_eps
    double tau = 0;
};

// Coupled noise across eps (one sampler, several channels).
std::vector<EpsStudyRow> eps_convergence_study(const SolverConfig& base, const std::vector<double>& eps_list,
                                               const std::vector<std::uint64_t>& seeds, double swap_eps = 1.0 / 32,
                                               const Mollifier& alt = mollifier_theta());

// Grid Holder quantities on [grid.t_min, grid.t_max] x T with distance |dt| + d_T(dx). The
// seminorm is the sup of quotients over all pairs at dyadic lattice offsets plus n_random pairs
// drawn evenly across distance octaves.
double sup_norm(const GridField& f);
double holder_seminorm(const GridField& f, double b, const HolderOptions& opt = {});
double holder_norm(const GridField& f, double b, const HolderOptions& opt = {});

struct BoundCheck {
    double lhs = 0, rhs = 0;
    bool holds() const { return lhs <= rhs * (1 + 1e-12) + 1e-300; }
};

// [e^{gamma f}]_b <= e^{|gamma| |f|_inf} |gamma| [f]_b.
BoundCheck exp_holder_bound(const GridField& f, double gamma, double b, const HolderOptions& opt = {});
// |f|_inf <= |f(0, .)|_inf + T^b [f]_b on [0, T], T = extent of the grid.
BoundCheck linf_bound(const GridField& f, double b, const HolderOptions& opt = {});
// f(0) = g(0) = J: [e^{gamma f} - e^{gamma g}]_b <= A0 e^{4 |gamma| A1} [f - g]_b with
// A0 = (1 + 2 T^b) |gamma| and A1 = |J|_inf + T^b ([f]_b + [g]_b).
BoundCheck exp_lipschitz_bound(const GridField& f, const GridField& g, double gamma, double b,
                               const HolderOptions& opt = {});

// CSV columns t, x, w, u.
void write_solution_csv(const std::string& path, const SolutionBundle& sol);

}  // namespace fsl
