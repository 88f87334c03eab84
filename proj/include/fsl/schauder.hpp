#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fsl/besov_wavelet.hpp"
#include "fsl/cauchy_kernel.hpp"
#include "fsl/noise_field.hpp"

namespace fsl {

// Kernel that is smooth except for jumps across the time slices in `breaks`.
struct PiecewiseKernel {
    std::function<double(double, double)> f;  // f(s, y), y unwrapped
    std::vector<double> breaks;                // jump times
    double s_lo = 0, s_hi = 0;                 // time support
    double y_c = 0, y_half = 0.5;              // spatial support [y_c - y_half, y_c + y_half]
    std::vector<double> y_kinks;               // torus points where f is only Lipschitz in y
};

struct PairingOptions {
    int order = 4;               // Gauss-Legendre points per cell and axis
    bool x_plus = false;         // pair with X restricted to t > 0
    bool require_decay = false;  // throw when the level terms do not decay
};

struct PairingResult {
    double value = 0;
    std::vector<int> levels;
    std::vector<double> level_terms;  // X(f phi_n(d)), d = time distance to the nearest jump
    std::vector<double> max_patch;    // max_k |X(f phi_n psi_n(. - k 2^{-(n+1)}))|
    double tail = 0;                  // levels finer than the grid, lumped into one piece
    double remainder = 0;             // X(f (1 - Upsilon(d)))
    double decay_slope = 0;           // fitted log2 slope of |level_terms|
    double partition_error = 0;       // max |sum of piece weights - 1| over quadrature nodes
};

// Finest level whose shells are at least one grid cell thick: 2^{-n}/16 >= max(dt, dx).
int resolved_level(const SpaceTimeGrid& g);

// X(f) for a cell-constant field X through the dyadic decomposition around the jump times:
// sum_n X(f phi_n) + X(f (1 - Upsilon)), each piece split into spatial patches psi_n.
PairingResult extended_pairing(const GridField& X, const PiecewiseKernel& f, const PairingOptions& opt = {});

// Plain cell-by-cell quadrature of the same integral, no decomposition.
double direct_pairing(const GridField& X, const PiecewiseKernel& f, bool x_plus = false, int order = 7);

struct QPlusResult {
    double value = 0;
    std::vector<int> levels;
    std::vector<double> level_terms;  // X+(q_z phi_n(||z - .||))
    double tail = 0;                  // X+(q_z Upsilon_{> n_res}), exact cell integrals
    double remainder = 0;             // X+(q_z (1 - Upsilon)), the part away from z
};

// u(z) = X+(q_{T0,z}) with q_{T0,z}(s, y) = q(t - s, x - y); needs t in [0, 1/4].
QPlusResult pair_q_plus(const GridField& X, const KernelParams& prm, Point z, int order = 4);

// Same quantity by exact spatial cell masses of q and Gauss-Legendre in time.
double pair_q_direct(const GridField& X, const KernelParams& prm, Point z);

struct SchauderConfig {
    int n_x = 256;
    double dt = 1.0 / 256;
    KernelParams prm{};
    int v = 3;                     // wavelet for synthetic fields
    int synth_n_min = 0;           // coarsest synthetic level; below L the functions are periodized
    int n_t_pts = 15, n_x_pts = 15;  // z lattice, square cells of side 1/64
    double t_min = 1.0 / 32, t_max = 0.25;
    double x_span = 15.0 / 64;       // x in [-x_span/2, x_span/2)
    double d_lo = 1e-2, d_hi = 0.25;
    int order = 3;
    bool direct = false;  // evaluate u by pair_q_direct instead of the decomposition
};

// Cell-constant field on [0, t_max] x T from random-sign wavelet coefficients 2^{-n(1+alpha)}
// on levels synth_n_min .. the finest level with four cells per unit.
GridField synthetic_field(double alpha, const SchauderConfig& cfg, std::uint64_t seed);

struct ExponentFit {
    double slope = 0, intercept = 0;
    long pairs = 0;  // pairs inside the distance window
    double max_ratio = 0;  // max |u(z) - u(z')| / ||z - z'||^{1 + alpha - kappa}
    std::vector<Point> z;
    std::vector<double> u;
};

// Slope of log|u(z) - u(z')| against log||z - z'|| over pairs of the z lattice with distance in
// [d_lo, d_hi]: pairs pooled per half-octave of distance (RMS increment), least squares over bins.
ExponentFit schauder_exponent(const GridField& X, const SchauderConfig& cfg, double alpha_nominal, double kappa);

// CSV columns t, x, u.
void write_u_csv(const std::string& path, const ExponentFit& fit);

}  // namespace fsl
