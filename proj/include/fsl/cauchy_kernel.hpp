#pragma once

#include <vector>

#include "fsl/common.hpp"

namespace fsl {

struct KernelParams {
    double T0 = 1.0;  // cutoff time: q = p on (0, T0], q = 0 beyond T0 + 1
    int K = 128;      // image-sum truncation for the cross-check
};

// Cauchy density on the line: (1/pi) t / (x^2 + t^2), t > 0.
double cauchy_density_line(double t, double x);

// Periodized kernel of e^{-t (-Delta)^{1/2}} on the torus, closed form
// sinh(2 pi t) / (cosh(2 pi t) - cos(2 pi x)). Requires t > 0.
double heat_kernel_torus(double t, double x);

// Image sum over |m| <= K of the line density plus the Euler-Maclaurin tail
// of the remaining images (integral from K + 1/2 and the first derivative term).
double heat_kernel_image_sum(double t, double x, int K = 128);

// Same sum without the tail estimate.
double heat_kernel_image_sum_raw(double t, double x, int K = 128);

double heat_kernel_dt(double t, double x);
double heat_kernel_dx(double t, double x);

// Mass of p(t, .) on the arc [a, b] of the torus, b - a in [0, 1].
double heat_kernel_mass(double t, double a, double b);

// H(t) = g(1-t) / (g(t) + g(1-t)); 1 for t <= 0, 0 for t >= 1.
double cutoff_H(double t);
double cutoff_H_prime(double t);

// q(t, x) = p(t, x) H(t - T0) for t > 0, 0 otherwise.
double truncated_kernel_q(double t, double x, const KernelParams& prm = {});

// Fourier coefficient in x of q(t, .): e^{-2 pi |k| t} H(t - T0) for t > 0.
double truncated_kernel_mode(int k, double t, const KernelParams& prm = {});

struct KernelBoundReport {
    // maxima over a log-spaced scan t in [t_min, 1], |x| in [1e-4, 1/2]
    double c_value = 0;       // max p ||z|| / (1 + ||z||)
    double c_grad = 0;        // max (|d_t p| + |d_x p|) ||z||, finite differences
    double c_dx_grad = 0;     // max |d_x p| ||z||, finite differences
    double c_grad_sq = 0;     // max (|d_t p| + |d_x p|) ||z||^2
    double c_dx_grad_fine = 0;  // c_dx_grad on a scan with twice the points per axis
    double fd_vs_exact = 0;   // max relative gap between FD and closed-form gradients
    std::vector<int> annulus_levels;
    std::vector<double> annulus_sup;  // sup of p over {t > 0, 1/2 < 4^n (t^2 + x^2) < 2}
    double annulus_slope = 0;         // fitted log2 slope of annulus_sup against n
};

KernelBoundReport kernel_bound_check(const KernelParams& prm = {}, int n_t = 40, int n_x = 40,
                                     double t_min = 1e-3);

}  // namespace fsl
