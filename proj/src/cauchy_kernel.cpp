#include "fsl/cauchy_kernel.hpp"

#include <algorithm>

namespace fsl {

double cauchy_density_line(double t, double x) {
    if (!(t > 0)) throw std::domain_error("cauchy density needs t > 0");
    return t / (kPi * (x * x + t * t));
}

namespace {

struct KernelParts {
    double r, one_minus_r, num, den, s;
};

KernelParts parts(double t, double x) {
    KernelParts k{};
    k.r = std::exp(-kTwoPi * t);
    k.one_minus_r = -std::expm1(-kTwoPi * t);
    k.num = -std::expm1(-2.0 * kTwoPi * t);
    k.s = std::sin(kPi * wrap_torus(x));
    k.den = k.one_minus_r * k.one_minus_r + 4.0 * k.r * k.s * k.s;
    return k;
}

}  // namespace

double heat_kernel_torus(double t, double x) {
    if (!(t > 0)) throw std::domain_error("heat_kernel_torus needs t > 0");
    KernelParts k = parts(t, x);
    return k.num / k.den;
}

double heat_kernel_image_sum_raw(double t, double x, int K) {
    if (!(t > 0)) throw std::domain_error("image sum needs t > 0");
    require(K >= 1, "image sum needs K >= 1");
    double y = wrap_torus(x);
    double s = 0;
    for (int m = -K; m <= K; ++m) s += cauchy_density_line(t, y + m);
    return s;
}

double heat_kernel_image_sum(double t, double x, int K) {
    double y = wrap_torus(x);
    double s = heat_kernel_image_sum_raw(t, x, K);
    // sum_{m > K} f(m) ~ int_{K+1/2}^inf f + f'(K+1/2)/24, for both tails.
    for (double sgn : {1.0, -1.0}) {
        double a = K + 0.5 + sgn * y;  // distance of the first skipped image
        double integral = (0.5 * kPi - std::atan(a / t)) / kPi;
        double deriv = -2.0 * t * a / (kPi * (a * a + t * t) * (a * a + t * t));
        s += integral + deriv / 24.0;
    }
    return s;
}

double heat_kernel_dt(double t, double x) {
    if (!(t > 0)) throw std::domain_error("heat_kernel_dt needs t > 0");
    KernelParts k = parts(t, x);
    double dnum = 2.0 * kTwoPi * k.r * k.r;
    double dden = 2.0 * kTwoPi * k.r * k.one_minus_r - 4.0 * kTwoPi * k.r * k.s * k.s;
    return (dnum * k.den - k.num * dden) / (k.den * k.den);
}

double heat_kernel_dx(double t, double x) {
    if (!(t > 0)) throw std::domain_error("heat_kernel_dx needs t > 0");
    KernelParts k = parts(t, x);
    double dden = 2.0 * kTwoPi * k.r * std::sin(kTwoPi * wrap_torus(x));
    return -k.num * dden / (k.den * k.den);
}

namespace {

// antiderivative on (-1/2, 1/2): (1/pi) atan(coth(pi t) tan(pi x)), +-1/2 at the ends
double mass_cdf(double t, double x) {
    if (x >= 0.5) return 0.5;
    if (x <= -0.5) return -0.5;
    double c = 1.0 / std::tanh(kPi * t);
    return std::atan(c * std::tan(kPi * x)) / kPi;
}

}  // namespace

double heat_kernel_mass(double t, double a, double b) {
    if (!(t > 0)) throw std::domain_error("heat_kernel_mass needs t > 0");
    require(b >= a && b - a <= 1.0 + 1e-14, "heat_kernel_mass: need 0 <= b - a <= 1");
    if (b - a >= 1.0) return 1.0;
    double a0 = wrap_torus(a);
    double b0 = a0 + (b - a);
    if (b0 <= 0.5) return mass_cdf(t, b0) - mass_cdf(t, a0);
    return (0.5 - mass_cdf(t, a0)) + (mass_cdf(t, b0 - 1.0) + 0.5);
}

double cutoff_H(double t) {
    if (t <= 0) return 1.0;
    if (t >= 1) return 0.0;
    double a = bump_g(1.0 - t), b = bump_g(t);
    return a / (a + b);
}

double cutoff_H_prime(double t) {
    if (t <= 0 || t >= 1) return 0.0;
    double g0 = bump_g(t), g1 = bump_g(1.0 - t);
    double d = g0 + g1;
    return -g0 * g1 * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t))) / (d * d);
}

double truncated_kernel_q(double t, double x, const KernelParams& prm) {
    if (t <= 0) return 0.0;
    double h = cutoff_H(t - prm.T0);
    if (h == 0.0) return 0.0;
    return heat_kernel_torus(t, x) * h;
}

double truncated_kernel_mode(int k, double t, const KernelParams& prm) {
    if (t <= 0) return 0.0;
    return std::exp(-kTwoPi * std::abs(k) * t) * cutoff_H(t - prm.T0);
}

namespace {

struct ScanResult {
    double c_value = 0, c_grad = 0, c_dx = 0, c_grad_sq = 0, fd_gap = 0;
};

ScanResult scan(int n_t, int n_x, double t_min) {
    ScanResult s;
    for (int i = 0; i < n_t; ++i) {
        double t = t_min * std::pow(1.0 / t_min, static_cast<double>(i) / (n_t - 1));
        for (int j = -1; j < n_x; ++j) {
            double ax = j < 0 ? 0.0 : 1e-4 * std::pow(0.5e4, static_cast<double>(j) / (n_x - 1));
            for (double sx : {1.0, -1.0}) {
                double x = sx * ax;
                double h = std::min(1e-4, t / 10.0);
                double dt = (heat_kernel_torus(t + h, x) - heat_kernel_torus(t - h, x)) / (2 * h);
                double dx = (heat_kernel_torus(t, x + h) - heat_kernel_torus(t, x - h)) / (2 * h);
                double nz = st_norm({t, x});
                double g = std::abs(dt) + std::abs(dx);
                s.c_value = std::max(s.c_value, heat_kernel_torus(t, x) * nz / (1.0 + nz));
                s.c_grad = std::max(s.c_grad, g * nz);
                s.c_dx = std::max(s.c_dx, std::abs(dx) * nz);
                s.c_grad_sq = std::max(s.c_grad_sq, g * nz * nz);
                double ge = std::abs(heat_kernel_dt(t, x)) + std::abs(heat_kernel_dx(t, x));
                if (ge > 1e-8) s.fd_gap = std::max(s.fd_gap, std::abs(g - ge) / ge);
            }
        }
    }
    return s;
}

}  // namespace

KernelBoundReport kernel_bound_check(const KernelParams& prm, int n_t, int n_x, double t_min) {
    require(prm.T0 > 0, "kernel_bound_check: T0 must be positive");
    require(n_t >= 4 && n_x >= 4 && t_min > 0 && t_min < 1, "kernel_bound_check: bad scan parameters");
    KernelBoundReport rep;
    ScanResult a = scan(n_t, n_x, t_min);
    ScanResult b = scan(2 * n_t, 2 * n_x, t_min);
    rep.c_value = a.c_value;
    rep.c_grad = a.c_grad;
    rep.c_dx_grad = a.c_dx;
    rep.c_grad_sq = a.c_grad_sq;
    rep.c_dx_grad_fine = b.c_dx;
    rep.fd_vs_exact = std::max(a.fd_gap, b.fd_gap);
    std::vector<double> xs, ys;
    for (int n = 2; n <= 8; ++n) {
        // annulus 1/2 < 4^n (t^2 + x^2) < 2, t > 0
        double rho_lo = std::sqrt(0.5) * std::pow(2.0, -n), rho_hi = std::sqrt(2.0) * std::pow(2.0, -n);
        double sup = 0;
        for (int i = 0; i <= 32; ++i) {
            double rho = rho_lo + (rho_hi - rho_lo) * i / 32.0;
            for (int j = 1; j < 128; ++j) {
                double th = kPi * j / 128.0;
                double t = rho * std::sin(th), x = rho * std::cos(th);
                sup = std::max(sup, truncated_kernel_q(t, x, prm));
            }
        }
        rep.annulus_levels.push_back(n);
        rep.annulus_sup.push_back(sup);
        xs.push_back(n);
        ys.push_back(std::log2(sup));
    }
    rep.annulus_slope = linear_fit(xs, ys).slope;
    return rep;
}

}  // namespace fsl
