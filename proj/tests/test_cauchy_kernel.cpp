#include <cmath>

#include "doctest.h"
#include "fsl/cauchy_kernel.hpp"
#include "fsl/common.hpp"

using namespace fsl;

TEST_CASE("closed form agrees with the image sum") {
    double worst = 0;
    for (double t : {0.01, 0.03, 0.1, 0.5, 1.0, 2.0})
        for (int j = 0; j < 64; ++j) {
            double x = -0.5 + j / 64.0;
            double a = heat_kernel_torus(t, x), b = heat_kernel_image_sum(t, x, 128);
            worst = std::max(worst, std::abs(a - b));
        }
    CHECK(worst < 1e-8);
    // without the tail the truncation error is visible at large t
    CHECK(std::abs(heat_kernel_image_sum_raw(2.0, 0.1, 128) - heat_kernel_torus(2.0, 0.1)) > 1e-3);
}

TEST_CASE("unit mass and positivity") {
    for (double t : {0.02, 0.2, 1.5}) {
        double s = 0;
        int n = 8192;
        for (int j = 0; j < n; ++j) {
            double v = heat_kernel_torus(t, -0.5 + (j + 0.5) / n);
            CHECK(v > 0);
            s += v / n;
        }
        CHECK(std::abs(s - 1.0) < 1e-10);
        CHECK(std::abs(heat_kernel_mass(t, -0.5, 0.5) - 1.0) < 1e-14);
    }
}

TEST_CASE("arc mass matches quadrature, including wrap-around") {
    for (double t : {0.003, 0.05, 0.7})
        for (auto [a, b] : {std::pair{-0.1, 0.2}, std::pair{0.4, 0.6}, std::pair{-0.7, -0.45}}) {
            double q = integrate_gl([t](double x) { return heat_kernel_torus(t, x); }, a, b, 400, 20);
            CHECK(std::abs(heat_kernel_mass(t, a, b) - q) < 1e-11);
        }
}

TEST_CASE("Chapman-Kolmogorov by periodic trapezoid") {
    int n = 4096;
    for (auto [s, t] : {std::pair{0.05, 0.07}, std::pair{0.3, 0.2}}) {
        for (double x : {0.0, 0.17, -0.41}) {
            double c = 0;
            for (int j = 0; j < n; ++j) {
                double y = -0.5 + static_cast<double>(j) / n;
                c += heat_kernel_torus(s, x - y) * heat_kernel_torus(t, y) / n;
            }
            CHECK(std::abs(c - heat_kernel_torus(s + t, x)) < 1e-8);
        }
    }
}

TEST_CASE("cutoff profile") {
    CHECK(cutoff_H(-0.5) == 1.0);
    CHECK(cutoff_H(1.5) == 0.0);
    CHECK(std::abs(cutoff_H(0.5) - 0.5) < 1e-15);
    double prev = 1.0;
    for (int i = 1; i < 100; ++i) {
        double h = cutoff_H(i / 100.0);
        CHECK(h <= prev);
        CHECK(std::abs(h + cutoff_H(1.0 - i / 100.0) - 1.0) < 1e-14);
        double d = (cutoff_H(i / 100.0 + 1e-6) - cutoff_H(i / 100.0 - 1e-6)) / 2e-6;
        CHECK(std::abs(d - cutoff_H_prime(i / 100.0)) < 1e-6);
        prev = h;
    }
}

TEST_CASE("truncated kernel q") {
    KernelParams prm;
    CHECK(truncated_kernel_q(-0.1, 0.2, prm) == 0.0);
    CHECK(truncated_kernel_q(2.5, 0.2, prm) == 0.0);
    CHECK(truncated_kernel_q(0.7, 0.2, prm) == heat_kernel_torus(0.7, 0.2));
    CHECK(truncated_kernel_mode(3, 0.2, prm) == doctest::Approx(std::exp(-kTwoPi * 0.6)));
    CHECK_THROWS_AS(heat_kernel_torus(0.0, 0.1), std::domain_error);
}

TEST_CASE("closed-form derivatives vs finite differences") {
    for (double t : {0.004, 0.05, 0.6})
        for (double x : {0.001, -0.03, 0.2}) {
            double h = 1e-3 * std::min(t, std::abs(x));
            double dt = (heat_kernel_torus(t + h, x) - heat_kernel_torus(t - h, x)) / (2 * h);
            double dx = (heat_kernel_torus(t, x + h) - heat_kernel_torus(t, x - h)) / (2 * h);
            CHECK(heat_kernel_dt(t, x) == doctest::Approx(dt).epsilon(1e-5));
            CHECK(heat_kernel_dx(t, x) == doctest::Approx(dx).epsilon(1e-5));
        }
}

TEST_CASE("kernel bounds") {
    auto rep = kernel_bound_check();
    CHECK(std::isfinite(rep.c_value));
    CHECK(rep.c_value < 1.0);
    CHECK(std::abs(rep.c_dx_grad_fine - rep.c_dx_grad) < 0.1 * rep.c_dx_grad);
    CHECK(rep.c_grad_sq < 10.0);
    CHECK(rep.annulus_slope > 0.8);
    CHECK(rep.annulus_slope < 1.2);
    CHECK(rep.fd_vs_exact < 2e-2);
}
