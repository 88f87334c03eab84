#include <cmath>

#include "doctest.h"
#include "fsl/gmc.hpp"
#include "oracles.hpp"
#include "fsl/noise_field.hpp"
#include "fsl/torus_spectral.hpp"

using namespace fsl;

namespace {

// I_k(tau) by brute quadrature of q_k(s) q_k(s + tau) over the support of q_k.
double Ik_oracle(const KernelParams& prm, int k, double tau) {
    tau = std::abs(tau);
    double hi = prm.T0 + 1.0 - tau;
    if (hi <= 0) return 0.0;
    return integrate_gl([&](double s) { return truncated_kernel_mode(k, s, prm) * truncated_kernel_mode(k, s + tau, prm); },
                        0.0, hi, 400, 20);
}

}  // namespace

TEST_CASE("mollifier is a symmetric probability density on its box") {
    for (const Mollifier& m : {mollifier_rho(), mollifier_theta()}) {
        double s = m.s0();
        double tot = integrate_gl([&](double t) { return integrate_gl([&](double x) { return m.value(t, x); }, -0.25, 0.25, 16, 20); },
                                  -s, s, 16, 20);
        CHECK(std::abs(tot - 1.0) < 1e-8);
        CHECK(m.value(0.3 * s, 0.1) == doctest::Approx(m.value(-0.3 * s, -0.1)).epsilon(1e-14));
        CHECK(m.value(s * 1.0001, 0) == 0.0);
        CHECK(m.value(0, 0.2501) == 0.0);
        CHECK(m.space_ft(0) == doctest::Approx(1.0).epsilon(1e-12));
        double e = 1.0 / 8;
        double tot_e = integrate_gl(
            [&](double t) { return integrate_gl([&](double x) { return m.value_scaled(t, x, e); }, -e / 4, e / 4, 8, 20); },
            -e * s, e * s, 8, 20);
        CHECK(std::abs(tot_e - 1.0) < 1e-8);
    }
}

TEST_CASE("time cross-correlation of profiles is a density") {
    Mollifier r = mollifier_rho(), th = mollifier_theta();
    double e1 = 0.1, e2 = 0.05;
    double U = e1 * r.s0() + e2 * th.s0();
    double tot = integrate_gl([&](double u) { return Mollifier::time_cross(r, e1, th, e2, u); }, -U, U, 16, 20);
    CHECK(std::abs(tot - 1.0) < 1e-9);
    CHECK(Mollifier::time_cross(r, e1, th, e2, U * 1.001) == 0.0);
}

TEST_CASE("white noise pairing isometry, centering and independence") {
    auto g = make_grid(64, 1.0 / 64, -0.25, 0.25);
    std::vector<TestFunction> fs;
    for (int b = 0; b < 5; ++b)
        fs.push_back(scale_test_function(standard_bump(0.15 * b), 1.0, {0.0, -0.3 + 0.15 * b}));
    const int n = 2000;
    std::vector<std::vector<double>> vals(fs.size(), std::vector<double>(n));
    for (int s = 0; s < n; ++s) {
        auto xi = sample_white_noise(g, static_cast<std::uint64_t>(s));
        for (size_t b = 0; b < fs.size(); ++b) vals[b][static_cast<size_t>(s)] = pair_field(xi.field, fs[b]);
    }
    for (size_t b = 0; b < fs.size(); ++b) {
        // oracle: Riemann sum of f^2 on the same cells is what the grid pairing reproduces
        double l2 = l2_norm_sq(fs[b], 600);
        auto ms = mean_stderr(vals[b]);
        double var = 0;
        for (double v : vals[b]) var += (v - ms.mean) * (v - ms.mean);
        var /= (n - 1);
        CHECK(var / l2 > 0.9);
        CHECK(var / l2 < 1.1);
        CHECK(std::abs(ms.mean) < 3 * ms.stderr_);
    }
    // f at x = -0.3 and x = 0.3 have disjoint supports
    std::vector<double> prod(n);
    for (int s = 0; s < n; ++s) prod[static_cast<size_t>(s)] = vals[0][static_cast<size_t>(s)] * vals[4][static_cast<size_t>(s)];
    auto pc = mean_stderr(prod);
    CHECK(std::abs(pc.mean) < 3 * pc.stderr_);
    // determinism
    auto a = sample_white_noise(g, 11), b = sample_white_noise(g, 11);
    CHECK(a.field.values == b.field.values);
}

TEST_CASE("scaling operator") {
    TestFunction f = standard_bump(0.3);
    auto id = scale_test_function(f, 1.0, {0, 0});
    CHECK(id(0.05, -0.07) == f(0.05, -0.07));
    auto s = scale_test_function(f, 1.0 / 8, {0.2, -0.1});
    CHECK(std::abs(integrate_test_function(s, 800) - integrate_test_function(f, 800)) < 1e-6);
    Point z{0.1, 0.1}, zp{0.05, -0.05};
    auto two = scale_test_function(scale_test_function(f, 0.5, zp), 0.5, z);
    auto one = scale_test_function(f, 0.25, {z.t + 0.5 * zp.t, z.x + 0.5 * zp.x});
    double worst = 0;
    for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 40; ++j) {
            double t = 0.005 * i, x = 0.0025 * j;
            worst = std::max(worst, std::abs(two(t, x) - one(t, x)));
        }
    CHECK(worst < 1e-12);
    CHECK_THROWS_AS(scale_test_function(f, 0.0, z), std::invalid_argument);
    CHECK_THROWS_AS(scale_test_function(f, 1.5, z), std::invalid_argument);
}

TEST_CASE("mollified noise: normalization, variance, resolution guard") {
    Mollifier r = mollifier_rho();
    auto g = make_grid(128, 1.0 / 128, -0.1, 0.1);
    NoiseRealization c{make_field(g, 2.5), 0};
    auto out = mollify_noise(c, r, 1.0 / 8);
    double worst = 0;
    for (double v : out.values) worst = std::max(worst, std::abs(v - 2.5));
    CHECK(worst < 1e-12);
    const double eps = 1.0 / 8;
    const int n = 500;
    std::vector<double> v0(n);
    for (int s = 0; s < n; ++s) {
        auto xi = sample_white_noise(g, 100 + static_cast<std::uint64_t>(s));
        auto m = mollify_noise(xi, r, eps);
        v0[static_cast<size_t>(s)] = m.at(m.grid.index_of(0.0), 64);
    }
    double var = 0;
    for (double v : v0) var += v * v;
    var /= n;
    double target = r.l2_norm_sq() / (eps * eps);
    CHECK(var / target > 0.9);
    CHECK(var / target < 1.1);
    auto ms = mean_stderr(v0);
    CHECK(std::abs(ms.mean) < 3 * ms.stderr_);
    CHECK_THROWS_AS(mollify_noise(c, r, 1.0 / 128), std::invalid_argument);
}

TEST_CASE("fused sampler agrees with the explicit grid pipeline") {
    Mollifier r = mollifier_rho();
    KernelParams prm;
    const double eps = 1.0 / 8;
    std::vector<double> rel;
    for (int n : {64, 256}) {
        double dt = 1.0 / n;
        FieldSampler s(n, dt, 0, 0.25, prm, {Channel{r, eps}}, {true, true, false});
        auto g = make_grid(n, dt, (s.noise_first() - 2) * dt, (s.noise_last() + 2) * dt);
        auto xi = sample_white_noise(g, 7);
        auto a = s.from_noise(xi);
        auto m = mollify_noise(xi, r, eps);
        auto v2 = gaussian_field_v(prm, m);
        const auto& w = s.window();
        double dxi = 0, d = 0, nrm = 0;
        for (long i = 0; i < w.n_t; ++i)
            for (int j = 0; j < n; ++j) {
                dxi = std::max(dxi, std::abs(a[0].xi.at(i, j) - m.at(m.grid.index_of(w.t(i)), j)));
                double u = a[0].v.at(i, j), u2 = v2.at(v2.grid.index_of(w.t(i)), j);
                d += (u - u2) * (u - u2);
                nrm += u * u;
            }
        CHECK(dxi < 1e-10);
        rel.push_back(std::sqrt(d / nrm));
    }
    CHECK(rel[1] < rel[0] / 4);
    CHECK(rel[1] < 5e-3);
    NoiseRealization zero{make_field(make_grid(64, 1.0 / 64, -3, 1)), 0};
    auto vz = gaussian_field_v(prm, zero.field);
    for (double v : vz.values) CHECK(v == 0.0);
    CHECK_THROWS_AS(gaussian_field_v(prm, make_field(make_grid(64, 1.0 / 64, 0, 1))), std::invalid_argument);
}

TEST_CASE("sampler windows share noise and are deterministic") {
    Mollifier r = mollifier_rho();
    KernelParams prm;
    FieldSampler a(128, 1.0 / 128, 0.0, 0.5, prm, {Channel{r, 1.0 / 16}});
    FieldSampler b(128, 1.0 / 128, 0.25, 0.75, prm, {Channel{r, 1.0 / 16}});
    auto fa = a.sample(42), fb = b.sample(42), fa2 = a.sample(42);
    CHECK(fa[0].v.values == fa2[0].v.values);
    double worst = 0;
    for (long i = 0; i < fb[0].v.grid.n_t; ++i) {
        double t = fb[0].v.grid.t(i);
        if (t > 0.5 + 1e-12) break;
        long ia = fa[0].v.grid.index_of(t);
        for (int j = 0; j < 128; ++j) worst = std::max(worst, std::abs(fa[0].v.at(ia, j) - fb[0].v.at(i, j)));
    }
    CHECK(worst < 1e-11);
    auto neg = a.sample(42, true);
    CHECK(neg[0].v.at(3, 5) == doctest::Approx(-fa[0].v.at(3, 5)).epsilon(1e-13));
    // mode coefficients match the block generator
    cplx c = noise_coefficient(42, 128, 1.0 / 128, 3, -70);
    CHECK(std::isfinite(c.real()));
    CHECK(noise_coefficient(42, 128, 1.0 / 128, 0, 5).imag() == 0.0);
}

TEST_CASE("discrete variance of the sampler matches the analytic Q_eps(0)") {
    Mollifier r = mollifier_rho();
    KernelParams prm;
    CovarianceModel cm(prm);
    FieldSampler s(256, 1.0 / 256, 0, 0.1, prm, {Channel{r, 1.0 / 16}});
    CHECK(std::abs(s.discrete_variance(0) - cm.Q_mollified({0, 0}, r, 1.0 / 16)) < 1e-4);
}

TEST_CASE("covariance modes against brute quadrature") {
    KernelParams prm;
    CovarianceModel cm(prm);
    for (int k : {0, 1, 2, 5})
        for (double tau : {0.0, 0.2, 0.9, 1.0, 1.3, 1.99}) {
            double o = Ik_oracle(prm, k, tau);
            CHECK(std::abs(cm.Ik(k, tau) - o) < 1e-11);
            if (k != 0) {
                double lam = kTwoPi * k;
                CHECK(std::abs(cm.corr_k(k, tau) - (o - std::exp(-lam * tau) / (2 * lam))) < 1e-11);
            }
        }
    // away from t = 0 the mode sum converges fast and is an independent oracle
    for (Point z : {Point{0.3, 0.1}, Point{0.05, -0.4}, Point{1.2, 0.25}}) {
        double q = Ik_oracle(prm, 0, z.t);
        for (int k = 1; k < 200; ++k) {
            if (std::exp(-kTwoPi * k * z.t) < 1e-15) break;
            q += 2 * std::cos(kTwoPi * k * z.x) * Ik_oracle(prm, k, z.t);
        }
        CHECK(std::abs(cm.Q(z) - q) < 1e-9);
    }
}

TEST_CASE("covariance symmetry, support and log slope") {
    KernelParams prm;
    CovarianceModel cm(prm);
    for (Point z : {Point{0.01, 0.02}, Point{0.4, -0.3}, Point{1.5, 0.1}}) {
        CHECK(std::abs(cm.Q(z) - cm.Q({-z.t, -z.x})) < 1e-10);
        CHECK(std::abs(cm.Q(z) - cm.Q({z.t, -z.x})) < 1e-10);
    }
    CHECK(cm.Q({2.0, 0.1}) == 0.0);
    CHECK(cm.Q({3.5, 0.0}) == 0.0);
    CHECK_THROWS_AS(cm.Q({0, 0}), std::domain_error);
    std::vector<double> lx, ly;
    for (int i = 0; i <= 20; ++i) {
        double nz = std::pow(10.0, -3.0 + i / 20.0);
        for (double frac : {0.0, 0.3, 0.7, 1.0}) {
            Point z{frac * nz, (1 - frac) * nz};
            lx.push_back(std::log(1.0 / nz));
            ly.push_back(cm.Q(z));
        }
    }
    auto fit = linear_fit(lx, ly);
    CHECK(std::abs(fit.slope - 1.0 / kTwoPi) < 0.05 / kTwoPi);
}

TEST_CASE("mollified covariance against 2D physical-space quadrature") {
    KernelParams prm;
    CovarianceModel cm(prm);
    Mollifier r = mollifier_rho(), th = mollifier_theta();
    const double eps = 0.25;
    auto bb = [&](const Mollifier& m1, const Mollifier& m2, double x) {
        double lo = std::max(-eps / 4, x - eps / 4), hi = std::min(eps / 4, x + eps / 4);
        if (hi <= lo) return 0.0;
        return integrate_gl([&](double y) { return m1.space_profile(y / eps) * m2.space_profile((x - y) / eps) / (eps * eps); },
                            lo, hi, 8, 20);
    };
    for (auto [m1, m2] : {std::pair{&r, &r}, std::pair{&r, &th}}) {
        Point z{0.6, 0.3};
        double U = eps * (m1->s0() + m2->s0());
        double o = integrate_gl(
            [&](double u) {
                double c = Mollifier::time_cross(*m1, eps, *m2, eps, u);
                if (c == 0.0) return 0.0;
                return c * integrate_gl([&](double y) { return bb(*m1, *m2, y) * cm.Q({z.t - u, z.x - y}); }, -eps / 2,
                                        eps / 2, 8, 20);
            },
            -U, U, 8, 20);
        CHECK(std::abs(cm.Q_mollified(z, *m1, eps, *m2, eps) - o) < 1e-9);
    }
}

TEST_CASE("variance offsets settle and the rate ratio is bounded") {
    KernelParams prm;
    auto rows = variance_asymptotics(prm, {1.0 / 16, 1.0 / 32, 1.0 / 64});
    double d1 = std::abs(rows[1].offset - rows[0].offset), d2 = std::abs(rows[2].offset - rows[1].offset);
    CHECK(d2 < d1);
    CHECK(d2 / d1 < 0.4);
    CHECK_THROWS_AS(variance_asymptotics(prm, {1.0 / 32, 1.0 / 16}), std::invalid_argument);
    // lags scaled with eps, from 4 eps out to 16 eps, in several directions
    auto lags = [](double e) {
        std::vector<Point> zs;
        for (double s : {4.0, 8.0, 16.0})
            for (double f : {0.0, 0.5, 1.0}) zs.push_back({f * s * e, (1 - f) * s * e});
        return zs;
    };
    auto a = covariance_rate_check(prm, 1.0 / 32, lags(1.0 / 32)), b = covariance_rate_check(prm, 1.0 / 64, lags(1.0 / 64));
    CHECK(std::isfinite(a.max_ratio));
    // the ratio must not grow as eps halves; it actually decays like eps because the
    // first-order mollification error of the harmonic log part vanishes
    CHECK(b.max_ratio < 2.0 * a.max_ratio);
    CHECK(b.max_ratio < a.max_ratio);
    CHECK_THROWS_AS(covariance_rate_check(prm, 1.0 / 16, {{0.1, 0.0}}), std::invalid_argument);
}

TEST_CASE("variance offset limit against the physical-space quadrature") {
    KernelParams prm;
    for (const Mollifier& m : {mollifier_rho(), mollifier_theta()}) {
        double lim = variance_offset_limit(prm, m), ref = oracle::variance_offset_limit(prm, m);
        MESSAGE(m.name() << ": extrapolated " << lim << " quadrature " << ref);
        CHECK(std::abs(lim - ref) < 1e-6 * std::abs(ref));
    }
}

TEST_CASE("Monte Carlo covariance is consistent with the analytic value") {
    KernelParams prm;
    McConfig mc;
    mc.n_x = 128;
    mc.dt = 1.0 / 128;
    mc.n_samples = 300;
    auto est = covariance_mc(prm, {{0.05, 0.1}, {2.5, 0.0}}, 1.0 / 16, mc);
    for (const auto& e : est) CHECK(std::abs(e.estimate - e.analytic) < 3.5 * e.stderr_);
    CHECK(est[1].analytic == 0.0);
}

TEST_CASE("remainder channel closes the per-mode evolution identity") {
    // v_k(t + dt) - e^{-lambda dt} v_k(t) = int_0^dt e^{-lambda (dt - s)} (xi_eps + R)_k(t + s) ds,
    // right side by exact integration of the linear interpolant.
    Mollifier r = mollifier_rho();
    KernelParams prm;
    const int n = 64;
    std::vector<double> errs;
    double r_scale = 0;
    for (int fac : {4, 8}) {
        double dt = 1.0 / (n * fac);
        FieldSampler s(n, dt, 0, 0.1, prm, {Channel{r, 0.25}}, {true, true, true});
        auto f = s.sample(3);
        const auto& w = s.window();
        double err = 0, err_noR = 0;
        std::vector<cplx> v0(n), v1(n), a0(n), a1(n), b0(n), b1(n);
        for (long i = 0; i + 1 < w.n_t; ++i) {
            samples_to_coeffs(f[0].v.row(i), v0.data(), n);
            samples_to_coeffs(f[0].v.row(i + 1), v1.data(), n);
            samples_to_coeffs(f[0].xi.row(i), a0.data(), n);
            samples_to_coeffs(f[0].xi.row(i + 1), a1.data(), n);
            samples_to_coeffs(f[0].R.row(i), b0.data(), n);
            samples_to_coeffs(f[0].R.row(i + 1), b1.data(), n);
            for (int k = 0; k <= n / 2; ++k) {
                double x = kTwoPi * k * dt, E = std::exp(-x);
                double w0 = x < 1e-6 ? dt * 0.5 : dt * ((1 - E) / x - E) / x;
                double w1 = x < 1e-6 ? dt * 0.5 : dt * (1 - (1 - E) / x) / x;
                cplx lhs = v1[k] - E * v0[k];
                cplx xs = w0 * a0[k] + w1 * a1[k], rs = w0 * b0[k] + w1 * b1[k];
                err = std::max(err, std::abs(lhs - xs - rs) / dt);
                err_noR = std::max(err_noR, std::abs(lhs - xs) / dt);
                r_scale = std::max(r_scale, std::abs(b0[k]));
            }
        }
        errs.push_back(err);
        CHECK(err_noR > 10 * err);
    }
    CHECK(r_scale > 0.1);
    CHECK(errs[1] < errs[0] / 2.5);
    CHECK(errs[1] < 1e-2 * r_scale);
}
