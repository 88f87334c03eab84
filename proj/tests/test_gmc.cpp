#include <cmath>
#include <map>

#include "doctest.h"
#include "fsl/gmc.hpp"

using namespace fsl;

TEST_CASE("Wick weights") {
    auto g = make_grid(16, 1.0 / 16, 0, 0.5);
    GridField v = make_field(g, 0.7);
    auto X0 = gmc_weights(v, 0.0, 2.0);
    for (double w : X0.weights.values) CHECK(w == 1.0);
    auto X = gmc_weights(v, 0.5, 2.0);
    CHECK(X.weights.values[3] == doctest::Approx(std::exp(0.5 * 0.7 - 0.125 * 2.0)).epsilon(1e-15));
}

TEST_CASE("stencil pairing reproduces the integral and the direct pairing") {
    TestFunction f = standard_bump(0.2);
    for (auto [d, n] : {std::pair{0.25, 256}, std::pair{0.0625, 1024}}) {
        auto st = make_stencil(f, d, n, 1.0 / n);
        CHECK(std::abs(st.mass() - integrate_test_function(f, 1200)) < 1e-6);
    }
    auto g = make_grid(64, 1.0 / 64, -0.25, 0.25);
    auto xi = sample_white_noise(g, 5);
    auto st = make_stencil(f, 0.5, 64, 1.0 / 64);
    long ic = g.index_of(0.0);
    double a = apply_stencil(st, xi.field, ic, 40);
    double b = pair_field(xi.field, scale_test_function(f, 0.5, {0.0, g.x(40)}));
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
    GmcSample X{0.0, 0.0, make_field(g, 1.0), 0};
    CHECK(pair(X, f, 0.5, {0.0, 0.1}) == doctest::Approx(integrate_test_function(f, 1200)).epsilon(1e-6));
}

TEST_CASE("mean one across gamma, sign symmetry, and growing spread") {
    GmcConfig c;
    c.n_x = 128;
    c.dt = 1.0 / 128;
    c.n_samples = 800;
    double g1 = std::sqrt(kPi / 16), g2 = std::sqrt(kPi / 8);
    auto rows = mean_one_check({0.0, g1, -g1, g2, -g2}, 0.5, standard_bump(), c);
    for (const auto& r : rows) {
        if (r.gamma == 0.0) CHECK(r.estimate == doctest::Approx(r.target).epsilon(1e-12));
        else CHECK(std::abs(r.estimate - r.target) < 3 * r.stderr_);
    }
    CHECK(rows[3].variance > rows[1].variance);
    CHECK(rows[1].variance > rows[0].variance);
    CHECK(std::abs(rows[3].variance / rows[4].variance - 1.0) < 0.5);
}

TEST_CASE("second moment against the exact lattice expectation") {
    // E <X,phi>^2 = sum_ab w_a w_b exp(gamma^2 Q_eps(z_b - z_a)) on the same stencil
    GmcConfig c;
    c.n_x = 64;
    c.dt = 1.0 / 64;
    c.eps = 1.0 / 8;
    c.n_samples = 3000;
    c.replicas = 1;
    const double g2 = kPi / 8;
    TestFunction f = standard_bump();
    const double delta = 0.25;
    auto st = make_stencil(f, delta, c.n_x, c.dt);
    CovarianceModel cm(c.prm);
    Mollifier rho = mollifier_rho();
    std::map<std::pair<long, int>, double> Qtab;
    auto Qlat = [&](long di, int dj) {
        std::pair<long, int> key{std::abs(di), std::abs(dj)};  // Q is even in t and in x
        auto it = Qtab.find(key);
        if (it != Qtab.end()) return it->second;
        double q = cm.Q_mollified({key.first * c.dt, key.second / double(c.n_x)}, rho, c.eps);
        Qtab[key] = q;
        return q;
    };
    double exact = 0;
    for (size_t a = 0; a < st.w.size(); ++a)
        for (size_t b = 0; b < st.w.size(); ++b)
            exact += st.w[a] * st.w[b] * std::exp(g2 * Qlat(st.di[b] - st.di[a], st.dj[b] - st.dj[a]));
    FieldSampler smp(c.n_x, c.dt, -st.reach_t * c.dt, st.reach_t * c.dt, c.prm, {Channel{rho, c.eps}});
    const double q0 = cm.Q_mollified({0, 0}, rho, c.eps);
    long ic = smp.window().index_of(0.0);
    std::vector<double> m2(static_cast<size_t>(c.n_samples));
    for (long s = 0; s < c.n_samples; ++s) {
        auto X = gmc_weights(smp.sample(900 + static_cast<std::uint64_t>(s))[0].v, std::sqrt(g2), q0);
        double v = apply_stencil(st, X.weights, ic, 0);
        m2[static_cast<size_t>(s)] = v * v;
    }
    auto ms = mean_stderr(m2);
    CHECK(std::abs(ms.mean - exact) < 3 * ms.stderr_);
}

TEST_CASE("moment scaling preconditions and trivial cases") {
    GmcConfig c;
    c.n_x = 128;
    c.dt = 1.0 / 128;
    c.eps = 1.0 / 32;
    c.n_samples = 50;
    c.bootstrap = 50;
    double g = std::sqrt(kPi / 8);
    CHECK_THROWS_AS(moment_scaling(g, 0, {0.25, 0.125}, c), std::invalid_argument);
    CHECK_THROWS_AS(moment_scaling(g, 64, {0.25, 0.125}, c), std::invalid_argument);
    CHECK_THROWS_AS(moment_scaling(g, 2, {0.125, 0.25}, c), std::invalid_argument);
    CHECK_THROWS_AS(moment_scaling(g, 2, {0.25, 0.0625}, c), std::invalid_argument);  // below 8 eps
    CHECK_THROWS_AS(moment_scaling(g, 2, {0.5, 0.25}, c), std::invalid_argument);    // above 1/4
    c.eps = 1.0 / 64;
    CHECK_THROWS_AS(moment_scaling(g, 2, {0.25, 0.125}, c), std::invalid_argument);  // bump under-resolved
    c.n_x = 512;
    c.dt = 1.0 / 512;
    auto f0 = moment_scaling(0.0, 3, {0.25, 0.125}, c);
    CHECK(std::abs(f0.slope) < 2e-4);  // lattice quadrature of the bump, ~1e-5 relative per scale
    CHECK(f0.ci_hi - f0.ci_lo < 1e-9);
    CHECK(f0.bound == 0.0);
    auto f2 = moment_scaling(g, 2, {0.25, 0.125}, c);
    CHECK(f2.bound == doctest::Approx(-1.0 / 16));
    CHECK(f2.ci_lo <= f2.slope);
    CHECK(f2.slope <= f2.ci_hi);
    auto again = moment_scaling(g, 2, {0.25, 0.125}, c);
    CHECK(again.moment == f2.moment);
    CHECK(again.ci_lo == f2.ci_lo);
}

TEST_CASE("coupled differences: exact zeros and decay in eps") {
    GmcConfig c;
    c.n_x = 256;
    c.dt = 1.0 / 256;
    c.n_samples = 800;
    c.replicas = 8;
    double g = std::sqrt(kPi / 8);
    TestFunction f = standard_bump();
    CHECK(l2_cauchy(g, 1.0 / 16, 1.0 / 16, 0.5, f, c).estimate == 0.0);
    Mollifier r = mollifier_rho(), th = mollifier_theta();
    CHECK(mollifier_independence(g, 1.0 / 16, 0.5, f, r, r, c).estimate == 0.0);
    CHECK(mollifier_independence(0.0, 1.0 / 16, 0.5, f, r, th, c).estimate == 0.0);
    auto a = l2_cauchy(g, 1.0 / 8, 1.0 / 16, 0.5, f, c);
    auto b = l2_cauchy(g, 1.0 / 16, 1.0 / 32, 0.5, f, c);
    CHECK(a.estimate > 0);
    CHECK(b.estimate + 3 * std::hypot(a.stderr_, b.stderr_) < a.estimate);
    auto m1 = mollifier_independence(g, 1.0 / 8, 0.5, f, r, th, c);
    auto m2 = mollifier_independence(g, 1.0 / 32, 0.5, f, r, th, c);
    CHECK(m2.estimate + 3 * std::hypot(m1.stderr_, m2.stderr_) < m1.estimate);
    CHECK_THROWS_AS(l2_cauchy(g, 1.0 / 16, 1.0 / 8, 0.5, f, c), std::invalid_argument);
}

TEST_CASE("deterministic normalization tends to the Wick form") {
    KernelParams prm;
    double c = variance_offset_limit(prm);
    double g = std::sqrt(kPi / 8);
    double r1 = normalization_ratio(prm, g, 1.0 / 8, c), r2 = normalization_ratio(prm, g, 1.0 / 16, c),
           r3 = normalization_ratio(prm, g, 1.0 / 32, c);
    CHECK(std::abs(r2 - 1) < std::abs(r1 - 1));
    CHECK(std::abs(r3 - 1) < std::abs(r2 - 1));
    CHECK(std::abs(r3 - 1) < 1e-4);
}

TEST_CASE("truncated partition integral") {
    auto p1 = partition_integral_mc(1.0, 1, 0.25, 1000, 3);
    CHECK(p1.estimate == doctest::Approx(2 * 0.25 * 0.25).epsilon(1e-14));
    CHECK(p1.stderr_ == 0.0);
    auto p2 = partition_integral_mc(1.0, 2, 0.25, 20000, 3);
    CHECK(std::isfinite(p2.estimate));
    CHECK(p2.ess > 0.1 * p2.n);
    auto p2b = partition_integral_mc(1.0, 2, 0.25, 40000, 4);
    CHECK(std::abs(p2.estimate - p2b.estimate) < 3 * std::hypot(p2.stderr_, p2b.stderr_));
    CHECK_THROWS_AS(partition_integral_mc(1.0, 4, 0.25, 100, 1), std::invalid_argument);
    CHECK_THROWS_AS(partition_integral_mc(2.0, 1, 0.25, 100, 1), std::invalid_argument);
}
