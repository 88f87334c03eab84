#include <boost/math/filters/daubechies.hpp>
#include <cmath>
#include <random>

#include "doctest.h"
#include "fsl/besov_wavelet.hpp"
#include "oracles.hpp"

using namespace fsl;
using oracle::table_inner;

namespace {

template <int P>
double filter_gap() {
    auto ref = boost::math::filters::daubechies_scaling_filter<double, P>();
    auto h = daubechies_filter(P);
    double fwd = 0, rev = 0;
    for (int k = 0; k < 2 * P; ++k) {
        fwd = std::max(fwd, std::abs(h[static_cast<size_t>(k)] - ref[static_cast<size_t>(k)]));
        rev = std::max(rev, std::abs(h[static_cast<size_t>(2 * P - 1 - k)] - ref[static_cast<size_t>(k)]));
    }
    return std::min(fwd, rev);
}

SpaceTimeGrid dyadic_grid(int nx, double T) { return make_grid(nx, 1.0 / nx, -T, T); }

}  // namespace

TEST_CASE("Daubechies filter matches the reference tables") {
    CHECK(filter_gap<2>() < 1e-12);
    CHECK(filter_gap<3>() < 1e-12);
    CHECK(filter_gap<4>() < 1e-12);
    CHECK(filter_gap<5>() < 1e-12);
    CHECK(filter_gap<6>() < 1e-12);
    for (int v = 2; v <= 6; ++v) {
        auto h = daubechies_filter(v);
        for (int l = 0; 2 * l < static_cast<int>(h.size()); ++l) {
            double s = 0;
            for (size_t k = 0; k + 2 * l < h.size(); ++k) s += h[k] * h[k + 2 * static_cast<size_t>(l)];
            CHECK(std::abs(s - (l == 0 ? 1.0 : 0.0)) < 1e-13);
        }
    }
    CHECK_THROWS_AS(daubechies_filter(1), std::invalid_argument);
}

TEST_CASE("cascade tables: orthonormality, moments, refinement, support") {
    for (int v : {3, 4}) {
        auto B = build_basis(v);
        const int S = B.support();
        CHECK((S << 0) < (1 << B.L));
        CHECK(S >= (1 << (B.L - 1)));
        auto phi = [&](long q) { return B.phi_dyadic(q, B.J); };
        auto psi = [&](long q) { return B.psi_dyadic(q, B.J); };
        double worst = 0;
        for (long k = -S; k <= S; ++k) {
            long sh = k << B.J;
            worst = std::max(worst, std::abs(table_inner(B, phi, phi, sh) - (k == 0 ? 1.0 : 0.0)));
            worst = std::max(worst, std::abs(table_inner(B, psi, psi, sh) - (k == 0 ? 1.0 : 0.0)));
            worst = std::max(worst, std::abs(table_inner(B, phi, psi, sh)));
        }
        CHECK(worst < 1e-6);
        for (int p = 0; p < v; ++p) {
            double mom = table_inner(B, [&](long q) { return std::pow(q * std::ldexp(1.0, -B.J), p) * psi(q); },
                                     [](long) { return 1.0; }, 0);
            CHECK(std::abs(mom) < 1e-6);
        }
        double refine = 0, pu = 0;
        for (long q = 0; q <= (static_cast<long>(S) << (B.J - 1)); ++q) {
            double s = 0;
            for (int k = 0; k <= S; ++k) s += B.a[static_cast<size_t>(k)] * B.phi_dyadic(2 * q - (static_cast<long>(k) << (B.J - 1)), B.J - 1);
            refine = std::max(refine, std::abs(B.phi_dyadic(q, B.J - 1) - s));
        }
        for (long q = 0; q < (1L << B.J); ++q) {
            double s = 0;
            for (int k = 0; k <= S; ++k) s += B.phi_dyadic(q + (static_cast<long>(k) << B.J), B.J);
            pu = std::max(pu, std::abs(s - 1.0));
        }
        CHECK(refine < 1e-8);
        CHECK(pu < 1e-10);
        CHECK(B.phi(-0.01) == 0.0);
        CHECK(B.psi(S + 0.01) == 0.0);
        CHECK(B.phi(0.5 * S) == doctest::Approx(B.phi_dyadic(S, 1)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(build_basis(3, 2), std::invalid_argument);
}

TEST_CASE("analysis of constants, single functions and white noise") {
    auto B = build_basis(3);
    auto g = dyadic_grid(512, 2.25);
    const double T1 = 0.5;
    // constant field: every detail coefficient vanishes
    auto c = analyze(make_field(g, 2.0), B, T1, 6);
    double det = 0;
    for (const auto& lv : c.levels)
        for (int io = 1; io < 4; ++io)
            for (double x : lv.c[io]) det = std::max(det, std::abs(x));
    CHECK(det < 1e-10);
    CHECK(c.get(0, 3, 0, 0) == doctest::Approx(2.0 * std::ldexp(1.0, -3)).epsilon(1e-10));
    // unit coefficient is recovered
    for (int io = 0; io < 4; ++io) {
        auto one = empty_table(B, T1, 3, 5);
        one.ref(io, 4, -3, 7) = 1.0;
        auto X = synthesize(one, B, g);
        auto back = analyze(X, B, T1, 5, 3);
        MESSAGE("unit coefficient recovered as " << back.get(io, 4, -3, 7));
        CHECK(std::abs(back.get(io, 4, -3, 7) - 1.0) < 1e-2);
        CHECK(std::abs(back.get(io, 4, -2, 7)) < 1e-2);
        CHECK(std::abs(back.get(io, 4, -3, 8)) < 1e-2);
    }
    // white noise: detail coefficients have unit variance at every resolved level
    auto xi = sample_white_noise(g, 11);
    auto cw = analyze(xi.field, B, T1, 6);
    for (int n = 3; n <= 6; ++n) {
        double ss = 0;
        size_t cnt = 0;
        for (int io = 1; io < 4; ++io)
            for (double x : cw.level(n).c[io]) {
                ss += x * x;
                ++cnt;
            }
        double var = ss / static_cast<double>(cnt);
        MESSAGE("level " << n << " variance " << var);
        CHECK(var > 0.8);
        CHECK(var < 1.25);
    }
    auto g2 = dyadic_grid(512, 0.5);
    CHECK_THROWS_AS(analyze(make_field(g2), B, T1, 6), std::invalid_argument);
    CHECK_THROWS_AS(analyze(make_field(g), B, T1, 8), std::invalid_argument);
    CHECK_THROWS_AS(analyze(make_field(make_grid(96, 1.0 / 96, -2.25, 2.25)), B, T1, 4), std::invalid_argument);
}

TEST_CASE("wavelet estimate: homogeneity, synthetic fields, admissibility") {
    auto B = build_basis(3);
    auto g = dyadic_grid(256, 2.25);
    auto xi = sample_white_noise(g, 4);
    auto c1 = analyze(xi.field, B, 0.5, 6);
    GridField X3 = xi.field;
    for (double& v : X3.values) v *= -3.0;
    auto c3 = analyze(X3, B, 0.5, 6);
    auto e1 = besov_norm_wavelet(c1, B, -0.6), e3 = besov_norm_wavelet(c3, B, -0.6);
    CHECK(e3.value == doctest::Approx(3 * e1.value).epsilon(1e-12));
    // white noise has regularity -1 - : the RMS profile at alpha = -1 is flat
    auto ew = besov_norm_wavelet(c1, B, -1.0);
    MESSAGE("white noise rms slope " << ew.rms_slope);
    CHECK(std::abs(ew.rms_slope) < 0.1);
    for (double alpha : {-0.4, -0.9}) {
        auto syn = synthetic_coefficients(B, alpha, 6, 0.5, 21);  // finest level: 8 cells per unit
        auto est = besov_norm_wavelet(syn, B, alpha);
        CHECK(est.value == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(est.rms_slope) < 1e-12);
        auto g5 = dyadic_grid(512, 2.25);
        auto back = besov_norm_wavelet(analyze(synthesize(syn, B, g5), B, 0.5, 6), B, alpha);
        MESSAGE("synthetic alpha " << alpha << " re-analysed " << back.value << " slope " << back.rms_slope);
        CHECK(std::abs(back.value - 1.0) < 0.1);
        CHECK(std::abs(back.rms_slope) < 0.05);
    }
    CHECK_THROWS_AS(besov_norm_wavelet(c1, B, -1.1), std::invalid_argument);
    CHECK_THROWS_AS(besov_norm_wavelet(c1, B, 0.1), std::invalid_argument);
    auto B4 = build_basis(4);
    auto g4 = dyadic_grid(256, 2.5);
    CHECK_NOTHROW(besov_norm_wavelet(analyze(sample_white_noise(g4, 4).field, B4, 0.5, 6), B4, -1.1));
}

TEST_CASE("scan estimator orders fields like the wavelet estimator") {
    auto B = build_basis(3);
    auto g = dyadic_grid(256, 2.25);
    auto probes = probe_set(1);
    for (const auto& p : probes) CHECK(cm_norm(p, 1) == doctest::Approx(1.0).epsilon(1e-9));
    ScanOptions opt;
    opt.t_lo = -1;
    opt.t_hi = 1;
    opt.j_min = 2;
    std::vector<double> scan, wav;
    for (double alpha : {-0.3, -0.6, -0.9}) {
        auto X = synthesize(synthetic_coefficients(B, alpha, 6, 0.5, 3), B, g);
        scan.push_back(besov_norm_scan(X, -0.2, probes, opt).value);
        wav.push_back(besov_norm_wavelet(analyze(X, B, 0.5, 6), B, -0.2).value);
    }
    MESSAGE("scan " << scan[0] << " " << scan[1] << " " << scan[2] << " wavelet " << wav[0] << " " << wav[1] << " " << wav[2]);
    CHECK(scan[0] < scan[1]);
    CHECK(scan[1] < scan[2]);
    CHECK(wav[0] < wav[1]);
    CHECK(wav[1] < wav[2]);
    auto e = besov_norm_scan(make_field(g, 1.0), -0.5, probes, opt);
    for (size_t k = 1; k < e.profile.size(); ++k) CHECK(e.profile[k] < e.profile[k - 1]);
}

TEST_CASE("dyadic and spatial partitions of unity") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-12, 4);
    for (int k = 0; k < 500; ++k) {
        double r = std::exp2(u(rng));
        double s = 0;
        for (int n = -10; n <= 20; ++n) s += dyadic_partition_eval(n, r);
        CHECK(std::abs(s - 1.0) < 1e-10);
    }
    CHECK(dyadic_germ(1.0 / 16) == 0.0);
    CHECK(dyadic_germ(0.25) == 0.0);
    CHECK(dyadic_germ(0.3) == 0.0);
    std::uniform_real_distribution<double> ux(-0.5, 0.5);
    for (int n = 0; n <= 4; ++n)
        for (int k = 0; k < 200; ++k) {
            double x = ux(rng);
            double s = 0;
            for (int q = -(1 << n) + 1; q <= (1 << n); ++q) s += spatial_bump_eval(n, x - q * std::ldexp(1.0, -(n + 1)));
            CHECK(std::abs(s - 1.0) < 1e-10);
            CHECK(spatial_bump_eval(n, x) == doctest::Approx(spatial_bump_eval(n, -x)).epsilon(1e-14));
        }
    CHECK(spatial_bump(0.5) == 0.0);
}
