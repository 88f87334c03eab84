#include <cmath>

#include "doctest.h"
#include "fsl/torus_spectral.hpp"

using namespace fsl;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// direct O(n^2) transform with the same convention, used as oracle
std::vector<cplx> slow_dft(const std::vector<double>& f) {
    int n = static_cast<int>(f.size());
    std::vector<cplx> c(f.size());
    for (int i = 0; i < n; ++i) {
        int k = signed_mode(i, n);
        cplx s = 0;
        for (int j = 0; j < n; ++j) {
            double x = -0.5 + static_cast<double>(j) / n;
            s += f[static_cast<size_t>(j)] * std::exp(cplx(0, -kTwoPi * k * x));
        }
        c[static_cast<size_t>(i)] = s / static_cast<double>(n);
    }
    return c;
}

}  // namespace

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(make_torus_grid(100), std::invalid_argument);
    CHECK_THROWS_AS(make_torus_grid(4), std::invalid_argument);
    CHECK(make_torus_grid(64).n == 64);
}

TEST_CASE("dft matches direct sum and round-trips") {
    auto g = make_torus_grid(32);
    auto f = sample_grid(g, [](double x) { return std::exp(std::sin(kTwoPi * x)) + 0.3 * x; });
    auto s = dft(f);
    auto ref = slow_dft(f.values);
    for (size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(s.coeffs[i] - ref[i]) < 1e-13);
    CHECK(max_abs_diff(idft(s).values, f.values) < 1e-13);
}

TEST_CASE("cosine eigenfunctions") {
    auto g = make_torus_grid(128);
    for (int k : {1, 3, 17}) {
        auto f = sample_grid(g, [k](double x) { return std::cos(kTwoPi * k * x); });
        auto s = dft(f);
        auto lap = idft(half_laplacian(s));
        auto semi = idft(semigroup(s, 0.05));
        auto grn = idft(green_inverse(s));
        for (int j = 0; j < g.n; ++j) {
            double c = f.values[static_cast<size_t>(j)];
            CHECK(std::abs(lap.values[static_cast<size_t>(j)] - kTwoPi * k * c) < 1e-10);
            CHECK(std::abs(semi.values[static_cast<size_t>(j)] - std::exp(-kTwoPi * k * 0.05) * c) < 1e-10);
            CHECK(std::abs(grn.values[static_cast<size_t>(j)] - c / (kTwoPi * k)) < 1e-10);
        }
    }
}

TEST_CASE("semigroup property and time validation") {
    auto g = make_torus_grid(64);
    auto f = sample_grid(g, [](double x) { return std::exp(std::cos(kTwoPi * x)) - x * x; });
    auto s = dft(f);
    auto a = idft(semigroup(semigroup(s, 0.013), 0.021));
    auto b = idft(semigroup(s, 0.034));
    CHECK(max_abs_diff(a.values, b.values) < 1e-12);
    CHECK(max_abs_diff(idft(semigroup(s, 0.0)).values, f.values) < 1e-12);
    CHECK_THROWS_AS(semigroup(s, -0.1), std::domain_error);
}

TEST_CASE("green inverse removes the mean and inverts the half-Laplacian") {
    auto g = make_torus_grid(128);
    auto f = sample_grid(g, [](double x) { return 2.0 + std::sin(kTwoPi * x) + 0.1 * std::cos(6 * kTwoPi * x); });
    auto s = dft(f);
    auto back = idft(half_laplacian(green_inverse(s)));
    for (int j = 0; j < g.n; ++j) CHECK(std::abs(back.values[static_cast<size_t>(j)] - (f.values[static_cast<size_t>(j)] - 2.0)) < 1e-10);
    auto gi = idft(green_inverse(s));
    double mean = 0;
    for (double v : gi.values) mean += v;
    CHECK(std::abs(mean / g.n) < 1e-14);
}

TEST_CASE("green function Fourier series") {
    // sum_{k != 0} e^{2 pi i k x} / (2 pi |k|) summed with Cesaro-free partial sums at x away from 0
    for (double x : {0.1, 0.25, -0.37}) {
        double s = 0;
        for (int k = 1; k < 200000; ++k) s += std::cos(kTwoPi * k * x) / (kPi * k);
        CHECK(std::abs(s - green_function(x)) < 1e-4);
    }
    CHECK_THROWS_AS(green_function(0.0), std::domain_error);
}

TEST_CASE("derivative is odd and zeroes the Nyquist mode") {
    auto g = make_torus_grid(16);
    auto f = sample_grid(g, [](double x) { return std::cos(8 * kTwoPi * x) + std::sin(kTwoPi * x); });
    auto d = idft(derivative(dft(f)));
    for (int j = 0; j < g.n; ++j) CHECK(std::abs(d.values[static_cast<size_t>(j)] - kTwoPi * std::cos(kTwoPi * g.point(j))) < 1e-12);
}

TEST_CASE("non-finite input rejected") {
    auto g = make_torus_grid(8);
    GridFunction1D f{g, std::vector<double>(8, 0.0)};
    f.values[3] = NAN;
    CHECK_THROWS(dft(f));
}
