#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace fsl {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Space-time point; t first, x on the torus [-1/2, 1/2).
struct Point {
    double t = 0.0;
    double x = 0.0;
};

// Map x to the representative in [-1/2, 1/2).
inline double wrap_torus(double x) {
    double y = x - std::floor(x + 0.5);
    if (y >= 0.5) y -= 1.0;
    return y;
}

inline double torus_dist(double x) { return std::abs(wrap_torus(x)); }

// Space-time distance |t| + d_T(x).
inline double st_norm(const Point& z) { return std::abs(z.t) + torus_dist(z.x); }

inline bool is_pow2(long n) { return n > 0 && (n & (n - 1)) == 0; }

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline void require_finite(double v, const std::string& what) {
    if (!std::isfinite(v)) throw std::domain_error(what + " is not finite");
}

// smooth step generator g(s) = exp(-1/s) for s > 0
inline double bump_g(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }

// Seed derivation: independent streams per (seed, a, b, c) via seed_seq.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                            std::uint64_t c = 0);

std::uint64_t splitmix64(std::uint64_t x);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double r2 = 0.0;
};

// Least squares y ~ a + b x; optional nonnegative weights (empty = all 1). The stderr treats the
// weights as relative.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w = {});

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    long n = 0;
};

MeanStderr mean_stderr(const std::vector<double>& v);

// Run body(i) for i in [0, n). Work is split by index, so results written to
// per-index slots are independent of the thread count.
void parallel_for(long n, const std::function<void(long)>& body);

// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const GaussRule& gauss_rule(int n);  // n in {3, 4, 5, 7, 10, 15, 20, 30}

// Composite Gauss-Legendre over [a, b] split into m equal panels.
double integrate_gl(const std::function<double(double)>& f, double a, double b, int panels = 8,
                    int order = 20);

// Composite Gauss-Legendre with panels graded geometrically toward `c` in [a, b].
double integrate_graded(const std::function<double(double)>& f, double a, double b, double c,
                        int levels = 24, int order = 20);

}  // namespace fsl
