#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fsl/cauchy_kernel.hpp"
#include "fsl/common.hpp"

namespace fsl {

// Times live on the lattice t = i*dt (i integer) so that grids with the same
// dt line up exactly; the grid covers indices i0 .. i0 + n_t - 1.
struct SpaceTimeGrid {
    int n_x = 256;
    double dt = 1.0 / 256;
    long i0 = 0;
    long n_t = 0;

    double dx() const { return 1.0 / n_x; }
    double t(long i) const { return static_cast<double>(i0 + i) * dt; }
    double x(int j) const { return -0.5 + static_cast<double>(j) / n_x; }
    double t_min() const { return t(0); }
    double t_max() const { return t(n_t - 1); }
    long index_of(double time) const;  // nearest local index; throws if off-lattice
};

// Grid with lattice times covering [t_min, t_max].
SpaceTimeGrid make_grid(int n_x, double dt, double t_min, double t_max);

struct GridField {
    SpaceTimeGrid grid;
    std::vector<double> values;  // row-major, n_t x n_x

    double& at(long i, int j) { return values[static_cast<size_t>(i) * grid.n_x + j]; }
    double at(long i, int j) const { return values[static_cast<size_t>(i) * grid.n_x + j]; }
    const double* row(long i) const { return values.data() + static_cast<size_t>(i) * grid.n_x; }
    double* row(long i) { return values.data() + static_cast<size_t>(i) * grid.n_x; }
};

GridField make_field(const SpaceTimeGrid& g, double fill = 0.0);

struct NoiseRealization {
    GridField field;  // cell values, i.i.d. N(0, 1/(dt dx))
    std::uint64_t seed = 0;
};

NoiseRealization sample_white_noise(const SpaceTimeGrid& grid, std::uint64_t seed);

// Product bump c a(t/s0) b(x) with a(u) = g(1 - u^2) on |u| < 1 and b(x) = g(1 - 16 x^2).
class Mollifier {
  public:
    explicit Mollifier(double s0 = 0.25, std::string name = "rho");

    double s0() const { return s0_; }
    const std::string& name() const { return name_; }
    double norm_const() const { return c_; }

    double time_profile(double t) const;   // integrates to 1
    double space_profile(double x) const;  // integrates to 1
    double value(double t, double x) const { return time_profile(t) * space_profile(x); }
    double value_scaled(double t, double x, double eps) const {
        return time_profile(t / eps) * space_profile(x / eps) / (eps * eps);
    }
    double l2_norm_sq() const;  // int rho^2

    // int b(x) cos(2 pi xi x) dx for the normalized space profile.
    double space_ft(double xi) const;
    // (a1_{e1} * a2_{e2})(u) = int a1_{e1}(s) a2_{e2}(u - s) ds for time profiles scaled by e1, e2.
    static double time_cross(const Mollifier& m1, double e1, const Mollifier& m2, double e2, double u);

  private:
    double s0_;
    std::string name_;
    double a_int_ = 1, b_int_ = 1, c_ = 1;
};

inline Mollifier mollifier_rho() { return Mollifier(0.25, "rho"); }
inline Mollifier mollifier_theta() { return Mollifier(0.125, "theta"); }

// Function on R x R (a chart around `center`), vanishing outside the l1 ball of
// radius `radius` about `center`. Evaluation on the torus goes through the chart.
struct TestFunction {
    std::function<double(double, double)> f;
    Point center{};
    double radius = 0.25;
    int m = 2;
    double c_m_norm = 1.0;

    double operator()(double t, double x) const { return f(t, x); }
    double on_torus(double t, double x) const {
        return f(t, center.x + wrap_torus(x - center.x));
    }
};

// Smooth bump g(1 - |z|_2^2 / R^2) normalized to sup 1, R = 1/(4 sqrt 2) so the
// support lies in the l1 ball of radius 1/4. `shape` in [0, 1) tilts the profile
// to give distinct bumps.
TestFunction standard_bump(double shape = 0.0);

// (S^delta_z f)(w) = delta^{-2} f((w - z)/delta).
TestFunction scale_test_function(const TestFunction& f, double delta, Point z);

// Quadrature of f and f^2 on a fine grid.
double integrate_test_function(const TestFunction& f, int n = 400);
double l2_norm_sq(const TestFunction& f, int n = 400);

// Empirical pairing sum dt dx X_ij f(z_ij) over the support.
double pair_field(const GridField& X, const TestFunction& f);

// Grid weights of S^delta f centred at a lattice point, stored as offsets.
struct PairingStencil {
    std::vector<long> di;
    std::vector<int> dj;
    std::vector<double> w;  // already multiplied by dt dx
    long reach_t = 0;       // max |di|
    double mass() const;
};

PairingStencil make_stencil(const TestFunction& f, double delta, int n_x, double dt);
// sum_s w_s F(i + di_s, j + dj_s), j periodic.
double apply_stencil(const PairingStencil& s, const GridField& F, long i, int j);

// xi_eps = rho_eps * xi: spectral in x (continuous transform of the space profile),
// direct sum in time. Output covers the times whose mollifier window lies in the input.
GridField mollify_noise(const NoiseRealization& xi, const Mollifier& rho, double eps);

// v = q * xi_eps for a given smooth field, per mode in x and by exact integration of
// the kernel against the piecewise linear interpolant of xi_eps in time. Output covers
// the input times that have T0 + 1 of history.
GridField gaussian_field_v(const KernelParams& prm, const GridField& xi_eps);

// Fused sampler for q * rho_eps * xi on a window, several mollification channels
// sharing one noise. Noise is drawn as the Fourier coefficients of the cell noise
// (equal in law to transforming sample_white_noise slice by slice); modes are drawn
// from per-(seed, mode, block) streams so any two windows see the same noise.
struct Channel {
    Mollifier mollifier;
    double eps = 1.0 / 16;
};

struct SamplerOptions {
    bool want_v = true;
    bool want_xi = false;  // xi_eps on the window
    bool want_R = false;   // (d_t + (-Delta)^{1/2}) v_eps - xi_eps, from r = q - p
};

struct ChannelFields {
    GridField v, xi, R;
};

class FieldSampler {
  public:
    FieldSampler(int n_x, double dt, double t_lo, double t_hi, const KernelParams& prm,
                 std::vector<Channel> channels, SamplerOptions opt = {});
    ~FieldSampler();
    FieldSampler(FieldSampler&&) noexcept;

    const SpaceTimeGrid& window() const;
    // Lattice range [first, last] of noise times touched.
    long noise_first() const;
    long noise_last() const;

    std::vector<ChannelFields> sample(std::uint64_t seed) const;
    std::vector<ChannelFields> sample(std::uint64_t seed, bool negate) const;
    std::vector<ChannelFields> from_noise(const NoiseRealization& xi) const;

    // Exact variance of the sampled v at a point (sum over modes and taps).
    double discrete_variance(size_t channel) const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Fourier coefficient of the cell noise at (mode k in [0, n_x/2], lattice time j).
cplx noise_coefficient(std::uint64_t seed, int n_x, double dt, int k, long j);

// Analytic covariance of v = q * rho_eps * xi.
class CovarianceModel {
  public:
    explicit CovarianceModel(const KernelParams& prm = {});

    double I0(double tau) const;
    double Ik(int k, double tau) const;
    double corr_k(int k, double tau) const;  // Ik - e^{-lambda|tau|}/(2 lambda)

    // eps = 0; throws std::domain_error at z = 0.
    double Q(Point z) const;
    // Cross covariance E[v^{(1)}(0) v^{(2)}(z)] for mollifiers m1 at e1 and m2 at e2.
    double Q_mollified(Point z, const Mollifier& m1, double e1, const Mollifier& m2, double e2) const;
    double Q_mollified(Point z, const Mollifier& m, double eps) const { return Q_mollified(z, m, eps, m, eps); }

    const KernelParams& params() const { return prm_; }

  private:
    KernelParams prm_;
};

double covariance_analytic(const KernelParams& prm, Point z, double eps, const Mollifier& m = mollifier_rho());

struct CovarianceEstimate {
    Point z;
    double eps = 0;
    double estimate = 0;
    double stderr_ = 0;
    double analytic = 0;
    long n = 0;
};

struct McConfig {
    int n_x = 256;
    double dt = 1.0 / 256;
    long n_samples = 2000;
    std::uint64_t seed = 1;
};

// Per sample, the average over grid x of v(0, x) v(z_t, x + z_x); mean and standard
// error across samples. dt is refined so z_t is a lattice time; the x lag is applied
// as an exact shift of the trigonometric interpolant.
std::vector<CovarianceEstimate> covariance_mc(const KernelParams& prm, const std::vector<Point>& zs, double eps,
                                              const McConfig& mc, const Mollifier& m = mollifier_rho());

struct VarianceRow {
    double eps = 0;
    double q_eps0 = 0;  // Q_eps(0)
    double offset = 0;  // Q_eps(0) - (1/2pi) ln(1/eps)
};

std::vector<VarianceRow> variance_asymptotics(const KernelParams& prm, const std::vector<double>& eps_list,
                                              const Mollifier& m = mollifier_rho());

struct RateReport {
    double eps = 0;
    double max_ratio = 0;  // max |Q(z) - Q_eps(z)| ||z|| / eps
    std::vector<double> ratios;
};

RateReport covariance_rate_check(const KernelParams& prm, double eps, const std::vector<Point>& zs,
                                 const Mollifier& m1 = mollifier_rho(), const Mollifier& m2 = mollifier_rho());

// CSV with columns t, x, eps, Q, stderr.
void write_covariance_csv(const std::string& path, const std::vector<CovarianceEstimate>& rows);

}  // namespace fsl
