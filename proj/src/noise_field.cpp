#include "fsl/noise_field.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fsl/torus_spectral.hpp"

namespace fsl {

long SpaceTimeGrid::index_of(double time) const {
    double r = time / dt - static_cast<double>(i0);
    long i = std::lround(r);
    if (std::abs(r - static_cast<double>(i)) > 1e-9) throw std::invalid_argument("time is not on the grid lattice");
    if (i < 0 || i >= n_t) throw std::out_of_range("time outside grid");
    return i;
}

SpaceTimeGrid make_grid(int n_x, double dt, double t_min, double t_max) {
    require(n_x >= 8 && is_pow2(n_x), "grid: n_x must be a power of two >= 8");
    require(dt > 0 && t_max >= t_min, "grid: need dt > 0 and t_max >= t_min");
    SpaceTimeGrid g;
    g.n_x = n_x;
    g.dt = dt;
    g.i0 = static_cast<long>(std::floor(t_min / dt + 1e-9));
    long i1 = static_cast<long>(std::ceil(t_max / dt - 1e-9));
    g.n_t = i1 - g.i0 + 1;
    return g;
}

GridField make_field(const SpaceTimeGrid& g, double fill) {
    return GridField{g, std::vector<double>(static_cast<size_t>(g.n_t) * g.n_x, fill)};
}

NoiseRealization sample_white_noise(const SpaceTimeGrid& grid, std::uint64_t seed) {
    NoiseRealization xi{make_field(grid), seed};
    const double sd = 1.0 / std::sqrt(grid.dt * grid.dx());
    for (long i = 0; i < grid.n_t; ++i) {
        // one stream per lattice time, so overlapping grids agree
        auto rng = make_stream(seed, 0xA11CE, static_cast<std::uint64_t>(grid.i0 + i), static_cast<std::uint64_t>(grid.n_x));
        std::normal_distribution<double> nd(0.0, sd);
        double* r = xi.field.row(i);
        for (int j = 0; j < grid.n_x; ++j) r[j] = nd(rng);
    }
    return xi;
}

// ---------------------------------------------------------------- mollifier

Mollifier::Mollifier(double s0, std::string name) : s0_(s0), name_(std::move(name)) {
    require(s0 > 0 && s0 <= 0.25, "mollifier: time half-support must lie in (0, 1/4]");
    a_int_ = integrate_gl([s0](double t) { return bump_g(1.0 - (t / s0) * (t / s0)); }, -s0, s0, 32, 20);
    b_int_ = integrate_gl([](double x) { return bump_g(1.0 - 16.0 * x * x); }, -0.25, 0.25, 32, 20);
    c_ = 1.0 / (a_int_ * b_int_);
}

double Mollifier::time_profile(double t) const {
    double u = t / s0_;
    return bump_g(1.0 - u * u) / a_int_;
}

double Mollifier::space_profile(double x) const { return bump_g(1.0 - 16.0 * x * x) / b_int_; }

double Mollifier::l2_norm_sq() const {
    double a2 = integrate_gl([this](double t) { double a = time_profile(t); return a * a; }, -s0_, s0_, 32, 20);
    double b2 = integrate_gl([this](double x) { double b = space_profile(x); return b * b; }, -0.25, 0.25, 32, 20);
    return a2 * b2;
}

double Mollifier::space_ft(double xi) const {
    int panels = 32 + static_cast<int>(std::abs(xi));
    return 2.0 * integrate_gl([this, xi](double x) { return space_profile(x) * std::cos(kTwoPi * xi * x); }, 0.0,
                              0.25, panels, 20);
}

double Mollifier::time_cross(const Mollifier& m1, double e1, const Mollifier& m2, double e2, double u) {
    double h1 = e1 * m1.s0(), h2 = e2 * m2.s0();
    double lo = std::max(-h1, u - h2), hi = std::min(h1, u + h2);
    if (hi <= lo) return 0.0;
    return integrate_gl(
        [&](double s) { return m1.time_profile(s / e1) / e1 * m2.time_profile((u - s) / e2) / e2; }, lo, hi, 12, 20);
}

// ---------------------------------------------------------------- test functions

TestFunction standard_bump(double shape) {
    require(shape >= 0 && shape < 1, "standard_bump: shape must be in [0, 1)");
    const double R = 0.25 / std::sqrt(2.0);
    TestFunction f;
    f.f = [R, shape](double t, double x) {
        double r2 = (t * t + x * x) / (R * R);
        double base = bump_g(1.0 - r2) / bump_g(1.0);
        return base * (1.0 + shape * std::sin(3.0 * t / R + 2.0 * x / R));
    };
    f.center = {0, 0};
    f.radius = 0.25;
    f.m = 2;
    f.c_m_norm = 1.0e3;
    return f;
}

TestFunction scale_test_function(const TestFunction& f, double delta, Point z) {
    if (!(delta > 0 && delta <= 1)) throw std::invalid_argument("scale_test_function: delta must lie in (0, 1]");
    TestFunction g = f;
    auto inner = f.f;
    g.f = [inner, delta, z](double t, double x) { return inner((t - z.t) / delta, (x - z.x) / delta) / (delta * delta); };
    g.center = {z.t + delta * f.center.t, z.x + delta * f.center.x};
    g.radius = delta * f.radius;
    g.c_m_norm = f.c_m_norm * std::pow(delta, -2.0 - f.m);
    return g;
}

double integrate_test_function(const TestFunction& f, int n) {
    double r = f.radius, h = 2 * r / n, s = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            s += f(f.center.t - r + (i + 0.5) * h, f.center.x - r + (j + 0.5) * h);
    return s * h * h;
}

double l2_norm_sq(const TestFunction& f, int n) {
    double r = f.radius, h = 2 * r / n, s = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double v = f(f.center.t - r + (i + 0.5) * h, f.center.x - r + (j + 0.5) * h);
            s += v * v;
        }
    return s * h * h;
}

double pair_field(const GridField& X, const TestFunction& f) {
    const auto& g = X.grid;
    double r = f.radius;
    long i_lo = std::max(0L, static_cast<long>(std::floor((f.center.t - r) / g.dt)) - g.i0);
    long i_hi = std::min(g.n_t - 1, static_cast<long>(std::ceil((f.center.t + r) / g.dt)) - g.i0);
    if (f.center.t - r < g.t_min() - 1e-12 || f.center.t + r > g.t_max() + 1e-12)
        throw std::invalid_argument("pair_field: test function support leaves the grid window");
    int span = std::min(g.n_x, static_cast<int>(std::ceil(r * g.n_x)) + 1);
    int jc = static_cast<int>(std::lround((wrap_torus(f.center.x) + 0.5) * g.n_x));
    double s = 0;
    const bool all_cols = 2 * span + 1 >= g.n_x;
    for (long i = i_lo; i <= i_hi; ++i) {
        double t = g.t(i);
        const double* row = X.row(i);
        for (int c = 0; c < (all_cols ? g.n_x : 2 * span + 1); ++c) {
            int j = all_cols ? c : ((jc + c - span) % g.n_x + g.n_x) % g.n_x;
            double v = f.on_torus(t, g.x(j));
            if (v != 0.0) s += row[j] * v;
        }
    }
    return s * g.dt * g.dx();
}

double PairingStencil::mass() const {
    double s = 0;
    for (double v : w) s += v;
    return s;
}

PairingStencil make_stencil(const TestFunction& f, double delta, int n_x, double dt) {
    TestFunction g = scale_test_function(f, delta, {0, 0});
    const double dx = 1.0 / n_x;
    const double r = g.radius;
    long Rt = static_cast<long>(std::ceil((std::abs(g.center.t) + r) / dt));
    int Rx = static_cast<int>(std::ceil((std::abs(g.center.x) + r) / dx));
    require(2 * Rx + 1 <= n_x, "make_stencil: test function wider than the torus grid");
    PairingStencil s;
    for (long i = -Rt; i <= Rt; ++i)
        for (int j = -Rx; j <= Rx; ++j) {
            double v = g(i * dt, j * dx);
            if (v == 0.0) continue;
            s.di.push_back(i);
            s.dj.push_back(j);
            s.w.push_back(v * dt * dx);
            s.reach_t = std::max(s.reach_t, std::abs(i));
        }
    return s;
}

double apply_stencil(const PairingStencil& s, const GridField& F, long i, int j) {
    const int n = F.grid.n_x;
    double acc = 0;
    for (size_t q = 0; q < s.w.size(); ++q) {
        long ii = i + s.di[q];
        if (ii < 0 || ii >= F.grid.n_t) throw std::out_of_range("apply_stencil: stencil leaves the grid window");
        int jj = ((j + s.dj[q]) % n + n) % n;
        acc += s.w[q] * F.at(ii, jj);
    }
    return acc;
}

// ---------------------------------------------------------------- mollify / generic v

namespace {

// Spectral coefficients of every row: out[i][k], k = 0 .. n/2.
std::vector<std::vector<cplx>> rows_to_modes(const GridField& f) {
    int n = f.grid.n_x;
    std::vector<std::vector<cplx>> out(static_cast<size_t>(f.grid.n_t));
    std::vector<cplx> c(static_cast<size_t>(n));
    for (long i = 0; i < f.grid.n_t; ++i) {
        samples_to_coeffs(f.row(i), c.data(), n);
        out[static_cast<size_t>(i)].assign(c.begin(), c.begin() + n / 2 + 1);
    }
    return out;
}

void modes_to_row(const std::vector<cplx>& half, double* row, int n) {
    std::vector<cplx> full(static_cast<size_t>(n));
    for (int k = 0; k <= n / 2; ++k) full[static_cast<size_t>(k)] = half[static_cast<size_t>(k)];
    full[0] = full[0].real();
    full[static_cast<size_t>(n / 2)] = full[static_cast<size_t>(n / 2)].real();
    for (int k = 1; k < n / 2; ++k) full[static_cast<size_t>(n - k)] = std::conj(half[static_cast<size_t>(k)]);
    coeffs_to_samples(full.data(), row, n);
}

}  // namespace

GridField mollify_noise(const NoiseRealization& xi, const Mollifier& rho, double eps) {
    const auto& g = xi.field.grid;
    if (!(eps > 0 && eps <= 1)) throw std::invalid_argument("mollify_noise: eps must lie in (0, 1]");
    if (eps < 2.0 * std::max(g.dt, g.dx()))
        throw std::invalid_argument("mollify_noise: eps below 2 grid cells, mollifier under-resolved");
    int Mf = static_cast<int>(std::ceil(eps * rho.s0() / g.dt));
    if (g.n_t <= 2L * Mf) throw std::invalid_argument("mollify_noise: grid too short for the mollifier window");
    std::vector<double> w(static_cast<size_t>(2 * Mf + 1));
    double wsum = 0;
    for (int m = -Mf; m <= Mf; ++m) wsum += w[static_cast<size_t>(m + Mf)] = rho.time_profile(m * g.dt / eps);
    // discrete weights sum to one so constants are preserved exactly
    for (double& v : w) v /= wsum;
    auto modes = rows_to_modes(xi.field);
    int n = g.n_x;
    std::vector<double> bh(static_cast<size_t>(n / 2 + 1));
    for (int k = 0; k <= n / 2; ++k) bh[static_cast<size_t>(k)] = rho.space_ft(eps * k);
    SpaceTimeGrid og = g;
    og.i0 = g.i0 + Mf;
    og.n_t = g.n_t - 2L * Mf;
    GridField out = make_field(og);
    std::vector<cplx> acc(static_cast<size_t>(n / 2 + 1));
    for (long i = 0; i < og.n_t; ++i) {
        std::fill(acc.begin(), acc.end(), cplx(0));
        long src = i + Mf;
        for (int m = -Mf; m <= Mf; ++m) {
            const auto& row = modes[static_cast<size_t>(src - m)];
            double wm = w[static_cast<size_t>(m + Mf)];
            for (int k = 0; k <= n / 2; ++k) acc[static_cast<size_t>(k)] += wm * row[static_cast<size_t>(k)];
        }
        for (int k = 0; k <= n / 2; ++k) acc[static_cast<size_t>(k)] *= bh[static_cast<size_t>(k)];
        modes_to_row(acc, out.row(i), n);
    }
    return out;
}

GridField gaussian_field_v(const KernelParams& prm, const GridField& xi_eps) {
    const auto& g = xi_eps.grid;
    const int n = g.n_x;
    const double dt = g.dt;
    const long Mend = static_cast<long>(std::ceil((prm.T0 + 1.0) / dt));
    if (g.n_t <= Mend) throw std::invalid_argument("gaussian_field_v: insufficient noise horizon (need T0 + 1 of history)");
    auto modes = rows_to_modes(xi_eps);
    SpaceTimeGrid og = g;
    og.i0 = g.i0 + Mend;
    og.n_t = g.n_t - Mend;
    // hat-function weights W_k[m] = int q_k(tau) hat((tau - m dt)/dt) dtau
    std::vector<std::vector<double>> W(static_cast<size_t>(n / 2 + 1));
    const GaussRule& gr = gauss_rule(20);
    for (int k = 0; k <= n / 2; ++k) {
        double lam = kTwoPi * k;
        long len = Mend;
        if (k > 0) len = std::min<long>(Mend, static_cast<long>(std::ceil(42.0 / (lam * dt))) + 2);
        auto& wk = W[static_cast<size_t>(k)];
        wk.assign(static_cast<size_t>(len + 1), 0.0);
        for (long m = 0; m < len; ++m) {
            double a = m * dt;
            for (size_t q = 0; q < gr.nodes.size(); ++q) {
                double s = 0.5 * (1.0 + gr.nodes[q]);
                double tau = a + s * dt;
                double val = std::exp(-lam * tau) * cutoff_H(tau - prm.T0) * 0.5 * dt * gr.weights[q];
                wk[static_cast<size_t>(m)] += (1.0 - s) * val;
                wk[static_cast<size_t>(m + 1)] += s * val;
            }
        }
    }
    GridField out = make_field(og);
    std::vector<cplx> acc(static_cast<size_t>(n / 2 + 1));
    for (long i = 0; i < og.n_t; ++i) {
        long src = i + Mend;
        for (int k = 0; k <= n / 2; ++k) {
            const auto& wk = W[static_cast<size_t>(k)];
            cplx s = 0;
            for (size_t m = 0; m < wk.size(); ++m) s += wk[m] * modes[static_cast<size_t>(src - static_cast<long>(m))][static_cast<size_t>(k)];
            acc[static_cast<size_t>(k)] = s;
        }
        modes_to_row(acc, out.row(i), n);
    }
    return out;
}

// ---------------------------------------------------------------- spectral noise

namespace {

constexpr long kBlock = 64;

long floor_div(long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

void fill_block(std::uint64_t seed, int n_x, double dt, int k, long block, cplx* out) {
    auto rng = make_stream(seed, static_cast<std::uint64_t>(k) | (static_cast<std::uint64_t>(n_x) << 32),
                           static_cast<std::uint64_t>(block), 0x5EC7);
    std::normal_distribution<double> nd(0.0, 1.0);
    const bool real = (k == 0 || k == n_x / 2);
    const double sr = std::sqrt(1.0 / dt), sc = std::sqrt(0.5 / dt);
    for (long q = 0; q < kBlock; ++q) {
        double a = nd(rng), b = nd(rng);
        out[q] = real ? cplx(sr * a, 0.0) : cplx(sc * a, sc * b);
    }
}

// noise for mode k over lattice times [j_lo, j_hi]
void fill_range(std::uint64_t seed, int n_x, double dt, int k, long j_lo, long j_hi, std::vector<cplx>& out) {
    out.resize(static_cast<size_t>(j_hi - j_lo + 1));
    cplx buf[kBlock];
    long b_lo = floor_div(j_lo, kBlock), b_hi = floor_div(j_hi, kBlock);
    for (long b = b_lo; b <= b_hi; ++b) {
        fill_block(seed, n_x, dt, k, b, buf);
        for (long q = 0; q < kBlock; ++q) {
            long j = b * kBlock + q;
            if (j >= j_lo && j <= j_hi) out[static_cast<size_t>(j - j_lo)] = buf[q];
        }
    }
}

}  // namespace

cplx noise_coefficient(std::uint64_t seed, int n_x, double dt, int k, long j) {
    cplx buf[kBlock];
    long b = floor_div(j, kBlock);
    fill_block(seed, n_x, dt, k, b, buf);
    return buf[j - b * kBlock];
}

// ---------------------------------------------------------------- fused sampler

namespace {

struct ModeTaps {
    bool active = false;
    int Mf = 0;                 // near taps m in [-Mf, Mf]
    std::vector<double> near;   // dt K(m dt)
    long exp_lo = 0, exp_hi = -1;  // exponential taps m in [exp_lo, exp_hi]
    double exp_first = 0;       // weight at exp_lo
    double decay = 1;           // e^{-lambda dt}
    bool exact_end = false;     // exp_hi is the true end of the exponential region
    long h_lo = 0;              // H taps m in [h_lo, h_lo + h.size())
    std::vector<double> h;
    std::vector<double> xi;     // dt b a_eps(m dt), m in [-Mf, Mf]
    long r_lo = 0;
    std::vector<double> r;      // dt hK(m dt)
    long max_m() const {
        long m = std::max<long>(Mf, exp_hi);
        if (!h.empty()) m = std::max<long>(m, h_lo + static_cast<long>(h.size()) - 1);
        if (!r.empty()) m = std::max<long>(m, r_lo + static_cast<long>(r.size()) - 1);
        return m;
    }
};

}  // namespace

struct FieldSampler::Impl {
    int n_x;
    double dt;
    SpaceTimeGrid win;
    KernelParams prm;
    std::vector<Channel> ch;
    SamplerOptions opt;
    std::vector<std::vector<ModeTaps>> taps;  // [channel][k]
    std::vector<long> need_back;              // per mode, max history taps over channels
    long need_fwd = 0;
    std::vector<bool> mode_active;

    void build();
    void convolve(const std::vector<std::vector<cplx>>& noise, const std::vector<long>& j_lo,
                  std::vector<ChannelFields>& out) const;
};

FieldSampler::FieldSampler(int n_x, double dt, double t_lo, double t_hi, const KernelParams& prm,
                           std::vector<Channel> channels, SamplerOptions opt)
    : impl_(std::make_unique<Impl>()) {
    require(!channels.empty(), "FieldSampler: need at least one channel");
    impl_->n_x = n_x;
    impl_->dt = dt;
    impl_->win = make_grid(n_x, dt, t_lo, t_hi);
    impl_->prm = prm;
    impl_->ch = std::move(channels);
    impl_->opt = opt;
    for (const auto& c : impl_->ch) {
        if (!(c.eps > 0 && c.eps <= 1)) throw std::invalid_argument("FieldSampler: eps must lie in (0, 1]");
        if (c.eps * c.mollifier.s0() > 0.5 * prm.T0)
            throw std::invalid_argument("FieldSampler: mollifier time support must be short compared to T0");
    }
    impl_->build();
}

FieldSampler::~FieldSampler() = default;
FieldSampler::FieldSampler(FieldSampler&&) noexcept = default;

const SpaceTimeGrid& FieldSampler::window() const { return impl_->win; }

long FieldSampler::noise_first() const {
    long m = 0;
    for (long b : impl_->need_back) m = std::max(m, b);
    return impl_->win.i0 - m;
}

long FieldSampler::noise_last() const { return impl_->win.i0 + impl_->win.n_t - 1 + impl_->need_fwd; }

void FieldSampler::Impl::build() {
    const int nk = n_x / 2 + 1;
    taps.assign(ch.size(), std::vector<ModeTaps>(static_cast<size_t>(nk)));
    need_back.assign(static_cast<size_t>(nk), 0);
    mode_active.assign(static_cast<size_t>(nk), false);
    const double T0 = prm.T0;
    for (size_t c = 0; c < ch.size(); ++c) {
        const Mollifier& mo = ch[c].mollifier;
        const double eps = ch[c].eps;
        const double h = eps * mo.s0();
        const int Mf = static_cast<int>(std::ceil(h / dt));
        need_fwd = std::max<long>(need_fwd, Mf);
        auto a_eps = [&](double u) { return mo.time_profile(u / eps) / eps; };
        const long Me = static_cast<long>(std::floor((T0 - h) / dt));
        const long Mend = static_cast<long>(std::ceil((T0 + 1.0 + h) / dt));
        for (int k = 0; k < nk; ++k) {
            ModeTaps& tp = taps[c][static_cast<size_t>(k)];
            double bh = mo.space_ft(eps * k);
            tp.Mf = Mf;
            if (std::abs(bh) < 1e-18) continue;
            tp.active = true;
            mode_active[static_cast<size_t>(k)] = true;
            const double lam = kTwoPi * k;
            auto K_of = [&](double tau) {
                double lo = -h, hi = std::min(h, tau);
                if (hi <= lo) return 0.0;
                return bh * integrate_gl(
                                [&](double u) {
                                    double s = tau - u;
                                    return a_eps(u) * std::exp(-lam * s) * cutoff_H(s - T0);
                                },
                                lo, hi, 8, 20);
            };
            tp.near.resize(static_cast<size_t>(2 * Mf + 1));
            tp.xi.resize(static_cast<size_t>(2 * Mf + 1));
            double asum = 0;
            for (int m = -Mf; m <= Mf; ++m) asum += a_eps(m * dt);
            for (int m = -Mf; m <= Mf; ++m) {
                tp.near[static_cast<size_t>(m + Mf)] = dt * K_of(m * dt);
                tp.xi[static_cast<size_t>(m + Mf)] = bh * a_eps(m * dt) / asum;
            }
            tp.exp_lo = Mf + 1;
            tp.decay = std::exp(-lam * dt);
            tp.exp_first = dt * K_of(tp.exp_lo * dt);
            // relative size of the H region against the first exponential tap
            double h_rel = std::exp(-lam * (Me - tp.exp_lo) * dt);
            bool need_h = h_rel > 1e-16;
            if (need_h) {
                tp.exp_hi = Me;
                tp.exact_end = true;
                tp.h_lo = Me + 1;
                tp.h.resize(static_cast<size_t>(Mend - Me));
                for (long m = Me + 1; m <= Mend; ++m) tp.h[static_cast<size_t>(m - Me - 1)] = dt * K_of(m * dt);
                if (opt.want_R) {
                    tp.r_lo = static_cast<long>(std::floor((T0 - h) / dt));
                    tp.r.resize(static_cast<size_t>(Mend - tp.r_lo + 1));
                    for (long m = tp.r_lo; m <= Mend; ++m) {
                        double tau = m * dt;
                        double lo = std::max(-h, tau - T0 - 1.0), hi = std::min(h, tau - T0);
                        double v = 0;
                        if (hi > lo)
                            v = bh * integrate_gl(
                                         [&](double u) {
                                             double s = tau - u;
                                             return a_eps(u) * std::exp(-lam * s) * cutoff_H_prime(s - T0);
                                         },
                                         lo, hi, 8, 20);
                        tp.r[static_cast<size_t>(m - tp.r_lo)] = dt * v;
                    }
                }
            } else {
                long extra = lam * dt > 0 ? static_cast<long>(std::ceil(40.0 / (lam * dt))) : 0;
                tp.exp_hi = std::min<long>(Me, tp.exp_lo + extra);
                tp.exact_end = false;
            }
            need_back[static_cast<size_t>(k)] = std::max(need_back[static_cast<size_t>(k)], tp.max_m());
        }
    }
}

void FieldSampler::Impl::convolve(const std::vector<std::vector<cplx>>& noise, const std::vector<long>& j_lo,
                                  std::vector<ChannelFields>& out) const {
    const int nk = n_x / 2 + 1;
    const long nw = win.n_t;
    out.assign(ch.size(), ChannelFields{});
    for (size_t c = 0; c < ch.size(); ++c) {
        std::vector<std::vector<cplx>> V, XI, RR;
        if (opt.want_v) V.assign(static_cast<size_t>(nw), std::vector<cplx>(static_cast<size_t>(nk)));
        if (opt.want_xi) XI.assign(static_cast<size_t>(nw), std::vector<cplx>(static_cast<size_t>(nk)));
        if (opt.want_R) RR.assign(static_cast<size_t>(nw), std::vector<cplx>(static_cast<size_t>(nk)));
        for (int k = 0; k < nk; ++k) {
            const ModeTaps& tp = taps[c][static_cast<size_t>(k)];
            if (!tp.active) continue;
            const auto& nz = noise[static_cast<size_t>(k)];
            const long base = j_lo[static_cast<size_t>(k)];
            auto xi_at = [&](long j) { return nz[static_cast<size_t>(j - base)]; };
            cplx E = 0;
            if (opt.want_v) {
                for (long m = tp.exp_lo; m <= tp.exp_hi; ++m)
                    E += tp.exp_first * std::pow(tp.decay, static_cast<double>(m - tp.exp_lo)) * xi_at(win.i0 - m);
            }
            const double w_last = tp.exact_end ? tp.exp_first * std::pow(tp.decay, static_cast<double>(tp.exp_hi - tp.exp_lo)) : 0.0;
            for (long i = 0; i < nw; ++i) {
                const long ig = win.i0 + i;
                if (opt.want_v) {
                    cplx s = E;
                    for (int m = -tp.Mf; m <= tp.Mf; ++m) s += tp.near[static_cast<size_t>(m + tp.Mf)] * xi_at(ig - m);
                    for (size_t q = 0; q < tp.h.size(); ++q) s += tp.h[q] * xi_at(ig - tp.h_lo - static_cast<long>(q));
                    V[static_cast<size_t>(i)][static_cast<size_t>(k)] = s;
                    // advance E to ig + 1
                    cplx leave = tp.exact_end ? w_last * xi_at(ig - tp.exp_hi) : cplx(0);
                    E = tp.exp_first * xi_at(ig + 1 - tp.exp_lo) + tp.decay * (E - leave);
                }
                if (opt.want_xi) {
                    cplx s = 0;
                    for (int m = -tp.Mf; m <= tp.Mf; ++m) s += tp.xi[static_cast<size_t>(m + tp.Mf)] * xi_at(ig - m);
                    XI[static_cast<size_t>(i)][static_cast<size_t>(k)] = s;
                }
                if (opt.want_R) {
                    cplx s = 0;
                    for (size_t q = 0; q < tp.r.size(); ++q) s += tp.r[q] * xi_at(ig - tp.r_lo - static_cast<long>(q));
                    RR[static_cast<size_t>(i)][static_cast<size_t>(k)] = s;
                }
            }
        }
        auto emit = [&](const std::vector<std::vector<cplx>>& M, GridField& f) {
            f = make_field(win);
            for (long i = 0; i < nw; ++i) modes_to_row(M[static_cast<size_t>(i)], f.row(i), n_x);
        };
        if (opt.want_v) emit(V, out[c].v);
        if (opt.want_xi) emit(XI, out[c].xi);
        if (opt.want_R) emit(RR, out[c].R);
    }
}

std::vector<ChannelFields> FieldSampler::sample(std::uint64_t seed) const { return sample(seed, false); }

std::vector<ChannelFields> FieldSampler::sample(std::uint64_t seed, bool negate) const {
    const Impl& I = *impl_;
    const int nk = I.n_x / 2 + 1;
    std::vector<std::vector<cplx>> noise(static_cast<size_t>(nk));
    std::vector<long> j_lo(static_cast<size_t>(nk), 0);
    const long j_hi = I.win.i0 + I.win.n_t - 1 + I.need_fwd + 1;
    for (int k = 0; k < nk; ++k) {
        if (!I.mode_active[static_cast<size_t>(k)]) continue;
        j_lo[static_cast<size_t>(k)] = I.win.i0 - I.need_back[static_cast<size_t>(k)] - 1;
        fill_range(seed, I.n_x, I.dt, k, j_lo[static_cast<size_t>(k)], j_hi, noise[static_cast<size_t>(k)]);
        if (negate)
            for (auto& v : noise[static_cast<size_t>(k)]) v = -v;
    }
    std::vector<ChannelFields> out;
    I.convolve(noise, j_lo, out);
    return out;
}

std::vector<ChannelFields> FieldSampler::from_noise(const NoiseRealization& xi) const {
    const Impl& I = *impl_;
    const auto& g = xi.field.grid;
    require(g.n_x == I.n_x && std::abs(g.dt - I.dt) < 1e-15, "FieldSampler::from_noise: grid mismatch");
    const long j_hi = I.win.i0 + I.win.n_t - 1 + I.need_fwd + 1;
    const long j_lo_all = noise_first() - 1;
    if (g.i0 > j_lo_all || g.i0 + g.n_t - 1 < j_hi)
        throw std::invalid_argument("FieldSampler::from_noise: insufficient noise horizon");
    const int nk = I.n_x / 2 + 1;
    std::vector<std::vector<cplx>> noise(static_cast<size_t>(nk), std::vector<cplx>(static_cast<size_t>(j_hi - j_lo_all + 1)));
    std::vector<long> j_lo(static_cast<size_t>(nk), j_lo_all);
    std::vector<cplx> c(static_cast<size_t>(I.n_x));
    for (long j = j_lo_all; j <= j_hi; ++j) {
        samples_to_coeffs(xi.field.row(j - g.i0), c.data(), I.n_x);
        for (int k = 0; k < nk; ++k) noise[static_cast<size_t>(k)][static_cast<size_t>(j - j_lo_all)] = c[static_cast<size_t>(k)];
    }
    std::vector<ChannelFields> out;
    I.convolve(noise, j_lo, out);
    return out;
}

double FieldSampler::discrete_variance(size_t channel) const {
    const Impl& I = *impl_;
    require(channel < I.ch.size(), "discrete_variance: bad channel");
    const int nk = I.n_x / 2 + 1;
    double var = 0;
    for (int k = 0; k < nk; ++k) {
        const ModeTaps& tp = I.taps[channel][static_cast<size_t>(k)];
        if (!tp.active) continue;
        double s = 0;
        for (double w : tp.near) s += w * w;
        for (long m = tp.exp_lo; m <= tp.exp_hi; ++m) {
            double w = tp.exp_first * std::pow(tp.decay, static_cast<double>(m - tp.exp_lo));
            s += w * w;
        }
        for (double w : tp.h) s += w * w;
        s /= I.dt;
        var += (k == 0 || k == I.n_x / 2) ? s : 2.0 * s;
    }
    return var;
}

// ---------------------------------------------------------------- analytic covariance

CovarianceModel::CovarianceModel(const KernelParams& prm) : prm_(prm) {
    require(prm.T0 > 0, "CovarianceModel: T0 must be positive");
}

double CovarianceModel::I0(double tau) const {
    tau = std::abs(tau);
    const double T0 = prm_.T0;
    if (tau >= T0 + 1.0) return 0.0;
    double s_star = std::max(0.0, T0 - tau), upper = T0 + 1.0 - tau;
    double tail = integrate_gl([&](double s) { return cutoff_H(s - T0) * cutoff_H(s + tau - T0); }, s_star, upper, 16, 20);
    return s_star + tail;
}

namespace {

double cutoff_part(double lam, double tau, double T0) {
    // int_{s*}^{T0+1-tau} e^{-2 lam (s - s*)} H(s - T0) H(s + tau - T0) ds
    double s_star = std::max(0.0, T0 - tau), upper = T0 + 1.0 - tau;
    if (upper <= s_star) return 0.0;
    return integrate_graded(
        [&](double s) { return std::exp(-2.0 * lam * (s - s_star)) * cutoff_H(s - T0) * cutoff_H(s + tau - T0); },
        s_star, upper, s_star, 14, 20);
}

}  // namespace

double CovarianceModel::Ik(int k, double tau) const {
    if (k == 0) return I0(tau);
    tau = std::abs(tau);
    const double T0 = prm_.T0;
    if (tau >= T0 + 1.0) return 0.0;
    double lam = kTwoPi * std::abs(k);
    double s_star = std::max(0.0, T0 - tau);
    double head = -std::expm1(-2.0 * lam * s_star) / (2.0 * lam);
    return std::exp(-lam * tau) * (head + std::exp(-2.0 * lam * s_star) * cutoff_part(lam, tau, T0));
}

double CovarianceModel::corr_k(int k, double tau) const {
    require(k != 0, "corr_k: k must be nonzero");
    tau = std::abs(tau);
    const double T0 = prm_.T0;
    double lam = kTwoPi * std::abs(k);
    if (tau >= T0 + 1.0) return -std::exp(-lam * tau) / (2.0 * lam);
    double s_star = std::max(0.0, T0 - tau);
    return std::exp(-lam * tau) * std::exp(-2.0 * lam * s_star) * (cutoff_part(lam, tau, T0) - 1.0 / (2.0 * lam));
}

namespace {

double corr_bound(int k, double tau, double T0) {
    double lam = kTwoPi * k;
    return std::exp(-lam * std::max(tau, 2.0 * T0 - tau)) / (2.0 * lam);
}

}  // namespace

double CovarianceModel::Q(Point z) const {
    const double T0 = prm_.T0;
    double tau = std::abs(z.t);
    if (tau >= T0 + 1.0) return 0.0;
    double x = wrap_torus(z.x);
    double r = std::exp(-kTwoPi * tau), omr = -std::expm1(-kTwoPi * tau), s = std::sin(kPi * x);
    double arg = omr * omr + 4.0 * r * s * s;
    if (arg <= 0.0) throw std::domain_error("covariance at z = 0 without mollification diverges logarithmically");
    double q = I0(tau) - std::log(arg) / (4.0 * kPi);
    for (int k = 1; k < 10000; ++k) {
        if (2.0 * corr_bound(k, tau, T0) < 1e-17) break;
        q += 2.0 * std::cos(kTwoPi * k * x) * corr_k(k, tau);
    }
    return q;
}

double CovarianceModel::Q_mollified(Point z, const Mollifier& m1, double e1, const Mollifier& m2, double e2) const {
    require(e1 > 0 && e2 > 0 && e1 <= 1 && e2 <= 1, "Q_mollified: eps must lie in (0, 1]");
    const double T0 = prm_.T0;
    const double U = e1 * m1.s0() + e2 * m2.s0();
    const double t = z.t, x = wrap_torus(z.x);
    // quadrature nodes in u, graded toward the kink of I(t - u) at u = t
    std::vector<double> un, wn;
    {
        const GaussRule& g = gauss_rule(20);
        double c = std::clamp(t, -U, U);
        auto add_panel = [&](double lo, double hi) {
            double m = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
            for (size_t i = 0; i < g.nodes.size(); ++i) {
                un.push_back(m + h * g.nodes[i]);
                wn.push_back(h * g.weights[i]);
            }
        };
        for (double side : {-1.0, 1.0}) {
            double len = side < 0 ? c + U : U - c;
            if (len <= 0) continue;
            // uniform panels away from c, geometric toward it
            const int n_uni = 8;
            for (int q = 1; q < n_uni; ++q) {
                double a = len * q / n_uni, b = len * (q + 1) / n_uni;
                if (side < 0) add_panel(c - b, c - a);
                else add_panel(c + a, c + b);
            }
            double outer = len / n_uni;
            for (int l = 0; l < 30; ++l) {
                double inner = (l == 29) ? 0.0 : 0.5 * outer;
                if (side < 0) add_panel(c - outer, c - inner);
                else add_panel(c + inner, c + outer);
                outer = inner;
            }
        }
    }
    const size_t N = un.size();
    std::vector<double> cw(N), tau(N);
    for (size_t i = 0; i < N; ++i) {
        cw[i] = wn[i] * Mollifier::time_cross(m1, e1, m2, e2, un[i]);
        tau[i] = std::abs(t - un[i]);
    }
    double J0 = 0;
    for (size_t i = 0; i < N; ++i)
        if (cw[i] != 0.0) J0 += cw[i] * I0(tau[i]);
    double w0 = m1.space_ft(0) * m2.space_ft(0);
    double q = w0 * J0;
    const int k_cap = static_cast<int>(400.0 / std::min(e1, e2));
    double recent_max = 0;
    int quiet = 0;
    for (int k = 1; k <= k_cap; ++k) {
        double wk = m1.space_ft(e1 * k) * m2.space_ft(e2 * k);
        if (std::abs(wk) < 1e-17) {
            if (++quiet >= 16) break;
            continue;
        }
        quiet = 0;
        recent_max = std::max(recent_max, std::abs(wk));
        double lam = kTwoPi * k;
        double Jk = 0;
        for (size_t i = 0; i < N; ++i) {
            if (cw[i] == 0.0) continue;
            double v = tau[i] >= T0 + 1.0 ? 0.0 : std::exp(-lam * tau[i]) / (2.0 * lam);
            if (corr_bound(k, tau[i], T0) > 1e-18) v = Ik(k, tau[i]);
            Jk += cw[i] * v;
        }
        q += 2.0 * wk * std::cos(kTwoPi * k * x) * Jk;
    }
    return q;
}

double covariance_analytic(const KernelParams& prm, Point z, double eps, const Mollifier& m) {
    CovarianceModel cm(prm);
    if (eps == 0.0) return cm.Q(z);
    return cm.Q_mollified(z, m, eps);
}

// ---------------------------------------------------------------- Monte Carlo

std::vector<CovarianceEstimate> covariance_mc(const KernelParams& prm, const std::vector<Point>& zs, double eps,
                                              const McConfig& mc, const Mollifier& m) {
    require(mc.n_samples >= 2, "covariance_mc: n_samples must be >= 2");
    require(!zs.empty(), "covariance_mc: need at least one lag");
    const int n = mc.n_x;
    CovarianceModel cm(prm);
    std::vector<CovarianceEstimate> out;
    for (const Point& z0 : zs) {
        Point z{std::abs(z0.t), z0.t < 0 ? -z0.x : z0.x};
        // time lag on the lattice: refine dt to divide z.t; space lag by exact spectral shift
        long steps = z.t > 0 ? static_cast<long>(std::ceil(z.t / mc.dt - 1e-9)) : 0;
        double dt = steps > 0 ? z.t / static_cast<double>(steps) : mc.dt;
        FieldSampler sampler(n, dt, 0.0, steps * dt, prm, {Channel{m, eps}});
        std::vector<cplx> phase(static_cast<size_t>(n / 2 + 1));
        for (int k = 0; k <= n / 2; ++k) phase[static_cast<size_t>(k)] = std::polar(1.0, kTwoPi * k * z.x);
        std::vector<double> per(static_cast<size_t>(mc.n_samples));
        parallel_for(mc.n_samples, [&](long s) {
            auto f = sampler.sample(splitmix64(mc.seed) + static_cast<std::uint64_t>(s));
            const GridField& v = f[0].v;
            std::vector<cplx> c0(static_cast<size_t>(n)), c1(static_cast<size_t>(n));
            samples_to_coeffs(v.row(0), c0.data(), n);
            samples_to_coeffs(v.row(v.grid.n_t - 1), c1.data(), n);
            // (1/n) sum_j v(0, x_j) v(z.t, x_j + z.x)
            double acc = c0[0].real() * c1[0].real();
            acc += c0[static_cast<size_t>(n / 2)].real() * c1[static_cast<size_t>(n / 2)].real() * phase[static_cast<size_t>(n / 2)].real();
            for (int k = 1; k < n / 2; ++k)
                acc += 2.0 * (std::conj(c0[static_cast<size_t>(k)]) * c1[static_cast<size_t>(k)] * phase[static_cast<size_t>(k)]).real();
            per[static_cast<size_t>(s)] = acc;
        });
        auto ms = mean_stderr(per);
        CovarianceEstimate e;
        e.z = z0;
        e.eps = eps;
        e.estimate = ms.mean;
        e.stderr_ = ms.stderr_;
        e.n = ms.n;
        e.analytic = cm.Q_mollified(z0, m, eps);
        out.push_back(e);
    }
    return out;
}

std::vector<VarianceRow> variance_asymptotics(const KernelParams& prm, const std::vector<double>& eps_list,
                                              const Mollifier& m) {
    for (size_t i = 1; i < eps_list.size(); ++i)
        require(eps_list[i] < eps_list[i - 1], "variance_asymptotics: eps list must be decreasing");
    CovarianceModel cm(prm);
    std::vector<VarianceRow> rows;
    for (double e : eps_list) {
        VarianceRow r;
        r.eps = e;
        r.q_eps0 = cm.Q_mollified({0, 0}, m, e);
        r.offset = r.q_eps0 - std::log(1.0 / e) / kTwoPi;
        rows.push_back(r);
    }
    return rows;
}

RateReport covariance_rate_check(const KernelParams& prm, double eps, const std::vector<Point>& zs,
                                 const Mollifier& m1, const Mollifier& m2) {
    CovarianceModel cm(prm);
    RateReport rep;
    rep.eps = eps;
    for (const auto& z : zs) {
        require(st_norm(z) >= 4 * eps, "covariance_rate_check: need ||z|| >= 4 eps");
        double d = std::abs(cm.Q(z) - cm.Q_mollified(z, m1, eps, m2, eps));
        double r = d * st_norm(z) / eps;
        rep.ratios.push_back(r);
        rep.max_ratio = std::max(rep.max_ratio, r);
    }
    return rep;
}

void write_covariance_csv(const std::string& path, const std::vector<CovarianceEstimate>& rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "t,x,eps,Q,stderr\n" << std::setprecision(12);
    for (const auto& r : rows) os << r.z.t << ',' << r.z.x << ',' << r.eps << ',' << r.estimate << ',' << r.stderr_ << '\n';
}

}  // namespace fsl
