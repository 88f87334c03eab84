#include "fsl/besov_wavelet.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <random>

namespace fsl {

namespace {

// Durand-Kerner roots of sum_k c_k y^k (c.back() != 0).
std::vector<cplx> poly_roots(const std::vector<double>& c) {
    const int deg = static_cast<int>(c.size()) - 1;
    std::vector<cplx> r(static_cast<size_t>(deg));
    const cplx seed(0.4, 0.9);
    for (int i = 0; i < deg; ++i) r[static_cast<size_t>(i)] = std::pow(seed, i);
    auto eval = [&](cplx y) {
        cplx s = 0;
        for (int k = deg; k >= 0; --k) s = s * y + c[static_cast<size_t>(k)];
        return s / c.back();
    };
    for (int it = 0; it < 2000; ++it) {
        double change = 0;
        for (int i = 0; i < deg; ++i) {
            cplx den = 1;
            for (int j = 0; j < deg; ++j)
                if (j != i) den *= r[static_cast<size_t>(i)] - r[static_cast<size_t>(j)];
            cplx d = eval(r[static_cast<size_t>(i)]) / den;
            r[static_cast<size_t>(i)] -= d;
            change = std::max(change, std::abs(d));
        }
        if (change < 1e-16) break;
    }
    return r;
}

double binom(int n, int k) {
    double b = 1;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    return b;
}

std::vector<cplx> poly_mul(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    std::vector<cplx> c(a.size() + b.size() - 1, 0.0);
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
}

// Solve A x = b by Gaussian elimination with partial pivoting.
std::vector<double> solve(std::vector<std::vector<double>> A, std::vector<double> b) {
    const size_t n = b.size();
    for (size_t c = 0; c < n; ++c) {
        size_t piv = c;
        for (size_t r = c + 1; r < n; ++r)
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        std::swap(A[c], A[piv]);
        std::swap(b[c], b[piv]);
        for (size_t r = c + 1; r < n; ++r) {
            double f = A[r][c] / A[c][c];
            for (size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (size_t i = n; i-- > 0;) {
        double s = b[i];
        for (size_t k = i + 1; k < n; ++k) s -= A[i][k] * x[k];
        x[i] = s / A[i][i];
    }
    return x;
}

}  // namespace

std::vector<double> daubechies_filter(int v) {
    if (v < 2 || v > 6) throw std::invalid_argument("daubechies_filter: supported vanishing moments are 2..6");
    std::vector<double> P(static_cast<size_t>(v));
    for (int k = 0; k < v; ++k) P[static_cast<size_t>(k)] = binom(v - 1 + k, k);
    std::vector<cplx> H{1.0};
    for (int i = 0; i < v; ++i) H = poly_mul(H, {0.5, 0.5});
    for (cplx y : poly_roots(P)) {
        // y = (2 - z - 1/z) / 4, keep the root inside the unit circle
        cplx b = 2.0 - 4.0 * y;
        cplx s = std::sqrt(b * b - 4.0);
        cplx z = 0.5 * (b + s);
        if (std::abs(z) > 1) z = 0.5 * (b - s);
        H = poly_mul(H, {-z, 1.0});
    }
    std::vector<double> h(H.size());
    double sum = 0;
    for (size_t k = 0; k < H.size(); ++k) sum += (h[k] = H[k].real());
    for (double& x : h) x *= std::sqrt(2.0) / sum;
    return h;
}

namespace {

double table_at(const std::vector<double>& tab, int S, int J, long num, int d) {
    if (d > J) throw std::invalid_argument("wavelet table: point finer than the cascade resolution");
    if (num <= 0 || num >= (static_cast<long>(S) << d)) return 0.0;
    return tab[static_cast<size_t>(num << (J - d))];
}

double cell_at(const std::vector<double>& cum, int J, long num, int d) {
    if (d + 1 > J) throw std::invalid_argument("wavelet table: cell finer than the cascade resolution");
    const long last = static_cast<long>(cum.size()) - 1;
    long lo = std::clamp((2 * num - 1) << (J - d - 1), 0L, last);
    long hi = std::clamp((2 * num + 1) << (J - d - 1), 0L, last);
    return cum[static_cast<size_t>(hi)] - cum[static_cast<size_t>(lo)];
}

std::vector<double> running_integral(const std::vector<double>& tab, int J) {
    std::vector<double> cum(tab.size(), 0.0);
    const double h = std::ldexp(1.0, -J);
    for (size_t k = 1; k < tab.size(); ++k) cum[k] = cum[k - 1] + 0.5 * h * (tab[k - 1] + tab[k]);
    return cum;
}

double table_interp(const std::vector<double>& tab, int S, int J, double x) {
    if (x <= 0 || x >= S) return 0.0;
    double u = x * std::ldexp(1.0, J);
    size_t i = static_cast<size_t>(u);
    double f = u - static_cast<double>(i);
    return (1 - f) * tab[i] + f * tab[std::min(i + 1, tab.size() - 1)];
}

}  // namespace

double WaveletBasis::phi_dyadic(long num, int d) const { return table_at(phi_tab, support(), J, num, d); }
double WaveletBasis::psi_dyadic(long num, int d) const { return table_at(psi_tab, support(), J, num, d); }
double WaveletBasis::phi_cell(long num, int d) const { return cell_at(phi_cum, J, num, d); }
double WaveletBasis::psi_cell(long num, int d) const { return cell_at(psi_cum, J, num, d); }
double WaveletBasis::phi(double x) const { return table_interp(phi_tab, support(), J, x); }
double WaveletBasis::psi(double x) const { return table_interp(psi_tab, support(), J, x); }

WaveletBasis build_basis(int v, int L, int J) {
    static const double kHoelder[] = {0, 0, 0.5500, 1.0878, 1.6179, 1.9690, 2.1891};
    if (v < 2 || v > 6) throw std::invalid_argument("build_basis: unsupported number of vanishing moments (need 2..6)");
    require(J >= 4 && J <= 20, "build_basis: cascade resolution J must lie in [4, 20]");
    WaveletBasis B;
    B.v = v;
    B.J = J;
    B.regularity = kHoelder[v];
    const int S = B.support();
    int Lmin = 0;
    while (S >= (1 << Lmin)) ++Lmin;
    if (L < 0) L = Lmin;
    require(L >= Lmin, "build_basis: base level too coarse for the support to fit in the torus");
    B.L = L;
    auto h = daubechies_filter(v);
    for (double x : h) B.a.push_back(std::sqrt(2.0) * x);
    // phi at the integers: eigenvector of M_ij = a_{2i - j} for eigenvalue 1, sum = 1
    const int nI = S + 1;
    std::vector<std::vector<double>> A(static_cast<size_t>(nI), std::vector<double>(static_cast<size_t>(nI), 0.0));
    std::vector<double> rhs(static_cast<size_t>(nI), 0.0);
    for (int i = 0; i < nI; ++i)
        for (int j = 0; j < nI; ++j) {
            int k = 2 * i - j;
            double aij = (k >= 0 && k <= S) ? B.a[static_cast<size_t>(k)] : 0.0;
            A[static_cast<size_t>(i)][static_cast<size_t>(j)] = aij - (i == j ? 1.0 : 0.0);
        }
    for (int j = 0; j < nI; ++j) A[static_cast<size_t>(nI - 1)][static_cast<size_t>(j)] = 1.0;
    rhs[static_cast<size_t>(nI - 1)] = 1.0;
    auto ints = solve(A, rhs);
    const size_t N = static_cast<size_t>(S) * (size_t(1) << J) + 1;
    B.phi_tab.assign(N, 0.0);
    for (int k = 0; k <= S; ++k) B.phi_tab[static_cast<size_t>(k) << J] = ints[static_cast<size_t>(k)];
    for (int j = 1; j <= J; ++j) {
        const size_t step = size_t(1) << (J - j);
        for (size_t idx = step; idx < N; idx += 2 * step) {
            // x = idx / 2^J, phi(x) = sum_k a_k phi(2x - k)
            double s = 0;
            for (int k = 0; k <= S; ++k) {
                long tgt = 2 * static_cast<long>(idx) - (static_cast<long>(k) << J);
                if (tgt > 0 && tgt < static_cast<long>(N)) s += B.a[static_cast<size_t>(k)] * B.phi_tab[static_cast<size_t>(tgt)];
            }
            B.phi_tab[idx] = s;
        }
    }
    B.psi_tab.assign(N, 0.0);
    for (size_t idx = 0; idx < N; ++idx) {
        double s = 0;
        for (int k = 0; k <= S; ++k) {
            long tgt = 2 * static_cast<long>(idx) - (static_cast<long>(k) << J);
            if (tgt > 0 && tgt < static_cast<long>(N)) {
                double bk = ((k % 2) ? -1.0 : 1.0) * B.a[static_cast<size_t>(S - k)];
                s += bk * B.phi_tab[static_cast<size_t>(tgt)];
            }
        }
        B.psi_tab[idx] = s;
    }
    B.phi_cum = running_integral(B.phi_tab, J);
    B.psi_cum = running_integral(B.psi_tab, J);
    return B;
}

double basis_eval(const WaveletBasis& B, int iota, int n, long p, long m, double t, double x) {
    double s = std::ldexp(1.0, n);
    double u = s * t - static_cast<double>(p);
    double w = s * x - static_cast<double>(m);
    w -= s * std::floor(w / s);  // periodize: representative in [0, 2^n)
    double F = (iota >= 2) ? B.psi(u) : B.phi(u);
    double G = (iota % 2) ? B.psi(w) : B.phi(w);
    return s * F * G;
}

double CoeffTable::get(int iota, int n, long p, long m) const {
    const Level& lv = level(n);
    if (p < lv.p_lo || p > lv.p_hi) return 0.0;
    long M = 1L << n;
    m = ((m % M) + M) % M;
    return lv.c[iota][static_cast<size_t>((p - lv.p_lo) * M + m)];
}

double& CoeffTable::ref(int iota, int n, long p, long m) {
    Level& lv = levels[static_cast<size_t>(n - n_min)];
    long M = 1L << n;
    m = ((m % M) + M) % M;
    if (p < lv.p_lo || p > lv.p_hi) throw std::out_of_range("CoeffTable: position outside the table");
    return lv.c[iota][static_cast<size_t>((p - lv.p_lo) * M + m)];
}

CoeffTable empty_table(const WaveletBasis& B, double T1, int n_min, int n_max) {
    if (n_min < 0) n_min = B.L;
    require(n_max >= n_min, "coefficient table: need n_min <= n_max");
    require(T1 >= 0, "coefficient table: T1 must be >= 0");
    CoeffTable c;
    c.n_min = n_min;
    c.n_max = n_max;
    c.T1 = T1;
    for (int n = n_min; n <= n_max; ++n) {
        CoeffTable::Level lv;
        long P = static_cast<long>(std::floor((T1 + 1.0) * std::ldexp(1.0, n) + 1e-9));
        lv.p_lo = -P;
        lv.p_hi = P;
        size_t sz = static_cast<size_t>(2 * P + 1) << n;
        for (auto& v : lv.c) v.assign(sz, 0.0);
        c.levels.push_back(std::move(lv));
    }
    return c;
}

namespace {

int dyadic_exponent(double h, const char* what) {
    int e = static_cast<int>(std::lround(-std::log2(h)));
    if (e < 0 || std::abs(std::ldexp(1.0, -e) - h) > 1e-15 * h)
        throw std::invalid_argument(std::string(what) + " must be a power of 1/2 for dyadic evaluation");
    return e;
}

struct LevelGeometry {
    int Nt, Nx, dt_, dx_;  // exponents: dt = 2^-Nt, dx = 2^-Nx
};

LevelGeometry geometry(const SpaceTimeGrid& g, const WaveletBasis& B, int n) {
    LevelGeometry G{};
    G.Nt = dyadic_exponent(g.dt, "time step");
    G.Nx = dyadic_exponent(g.dx(), "space step");
    if (G.Nt - n >= B.J || G.Nx - n >= B.J) throw std::invalid_argument("wavelet level finer grid than cascade resolution");
    return G;
}

// cell integrals of F over [num - 1/2, num + 1/2] / 2^d for num = 0..span
void cell_vectors(const WaveletBasis& B, int d, std::vector<double>& fphi, std::vector<double>& fpsi) {
    const long span = static_cast<long>(B.support()) << d;
    fphi.resize(static_cast<size_t>(span + 1));
    fpsi.resize(static_cast<size_t>(span + 1));
    for (long q = 0; q <= span; ++q) {
        fphi[static_cast<size_t>(q)] = B.phi_cell(q, d);
        fpsi[static_cast<size_t>(q)] = B.psi_cell(q, d);
    }
}

}  // namespace

CoeffTable analyze(const GridField& X, const WaveletBasis& B, double T1, int n_max, int n_min) {
    const auto& g = X.grid;
    if (n_min < 0) n_min = B.L;
    const double h = std::max(g.dt, g.dx());
    if (std::ldexp(1.0, -n_max) < 4.0 * h - 1e-15)
        throw std::invalid_argument("analyze: level " + std::to_string(n_max) + " is under-resolved (need 2^-n >= 4 grid cells)");
    CoeffTable c = empty_table(B, T1, n_min, n_max);
    const int S = B.support();
    const int nx = g.n_x;
    for (int n = n_min; n <= n_max; ++n) {
        LevelGeometry G = geometry(g, B, n);
        const int dT = G.Nt - n, dX = G.Nx - n;
        const long M = 1L << n;
        auto& lv = c.levels[static_cast<size_t>(n - n_min)];
        // time range needed
        long i_first = (lv.p_lo << dT), i_last = ((lv.p_hi + S) << dT);
        if (i_first < g.i0 || i_last > g.i0 + g.n_t - 1)
            throw std::invalid_argument("analyze: grid does not cover the time supports for |p/2^n| <= T1 + 1");
        // row q of the support: cell integrals in time; spatial cell integrals by (j - offset) mod nx
        std::vector<double> fphi, fpsi, gphi, gpsi;
        cell_vectors(B, dT, fphi, fpsi);
        cell_vectors(B, dX, gphi, gpsi);
        const long span = static_cast<long>(gphi.size()) - 1;
        const long tlen = static_cast<long>(fphi.size());
        const double scale = std::ldexp(1.0, -n);
        parallel_for(lv.p_hi - lv.p_lo + 1, [&](long pi) {
            long p = lv.p_lo + pi;
            long ig_lo = p << dT;
            std::vector<double> Yphi(static_cast<size_t>(nx), 0.0), Ypsi(static_cast<size_t>(nx), 0.0);
            for (long q = 0; q < tlen; ++q) {
                double a = fphi[static_cast<size_t>(q)], b = fpsi[static_cast<size_t>(q)];
                if (a == 0.0 && b == 0.0) continue;
                const double* row = X.row(ig_lo + q - g.i0);
                for (int j = 0; j < nx; ++j) {
                    Yphi[static_cast<size_t>(j)] += a * row[j];
                    Ypsi[static_cast<size_t>(j)] += b * row[j];
                }
            }
            // x_j 2^{Nx} = j - nx/2; 2^n x_j - m = (j - nx/2 - m 2^{dX}) / 2^{dX}
            for (long m = 0; m < M; ++m) {
                double s[4] = {0, 0, 0, 0};
                long base = nx / 2 + (m << dX);
                for (long q = 0; q <= span; ++q) {
                    int j = static_cast<int>((base + q) % nx);
                    double gp = gphi[static_cast<size_t>(q)], gs = gpsi[static_cast<size_t>(q)];
                    s[0] += Yphi[static_cast<size_t>(j)] * gp;
                    s[1] += Yphi[static_cast<size_t>(j)] * gs;
                    s[2] += Ypsi[static_cast<size_t>(j)] * gp;
                    s[3] += Ypsi[static_cast<size_t>(j)] * gs;
                }
                for (int io = 0; io < 4; ++io) lv.c[io][static_cast<size_t>(pi * M + m)] = scale * s[io];
            }
        });
    }
    return c;
}

GridField synthesize(const CoeffTable& c, const WaveletBasis& B, const SpaceTimeGrid& grid) {
    GridField X = make_field(grid);
    const int nx = grid.n_x;
    for (int n = c.n_min; n <= c.n_max; ++n) {
        LevelGeometry G = geometry(grid, B, n);
        const int dT = G.Nt - n, dX = G.Nx - n;
        const long M = 1L << n;
        const auto& lv = c.level(n);
        std::vector<double> fphi, fpsi, gphi, gpsi;
        cell_vectors(B, dT, fphi, fpsi);
        cell_vectors(B, dX, gphi, gpsi);
        const long span = static_cast<long>(gphi.size()) - 1;
        const long tlen = static_cast<long>(fphi.size());
        const double amp = std::ldexp(1.0, G.Nt + G.Nx - n);  // 2^{-n} / (dt dx)
        for (long p = lv.p_lo; p <= lv.p_hi; ++p) {
            long pi = p - lv.p_lo;
            // spatial profiles Z_phi = sum_m (c0 phi_m + c1 psi_m), Z_psi = sum_m (c2 phi_m + c3 psi_m)
            std::vector<double> Zphi(static_cast<size_t>(nx), 0.0), Zpsi(static_cast<size_t>(nx), 0.0);
            bool any = false;
            for (long m = 0; m < M; ++m) {
                size_t k = static_cast<size_t>(pi * M + m);
                double c0 = lv.c[0][k], c1 = lv.c[1][k], c2 = lv.c[2][k], c3 = lv.c[3][k];
                if (c0 == 0 && c1 == 0 && c2 == 0 && c3 == 0) continue;
                any = true;
                long base = nx / 2 + (m << dX);
                for (long q = 0; q <= span; ++q) {
                    int j = static_cast<int>((base + q) % nx);
                    double gp = gphi[static_cast<size_t>(q)], gs = gpsi[static_cast<size_t>(q)];
                    Zphi[static_cast<size_t>(j)] += c0 * gp + c1 * gs;
                    Zpsi[static_cast<size_t>(j)] += c2 * gp + c3 * gs;
                }
            }
            if (!any) continue;
            long ig_lo = p << dT;
            for (long q = 0; q < tlen; ++q) {
                long i = ig_lo + q - grid.i0;
                if (i < 0 || i >= grid.n_t) continue;
                double a = fphi[static_cast<size_t>(q)] * amp, b = fpsi[static_cast<size_t>(q)] * amp;
                if (a == 0.0 && b == 0.0) continue;
                double* row = X.row(i);
                for (int j = 0; j < nx; ++j) row[j] += a * Zphi[static_cast<size_t>(j)] + b * Zpsi[static_cast<size_t>(j)];
            }
        }
    }
    return X;
}

CoeffTable synthetic_coefficients(const WaveletBasis& B, double alpha, int n_max, double T1, std::uint64_t seed,
                                  int n_min) {
    require(alpha < 0, "synthetic_coefficients: alpha must be negative");
    CoeffTable c = empty_table(B, T1, n_min < 0 ? B.L : n_min, n_max);
    for (int n = c.n_min; n <= n_max; ++n) {
        auto& lv = c.levels[static_cast<size_t>(n - c.n_min)];
        const double size = std::ldexp(1.0, -n) * std::pow(2.0, -n * alpha);
        for (int io = (n == c.n_min ? 0 : 1); io < 4; ++io) {
            auto rng = make_stream(seed, 0x5A7, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(io));
            std::bernoulli_distribution coin(0.5);
            for (double& v : lv.c[io]) v = coin(rng) ? size : -size;
        }
    }
    return c;
}

BesovEstimate besov_norm_wavelet(const CoeffTable& c, const WaveletBasis& B, double alpha) {
    if (!(alpha < 0)) throw std::invalid_argument("besov_norm_wavelet: alpha must be negative");
    if (B.regularity <= -alpha)
        throw std::invalid_argument("besov_norm_wavelet: inadmissible basis, regularity r <= -alpha");
    BesovEstimate e;
    e.alpha = alpha;
    std::vector<double> xs, ys;
    for (int n = c.n_min; n <= c.n_max; ++n) {
        const auto& lv = c.level(n);
        double mx = 0, ss = 0;
        size_t cnt = 0;
        for (int io = 0; io < 4; ++io) {
            if (io == 0 && n != c.n_min) continue;  // scaling functions only at the base level
            for (double v : lv.c[io]) {
                mx = std::max(mx, std::abs(v));
                if (io > 0) {
                    ss += v * v;
                    ++cnt;
                }
            }
        }
        double w = std::pow(2.0, n * (1 + alpha));
        e.levels.push_back(n);
        e.profile.push_back(w * mx);
        double rms = cnt ? std::sqrt(ss / static_cast<double>(cnt)) : 0.0;
        e.rms_profile.push_back(w * rms);
        e.value = std::max(e.value, w * mx);
        if (rms > 0) {
            xs.push_back(n);
            ys.push_back(std::log2(w * rms));
        }
    }
    if (xs.size() >= 2) e.rms_slope = linear_fit(xs, ys).slope;
    return e;
}

// ---------------------------------------------------------------- scan

double cm_norm(const TestFunction& f, int m, int n) {
    require(m >= 0 && m <= 2, "cm_norm: m must lie in [0, 2]");
    const double r = f.radius, h = 2 * r / n;
    double best = 0;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            double t = f.center.t - r + i * h, x = f.center.x - r + j * h;
            double v = f(t, x);
            best = std::max(best, std::abs(v));
            if (m >= 1) {
                best = std::max(best, std::abs((f(t + h, x) - f(t - h, x)) / (2 * h)));
                best = std::max(best, std::abs((f(t, x + h) - f(t, x - h)) / (2 * h)));
            }
            if (m >= 2) {
                best = std::max(best, std::abs((f(t + h, x) - 2 * v + f(t - h, x)) / (h * h)));
                best = std::max(best, std::abs((f(t, x + h) - 2 * v + f(t, x - h)) / (h * h)));
                best = std::max(best, std::abs((f(t + h, x + h) - f(t + h, x - h) - f(t - h, x + h) + f(t - h, x - h)) / (4 * h * h)));
            }
        }
    return best;
}

std::vector<TestFunction> probe_set(int m) {
    const double R = 0.25 / std::sqrt(2.0);
    auto ellipse = [](double a, double b) {
        return [a, b](double t, double x) { return bump_g(1.0 - (t / a) * (t / a) - (x / b) * (x / b)); };
    };
    std::vector<std::function<double(double, double)>> fs{
        ellipse(R, R),
        [R](double t, double x) { return (t / R) * bump_g(1.0 - (t * t + x * x) / (R * R)); },
        ellipse(R, R / 2),
        ellipse(R / 2, R),
    };
    std::vector<TestFunction> out;
    for (auto& fn : fs) {
        TestFunction g;
        g.f = fn;
        g.center = {0, 0};
        g.radius = 0.25;
        g.m = m;
        double c = cm_norm(g, m);
        g.f = [fn, c](double t, double x) { return fn(t, x) / c; };
        g.c_m_norm = 1.0;
        out.push_back(g);
    }
    return out;
}

BesovEstimate besov_norm_scan(const GridField& X, double alpha, const std::vector<TestFunction>& probes, const ScanOptions& opt) {
    if (probes.empty()) throw std::invalid_argument("besov_norm_scan: empty probe set");
    const auto& g = X.grid;
    const double h = std::max(g.dt, g.dx());
    int j_max = opt.j_max;
    if (j_max < 0) {
        j_max = opt.j_min;
        while (std::ldexp(1.0, -(j_max + 1)) * 0.25 >= 4 * h) ++j_max;
    }
    BesovEstimate e;
    e.alpha = alpha;
    for (int jl = opt.j_min; jl <= j_max; ++jl) {
        double delta = std::ldexp(1.0, -jl);
        double best = 0;
        for (const auto& p : probes) {
            PairingStencil st = make_stencil(p, delta, g.n_x, g.dt);
            long stride_t = std::max(1L, std::lround(delta / opt.stride_div / g.dt));
            int stride_x = std::max(1, static_cast<int>(std::lround(delta / opt.stride_div * g.n_x)));
            long i_lo = std::max(st.reach_t, static_cast<long>(std::ceil(opt.t_lo / g.dt - 1e-9)) - g.i0 + st.reach_t);
            long i_hi = std::min(g.n_t - 1 - st.reach_t, static_cast<long>(std::floor(opt.t_hi / g.dt + 1e-9)) - g.i0 - st.reach_t);
            for (long i = i_lo; i <= i_hi; i += stride_t)
                for (int j = 0; j < g.n_x; j += stride_x)
                    best = std::max(best, std::abs(apply_stencil(st, X, i, j)));
        }
        double val = std::pow(delta, -alpha) * best;
        e.levels.push_back(jl);
        e.profile.push_back(val);
        e.value = std::max(e.value, val);
    }
    return e;
}

// ---------------------------------------------------------------- partitions

namespace {
double chi_germ(double r) {
    double u = (r - 5.0 / 32) / (3.0 / 32);
    return bump_g(1.0 - u * u);
}
double theta_bump(double x) { return bump_g(1.0 - 4.0 * x * x); }
}  // namespace

double dyadic_germ(double r) {
    if (!(r > 1.0 / 16 && r < 0.25)) return 0.0;
    double c = chi_germ(r);
    if (c == 0.0) return 0.0;
    double s = 0;
    int lo = static_cast<int>(std::floor(std::log2(1.0 / (16 * r)))) - 1;
    int hi = static_cast<int>(std::ceil(std::log2(1.0 / (4 * r)))) + 1;
    for (int n = lo; n <= hi; ++n) s += chi_germ(std::ldexp(r, n));
    return c / s;
}

double dyadic_partition_eval(int n, double r) { return dyadic_germ(std::ldexp(r, n)); }

double spatial_bump(double x) {
    if (!(std::abs(x) < 0.5)) return 0.0;
    double th = theta_bump(x);
    if (th == 0.0) return 0.0;
    double s = 0;
    int k0 = static_cast<int>(std::floor(2 * x));
    for (int k = k0 - 2; k <= k0 + 2; ++k) s += theta_bump(x - 0.5 * k);
    return th / s;
}

double spatial_bump_eval(int n, double x) { return spatial_bump(std::ldexp(wrap_torus(x), n)); }

void write_coeff_csv(const std::string& path, const CoeffTable& c) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "iota,n,p,m,coeff\n" << std::setprecision(12);
    for (int n = c.n_min; n <= c.n_max; ++n) {
        const auto& lv = c.level(n);
        long M = 1L << n;
        for (int io = 0; io < 4; ++io)
            for (long p = lv.p_lo; p <= lv.p_hi; ++p)
                for (long m = 0; m < M; ++m) {
                    double v = lv.c[io][static_cast<size_t>((p - lv.p_lo) * M + m)];
                    if (v != 0.0) os << io << ',' << n << ',' << p << ',' << m << ',' << v << '\n';
                }
    }
}

}  // namespace fsl
