#include "fsl/schauder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>

namespace fsl {

namespace {

struct Node1 {
    double pos, w;
    long cell;  // local time index or torus column
};

// Gauss-Legendre nodes over [lo, hi] cut into grid cells of width h centred at origin + k h,
// with the cells further split at `splits`.
std::vector<Node1> cell_nodes(double lo, double hi, double origin, double h, std::vector<double> splits, int order) {
    std::vector<Node1> out;
    if (!(hi > lo)) return out;
    const GaussRule& g = gauss_rule(order);
    std::sort(splits.begin(), splits.end());
    long k_lo = static_cast<long>(std::floor((lo - origin) / h + 0.5));
    long k_hi = static_cast<long>(std::floor((hi - origin) / h + 0.5));
    for (long k = k_lo; k <= k_hi; ++k) {
        double a = std::max(lo, origin + (k - 0.5) * h), b = std::min(hi, origin + (k + 0.5) * h);
        if (!(b > a)) continue;
        std::vector<double> pts{a};
        for (double s : splits)
            if (s > a && s < b) pts.push_back(s);
        pts.push_back(b);
        for (size_t p = 0; p + 1 < pts.size(); ++p) {
            double m = 0.5 * (pts[p] + pts[p + 1]), r = 0.5 * (pts[p + 1] - pts[p]);
            for (size_t q = 0; q < g.nodes.size(); ++q) out.push_back({m + r * g.nodes[q], r * g.weights[q], k});
        }
    }
    return out;
}

std::vector<Node1> time_nodes(const SpaceTimeGrid& g, double lo, double hi, const std::vector<double>& splits, int order) {
    auto nodes = cell_nodes(lo, hi, 0.0, g.dt, splits, order);
    for (auto& n : nodes) {
        n.cell -= g.i0;
        if (n.cell < 0 || n.cell >= g.n_t) throw std::invalid_argument("pairing: grid does not cover the kernel's time support");
    }
    return nodes;
}

std::vector<Node1> space_nodes(const SpaceTimeGrid& g, double lo, double hi, const std::vector<double>& kinks, int order) {
    std::vector<double> splits;
    for (double k : kinks) {
        double k0 = wrap_torus(k);
        for (int r = -2; r <= 2; ++r)
            if (k0 + r > lo && k0 + r < hi) splits.push_back(k0 + r);
    }
    auto nodes = cell_nodes(lo, hi, -0.5, g.dx(), splits, order);
    for (auto& n : nodes) n.cell = ((n.cell % g.n_x) + g.n_x) % g.n_x;
    return nodes;
}

// breaks plus the midpoints between consecutive breaks (kinks of the distance function)
std::vector<double> time_splits(std::vector<double> breaks) {
    std::sort(breaks.begin(), breaks.end());
    std::vector<double> s = breaks;
    for (size_t i = 0; i + 1 < breaks.size(); ++i) s.push_back(0.5 * (breaks[i] + breaks[i + 1]));
    return s;
}

// Upsilon_{>= n}(d) = sum_{m >= n} phi_m(d)
double upsilon_from(int n, double d) {
    if (!(d > 0)) return 1.0;
    double s = 0;
    int lo = static_cast<int>(std::floor(std::log2(1.0 / (16 * d))));
    for (int m = lo; m < n; ++m) s += dyadic_partition_eval(m, d);
    return 1.0 - s;
}

}  // namespace

int resolved_level(const SpaceTimeGrid& g) {
    const double h = std::max(g.dt, g.dx());
    int n = 0;
    while (std::ldexp(1.0, -(n + 1)) / 16 >= h) ++n;
    require(std::ldexp(1.0, -n) / 16 >= h, "resolved_level: grid coarser than 1/16");
    return n;
}

PairingResult extended_pairing(const GridField& X, const PiecewiseKernel& K, const PairingOptions& opt) {
    const auto& g = X.grid;
    double s_lo = K.s_lo, s_hi = K.s_hi;
    std::vector<double> breaks = K.breaks;
    if (opt.x_plus) {
        if (s_lo < 0 && s_hi > 0) breaks.push_back(0.0);
        s_lo = std::max(s_lo, 0.0);
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    const int n_res = resolved_level(g);
    PairingResult r;
    for (int n = 0; n <= n_res; ++n) r.levels.push_back(n);
    r.level_terms.assign(static_cast<size_t>(n_res + 1), 0.0);
    std::vector<std::vector<double>> patch(static_cast<size_t>(n_res + 1));
    for (int n = 0; n <= n_res; ++n) patch[static_cast<size_t>(n)].assign(size_t(2) << n, 0.0);
    if (s_hi <= s_lo) return r;
    auto tn = time_nodes(g, s_lo, s_hi, time_splits(breaks), opt.order);
    auto yn = space_nodes(g, K.y_c - K.y_half, K.y_c + K.y_half, K.y_kinks, opt.order);
    for (const auto& a : tn) {
        double d = std::numeric_limits<double>::infinity();
        for (double b : breaks) d = std::min(d, std::abs(a.pos - b));
        // split 1 = sum_n phi_n(d) into levels, tail and remainder
        double wl[2] = {0, 0};
        int nl[2] = {-1, -1};
        double w_tail = 0, w_rem = 0, w_sum = 0;
        if (std::isinf(d)) {
            w_rem = w_sum = 1.0;
        } else {
            int m_lo = static_cast<int>(std::floor(std::log2(1.0 / (16 * d))));
            int cnt = 0;
            for (int m = m_lo; m <= m_lo + 3; ++m) {
                double ph = dyadic_partition_eval(m, d);
                if (ph == 0.0) continue;
                w_sum += ph;
                if (m < 0) w_rem += ph;
                else if (m > n_res) w_tail += ph;
                else if (cnt < 2) {
                    nl[cnt] = m;
                    wl[cnt++] = ph;
                }
            }
        }
        r.partition_error = std::max(r.partition_error, std::abs(w_sum - 1.0));
        const double* row = X.row(a.cell);
        for (const auto& b : yn) {
            double fv = K.f(a.pos, b.pos);
            if (fv == 0.0) continue;
            double v = row[b.cell] * fv * a.w * b.w;
            r.value += v;
            r.tail += w_tail * v;
            r.remainder += w_rem * v;
            for (int c = 0; c < 2; ++c) {
                if (nl[c] < 0) continue;
                const int n = nl[c];
                r.level_terms[static_cast<size_t>(n)] += wl[c] * v;
                const double step = std::ldexp(1.0, -(n + 1));
                const long P = 2L << n;
                double u = wrap_torus(b.pos) / step;
                long k0 = static_cast<long>(std::floor(u));
                for (long k = k0 - 1; k <= k0 + 2; ++k) {
                    double ps = spatial_bump_eval(n, b.pos - static_cast<double>(k) * step);
                    if (ps != 0.0) patch[static_cast<size_t>(n)][static_cast<size_t>(((k % P) + P) % P)] += wl[c] * ps * v;
                }
            }
        }
    }
    std::vector<double> xs, ys;
    for (int n = 0; n <= n_res; ++n) {
        double mx = 0;
        for (double p : patch[static_cast<size_t>(n)]) mx = std::max(mx, std::abs(p));
        r.max_patch.push_back(mx);
        double t = std::abs(r.level_terms[static_cast<size_t>(n)]);
        if (t > 0) {
            xs.push_back(n);
            ys.push_back(std::log2(t));
        }
    }
    if (xs.size() >= 3) r.decay_slope = linear_fit(xs, ys).slope;
    if (opt.require_decay && xs.size() >= 3 && r.decay_slope >= 0)
        throw std::runtime_error("extended_pairing: level terms do not decay (slope " + std::to_string(r.decay_slope) +
                                 "), the field is not of regularity above -1");
    return r;
}

double direct_pairing(const GridField& X, const PiecewiseKernel& K, bool x_plus, int order) {
    double s_lo = K.s_lo;
    std::vector<double> splits = K.breaks;
    if (x_plus) {
        splits.push_back(0.0);
        s_lo = std::max(s_lo, 0.0);
    }
    auto tn = time_nodes(X.grid, s_lo, K.s_hi, splits, order);
    auto yn = space_nodes(X.grid, K.y_c - K.y_half, K.y_c + K.y_half, K.y_kinks, order);
    double s = 0;
    for (const auto& a : tn) {
        const double* row = X.row(a.cell);
        for (const auto& b : yn) s += row[b.cell] * K.f(a.pos, b.pos) * a.w * b.w;
    }
    return s;
}

namespace {

void check_z(Point z) {
    if (!(z.t >= 0 && z.t <= 0.25)) throw std::invalid_argument("pair_q_plus: time of z must lie in [0, 1/4]");
}

// exact integral of q_z over [s_a, s_b] x [y_a, y_b]: spatial mass in closed form, graded GL in time
double q_box_integral(const KernelParams& prm, Point z, double s_a, double s_b, double y_a, double y_b) {
    s_b = std::min(s_b, z.t);
    if (!(s_b > s_a) || !(y_b > y_a)) return 0.0;
    auto f = [&](double s) {
        double r = z.t - s;
        return cutoff_H(r - prm.T0) * heat_kernel_mass(r, z.x - y_b, z.x - y_a);
    };
    if (z.t - s_b < 2 * (s_b - s_a)) return integrate_graded(f, s_a, s_b, s_b, 30, 7);
    return integrate_gl(f, s_a, s_b, 1, 7);
}

}  // namespace

QPlusResult pair_q_plus(const GridField& X, const KernelParams& prm, Point z, int order) {
    check_z(z);
    QPlusResult res;
    if (z.t == 0.0) return res;
    const auto& g = X.grid;
    const int n_res = resolved_level(g);
    auto q = [&](double s, double y) { return s < z.t ? truncated_kernel_q(z.t - s, z.x - y, prm) : 0.0; };
    auto dist = [&](double s, double y) { return (z.t - s) + torus_dist(z.x - y); };
    PairingOptions po;
    po.order = order;
    po.x_plus = true;
    for (int n = 0; n <= n_res; ++n) {
        const double R = std::ldexp(1.0, -n) / 4;
        PiecewiseKernel K;
        K.f = [&, n](double s, double y) {
            double v = q(s, y);
            return v == 0.0 ? 0.0 : v * dyadic_partition_eval(n, dist(s, y));
        };
        K.breaks = {z.t};
        K.s_lo = z.t - R;
        K.s_hi = z.t;
        K.y_c = z.x;
        K.y_half = std::min(R, 0.5);
        K.y_kinks = {z.x};
        res.levels.push_back(n);
        res.level_terms.push_back(extended_pairing(X, K, po).value);
    }
    {
        PiecewiseKernel K;
        K.f = [&](double s, double y) {
            double v = q(s, y);
            return v == 0.0 ? 0.0 : v * (1.0 - upsilon_from(0, dist(s, y)));
        };
        K.breaks = {z.t};
        K.s_lo = 0;
        K.s_hi = z.t;
        K.y_c = z.x;
        K.y_half = 0.5;
        K.y_kinks = {z.x};
        res.remainder = extended_pairing(X, K, po).value;
    }
    {
        // q Upsilon_{> n_res} = q - q (1 - Upsilon_{> n_res}) on the box around z
        const double R = std::ldexp(1.0, -n_res) / 4;
        const double s_a = std::max(0.0, z.t - R);
        std::vector<double> br{z.t};
        if (z.t - R < 0) br.push_back(0.0);
        auto tn = time_nodes(g, s_a, z.t, time_splits(br), order);
        auto yn = space_nodes(g, z.x - R, z.x + R, {z.x}, order);
        double sub = 0;
        for (const auto& a : tn) {
            const double* row = X.row(a.cell);
            for (const auto& b : yn) {
                double v = q(a.pos, b.pos);
                if (v != 0.0) sub += row[b.cell] * v * (1.0 - upsilon_from(n_res + 1, dist(a.pos, b.pos))) * a.w * b.w;
            }
        }
        double exact = 0;
        const double dx = g.dx();
        long i_lo = static_cast<long>(std::floor(s_a / g.dt + 0.5)), i_hi = static_cast<long>(std::floor(z.t / g.dt + 0.5));
        long j_lo = static_cast<long>(std::floor((z.x - R + 0.5) / dx + 0.5)), j_hi = static_cast<long>(std::floor((z.x + R + 0.5) / dx + 0.5));
        for (long i = i_lo; i <= i_hi; ++i) {
            long li = i - g.i0;
            if (li < 0 || li >= g.n_t) throw std::invalid_argument("pair_q_plus: grid does not cover [0, t]");
            double sa = std::max(s_a, (i - 0.5) * g.dt), sb = std::min(z.t, (i + 0.5) * g.dt);
            for (long j = j_lo; j <= j_hi; ++j) {
                double ya = std::max(z.x - R, -0.5 + (j - 0.5) * dx), yb = std::min(z.x + R, -0.5 + (j + 0.5) * dx);
                int jc = static_cast<int>(((j % g.n_x) + g.n_x) % g.n_x);
                exact += X.at(li, jc) * q_box_integral(prm, z, sa, sb, ya, yb);
            }
        }
        res.tail = exact - sub;
    }
    res.value = res.tail + res.remainder;
    for (double t : res.level_terms) res.value += t;
    return res;
}

double pair_q_direct(const GridField& X, const KernelParams& prm, Point z) {
    check_z(z);
    if (z.t == 0.0) return 0.0;
    const auto& g = X.grid;
    const double dx = g.dx();
    long i_lo = 0, i_hi = static_cast<long>(std::floor(z.t / g.dt + 0.5));
    if (g.i0 > i_lo || g.i0 + g.n_t - 1 < i_hi) throw std::invalid_argument("pair_q_direct: grid does not cover [0, t]");
    std::vector<double> acc(static_cast<size_t>(i_hi - i_lo + 1), 0.0);
    parallel_for(i_hi - i_lo + 1, [&](long k) {
        long i = i_lo + k;
        double sa = std::max(0.0, (i - 0.5) * g.dt), sb = std::min(z.t, (i + 0.5) * g.dt);
        const double* row = X.row(i - g.i0);
        double s = 0;
        for (int j = 0; j < g.n_x; ++j) {
            double yc = g.x(j);
            s += row[j] * q_box_integral(prm, z, sa, sb, yc - 0.5 * dx, yc + 0.5 * dx);
        }
        acc[static_cast<size_t>(k)] = s;
    });
    double u = 0;
    for (double a : acc) u += a;
    return u;
}

GridField synthetic_field(double alpha, const SchauderConfig& cfg, std::uint64_t seed) {
    auto B = build_basis(cfg.v);
    auto grid = make_grid(cfg.n_x, cfg.dt, 0.0, cfg.t_max);
    const double h = std::max(cfg.dt, 1.0 / cfg.n_x);
    int n_max = B.L;
    while (std::ldexp(1.0, -(n_max + 1)) >= 4 * h) ++n_max;
    return synthesize(synthetic_coefficients(B, alpha, n_max, 0.0, seed, cfg.synth_n_min), B, grid);
}

ExponentFit schauder_exponent(const GridField& X, const SchauderConfig& cfg, double alpha_nominal, double kappa) {
    require(cfg.n_t_pts >= 1 && cfg.n_x_pts >= 1, "schauder_exponent: empty z lattice");
    ExponentFit fit;
    for (int a = 0; a < cfg.n_t_pts; ++a)
        for (int b = 0; b < cfg.n_x_pts; ++b) {
            double t = cfg.n_t_pts == 1 ? cfg.t_max : cfg.t_min + (cfg.t_max - cfg.t_min) * a / (cfg.n_t_pts - 1);
            fit.z.push_back({t, -0.5 * cfg.x_span + cfg.x_span * b / cfg.n_x_pts});
        }
    fit.u.assign(fit.z.size(), 0.0);
    auto eval = [&](long k) {
        const Point& z = fit.z[static_cast<size_t>(k)];
        fit.u[static_cast<size_t>(k)] = cfg.direct ? pair_q_direct(X, cfg.prm, z) : pair_q_plus(X, cfg.prm, z, cfg.order).value;
    };
    if (cfg.direct) {
        for (long k = 0; k < static_cast<long>(fit.z.size()); ++k) eval(k);
    } else {
        parallel_for(static_cast<long>(fit.z.size()), eval);
    }
    // pairs are pooled in half-octave distance bins: log of the RMS increment against the mean
    // log distance, one point per bin, so single near-zero increments and the many long pairs of
    // the lattice do not steer the slope
    struct Bin {
        double lx = 0, du2 = 0;
        long n = 0;
    };
    std::map<int, Bin> bins;
    const double e = 1 + alpha_nominal - kappa;
    for (size_t i = 0; i < fit.z.size(); ++i)
        for (size_t j = i + 1; j < fit.z.size(); ++j) {
            double d = std::abs(fit.z[i].t - fit.z[j].t) + torus_dist(fit.z[i].x - fit.z[j].x);
            if (d < cfg.d_lo || d > cfg.d_hi) continue;
            double du = std::abs(fit.u[i] - fit.u[j]);
            fit.max_ratio = std::max(fit.max_ratio, du / std::pow(d, e));
            Bin& b = bins[static_cast<int>(std::floor(2 * std::log2(d / cfg.d_lo)))];
            b.lx += std::log(d);
            b.du2 += du * du;
            ++b.n;
            ++fit.pairs;
        }
    std::vector<double> lx, ly;
    for (const auto& [k, b] : bins) {
        if (b.du2 <= 0) continue;
        lx.push_back(b.lx / static_cast<double>(b.n));
        ly.push_back(0.5 * std::log(b.du2 / static_cast<double>(b.n)));
    }
    if (lx.size() < 3) throw std::invalid_argument("schauder_exponent: degenerate pair set (fewer than 3 distance bins)");
    auto lf = linear_fit(lx, ly);
    fit.slope = lf.slope;
    fit.intercept = lf.intercept;
    return fit;
}

void write_u_csv(const std::string& path, const ExponentFit& fit) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "t,x,u\n" << std::setprecision(12);
    for (size_t k = 0; k < fit.z.size(); ++k) os << fit.z[k].t << ',' << fit.z[k].x << ',' << fit.u[k] << '\n';
}

}  // namespace fsl
