#include "fsl/dpd_solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "fsl/harness.hpp"

namespace fsl {

void validate(const SolverConfig& cfg) {
    const double g2 = cfg.gamma * cfg.gamma;
    if (!(g2 < kPi / 7)) throw std::invalid_argument("gamma^2 >= pi/7 violates the admissible range gamma^2 < pi/7");
    if (!(cfg.alpha > -0.5 && cfg.alpha < 0)) throw std::invalid_argument("alpha must lie in (-1/2, 0)");
    if (cfg.gamma != 0.0) {
        double ag = alpha_gamma(cfg.gamma);
        if (!(cfg.alpha < ag))
            throw std::invalid_argument("alpha = " + std::to_string(cfg.alpha) + " violates alpha < alpha_gamma = " +
                                        std::to_string(ag));
    }
    if (!(cfg.kappa > 0 && 2 * cfg.kappa < 1 + 2 * cfg.alpha))
        throw std::invalid_argument("kappa must satisfy 0 < 2 kappa < 1 + 2 alpha");
    const double b = cfg.beta();
    if (!(b > 0 && b < 1 && cfg.alpha + b > 0)) throw std::invalid_argument("beta = alpha + 1 - 2 kappa must lie in (0, 1) with alpha + beta > 0");
    if (!(cfg.prm.T0 >= 1)) throw std::invalid_argument("T0 must be >= 1");
    if (!(cfg.T > 0 && cfg.T <= std::min(cfg.prm.T0, 0.25))) throw std::invalid_argument("horizon T must lie in (0, min(T0, 1/4)]");
    require(cfg.eps > 0 && cfg.eps <= 1, "eps must lie in (0, 1]");
    require(cfg.n_x >= 8 && is_pow2(cfg.n_x), "n_x must be a power of two >= 8");
    require(cfg.dt > 0 && std::abs(cfg.T / cfg.dt - std::round(cfg.T / cfg.dt)) < 1e-9, "T must be a multiple of dt");
    require(cfg.u0.empty() || static_cast<int>(cfg.u0.size()) == cfg.n_x, "u0 must have n_x samples");
    require(cfg.max_iter >= 1 && cfg.tol > 0, "need max_iter >= 1 and tol > 0");
}

namespace {

std::vector<double> initial_row(const SolverConfig& cfg) {
    return cfg.u0.empty() ? std::vector<double>(static_cast<size_t>(cfg.n_x), 0.0) : cfg.u0;
}

GridField crop(const GridField& f, long n_rows) {
    require(n_rows <= f.grid.n_t, "crop: not enough rows");
    GridField out;
    out.grid = f.grid;
    out.grid.n_t = n_rows;
    out.values.assign(f.values.begin(), f.values.begin() + n_rows * f.grid.n_x);
    return out;
}

double lambda_of(int idx, int n) { return kTwoPi * std::abs(signed_mode(idx, n)); }

}  // namespace

NoiseFields sample_noise_fields(const SolverConfig& cfg, std::uint64_t seed, bool negate) {
    SamplerOptions so;
    so.want_xi = true;
    so.want_R = true;
    FieldSampler fs(cfg.n_x, cfg.dt, 0.0, cfg.T, cfg.prm, {Channel{cfg.mollifier, cfg.eps}}, so);
    auto ch = fs.sample(seed, negate);
    NoiseFields nf;
    nf.v = std::move(ch[0].v);
    nf.xi = std::move(ch[0].xi);
    nf.R = std::move(ch[0].R);
    nf.q_eps0 = fs.discrete_variance(0);
    return nf;
}

Forcing make_forcing(const SolverConfig& cfg, const NoiseFields& nf) {
    Forcing F;
    F.X_plus = gmc_weights(nf.v, cfg.gamma, nf.q_eps0).weights;
    if (cfg.mode == Nonlinearity::sinh) F.X_minus = gmc_weights(nf.v, -cfg.gamma, nf.q_eps0).weights;
    F.R = nf.R;
    return F;
}

namespace {

constexpr int kHalo = 4;

FieldSampler remainder_sampler(const SolverConfig& cfg) {
    const double h = cfg.dt / remainder_refinement(cfg);
    SamplerOptions so;
    so.want_xi = true;
    so.want_R = true;
    return FieldSampler(cfg.n_x, h, -kHalo * h, cfg.T + kHalo * h, cfg.prm, {Channel{cfg.mollifier, cfg.eps}}, so);
}

RemainderCheck compare_remainders(const SolverConfig& cfg, const ChannelFields& ch, double tol) {
    static const double c[kHalo] = {4.0 / 5, -1.0 / 5, 4.0 / 105, -1.0 / 280};
    const int r = remainder_refinement(cfg);
    const double h = cfg.dt / r;
    const auto& V = ch.v;
    const int nx = cfg.n_x;
    auto g = make_grid(nx, cfg.dt, 0.0, cfg.T);
    const long nt = g.n_t;
    require((nt - 1) * r + 1 + 2 * kHalo <= V.grid.n_t, "remainder_R: window mismatch");
    RemainderCheck rc;
    rc.R_ops = make_field(g);
    rc.R_kernel = make_field(g);
    std::vector<cplx> co(static_cast<size_t>(nx));
    std::vector<double> half(static_cast<size_t>(nx));
    double num = 0, den = 0;
    for (long i = 0; i < nt; ++i) {
        const long iv = i * r + kHalo;
        samples_to_coeffs(V.row(iv), co.data(), nx);
        for (int k = 0; k < nx; ++k) co[static_cast<size_t>(k)] *= lambda_of(k, nx);
        coeffs_to_samples(co.data(), half.data(), nx);
        double* out = rc.R_ops.row(i);
        for (int j = 0; j < nx; ++j) {
            double d = 0;
            for (int m = 1; m <= kHalo; ++m) d += c[m - 1] * (V.at(iv + m, j) - V.at(iv - m, j));
            out[j] = d / h + half[static_cast<size_t>(j)] - ch.xi.at(iv, j);
            double rv = ch.R.at(iv, j);
            rc.R_kernel.at(i, j) = rv;
            num += (out[j] - rv) * (out[j] - rv);
            den += rv * rv;
        }
    }
    rc.rel_l2 = den > 0 ? std::sqrt(num / den) : std::sqrt(num);
    if (rc.rel_l2 > tol)
        throw std::runtime_error("remainder_R: the two computations differ by " + std::to_string(rc.rel_l2) +
                                 " relative L2 (tolerance " + std::to_string(tol) + ")");
    return rc;
}

}  // namespace

int remainder_refinement(const SolverConfig& cfg) {
    // the difference route needs about 128 samples per eps in time
    return std::max(1, static_cast<int>(std::ceil(cfg.dt * 128 / cfg.eps - 1e-9)));
}

SpaceTimeGrid remainder_noise_grid(const SolverConfig& cfg) {
    auto fs = remainder_sampler(cfg);
    SpaceTimeGrid g = fs.window();
    g.i0 = fs.noise_first() - 1;
    g.n_t = fs.noise_last() + 1 - g.i0 + 1;
    return g;
}

RemainderCheck remainder_R(const SolverConfig& cfg, std::uint64_t seed, double tol) {
    return compare_remainders(cfg, remainder_sampler(cfg).sample(seed)[0], tol);
}

RemainderCheck remainder_R(const SolverConfig& cfg, const NoiseRealization& xi, double tol) {
    return compare_remainders(cfg, remainder_sampler(cfg).from_noise(xi)[0], tol);
}

GridField semigroup_apply(const SolverConfig& cfg, double T) {
    const int nx = cfg.n_x;
    auto g = make_grid(nx, cfg.dt, 0.0, T);
    GridField out = make_field(g);
    auto u0 = initial_row(cfg);
    std::vector<cplx> c0(static_cast<size_t>(nx)), c(static_cast<size_t>(nx));
    samples_to_coeffs(u0.data(), c0.data(), nx);
    std::copy(u0.begin(), u0.end(), out.row(0));
    for (long i = 1; i < g.n_t; ++i) {
        for (int k = 0; k < nx; ++k) c[static_cast<size_t>(k)] = c0[static_cast<size_t>(k)] * std::exp(-lambda_of(k, nx) * g.t(i));
        coeffs_to_samples(c.data(), out.row(i), nx);
    }
    return out;
}

GridField psi_map(const SolverConfig& cfg, const Forcing& F, const GridField& w) {
    const auto& g = w.grid;
    const int nx = g.n_x;
    const long nt = g.n_t;
    require(g.i0 == 0 && nx == cfg.n_x && std::abs(g.dt - cfg.dt) < 1e-15, "psi_map: w must live on the solver grid from t = 0");
    require(F.X_plus.grid.n_t >= nt && F.R.grid.n_t >= nt && F.X_plus.grid.i0 == 0 && F.R.grid.i0 == 0,
            "psi_map: forcing does not cover the horizon");
    const bool sinh_mode = cfg.mode == Nonlinearity::sinh;
    if (sinh_mode) require(F.X_minus.grid.n_t >= nt, "psi_map: sinh mode needs X_minus");
    auto u0 = initial_row(cfg);
    double scale = 1;
    for (double v : u0) scale = std::max(scale, std::abs(v));
    for (int j = 0; j < nx; ++j)
        if (std::abs(w.at(0, j) - u0[static_cast<size_t>(j)]) > 1e-12 * scale)
            throw std::invalid_argument("psi_map: initial-slice mismatch, w(0) != u0");
    const double gm = cfg.gamma;
    // Fourier coefficients of N + R per time
    std::vector<std::vector<cplx>> C(static_cast<size_t>(nt), std::vector<cplx>(static_cast<size_t>(nx)));
    std::vector<double> row(static_cast<size_t>(nx));
    for (long i = 0; i < nt; ++i) {
        for (int j = 0; j < nx; ++j) {
            double wv = w.at(i, j);
            double n = sinh_mode ? 0.5 * (F.X_plus.at(i, j) * std::exp(gm * wv) - F.X_minus.at(i, j) * std::exp(-gm * wv))
                                 : F.X_plus.at(i, j) * std::exp(gm * wv);
            row[static_cast<size_t>(j)] = n + F.R.at(i, j);
        }
        samples_to_coeffs(row.data(), C[static_cast<size_t>(i)].data(), nx);
    }
    // exact integral of e^{-lam (dt - s)} against the linear interpolant on one step:
    // a weights the left value, b the right value
    const double dt = cfg.dt;
    std::vector<double> E(static_cast<size_t>(nx)), A(static_cast<size_t>(nx)), Bw(static_cast<size_t>(nx));
    for (int k = 0; k < nx; ++k) {
        double lam = lambda_of(k, nx), x = lam * dt;
        size_t s = static_cast<size_t>(k);
        if (x == 0.0) {
            E[s] = 1;
            A[s] = Bw[s] = 0.5 * dt;
        } else {
            E[s] = std::exp(-x);
            double phi1 = -std::expm1(-x) / lam;
            Bw[s] = (x + std::expm1(-x)) / (lam * x);
            A[s] = phi1 - Bw[s];
        }
    }
    GridField out = make_field(g);
    std::copy(u0.begin(), u0.end(), out.row(0));
    std::vector<cplx> W(static_cast<size_t>(nx));
    samples_to_coeffs(u0.data(), W.data(), nx);
    for (long i = 0; i + 1 < nt; ++i) {
        const auto& c0 = C[static_cast<size_t>(i)];
        const auto& c1 = C[static_cast<size_t>(i + 1)];
        for (int k = 0; k < nx; ++k) {
            size_t s = static_cast<size_t>(k);
            W[s] = E[s] * W[s] - (A[s] * c0[s] + Bw[s] * c1[s]);
        }
        coeffs_to_samples(W.data(), out.row(i + 1), nx);
    }
    return out;
}

SolutionBundle picard_solve(const SolverConfig& cfg, const Forcing& F) {
    validate(cfg);
    const double b = cfg.beta();
    long n_steps = std::lround(cfg.T / cfg.dt);
    int halvings = 0;
    for (;;) {
        if (n_steps < 4)
            throw std::runtime_error("picard_solve: no contracting horizon found down to T = " + std::to_string(4 * cfg.dt));
        const double T = static_cast<double>(n_steps) * cfg.dt;
        Forcing Fs;
        Fs.X_plus = crop(F.X_plus, n_steps + 1);
        if (cfg.mode == Nonlinearity::sinh) Fs.X_minus = crop(F.X_minus, n_steps + 1);
        Fs.R = crop(F.R, n_steps + 1);
        SolutionBundle sb;
        sb.tau_used = T;
        sb.halvings = halvings;
        GridField w = semigroup_apply(cfg, T);
        double norm_w = holder_norm(w, b, cfg.holder);
        for (int k = 0; k < cfg.max_iter; ++k) {
            GridField psi = psi_map(cfg, Fs, w);
            GridField diff = psi;
            for (size_t q = 0; q < diff.values.size(); ++q) diff.values[q] -= w.values[q];
            double d = holder_norm(diff, b, cfg.holder);
            double norm_psi = holder_norm(psi, b, cfg.holder);
            if (k == 0) sb.ball_B = 2 * std::max(norm_w, norm_psi);
            if (norm_w <= sb.ball_B && norm_psi > sb.ball_B) ++sb.ball_violations;
            sb.norms.push_back(norm_w);
            if (!sb.residuals.empty()) sb.ratios.push_back(d / sb.residuals.back());
            sb.residuals.push_back(d);
            if (!std::isfinite(d) || d > 1e6) break;
            if (d < cfg.tol) {
                sb.w = std::move(w);
                sb.iterations = k;
                sb.final_residual = d;
                return sb;
            }
            size_t nr = sb.ratios.size();
            if (nr >= 2 && sb.ratios[nr - 1] > cfg.halve_ratio && sb.ratios[nr - 2] > cfg.halve_ratio) break;
            w = std::move(psi);
            norm_w = norm_psi;
        }
        // stalled, blown up or out of iterations: shorter horizon
        n_steps /= 2;
        ++halvings;
    }
}

SolutionBundle full_solution(const SolverConfig& cfg, const NoiseFields& nf) {
    SolutionBundle sol = picard_solve(cfg, make_forcing(cfg, nf));
    sol.u = sol.w;
    for (size_t q = 0; q < sol.u.values.size(); ++q) sol.u.values[q] += nf.v.values[q];
    return sol;
}

SolutionBundle full_solution(const SolverConfig& cfg, std::uint64_t seed, bool negate) {
    validate(cfg);
    return full_solution(cfg, sample_noise_fields(cfg, seed, negate));
}

WeakResidual weak_residual(const SolverConfig& cfg, const NoiseFields& nf, const SolutionBundle& sol) {
    const auto& g = sol.u.grid;
    const long nt = g.n_t;
    const int nx = g.n_x;
    const double T = g.t(nt - 1);
    const double h = 0.5 * T;
    Forcing F = make_forcing(cfg, nf);
    const bool sinh_mode = cfg.mode == Nonlinearity::sinh;
    struct Mode {
        int m;
        bool sine;
    };
    const Mode modes[5] = {{0, false}, {1, false}, {1, true}, {2, false}, {3, true}};
    WeakResidual wr;
    const double cell = g.dt / nx;
    for (const Mode& md : modes) {
        double t_u = 0, t_lap = 0, t_n = 0, t_xi = 0;
        for (long i = 0; i < nt; ++i) {
            double s = (g.t(i) - h) / h;
            double y = 1 - s * s;
            double a = bump_g(y);
            double da = y > 0 ? a / (y * y) * (-2 * s) / h : 0.0;
            if (a == 0.0 && da == 0.0) continue;
            for (int j = 0; j < nx; ++j) {
                double x = g.x(j);
                double ph = md.sine ? std::sin(kTwoPi * md.m * x) : std::cos(kTwoPi * md.m * x);
                double u = sol.u.at(i, j), w = sol.w.at(i, j);
                double n = sinh_mode ? 0.5 * (F.X_plus.at(i, j) * std::exp(cfg.gamma * w) - F.X_minus.at(i, j) * std::exp(-cfg.gamma * w))
                                     : F.X_plus.at(i, j) * std::exp(cfg.gamma * w);
                double a1 = -u * da * ph, a2 = u * kTwoPi * md.m * a * ph, a3 = n * a * ph, a4 = -nf.xi.at(i, j) * a * ph;
                t_u += a1;
                t_lap += a2;
                t_n += a3;
                t_xi += a4;
            }
        }
        double r = (t_u + t_lap + t_n + t_xi) * cell;
        double sc = (std::abs(t_u) + std::abs(t_lap) + std::abs(t_n) + std::abs(t_xi)) * cell;
        wr.residual.push_back(r);
        wr.scale.push_back(sc);
        wr.worst_relative = std::max(wr.worst_relative, sc > 0 ? std::abs(r) / sc : std::abs(r));
    }
    return wr;
}

std::vector<EpsStudyRow> eps_convergence_study(const SolverConfig& base, const std::vector<double>& eps_list,
                                               const std::vector<std::uint64_t>& seeds, double swap_eps, const Mollifier& alt) {
    require(eps_list.size() >= 2, "eps_convergence_study: need at least two eps");
    auto swap_it = std::find_if(eps_list.begin(), eps_list.end(), [&](double e) { return std::abs(e - swap_eps) < 1e-15; });
    require(swap_it != eps_list.end(), "eps_convergence_study: swap_eps must be one of eps_list");
    const size_t swap_idx = static_cast<size_t>(swap_it - eps_list.begin());
    std::vector<Channel> channels;
    for (double e : eps_list) channels.push_back(Channel{base.mollifier, e});
    channels.push_back(Channel{alt, swap_eps});
    SamplerOptions so;
    so.want_R = true;
    FieldSampler fs(base.n_x, base.dt, 0.0, base.T, base.prm, channels, so);
    std::vector<EpsStudyRow> rows;
    const double b = base.beta();
    for (std::uint64_t seed : seeds) {
        auto ch = fs.sample(seed);
        std::vector<SolutionBundle> sols;
        for (size_t c = 0; c < channels.size(); ++c) {
            SolverConfig cfg = base;
            cfg.eps = channels[c].eps;
            cfg.mollifier = channels[c].mollifier;
            NoiseFields nf;
            nf.v = std::move(ch[c].v);
            nf.R = std::move(ch[c].R);
            nf.q_eps0 = fs.discrete_variance(c);
            sols.push_back(picard_solve(cfg, make_forcing(cfg, nf)));
        }
        EpsStudyRow row;
        row.seed = seed;
        row.eps = eps_list;
        row.tau = std::numeric_limits<double>::infinity();
        for (const auto& s : sols) row.tau = std::min(row.tau, s.tau_used);
        const long n = std::lround(row.tau / base.dt) + 1;
        auto dist = [&](const GridField& a, const GridField& bb) {
            GridField d = crop(a, n);
            GridField e = crop(bb, n);
            for (size_t q = 0; q < d.values.size(); ++q) d.values[q] -= e.values[q];
            return holder_norm(d, b, base.holder);
        };
        for (size_t k = 0; k + 1 < eps_list.size(); ++k) row.dist.push_back(dist(sols[k].w, sols[k + 1].w));
        row.decreasing = true;
        for (size_t k = 1; k < row.dist.size(); ++k) row.decreasing = row.decreasing && row.dist[k] < row.dist[k - 1];
        row.swap_dist = dist(sols[swap_idx].w, sols.back().w);
        rows.push_back(std::move(row));
    }
    return rows;
}

double sup_norm(const GridField& f) {
    double m = 0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
}

double holder_seminorm(const GridField& f, double b, const HolderOptions& opt) {
    const auto& g = f.grid;
    const long nt = g.n_t;
    const int nx = g.n_x;
    double best = 0;
    auto offset_max = [&](long di, int dj) {
        double mx = 0;
        for (long i = 0; i + di < nt; ++i) {
            const double* r0 = f.row(i);
            const double* r1 = f.row(i + di);
            for (int j = 0; j < nx; ++j) mx = std::max(mx, std::abs(r1[(j + dj + nx) % nx] - r0[j]));
        }
        return mx;
    };
    std::vector<long> dis{0};
    for (long d = 1; d < nt; d *= 2) dis.push_back(d);
    std::vector<int> djs{0};
    for (int d = 1; d <= nx / 2; d *= 2) {
        djs.push_back(d);
        if (d < nx / 2) djs.push_back(-d);
    }
    for (long di : dis)
        for (int dj : djs) {
            if (di == 0 && dj == 0) continue;
            double dist = static_cast<double>(di) * g.dt + torus_dist(static_cast<double>(dj) / nx);
            best = std::max(best, offset_max(di, dj) / std::pow(dist, b));
        }
    // random pairs, an equal share per distance octave
    if (opt.n_random > 0 && nt * nx > 1) {
        auto rng = make_stream(opt.seed, static_cast<std::uint64_t>(nt), static_cast<std::uint64_t>(nx));
        const double dmin = std::min(g.dt, 1.0 / nx);
        const double dmax = static_cast<double>(nt - 1) * g.dt + 0.5;
        const int K = std::max(1, static_cast<int>(std::ceil(std::log2(dmax / dmin))));
        std::uniform_real_distribution<double> U(0.0, 1.0);
        for (long s = 0; s < opt.n_random; ++s) {
            double d = dmin * std::exp2(static_cast<double>(s % K) + U(rng));
            double th = U(rng);
            long di = std::min<long>(nt - 1, std::lround(th * d / g.dt));
            int dj = static_cast<int>(std::min<long>(nx / 2, std::lround((1 - th) * d * nx)));
            if (U(rng) < 0.5) dj = -dj;
            long i = static_cast<long>(U(rng) * static_cast<double>(nt - di));
            int j = static_cast<int>(U(rng) * nx);
            i = std::min(i, nt - 1 - di);
            j = std::min(j, nx - 1);
            if (di == 0 && dj == 0) continue;
            double dist = static_cast<double>(di) * g.dt + torus_dist(static_cast<double>(dj) / nx);
            double q = std::abs(f.at(i + di, (j + dj + nx) % nx) - f.at(i, j)) / std::pow(dist, b);
            best = std::max(best, q);
        }
    }
    return best;
}

double holder_norm(const GridField& f, double b, const HolderOptions& opt) { return sup_norm(f) + holder_seminorm(f, b, opt); }

BoundCheck exp_holder_bound(const GridField& f, double gamma, double b, const HolderOptions& opt) {
    GridField e = f;
    for (double& v : e.values) v = std::exp(gamma * v);
    BoundCheck c;
    c.lhs = holder_seminorm(e, b, opt);
    c.rhs = std::exp(std::abs(gamma) * sup_norm(f)) * std::abs(gamma) * holder_seminorm(f, b, opt);
    return c;
}

BoundCheck linf_bound(const GridField& f, double b, const HolderOptions& opt) {
    const auto& g = f.grid;
    double T = g.t_max() - g.t_min();
    double f0 = 0;
    for (int j = 0; j < g.n_x; ++j) f0 = std::max(f0, std::abs(f.at(0, j)));
    BoundCheck c;
    c.lhs = sup_norm(f);
    c.rhs = f0 + std::pow(T, b) * holder_seminorm(f, b, opt);
    return c;
}

BoundCheck exp_lipschitz_bound(const GridField& f, const GridField& g, double gamma, double b, const HolderOptions& opt) {
    require(f.values.size() == g.values.size(), "exp_lipschitz_bound: grid mismatch");
    const auto& gr = f.grid;
    const int nx = gr.n_x;
    double J = 0;
    for (int j = 0; j < nx; ++j) {
        require(std::abs(f.at(0, j) - g.at(0, j)) <= 1e-14 * (1 + std::abs(f.at(0, j))), "exp_lipschitz_bound: f(0) != g(0)");
        J = std::max(J, std::abs(f.at(0, j)));
    }
    double T = gr.t_max() - gr.t_min();
    GridField e = f, h = f;
    for (size_t q = 0; q < e.values.size(); ++q) {
        e.values[q] = std::exp(gamma * f.values[q]) - std::exp(gamma * g.values[q]);
        h.values[q] = f.values[q] - g.values[q];
    }
    const double ag = std::abs(gamma);
    double Tb = std::pow(T, b);
    double A0 = (1 + 2 * Tb) * ag;
    double A1 = J + Tb * (holder_seminorm(f, b, opt) + holder_seminorm(g, b, opt));
    BoundCheck c;
    c.lhs = holder_seminorm(e, b, opt);
    c.rhs = A0 * std::exp(4 * ag * A1) * holder_seminorm(h, b, opt);
    return c;
}

void write_solution_csv(const std::string& path, const SolutionBundle& sol) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "t,x,w,u\n" << std::setprecision(12);
    const auto& g = sol.w.grid;
    for (long i = 0; i < g.n_t; ++i)
        for (int j = 0; j < g.n_x; ++j)
            os << g.t(i) << ',' << g.x(j) << ',' << sol.w.at(i, j) << ',' << (sol.u.values.empty() ? 0.0 : sol.u.at(i, j)) << '\n';
}

}  // namespace fsl
