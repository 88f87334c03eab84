#include "fsl/gmc.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>

namespace fsl {

GmcSample gmc_weights(const GridField& v, double gamma, double q_eps0, double eps, std::uint64_t seed) {
    GmcSample X{gamma, eps, v, seed};
    const double shift = 0.5 * gamma * gamma * q_eps0;
    for (double& w : X.weights.values) w = gamma == 0.0 ? 1.0 : std::exp(gamma * w - shift);
    return X;
}

double variance_offset_limit(const KernelParams& prm, const Mollifier& m, double eps) {
    auto rows = variance_asymptotics(prm, {eps, eps / 2}, m);
    return (4.0 * rows[1].offset - rows[0].offset) / 3.0;
}

double normalization_ratio(const KernelParams& prm, double gamma, double eps, double offset_limit, const Mollifier& m) {
    CovarianceModel cm(prm);
    double off = cm.Q_mollified({0, 0}, m, eps) - std::log(1.0 / eps) / kTwoPi;
    return std::exp(0.5 * gamma * gamma * (off - offset_limit));
}

double pair(const GmcSample& X, const TestFunction& f, double delta, Point z) {
    return pair_field(X.weights, scale_test_function(f, delta, z));
}

namespace {

void check_grid(const GmcConfig& cfg, double eps) {
    require(cfg.n_samples >= 2, "gmc: n_samples must be >= 2");
    require(cfg.replicas >= 1 && cfg.replicas <= cfg.n_x, "gmc: replicas must lie in [1, n_x]");
    if (!(eps > 0 && eps <= 1)) throw std::invalid_argument("gmc: eps must lie in (0, 1]");
    if (eps < 2.0 * std::max(cfg.dt, 1.0 / cfg.n_x))
        throw std::invalid_argument("gmc: eps below 2 grid cells, mollifier under-resolved");
}

std::uint64_t sample_seed(std::uint64_t seed, long s) { return splitmix64(seed) + static_cast<std::uint64_t>(s); }

// Centre row index and replica columns for a window symmetric about t = 0.
struct Layout {
    long i_center;
    std::vector<int> cols;
};

Layout layout_for(const FieldSampler& smp, const GmcConfig& cfg) {
    Layout L;
    L.i_center = smp.window().index_of(0.0);
    for (int r = 0; r < cfg.replicas; ++r) L.cols.push_back(static_cast<int>(static_cast<long>(r) * cfg.n_x / cfg.replicas));
    return L;
}

double slope_of(const std::vector<double>& ld, const std::vector<double>& m) {
    std::vector<double> lm(m.size());
    for (size_t i = 0; i < m.size(); ++i) lm[i] = std::log(m[i]);
    return linear_fit(ld, lm).slope;
}

double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    double pos = q * (static_cast<double>(v.size()) - 1);
    size_t lo = static_cast<size_t>(std::floor(pos));
    size_t hi = std::min(v.size() - 1, lo + 1);
    double f = pos - static_cast<double>(lo);
    return (1 - f) * v[lo] + f * v[hi];
}

DiffEstimate coupled_difference(double gamma, const Channel& c1, const Channel& c2, double delta, const TestFunction& f,
                                const GmcConfig& cfg) {
    check_grid(cfg, std::min(c1.eps, c2.eps));
    PairingStencil st = make_stencil(f, delta, cfg.n_x, cfg.dt);
    FieldSampler smp(cfg.n_x, cfg.dt, -st.reach_t * cfg.dt, st.reach_t * cfg.dt, cfg.prm, {c1, c2});
    CovarianceModel cm(cfg.prm);
    const double q1 = cm.Q_mollified({0, 0}, c1.mollifier, c1.eps);
    const double q2 = cm.Q_mollified({0, 0}, c2.mollifier, c2.eps);
    Layout L = layout_for(smp, cfg);
    std::vector<double> per(static_cast<size_t>(cfg.n_samples));
    parallel_for(cfg.n_samples, [&](long s) {
        auto fl = smp.sample(sample_seed(cfg.seed, s));
        auto X1 = gmc_weights(fl[0].v, gamma, q1, c1.eps);
        auto X2 = gmc_weights(fl[1].v, gamma, q2, c2.eps);
        double acc = 0;
        for (int j : L.cols) {
            double d = apply_stencil(st, X1.weights, L.i_center, j) - apply_stencil(st, X2.weights, L.i_center, j);
            acc += d * d;
        }
        per[static_cast<size_t>(s)] = acc / static_cast<double>(L.cols.size());
    });
    auto ms = mean_stderr(per);
    return DiffEstimate{ms.mean, ms.stderr_, ms.n};
}

}  // namespace

MomentFit moment_scaling(double gamma, int p, const std::vector<double>& deltas, const GmcConfig& cfg,
                         const TestFunction& f) {
    if (p < 1) throw std::invalid_argument("moment_scaling: p must be a positive integer");
    if (gamma != 0.0 && !(p < 8.0 * kPi / (gamma * gamma)))
        throw std::invalid_argument("moment_scaling: p must satisfy p < 8 pi / gamma^2 for the moment to exist");
    require(deltas.size() >= 2, "moment_scaling: need at least two deltas");
    for (size_t i = 0; i < deltas.size(); ++i) {
        require(deltas[i] > 0 && deltas[i] < 1, "moment_scaling: deltas must lie in (0, 1)");
        if (i) require(deltas[i] < deltas[i - 1], "moment_scaling: deltas must be strictly decreasing");
        if (deltas[i] < 8 * cfg.eps || deltas[i] > 0.25)
            throw std::invalid_argument("moment_scaling: delta outside the resolved window [8 eps, 1/4]");
    }
    check_grid(cfg, cfg.eps);
    const double h = std::max(cfg.dt, 1.0 / cfg.n_x);
    if (deltas.back() * f.radius < 8 * h)
        throw std::invalid_argument("moment_scaling: smallest test function spans fewer than 8 grid cells");
    std::vector<PairingStencil> st;
    long reach = 0;
    for (double d : deltas) {
        st.push_back(make_stencil(f, d, cfg.n_x, cfg.dt));
        reach = std::max(reach, st.back().reach_t);
    }
    Mollifier rho = mollifier_rho();
    FieldSampler smp(cfg.n_x, cfg.dt, -reach * cfg.dt, reach * cfg.dt, cfg.prm, {Channel{rho, cfg.eps}});
    const double q0 = CovarianceModel(cfg.prm).Q_mollified({0, 0}, rho, cfg.eps);
    Layout L = layout_for(smp, cfg);
    const size_t nd = deltas.size();
    std::vector<std::vector<double>> per(nd, std::vector<double>(static_cast<size_t>(cfg.n_samples)));
    parallel_for(cfg.n_samples, [&](long s) {
        auto fl = smp.sample(sample_seed(cfg.seed, s));
        auto X = gmc_weights(fl[0].v, gamma, q0, cfg.eps);
        for (size_t d = 0; d < nd; ++d) {
            double acc = 0;
            for (int j : L.cols) acc += std::pow(std::abs(apply_stencil(st[d], X.weights, L.i_center, j)), p);
            per[d][static_cast<size_t>(s)] = acc / static_cast<double>(L.cols.size());
        }
    });
    MomentFit fit;
    fit.p = p;
    fit.gamma = gamma;
    fit.eps = cfg.eps;
    fit.deltas = deltas;
    fit.n = cfg.n_samples;
    fit.bound = -p * (p - 1) * gamma * gamma / (4 * kPi);
    std::vector<double> ld;
    for (size_t d = 0; d < nd; ++d) {
        auto ms = mean_stderr(per[d]);
        fit.moment.push_back(ms.mean);
        fit.stderr_.push_back(ms.stderr_);
        ld.push_back(std::log(deltas[d]));
    }
    fit.slope = slope_of(ld, fit.moment);
    // percentile bootstrap over realizations
    auto rng = make_stream(cfg.seed, 0xB0075, static_cast<std::uint64_t>(p));
    std::uniform_int_distribution<long> pick(0, cfg.n_samples - 1);
    std::vector<double> slopes(static_cast<size_t>(cfg.bootstrap));
    std::vector<long> idx(static_cast<size_t>(cfg.n_samples));
    for (int b = 0; b < cfg.bootstrap; ++b) {
        for (auto& i : idx) i = pick(rng);
        std::vector<double> m(nd, 0.0);
        for (size_t d = 0; d < nd; ++d) {
            for (long i : idx) m[d] += per[d][static_cast<size_t>(i)];
            m[d] /= static_cast<double>(cfg.n_samples);
        }
        slopes[static_cast<size_t>(b)] = slope_of(ld, m);
    }
    fit.ci_lo = percentile(slopes, 0.025);
    fit.ci_hi = percentile(slopes, 0.975);
    return fit;
}

DiffEstimate l2_cauchy(double gamma, double eps, double eps2, double delta, const TestFunction& f, const GmcConfig& cfg) {
    require(eps2 <= eps, "l2_cauchy: need eps' <= eps");
    if (eps2 == eps) return DiffEstimate{0.0, 0.0, cfg.n_samples};
    Mollifier rho = mollifier_rho();
    return coupled_difference(gamma, Channel{rho, eps}, Channel{rho, eps2}, delta, f, cfg);
}

DiffEstimate mollifier_independence(double gamma, double eps, double delta, const TestFunction& f, const Mollifier& rho,
                                    const Mollifier& theta, const GmcConfig& cfg) {
    if (gamma == 0.0 || rho.s0() == theta.s0()) return DiffEstimate{0.0, 0.0, cfg.n_samples};
    return coupled_difference(gamma, Channel{rho, eps}, Channel{theta, eps}, delta, f, cfg);
}

std::vector<MeanOneRow> mean_one_check(const std::vector<double>& gammas, double delta, const TestFunction& f,
                                       const GmcConfig& cfg) {
    check_grid(cfg, cfg.eps);
    PairingStencil st = make_stencil(f, delta, cfg.n_x, cfg.dt);
    Mollifier rho = mollifier_rho();
    FieldSampler smp(cfg.n_x, cfg.dt, -st.reach_t * cfg.dt, st.reach_t * cfg.dt, cfg.prm, {Channel{rho, cfg.eps}});
    const double q0 = CovarianceModel(cfg.prm).Q_mollified({0, 0}, rho, cfg.eps);
    Layout L = layout_for(smp, cfg);
    std::vector<std::vector<double>> per(gammas.size(), std::vector<double>(static_cast<size_t>(cfg.n_samples)));
    std::vector<std::vector<double>> first(gammas.size(), std::vector<double>(static_cast<size_t>(cfg.n_samples)));
    parallel_for(cfg.n_samples, [&](long s) {
        auto fl = smp.sample(sample_seed(cfg.seed, s));
        for (size_t g = 0; g < gammas.size(); ++g) {
            auto X = gmc_weights(fl[0].v, gammas[g], q0, cfg.eps);
            double acc = 0;
            for (size_t r = 0; r < L.cols.size(); ++r) {
                double v = apply_stencil(st, X.weights, L.i_center, L.cols[r]);
                if (r == 0) first[g][static_cast<size_t>(s)] = v;
                acc += v;
            }
            per[g][static_cast<size_t>(s)] = acc / static_cast<double>(L.cols.size());
        }
    });
    std::vector<MeanOneRow> out;
    for (size_t g = 0; g < gammas.size(); ++g) {
        auto ms = mean_stderr(per[g]);
        auto m1 = mean_stderr(first[g]);
        MeanOneRow row;
        row.gamma = gammas[g];
        row.estimate = ms.mean;
        row.stderr_ = ms.stderr_;
        row.target = st.mass();
        row.variance = m1.stderr_ * m1.stderr_ * static_cast<double>(m1.n);
        out.push_back(row);
    }
    return out;
}

PartitionEstimate partition_integral_mc(double a, int p, double r, long n_samples, std::uint64_t seed) {
    require(a < 2, "partition_integral_mc: need a < 2");
    require(p >= 1, "partition_integral_mc: p must be >= 1");
    require(r > 0 && r <= 0.25, "partition_integral_mc: r must lie in (0, 1/4]");
    require(n_samples >= 2, "partition_integral_mc: n_samples must be >= 2");
    if (a > 0 && !(p < 4.0 / a))
        throw std::invalid_argument("partition_integral_mc: p >= 4/a is outside the finiteness regime");
    const double vol = 2.0 * r * r;
    std::vector<double> w(static_cast<size_t>(n_samples));
    parallel_for(n_samples, [&](long s) {
        auto rng = make_stream(seed, 0x9A77, static_cast<std::uint64_t>(s));
        std::uniform_real_distribution<double> U(-r, r);
        std::vector<Point> z(static_cast<size_t>(p));
        for (auto& q : z) {
            double u = U(rng), v = U(rng);
            q = {0.5 * (u + v), 0.5 * (u - v)};  // uniform on |t| + |x| <= r
        }
        double prod = 1.0;
        for (int i = 0; i < p; ++i)
            for (int j = i + 1; j < p; ++j) {
                double d = std::abs(z[static_cast<size_t>(j)].t - z[static_cast<size_t>(i)].t) +
                           std::abs(z[static_cast<size_t>(j)].x - z[static_cast<size_t>(i)].x);
                prod *= std::pow(d, -a);
            }
        w[static_cast<size_t>(s)] = prod;
    });
    auto ms = mean_stderr(w);
    double s1 = 0, s2 = 0;
    for (double v : w) {
        s1 += v;
        s2 += v * v;
    }
    PartitionEstimate e;
    double scale = std::pow(vol, p);
    e.estimate = scale * ms.mean;
    e.stderr_ = scale * ms.stderr_;
    e.ess = s2 > 0 ? s1 * s1 / s2 : 0.0;
    e.n = n_samples;
    return e;
}

void write_moment_csv(const std::string& path, const std::vector<MomentFit>& fits) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "gamma,p,delta,eps,estimate,stderr,n\n" << std::setprecision(12);
    for (const auto& f : fits)
        for (size_t d = 0; d < f.deltas.size(); ++d)
            os << f.gamma << ',' << f.p << ',' << f.deltas[d] << ',' << f.eps << ',' << f.moment[d] << ','
               << f.stderr_[d] << ',' << f.n << '\n';
}

}  // namespace fsl
