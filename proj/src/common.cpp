#include "fsl/common.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <boost/math/quadrature/gauss.hpp>
#include <map>
#include <mutex>
#include <thread>

namespace fsl {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ splitmix64(a + 0x1234567ULL));
    h = splitmix64(h ^ splitmix64(b + 0x7654321ULL));
    h = splitmix64(h ^ splitmix64(c + 0x0badf00dULL));
    return std::mt19937_64(h);
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w) {
    require(x.size() == y.size() && x.size() >= 2, "linear_fit: need >= 2 paired points");
    require(w.empty() || w.size() == x.size(), "linear_fit: weight count mismatch");
    auto wt = [&](size_t i) { return w.empty() ? 1.0 : w[i]; };
    const double n = static_cast<double>(x.size());
    double sw = 0, mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sw += wt(i);
        mx += wt(i) * x[i];
        my += wt(i) * y[i];
    }
    require(sw > 0, "linear_fit: zero total weight");
    mx /= sw;
    my /= sw;
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += wt(i) * (x[i] - mx) * (x[i] - mx);
        sxy += wt(i) * (x[i] - mx) * (y[i] - my);
        syy += wt(i) * (y[i] - my) * (y[i] - my);
    }
    require(sxx > 0, "linear_fit: degenerate abscissae");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double rss = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        double r = y[i] - f.intercept - f.slope * x[i];
        rss += wt(i) * r * r;
    }
    f.slope_stderr = x.size() > 2 ? std::sqrt(rss / (n - 2) / sxx) : 0.0;
    f.r2 = syy > 0 ? 1.0 - rss / syy : 1.0;
    return f;
}

MeanStderr mean_stderr(const std::vector<double>& v) {
    MeanStderr r;
    r.n = static_cast<long>(v.size());
    if (v.empty()) return r;
    double m = 0;
    for (double a : v) m += a;
    m /= static_cast<double>(v.size());
    double s = 0;
    for (double a : v) s += (a - m) * (a - m);
    r.mean = m;
    if (v.size() > 1) r.stderr_ = std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    return r;
}

void parallel_for(long n, const std::function<void(long)>& body) {
    if (n <= 0) return;
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    long nthreads = std::min<long>(hw, n);
    if (nthreads == 1) {
        for (long i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    for (long k = 0; k < nthreads; ++k) {
        pool.emplace_back([&] {
            for (;;) {
                long i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!err) err = std::current_exception();
                    next.store(n);
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

namespace {

template <unsigned N>
GaussRule build_rule() {
    using G = boost::math::quadrature::gauss<double, N>;
    GaussRule r;
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) {
            r.nodes.push_back(0.0);
            r.weights.push_back(w[i]);
        } else {
            r.nodes.push_back(a[i]);
            r.weights.push_back(w[i]);
            r.nodes.push_back(-a[i]);
            r.weights.push_back(w[i]);
        }
    }
    return r;
}

}  // namespace

const GaussRule& gauss_rule(int n) {
    static const GaussRule r3 = build_rule<3>();
    static const GaussRule r4 = build_rule<4>();
    static const GaussRule r5 = build_rule<5>();
    static const GaussRule r7 = build_rule<7>();
    static const GaussRule r10 = build_rule<10>();
    static const GaussRule r15 = build_rule<15>();
    static const GaussRule r20 = build_rule<20>();
    static const GaussRule r30 = build_rule<30>();
    switch (n) {
        case 3: return r3;
        case 4: return r4;
        case 5: return r5;
        case 7: return r7;
        case 10: return r10;
        case 15: return r15;
        case 20: return r20;
        case 30: return r30;
        default: throw std::invalid_argument("gauss_rule: unsupported order " + std::to_string(n));
    }
}

double integrate_gl(const std::function<double(double)>& f, double a, double b, int panels, int order) {
    const GaussRule& g = gauss_rule(order);
    double h = (b - a) / panels;
    double s = 0;
    for (int p = 0; p < panels; ++p) {
        double lo = a + p * h;
        double c = lo + 0.5 * h;
        double ps = 0;
        for (size_t i = 0; i < g.nodes.size(); ++i) ps += g.weights[i] * f(c + 0.5 * h * g.nodes[i]);
        s += 0.5 * h * ps;
    }
    return s;
}

double integrate_graded(const std::function<double(double)>& f, double a, double b, double c, int levels,
                        int order) {
    if (b <= a) return 0.0;
    c = std::clamp(c, a, b);
    const GaussRule& g = gauss_rule(order);
    auto panel = [&](double lo, double hi) {
        double m = 0.5 * (lo + hi), h = 0.5 * (hi - lo), s = 0;
        for (size_t i = 0; i < g.nodes.size(); ++i) s += g.weights[i] * f(m + h * g.nodes[i]);
        return h * s;
    };
    double s = 0;
    // left side [a, c], panels shrink toward c
    for (double side : {-1.0, 1.0}) {
        double len = side < 0 ? c - a : b - c;
        if (len <= 0) continue;
        double outer = len;
        for (int l = 0; l < levels; ++l) {
            double inner = (l + 1 == levels) ? 0.0 : 0.5 * outer;
            double lo = side < 0 ? c - outer : c + inner;
            double hi = side < 0 ? c - inner : c + outer;
            s += panel(lo, hi);
            outer = inner;
        }
    }
    return s;
}

}  // namespace fsl
