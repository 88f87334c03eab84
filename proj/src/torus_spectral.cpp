#include "fsl/torus_spectral.hpp"

#include "fsl/fft.hpp"

namespace fsl {

TorusGrid make_torus_grid(int n) {
    require(n >= 8 && is_pow2(n), "torus grid size must be a power of two >= 8, got " + std::to_string(n));
    return TorusGrid{n};
}

GridFunction1D sample_grid(const TorusGrid& g, const std::function<double(double)>& f) {
    GridFunction1D out{g, std::vector<double>(static_cast<size_t>(g.n))};
    for (int j = 0; j < g.n; ++j) out.values[static_cast<size_t>(j)] = f(g.point(j));
    return out;
}

void samples_to_coeffs(const double* f, cplx* c, int n) {
    std::vector<cplx> in(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) in[static_cast<size_t>(j)] = f[j];
    fft_forward(in.data(), c, n);
    // x_j = -1/2 + j/n contributes the phase (-1)^k.
    const double inv = 1.0 / n;
    for (int i = 0; i < n; ++i) c[i] *= (i % 2 ? -inv : inv);
}

void coeffs_to_samples(const cplx* c, double* f, int n) {
    std::vector<cplx> tmp(c, c + n), out(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        if (i % 2) tmp[static_cast<size_t>(i)] = -tmp[static_cast<size_t>(i)];
    fft_backward(tmp.data(), out.data(), n);
    for (int j = 0; j < n; ++j) f[j] = out[static_cast<size_t>(j)].real();
}

SpectralField dft(const GridFunction1D& f) {
    require(static_cast<int>(f.values.size()) == f.grid.n, "dft: sample count does not match grid");
    for (double v : f.values) require_finite(v, "dft input");
    SpectralField s{f.grid.n, std::vector<cplx>(f.values.size())};
    samples_to_coeffs(f.values.data(), s.coeffs.data(), s.n);
    return s;
}

GridFunction1D idft(const SpectralField& s) {
    GridFunction1D f{TorusGrid{s.n}, std::vector<double>(static_cast<size_t>(s.n))};
    coeffs_to_samples(s.coeffs.data(), f.values.data(), s.n);
    return f;
}

SpectralField apply_multiplier(const SpectralField& s, const std::function<double(int)>& m, bool odd_symbol) {
    SpectralField out = s;
    for (int i = 0; i < s.n; ++i) out.coeffs[static_cast<size_t>(i)] *= m(signed_mode(i, s.n));
    if (odd_symbol) out.coeffs[static_cast<size_t>(s.n / 2)] = 0.0;
    return out;
}

SpectralField apply_multiplier(const SpectralField& s, const std::function<cplx(int)>& m, bool odd_symbol) {
    SpectralField out = s;
    for (int i = 0; i < s.n; ++i) out.coeffs[static_cast<size_t>(i)] *= m(signed_mode(i, s.n));
    if (odd_symbol) out.coeffs[static_cast<size_t>(s.n / 2)] = 0.0;
    return out;
}

SpectralField half_laplacian(const SpectralField& s) {
    return apply_multiplier(s, std::function<double(int)>([](int k) { return kTwoPi * std::abs(k); }));
}

SpectralField semigroup(const SpectralField& s, double t) {
    if (!(t >= 0.0)) throw std::domain_error("semigroup: time must be >= 0");
    return apply_multiplier(s, std::function<double(int)>([t](int k) { return std::exp(-kTwoPi * std::abs(k) * t); }));
}

SpectralField green_inverse(const SpectralField& s) {
    return apply_multiplier(s, std::function<double(int)>([](int k) { return k == 0 ? 0.0 : 1.0 / (kTwoPi * std::abs(k)); }));
}

SpectralField derivative(const SpectralField& s) {
    return apply_multiplier(s, std::function<cplx(int)>([](int k) { return cplx(0.0, kTwoPi * k); }), true);
}

double green_function(double x) {
    double a = torus_dist(x);
    if (a == 0.0) throw std::domain_error("green_function: singular at x = 0");
    return -std::log(2.0 * std::sin(kPi * a)) / kPi;
}

}  // namespace fsl
