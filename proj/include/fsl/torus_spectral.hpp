#pragma once

#include <functional>
#include <vector>

#include "fsl/common.hpp"

namespace fsl {

// Uniform grid x_j = -1/2 + j/n on the torus, n a power of two >= 8.
struct TorusGrid {
    int n = 0;
    double dx() const { return 1.0 / n; }
    double point(int j) const { return -0.5 + static_cast<double>(j) / n; }
};

TorusGrid make_torus_grid(int n);

struct GridFunction1D {
    TorusGrid grid;
    std::vector<double> values;
};

GridFunction1D sample_grid(const TorusGrid& g, const std::function<double(double)>& f);

// coeffs[k] = (1/n) sum_j f(x_j) e^{-2 pi i k x_j}, stored in FFT order
// (index i holds mode i for i < n/2, mode i - n otherwise).
struct SpectralField {
    int n = 0;
    std::vector<cplx> coeffs;
    cplx mode(int k) const { return coeffs[static_cast<size_t>(k < 0 ? k + n : k)]; }
};

inline int signed_mode(int idx, int n) { return idx < n / 2 ? idx : idx - n; }

SpectralField dft(const GridFunction1D& f);
GridFunction1D idft(const SpectralField& s);

// In-place coefficient <-> sample transforms on raw arrays of length n.
void samples_to_coeffs(const double* f, cplx* c, int n);
void coeffs_to_samples(const cplx* c, double* f, int n);

// Real multiplier m(k). For odd symbols the Nyquist mode is zeroed.
SpectralField apply_multiplier(const SpectralField& s, const std::function<double(int)>& m,
                               bool odd_symbol = false);
SpectralField apply_multiplier(const SpectralField& s, const std::function<cplx(int)>& m,
                               bool odd_symbol);

SpectralField half_laplacian(const SpectralField& s);      // symbol 2 pi |k|
SpectralField semigroup(const SpectralField& s, double t);  // symbol e^{-2 pi |k| t}
SpectralField green_inverse(const SpectralField& s);       // symbol 1/(2 pi |k|), k = 0 -> 0
SpectralField derivative(const SpectralField& s);          // symbol 2 pi i k

// G(x) = -(1/pi) ln(2 sin(pi |x|)): mean-zero solution of (-Delta)^{1/2} G = delta - 1.
double green_function(double x);

}  // namespace fsl
