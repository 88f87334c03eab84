#pragma once

#include <vector>

#include "fsl/common.hpp"

namespace fsl {

// Unnormalized complex DFT of length n (any n; fftw plans are cached).
// forward: out[k] = sum_j in[j] e^{-2 pi i jk/n}; backward uses e^{+...}.
void fft_forward(const cplx* in, cplx* out, int n);
void fft_backward(const cplx* in, cplx* out, int n);

inline std::vector<cplx> fft_forward(const std::vector<cplx>& in) {
    std::vector<cplx> out(in.size());
    fft_forward(in.data(), out.data(), static_cast<int>(in.size()));
    return out;
}

inline std::vector<cplx> fft_backward(const std::vector<cplx>& in) {
    std::vector<cplx> out(in.size());
    fft_backward(in.data(), out.data(), static_cast<int>(in.size()));
    return out;
}

}  // namespace fsl
