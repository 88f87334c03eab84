#include "fsl/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace fsl {

namespace {

std::mutex g_plan_mu;

fftw_plan get_plan(int n, int sign) {
    static std::map<std::pair<int, int>, fftw_plan> cache;
    std::lock_guard<std::mutex> lk(g_plan_mu);
    auto key = std::make_pair(n, sign);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    fftw_complex* a = fftw_alloc_complex(static_cast<size_t>(n));
    fftw_complex* b = fftw_alloc_complex(static_cast<size_t>(n));
    fftw_plan p = fftw_plan_dft_1d(n, a, b, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(a);
    fftw_free(b);
    cache.emplace(key, p);
    return p;
}

void run(const cplx* in, cplx* out, int n, int sign) {
    require(n > 0, "fft: length must be positive");
    fftw_plan p = get_plan(n, sign);
    // fftw_execute_dft is thread-safe for an existing plan.
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

}  // namespace

void fft_forward(const cplx* in, cplx* out, int n) { run(in, out, n, FFTW_FORWARD); }
void fft_backward(const cplx* in, cplx* out, int n) { run(in, out, n, FFTW_BACKWARD); }

}  // namespace fsl
