#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fsl/noise_field.hpp"

namespace fsl {

// Minimum-phase Daubechies filter with v vanishing moments, sum h_k = sqrt(2).
std::vector<double> daubechies_filter(int v);

// Compactly supported orthonormal wavelet on [0, 2v - 1], tabulated by the cascade
// algorithm at the points k / 2^J.
struct WaveletBasis {
    int v = 3;
    int L = 3;           // base level: (2v - 1) 2^{-L} < 1
    int J = 12;          // cascade resolution
    double regularity;   // Hoelder exponent of phi
    std::vector<double> a;  // refinement coefficients a_k = sqrt(2) h_k
    std::vector<double> phi_tab, psi_tab;
    std::vector<double> phi_cum, psi_cum;  // running integrals on the same lattice

    int support() const { return 2 * v - 1; }
    // Values at x = num / 2^den_log2 (exact table lookup, den_log2 <= J).
    double phi_dyadic(long num, int den_log2) const;
    double psi_dyadic(long num, int den_log2) const;
    // Linear interpolation in the table for arbitrary x.
    double phi(double x) const;
    double psi(double x) const;
    // Integral over the cell [(num - 1/2) / 2^d, (num + 1/2) / 2^d], d < J.
    double phi_cell(long num, int d) const;
    double psi_cell(long num, int d) const;
};

// v in [2, 6]; L < 0 picks the smallest admissible base level.
WaveletBasis build_basis(int v = 3, int L = -1, int J = 12);

// 2D tensor functions: iota = 0 phi(t)phi(x), 1 phi(t)psi(x), 2 psi(t)phi(x), 3 psi(t)psi(x);
// phi^{iota,n}_{p,m}(t, x) = 2^n F(2^n t - p) G(2^n x - m), periodized in x.
double basis_eval(const WaveletBasis& B, int iota, int n, long p, long m, double t, double x);

struct CoeffTable {
    int n_min = 0, n_max = 0;
    double T1 = 0;
    struct Level {
        long p_lo = 0, p_hi = -1;
        std::vector<double> c[4];  // index (p - p_lo) * 2^n + m
    };
    std::vector<Level> levels;

    const Level& level(int n) const { return levels[static_cast<size_t>(n - n_min)]; }
    double get(int iota, int n, long p, long m) const;
    double& ref(int iota, int n, long p, long m);
};

// Coefficients <X, phi^{iota,n}_{p,m}> for n_min <= n <= n_max and |p / 2^n| <= T1 + 1, with X
// constant on each grid cell centred at (t_i, x_j); the cell integrals of the basis functions
// come from the running-integral tables. The grid must be dyadic (dt, dx powers of 1/2) and
// resolve every level: 2^{-n} >= 4 max(dt, dx).
CoeffTable analyze(const GridField& X, const WaveletBasis& B, double T1, int n_max, int n_min = -1);

// Coefficient table with zero entries for the same index range; n_min < 0 means L.
CoeffTable empty_table(const WaveletBasis& B, double T1, int n_min, int n_max);

// Cell averages of sum_{iota,n,p,m} c phi^{iota,n}_{p,m} on the grid.
GridField synthesize(const CoeffTable& c, const WaveletBasis& B, const SpaceTimeGrid& grid);

// Random-sign coefficients of size 2^{-n(1+alpha)} for the detail functions at every level and
// the scaling functions at the base level n_min (default L); the wavelet estimate of the
// result is 1. Levels below L use the periodized functions, which overlap their own images.
CoeffTable synthetic_coefficients(const WaveletBasis& B, double alpha, int n_max, double T1, std::uint64_t seed,
                                  int n_min = -1);

struct BesovEstimate {
    double alpha = 0;
    double value = 0;                  // max over the profile
    std::vector<int> levels;
    std::vector<double> profile;       // 2^{n(1+alpha)} max |c| per level (details; scaling at n_min)
    std::vector<double> rms_profile;   // 2^{n(1+alpha)} RMS of detail coefficients
    double rms_slope = 0;              // fitted log2 slope of the RMS profile
};

// sup_n max_{iota,p,m} 2^{n alpha} |<X, S^{2^-n} Phi_iota>| = 2^{n(1+alpha)} |c|.
BesovEstimate besov_norm_wavelet(const CoeffTable& c, const WaveletBasis& B, double alpha);

// Probe family for the scan: bump, odd bump, and two anisotropic bumps, each divided by
// its numerically evaluated C^m norm.
std::vector<TestFunction> probe_set(int m);
double cm_norm(const TestFunction& f, int m, int n = 400);

struct ScanOptions {
    double t_lo = 0, t_hi = 1;  // centres z must keep the support inside [t_lo, t_hi]
    int j_min = 1, j_max = -1;  // delta = 2^{-j}; j_max < 0: finest with >= 4 cells per radius
    int stride_div = 4;         // centres on a lattice of spacing delta / stride_div
};

// sup over delta, z, g of delta^{-alpha} |<X, S^delta_z g>|; profile per j.
BesovEstimate besov_norm_scan(const GridField& X, double alpha, const std::vector<TestFunction>& probes,
                              const ScanOptions& opt);

// Germ of a dyadic partition: supported in (1/16, 1/4), sum_n germ(2^n r) = 1 for r > 0.
double dyadic_germ(double r);
double dyadic_partition_eval(int n, double r);  // germ(2^n r)
// Symmetric bump on (-1/2, 1/2) with sum_k psi(x - k/2) = 1.
double spatial_bump(double x);
double spatial_bump_eval(int n, double x);  // psi(2^n x), x taken on the torus

void write_coeff_csv(const std::string& path, const CoeffTable& c);

}  // namespace fsl
