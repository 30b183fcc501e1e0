#pragma once

#include <complex>
#include <cstdint>
#include <vector>

// Serial reference implementations: straight transcriptions of the defining
// formulas, no OpenMP, no loop restructuring. Tests use them as independent
// oracles for the optimized kernels; the benchmark tool compares against them.
// Linked only into tests and tools, never into the main library.

namespace csiloc::ref {

void conv2d(const double* x, int H, int W, int Ci, const double* w, int k, int Co,
            const double* b, double* y);

void avg_pool(const double* x, int H, int W, int C, int p, int q, double* y);

/// Softmax over a flat matrix evaluated in long double without max subtraction.
std::vector<double> softmax2d(const double* x, int64_t n);

/// Single-head attention with relative positional logits, evaluated one output
/// pixel at a time with explicit nested loops.
void attention(const double* q, const double* k, const double* v, const double* rh,
               const double* rw, int H, int W, int Nq, int Nv, double* o);

void affine(const double* x, int B, int n, const double* w, int m, const double* b, double* y);

/// One channel-response entry for antenna index a (1-based) and subcarrier
/// frequency f, summed over paths in long double complex arithmetic.
std::complex<double> csi_entry(int a, double spacing, double wavelength, double freq,
                               const std::vector<std::complex<double>>& coeff,
                               const std::vector<double>& aoa, const std::vector<double>& delay);

}  // namespace csiloc::ref
