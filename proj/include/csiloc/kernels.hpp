#pragma once

#include <cstdint>

// Compute kernels behind the autodiff ops. Forward and backward variants are
// OpenMP-parallel where the loop is worth it; every parallel loop writes
// disjoint output slots, so results do not depend on the schedule.
//
// Conventions: feature maps are (H, W, C) row-major, conv kernels are
// (k, k, C_in, C_out), convolutions are stride 1 with zero same-padding and
// odd k. Backward kernels accumulate (+=) into their gradient outputs.

namespace csiloc::kernels {

inline constexpr double kLeakyReluSlope = 0.01;

void conv2d_forward(const double* x, int H, int W, int Ci, const double* w, int k, int Co,
                    const double* b, double* y);
void conv2d_backward(const double* x, int H, int W, int Ci, const double* w, int k, int Co,
                     const double* gy, double* gx, double* gw, double* gb);

void avg_pool_forward(const double* x, int H, int W, int C, int p, int q, double* y);
void avg_pool_backward(const double* gy, int H, int W, int C, int p, int q, double* gx);

void leaky_relu_forward(const double* x, int64_t n, double slope, double* y);
void leaky_relu_backward(const double* x, const double* gy, int64_t n, double slope, double* gx);

// x: (B, n) row-major, w: (n, m), b: m, y: (B, m). B = 1 covers the vector case.
void affine_forward(const double* x, int B, int n, const double* w, int m, const double* b,
                    double* y);
void affine_backward(const double* x, int B, int n, const double* w, int m, const double* gy,
                     double* gx, double* gw, double* gb);

// Softmax over all entries of a flattened matrix, max-subtracted.
void softmax2d_forward(const double* x, int64_t n, double* y);
void softmax2d_backward(const double* y, const double* gy, int64_t n, double* gx);

// Single-head attention over all pixels. q, k: (H, W, Nq), v: (H, W, Nv),
// rh: (2H-1, Nq), rw: (2W-1, Nq); relative offset d indexes rh at d + H - 1.
// o: (H, W, Nv). weights: (H*W, H*W) row (h*W+w) holds that output pixel's
// normalized attention map; filled by the forward pass and consumed by the
// backward pass.
void attention_forward(const double* q, const double* k, const double* v, const double* rh,
                       const double* rw, int H, int W, int Nq, int Nv, double* o,
                       double* weights);
void attention_backward(const double* q, const double* k, const double* v, const double* rh,
                        const double* rw, const double* weights, const double* go, int H, int W,
                        int Nq, int Nv, double* gq, double* gk, double* gv, double* grh,
                        double* grw);

}  // namespace csiloc::kernels
