#include "csiloc/kernels.hpp"

#include <cmath>
#include <vector>

namespace csiloc::kernels {

void conv2d_forward(const double* x, int H, int W, int Ci, const double* w, int k, int Co,
                    const double* b, double* y) {
    const int r = k / 2;
#pragma omp parallel for schedule(static) if (H > 1)
    for (int h = 0; h < H; ++h) {
        for (int wo = 0; wo < W; ++wo) {
            double* yp = y + (static_cast<int64_t>(h) * W + wo) * Co;
            for (int co = 0; co < Co; ++co) yp[co] = b ? b[co] : 0.0;
            const int dy0 = h - r < 0 ? r - h : 0;
            const int dy1 = h + r >= H ? H - 1 - h + r : 2 * r;
            const int dx0 = wo - r < 0 ? r - wo : 0;
            const int dx1 = wo + r >= W ? W - 1 - wo + r : 2 * r;
            for (int dy = dy0; dy <= dy1; ++dy) {
                const int hi = h + dy - r;
                for (int dx = dx0; dx <= dx1; ++dx) {
                    const int wi = wo + dx - r;
                    const double* xp = x + (static_cast<int64_t>(hi) * W + wi) * Ci;
                    const double* wp = w + (static_cast<int64_t>(dy) * k + dx) * Ci * Co;
                    for (int ci = 0; ci < Ci; ++ci) {
                        const double xv = xp[ci];
                        const double* wrow = wp + static_cast<int64_t>(ci) * Co;
                        for (int co = 0; co < Co; ++co) yp[co] += xv * wrow[co];
                    }
                }
            }
        }
    }
}

void conv2d_backward(const double* x, int H, int W, int Ci, const double* w, int k, int Co,
                     const double* gy, double* gx, double* gw, double* gb) {
    const int r = k / 2;
    if (gb) {
        for (int h = 0; h < H; ++h)
            for (int wo = 0; wo < W; ++wo) {
                const double* gp = gy + (static_cast<int64_t>(h) * W + wo) * Co;
                for (int co = 0; co < Co; ++co) gb[co] += gp[co];
            }
    }
    if (gw) {
        // each (dy, dx) tap owns a disjoint slice of gw
#pragma omp parallel for collapse(2) schedule(static) if (k > 1)
        for (int dy = 0; dy < k; ++dy) {
            for (int dx = 0; dx < k; ++dx) {
                double* gwp = gw + (static_cast<int64_t>(dy) * k + dx) * Ci * Co;
                const int h0 = std::max(0, r - dy);
                const int h1 = std::min(H, H + r - dy);
                const int w0 = std::max(0, r - dx);
                const int w1 = std::min(W, W + r - dx);
                for (int h = h0; h < h1; ++h) {
                    const int hi = h + dy - r;
                    for (int wo = w0; wo < w1; ++wo) {
                        const int wi = wo + dx - r;
                        const double* xp = x + (static_cast<int64_t>(hi) * W + wi) * Ci;
                        const double* gp = gy + (static_cast<int64_t>(h) * W + wo) * Co;
                        for (int ci = 0; ci < Ci; ++ci) {
                            double* grow = gwp + static_cast<int64_t>(ci) * Co;
                            const double xv = xp[ci];
                            for (int co = 0; co < Co; ++co) grow[co] += xv * gp[co];
                        }
                    }
                }
            }
        }
    }
    if (gx) {
        // gx[hi, wi] gathers from output pixels whose window covers (hi, wi)
#pragma omp parallel for schedule(static) if (H > 1)
        for (int hi = 0; hi < H; ++hi) {
            for (int wi = 0; wi < W; ++wi) {
                double* gxp = gx + (static_cast<int64_t>(hi) * W + wi) * Ci;
                for (int dy = 0; dy < k; ++dy) {
                    const int h = hi - dy + r;
                    if (h < 0 || h >= H) continue;
                    for (int dx = 0; dx < k; ++dx) {
                        const int wo = wi - dx + r;
                        if (wo < 0 || wo >= W) continue;
                        const double* gp = gy + (static_cast<int64_t>(h) * W + wo) * Co;
                        const double* wp = w + (static_cast<int64_t>(dy) * k + dx) * Ci * Co;
                        for (int ci = 0; ci < Ci; ++ci) {
                            const double* wrow = wp + static_cast<int64_t>(ci) * Co;
                            double acc = 0.0;
                            for (int co = 0; co < Co; ++co) acc += wrow[co] * gp[co];
                            gxp[ci] += acc;
                        }
                    }
                }
            }
        }
    }
}

void avg_pool_forward(const double* x, int H, int W, int C, int p, int q, double* y) {
    const int Ho = H / p, Wo = W / q;
    const double inv = 1.0 / (static_cast<double>(p) * q);
#pragma omp parallel for schedule(static) if (Ho > 1)
    for (int ho = 0; ho < Ho; ++ho) {
        for (int wo = 0; wo < Wo; ++wo) {
            double* yp = y + (static_cast<int64_t>(ho) * Wo + wo) * C;
            for (int c = 0; c < C; ++c) yp[c] = 0.0;
            for (int dh = 0; dh < p; ++dh) {
                const double* xrow = x + (static_cast<int64_t>(ho * p + dh) * W + wo * q) * C;
                for (int dw = 0; dw < q; ++dw)
                    for (int c = 0; c < C; ++c) yp[c] += xrow[static_cast<int64_t>(dw) * C + c];
            }
            for (int c = 0; c < C; ++c) yp[c] *= inv;
        }
    }
}

void avg_pool_backward(const double* gy, int H, int W, int C, int p, int q, double* gx) {
    const int Wo = W / q;
    const double inv = 1.0 / (static_cast<double>(p) * q);
#pragma omp parallel for schedule(static) if (H > 1)
    for (int h = 0; h < H; ++h) {
        const int ho = h / p;
        for (int w = 0; w < W; ++w) {
            const int wo = w / q;
            const double* gp = gy + (static_cast<int64_t>(ho) * Wo + wo) * C;
            double* gxp = gx + (static_cast<int64_t>(h) * W + w) * C;
            for (int c = 0; c < C; ++c) gxp[c] += gp[c] * inv;
        }
    }
}

void leaky_relu_forward(const double* x, int64_t n, double slope, double* y) {
#pragma omp parallel for schedule(static) if (n > 16384)
    for (int64_t i = 0; i < n; ++i) y[i] = x[i] >= 0.0 ? x[i] : slope * x[i];
}

void leaky_relu_backward(const double* x, const double* gy, int64_t n, double slope, double* gx) {
#pragma omp parallel for schedule(static) if (n > 16384)
    for (int64_t i = 0; i < n; ++i) gx[i] += x[i] >= 0.0 ? gy[i] : slope * gy[i];
}

void affine_forward(const double* x, int B, int n, const double* w, int m, const double* b,
                    double* y) {
#pragma omp parallel for schedule(static) if (B > 1)
    for (int i = 0; i < B; ++i) {
        const double* xp = x + static_cast<int64_t>(i) * n;
        double* yp = y + static_cast<int64_t>(i) * m;
        for (int j = 0; j < m; ++j) yp[j] = b ? b[j] : 0.0;
        for (int c = 0; c < n; ++c) {
            const double xv = xp[c];
            const double* wrow = w + static_cast<int64_t>(c) * m;
            for (int j = 0; j < m; ++j) yp[j] += xv * wrow[j];
        }
    }
}

void affine_backward(const double* x, int B, int n, const double* w, int m, const double* gy,
                     double* gx, double* gw, double* gb) {
    if (gx) {
#pragma omp parallel for schedule(static) if (B > 1)
        for (int i = 0; i < B; ++i) {
            const double* gp = gy + static_cast<int64_t>(i) * m;
            double* gxp = gx + static_cast<int64_t>(i) * n;
            for (int c = 0; c < n; ++c) {
                const double* wrow = w + static_cast<int64_t>(c) * m;
                double acc = 0.0;
                for (int j = 0; j < m; ++j) acc += wrow[j] * gp[j];
                gxp[c] += acc;
            }
        }
    }
    if (gw) {
#pragma omp parallel for schedule(static) if (n > 1)
        for (int c = 0; c < n; ++c) {
            double* grow = gw + static_cast<int64_t>(c) * m;
            for (int i = 0; i < B; ++i) {
                const double xv = x[static_cast<int64_t>(i) * n + c];
                const double* gp = gy + static_cast<int64_t>(i) * m;
                for (int j = 0; j < m; ++j) grow[j] += xv * gp[j];
            }
        }
    }
    if (gb) {
        for (int i = 0; i < B; ++i) {
            const double* gp = gy + static_cast<int64_t>(i) * m;
            for (int j = 0; j < m; ++j) gb[j] += gp[j];
        }
    }
}

void softmax2d_forward(const double* x, int64_t n, double* y) {
    double mx = x[0];
    for (int64_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
    double sum = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        y[i] = std::exp(x[i] - mx);
        sum += y[i];
    }
    const double inv = 1.0 / sum;
    for (int64_t i = 0; i < n; ++i) y[i] *= inv;
}

void softmax2d_backward(const double* y, const double* gy, int64_t n, double* gx) {
    double dot = 0.0;
    for (int64_t i = 0; i < n; ++i) dot += y[i] * gy[i];
    for (int64_t i = 0; i < n; ++i) gx[i] += y[i] * (gy[i] - dot);
}

void attention_forward(const double* q, const double* k, const double* v, const double* rh,
                       const double* rw, int H, int W, int Nq, int Nv, double* o,
                       double* weights) {
    const int HW = H * W;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(Nq));
#pragma omp parallel for collapse(2) schedule(static) if (HW > 1)
    for (int h = 0; h < H; ++h) {
        for (int w = 0; w < W; ++w) {
            const double* qp = q + (static_cast<int64_t>(h) * W + w) * Nq;
            double* row = weights + static_cast<int64_t>(h * W + w) * HW;
            for (int m = 0; m < H; ++m) {
                const double* rhp = rh + static_cast<int64_t>(m - h + H - 1) * Nq;
                for (int n = 0; n < W; ++n) {
                    const double* kp = k + (static_cast<int64_t>(m) * W + n) * Nq;
                    const double* rwp = rw + static_cast<int64_t>(n - w + W - 1) * Nq;
                    double logit = 0.0;
                    for (int c = 0; c < Nq; ++c) logit += qp[c] * (kp[c] + rhp[c] + rwp[c]);
                    row[m * W + n] = logit * inv_sqrt;
                }
            }
            softmax2d_forward(row, HW, row);
            double* op = o + (static_cast<int64_t>(h) * W + w) * Nv;
            for (int c = 0; c < Nv; ++c) op[c] = 0.0;
            for (int mn = 0; mn < HW; ++mn) {
                const double wgt = row[mn];
                const double* vp = v + static_cast<int64_t>(mn) * Nv;
                for (int c = 0; c < Nv; ++c) op[c] += wgt * vp[c];
            }
        }
    }
}

void attention_backward(const double* q, const double* k, const double* v, const double* rh,
                        const double* rw, const double* weights, const double* go, int H, int W,
                        int Nq, int Nv, double* gq, double* gk, double* gv, double* grh,
                        double* grw) {
    const int HW = H * W;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(Nq));

    // pre-softmax logit gradients, one attention map per output pixel
    std::vector<double> glogit(static_cast<size_t>(HW) * HW);
#pragma omp parallel for schedule(static) if (HW > 1)
    for (int hw = 0; hw < HW; ++hw) {
        const double* wrow = weights + static_cast<int64_t>(hw) * HW;
        const double* gop = go + static_cast<int64_t>(hw) * Nv;
        double* grow = glogit.data() + static_cast<int64_t>(hw) * HW;
        double dot = 0.0;
        for (int mn = 0; mn < HW; ++mn) {
            const double* vp = v + static_cast<int64_t>(mn) * Nv;
            double gw = 0.0;
            for (int c = 0; c < Nv; ++c) gw += gop[c] * vp[c];
            grow[mn] = gw;
            dot += wrow[mn] * gw;
        }
        for (int mn = 0; mn < HW; ++mn) grow[mn] = wrow[mn] * (grow[mn] - dot);
    }

    if (gq) {
#pragma omp parallel for collapse(2) schedule(static) if (HW > 1)
        for (int h = 0; h < H; ++h) {
            for (int w = 0; w < W; ++w) {
                const double* grow = glogit.data() + static_cast<int64_t>(h * W + w) * HW;
                double* gqp = gq + (static_cast<int64_t>(h) * W + w) * Nq;
                for (int m = 0; m < H; ++m) {
                    const double* rhp = rh + static_cast<int64_t>(m - h + H - 1) * Nq;
                    for (int n = 0; n < W; ++n) {
                        const double gl = grow[m * W + n] * inv_sqrt;
                        const double* kp = k + (static_cast<int64_t>(m) * W + n) * Nq;
                        const double* rwp = rw + static_cast<int64_t>(n - w + W - 1) * Nq;
                        for (int c = 0; c < Nq; ++c) gqp[c] += gl * (kp[c] + rhp[c] + rwp[c]);
                    }
                }
            }
        }
    }
    if (gk) {
#pragma omp parallel for schedule(static) if (HW > 1)
        for (int mn = 0; mn < HW; ++mn) {
            double* gkp = gk + static_cast<int64_t>(mn) * Nq;
            for (int hw = 0; hw < HW; ++hw) {
                const double gl = glogit[static_cast<size_t>(hw) * HW + mn] * inv_sqrt;
                const double* qp = q + static_cast<int64_t>(hw) * Nq;
                for (int c = 0; c < Nq; ++c) gkp[c] += gl * qp[c];
            }
        }
    }
    if (gv) {
#pragma omp parallel for schedule(static) if (HW > 1)
        for (int mn = 0; mn < HW; ++mn) {
            double* gvp = gv + static_cast<int64_t>(mn) * Nv;
            for (int hw = 0; hw < HW; ++hw) {
                const double wgt = weights[static_cast<size_t>(hw) * HW + mn];
                const double* gop = go + static_cast<int64_t>(hw) * Nv;
                for (int c = 0; c < Nv; ++c) gvp[c] += wgt * gop[c];
            }
        }
    }
    if (grh) {
#pragma omp parallel for schedule(static) if (H > 1)
        for (int d = -(H - 1); d <= H - 1; ++d) {
            double* gp = grh + static_cast<int64_t>(d + H - 1) * Nq;
            for (int h = 0; h < H; ++h) {
                const int m = h + d;
                if (m < 0 || m >= H) continue;
                for (int w = 0; w < W; ++w) {
                    const double* qp = q + (static_cast<int64_t>(h) * W + w) * Nq;
                    const double* grow = glogit.data() + static_cast<int64_t>(h * W + w) * HW;
                    for (int n = 0; n < W; ++n) {
                        const double gl = grow[m * W + n] * inv_sqrt;
                        for (int c = 0; c < Nq; ++c) gp[c] += gl * qp[c];
                    }
                }
            }
        }
    }
    if (grw) {
#pragma omp parallel for schedule(static) if (W > 1)
        for (int d = -(W - 1); d <= W - 1; ++d) {
            double* gp = grw + static_cast<int64_t>(d + W - 1) * Nq;
            for (int w = 0; w < W; ++w) {
                const int n = w + d;
                if (n < 0 || n >= W) continue;
                for (int h = 0; h < H; ++h) {
                    const double* qp = q + (static_cast<int64_t>(h) * W + w) * Nq;
                    const double* grow = glogit.data() + static_cast<int64_t>(h * W + w) * HW;
                    for (int m = 0; m < H; ++m) {
                        const double gl = grow[m * W + n] * inv_sqrt;
                        for (int c = 0; c < Nq; ++c) gp[c] += gl * qp[c];
                    }
                }
            }
        }
    }
}

}  // namespace csiloc::kernels
