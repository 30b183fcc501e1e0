#include "csiloc/reference.hpp"

#include <cmath>

namespace csiloc::ref {

void conv2d(const double* x, int H, int W, int Ci, const double* w, int k, int Co,
            const double* b, double* y) {
    const int r = k / 2;
    for (int h = 0; h < H; ++h)
        for (int wo = 0; wo < W; ++wo)
            for (int co = 0; co < Co; ++co) {
                double acc = b ? b[co] : 0.0;
                for (int dy = 0; dy < k; ++dy)
                    for (int dx = 0; dx < k; ++dx)
                        for (int ci = 0; ci < Ci; ++ci) {
                            const int hi = h + dy - r;
                            const int wi = wo + dx - r;
                            if (hi < 0 || hi >= H || wi < 0 || wi >= W) continue;
                            acc += x[(static_cast<int64_t>(hi) * W + wi) * Ci + ci] *
                                   w[((static_cast<int64_t>(dy) * k + dx) * Ci + ci) * Co + co];
                        }
                y[(static_cast<int64_t>(h) * W + wo) * Co + co] = acc;
            }
}

void avg_pool(const double* x, int H, int W, int C, int p, int q, double* y) {
    const int Ho = H / p, Wo = W / q;
    for (int ho = 0; ho < Ho; ++ho)
        for (int wo = 0; wo < Wo; ++wo)
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int dh = 0; dh < p; ++dh)
                    for (int dw = 0; dw < q; ++dw)
                        acc += x[(static_cast<int64_t>(ho * p + dh) * W + (wo * q + dw)) * C + c];
                y[(static_cast<int64_t>(ho) * Wo + wo) * C + c] =
                    acc / (static_cast<double>(p) * q);
            }
}

std::vector<double> softmax2d(const double* x, int64_t n) {
    long double sum = 0.0L;
    std::vector<long double> e(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        e[static_cast<size_t>(i)] = expl(static_cast<long double>(x[i]));
        sum += e[static_cast<size_t>(i)];
    }
    std::vector<double> out(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i)
        out[static_cast<size_t>(i)] = static_cast<double>(e[static_cast<size_t>(i)] / sum);
    return out;
}

void attention(const double* q, const double* k, const double* v, const double* rh,
               const double* rw, int H, int W, int Nq, int Nv, double* o) {
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(Nq));
    std::vector<double> logits(static_cast<size_t>(H) * W);
    for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w) {
            for (int m = 0; m < H; ++m)
                for (int n = 0; n < W; ++n) {
                    double qk = 0.0, qrh = 0.0, qrw = 0.0;
                    for (int c = 0; c < Nq; ++c) {
                        const double qc = q[(static_cast<int64_t>(h) * W + w) * Nq + c];
                        qk += qc * k[(static_cast<int64_t>(m) * W + n) * Nq + c];
                        qrh += qc * rh[static_cast<int64_t>(m - h + H - 1) * Nq + c];
                        qrw += qc * rw[static_cast<int64_t>(n - w + W - 1) * Nq + c];
                    }
                    logits[static_cast<size_t>(m) * W + n] = inv_sqrt * (qk + qrh + qrw);
                }
            const std::vector<double> wgt = softmax2d(logits.data(), H * W);
            for (int c = 0; c < Nv; ++c) {
                double acc = 0.0;
                for (int m = 0; m < H; ++m)
                    for (int n = 0; n < W; ++n)
                        acc += wgt[static_cast<size_t>(m) * W + n] *
                               v[(static_cast<int64_t>(m) * W + n) * Nv + c];
                o[(static_cast<int64_t>(h) * W + w) * Nv + c] = acc;
            }
        }
}

void affine(const double* x, int B, int n, const double* w, int m, const double* b, double* y) {
    for (int i = 0; i < B; ++i)
        for (int j = 0; j < m; ++j) {
            double acc = b ? b[j] : 0.0;
            for (int c = 0; c < n; ++c)
                acc += x[static_cast<int64_t>(i) * n + c] * w[static_cast<int64_t>(c) * m + j];
            y[static_cast<int64_t>(i) * m + j] = acc;
        }
}

std::complex<double> csi_entry(int a, double spacing, double wavelength, double freq,
                               const std::vector<std::complex<double>>& coeff,
                               const std::vector<double>& aoa, const std::vector<double>& delay) {
    using cld = std::complex<long double>;
    const long double two_pi = 2.0L * 3.14159265358979323846264338327950288L;
    cld acc(0.0L, 0.0L);
    for (size_t p = 0; p < coeff.size(); ++p) {
        const long double ant_phase = -two_pi * static_cast<long double>(a) *
                                      static_cast<long double>(spacing) *
                                      cosl(static_cast<long double>(aoa[p])) /
                                      static_cast<long double>(wavelength);
        const long double sub_phase = -two_pi * static_cast<long double>(freq) *
                                      static_cast<long double>(delay[p]);
        const cld c(static_cast<long double>(coeff[p].real()),
                    static_cast<long double>(coeff[p].imag()));
        acc += c * cld(cosl(ant_phase), sinl(ant_phase)) * cld(cosl(sub_phase), sinl(sub_phase));
    }
    return {static_cast<double>(acc.real()), static_cast<double>(acc.imag())};
}

}  // namespace csiloc::ref
