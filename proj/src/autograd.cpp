#include "csiloc/autograd.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "csiloc/errors.hpp"
#include "csiloc/kernels.hpp"
#include "csiloc/rng.hpp"

namespace csiloc {

size_t Tape::check(Var v) const {
    if (v.id < 0 || static_cast<size_t>(v.id) >= nodes_.size())
        throw std::invalid_argument("tape: invalid node handle");
    return static_cast<size_t>(v.id);
}

Var Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(Tensor t) {
    Node n;
    n.op = Op::kInput;
    n.val = std::move(t);
    return push(std::move(n));
}

Var Tape::param(const Parameter& p) {
    for (const auto& [ptr, id] : param_nodes_)
        if (ptr == &p) return Var{id};
    Node n;
    n.op = Op::kParam;
    n.val = p.value;
    n.param = &p;
    Var v = push(std::move(n));
    param_nodes_.emplace_back(&p, v.id);
    return v;
}

Var Tape::conv2d(Var xv, Var wv, Var bv) {
    const Tensor& x = value(xv);
    const Tensor& w = value(wv);
    const Tensor& b = value(bv);
    if (x.ndim() != 3 || w.ndim() != 4 || b.ndim() != 1)
        throw std::invalid_argument("conv2d: expected x (H,W,Ci), w (k,k,Ci,Co), b (Co)");
    const int H = x.dim(0), W = x.dim(1), Ci = x.dim(2);
    const int k = w.dim(0), Co = w.dim(3);
    if (w.dim(1) != k) throw std::invalid_argument("conv2d: kernel must be square");
    if (k % 2 == 0) throw std::invalid_argument("conv2d: kernel size must be odd");
    if (w.dim(2) != Ci) throw std::invalid_argument("conv2d: kernel input channels mismatch");
    if (b.dim(0) != Co) throw std::invalid_argument("conv2d: bias length mismatch");
    Node n;
    n.op = Op::kConv2d;
    n.in[0] = xv.id;
    n.in[1] = wv.id;
    n.in[2] = bv.id;
    n.nin = 3;
    n.val = Tensor({H, W, Co});
    kernels::conv2d_forward(x.data.data(), H, W, Ci, w.data.data(), k, Co, b.data.data(),
                            n.val.data.data());
    return push(std::move(n));
}

Var Tape::avg_pool(Var xv, int p, int q) {
    const Tensor& x = value(xv);
    if (x.ndim() != 3) throw std::invalid_argument("avg_pool: expected (H,W,C)");
    if (p <= 0 || q <= 0) throw std::invalid_argument("avg_pool: pool sizes must be positive");
    const int H = x.dim(0), W = x.dim(1), C = x.dim(2);
    if (H % p != 0 || W % q != 0)
        throw std::invalid_argument("avg_pool: pool size must divide spatial dims");
    Node n;
    n.op = Op::kAvgPool;
    n.in[0] = xv.id;
    n.nin = 1;
    n.p = p;
    n.q = q;
    n.val = Tensor({H / p, W / q, C});
    kernels::avg_pool_forward(x.data.data(), H, W, C, p, q, n.val.data.data());
    return push(std::move(n));
}

Var Tape::leaky_relu(Var xv, double slope) {
    const Tensor& x = value(xv);
    Node n;
    n.op = Op::kLeakyRelu;
    n.in[0] = xv.id;
    n.nin = 1;
    n.scalar = slope;
    n.val = Tensor(x.shape);
    kernels::leaky_relu_forward(x.data.data(), x.size(), slope, n.val.data.data());
    return push(std::move(n));
}

Var Tape::affine(Var xv, Var wv, Var bv) {
    const Tensor& x = value(xv);
    const Tensor& w = value(wv);
    const Tensor& b = value(bv);
    if (w.ndim() != 2 || b.ndim() != 1 || (x.ndim() != 1 && x.ndim() != 2))
        throw std::invalid_argument("affine: expected x (n) or (B,n), w (n,m), b (m)");
    const int B = x.ndim() == 2 ? x.dim(0) : 1;
    const int in = x.ndim() == 2 ? x.dim(1) : x.dim(0);
    const int m = w.dim(1);
    if (w.dim(0) != in) throw std::invalid_argument("affine: weight rows mismatch input width");
    if (b.dim(0) != m) throw std::invalid_argument("affine: bias length mismatch");
    Node n;
    n.op = Op::kAffine;
    n.in[0] = xv.id;
    n.in[1] = wv.id;
    n.in[2] = bv.id;
    n.nin = 3;
    n.val = x.ndim() == 2 ? Tensor({B, m}) : Tensor({m});
    kernels::affine_forward(x.data.data(), B, in, w.data.data(), m, b.data.data(),
                            n.val.data.data());
    return push(std::move(n));
}

Var Tape::softmax2d(Var xv) {
    const Tensor& x = value(xv);
    if (x.ndim() != 2) throw std::invalid_argument("softmax2d: expected a matrix");
    Node n;
    n.op = Op::kSoftmax2d;
    n.in[0] = xv.id;
    n.nin = 1;
    n.val = Tensor(x.shape);
    kernels::softmax2d_forward(x.data.data(), x.size(), n.val.data.data());
    return push(std::move(n));
}

Var Tape::attention(Var qv, Var kv, Var vv, Var rhv, Var rwv) {
    const Tensor& q = value(qv);
    const Tensor& k = value(kv);
    const Tensor& v = value(vv);
    const Tensor& rh = value(rhv);
    const Tensor& rw = value(rwv);
    if (q.ndim() != 3 || k.ndim() != 3 || v.ndim() != 3)
        throw std::invalid_argument("attention: q, k, v must be (H,W,N)");
    const int H = q.dim(0), W = q.dim(1), Nq = q.dim(2);
    const int Nv = v.dim(2);
    if (k.dim(0) != H || k.dim(1) != W || k.dim(2) != Nq)
        throw std::invalid_argument("attention: key shape must match query shape");
    if (v.dim(0) != H || v.dim(1) != W)
        throw std::invalid_argument("attention: value spatial shape mismatch");
    if (rh.ndim() != 2 || rh.dim(0) != 2 * H - 1 || rh.dim(1) != Nq)
        throw std::invalid_argument("attention: rh must be (2H-1, Nq)");
    if (rw.ndim() != 2 || rw.dim(0) != 2 * W - 1 || rw.dim(1) != Nq)
        throw std::invalid_argument("attention: rw must be (2W-1, Nq)");
    Node n;
    n.op = Op::kAttention;
    n.in[0] = qv.id;
    n.in[1] = kv.id;
    n.in[2] = vv.id;
    n.in[3] = rhv.id;
    n.in[4] = rwv.id;
    n.nin = 5;
    n.val = Tensor({H, W, Nv});
    n.aux = Tensor({H * W, H * W});
    kernels::attention_forward(q.data.data(), k.data.data(), v.data.data(), rh.data.data(),
                               rw.data.data(), H, W, Nq, Nv, n.val.data.data(),
                               n.aux.data.data());
    return push(std::move(n));
}

Var Tape::concat_channels(Var av, Var bv) {
    const Tensor& a = value(av);
    const Tensor& b = value(bv);
    if (a.ndim() != 3 || b.ndim() != 3 || a.dim(0) != b.dim(0) || a.dim(1) != b.dim(1))
        throw std::invalid_argument("concat_channels: spatial shapes must match");
    const int H = a.dim(0), W = a.dim(1), Ca = a.dim(2), Cb = b.dim(2);
    Node n;
    n.op = Op::kConcatChannels;
    n.in[0] = av.id;
    n.in[1] = bv.id;
    n.nin = 2;
    n.val = Tensor({H, W, Ca + Cb});
    for (int64_t i = 0; i < static_cast<int64_t>(H) * W; ++i) {
        std::memcpy(n.val.data.data() + i * (Ca + Cb), a.data.data() + i * Ca,
                    sizeof(double) * static_cast<size_t>(Ca));
        std::memcpy(n.val.data.data() + i * (Ca + Cb) + Ca, b.data.data() + i * Cb,
                    sizeof(double) * static_cast<size_t>(Cb));
    }
    return push(std::move(n));
}

Var Tape::reshape(Var xv, std::vector<int> shape) {
    const Tensor& x = value(xv);
    if (shape_size(shape) != x.size()) throw std::invalid_argument("reshape: size mismatch");
    Node n;
    n.op = Op::kReshape;
    n.in[0] = xv.id;
    n.nin = 1;
    n.val.shape = std::move(shape);
    n.val.data = x.data;
    return push(std::move(n));
}

Var Tape::flatten(Var x) { return reshape(x, {static_cast<int>(value(x).size())}); }

Var Tape::add(Var av, Var bv) {
    const Tensor& a = value(av);
    const Tensor& b = value(bv);
    if (!a.same_shape(b)) throw std::invalid_argument("add: shape mismatch");
    Node n;
    n.op = Op::kAdd;
    n.in[0] = av.id;
    n.in[1] = bv.id;
    n.nin = 2;
    n.val = Tensor(a.shape);
    for (int64_t i = 0; i < a.size(); ++i) n.val[i] = a[i] + b[i];
    return push(std::move(n));
}

Var Tape::sub(Var av, Var bv) {
    const Tensor& a = value(av);
    const Tensor& b = value(bv);
    if (!a.same_shape(b)) throw std::invalid_argument("sub: shape mismatch");
    Node n;
    n.op = Op::kSub;
    n.in[0] = av.id;
    n.in[1] = bv.id;
    n.nin = 2;
    n.val = Tensor(a.shape);
    for (int64_t i = 0; i < a.size(); ++i) n.val[i] = a[i] - b[i];
    return push(std::move(n));
}

Var Tape::scale(Var xv, double c) {
    const Tensor& x = value(xv);
    Node n;
    n.op = Op::kScale;
    n.in[0] = xv.id;
    n.nin = 1;
    n.scalar = c;
    n.val = Tensor(x.shape);
    for (int64_t i = 0; i < x.size(); ++i) n.val[i] = c * x[i];
    return push(std::move(n));
}

Var Tape::dot(Var av, Var bv) {
    const Tensor& a = value(av);
    const Tensor& b = value(bv);
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    double acc = 0.0;
    for (int64_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    Node n;
    n.op = Op::kDot;
    n.in[0] = av.id;
    n.in[1] = bv.id;
    n.nin = 2;
    n.val = Tensor::scalar(acc);
    return push(std::move(n));
}

Var Tape::sum(Var xv) {
    const Tensor& x = value(xv);
    double acc = 0.0;
    for (int64_t i = 0; i < x.size(); ++i) acc += x[i];
    Node n;
    n.op = Op::kSum;
    n.in[0] = xv.id;
    n.nin = 1;
    n.val = Tensor::scalar(acc);
    return push(std::move(n));
}

Var Tape::sum_sq(Var xv) {
    const Tensor& x = value(xv);
    double acc = 0.0;
    for (int64_t i = 0; i < x.size(); ++i) acc += x[i] * x[i];
    Node n;
    n.op = Op::kSumSq;
    n.in[0] = xv.id;
    n.nin = 1;
    n.val = Tensor::scalar(acc);
    return push(std::move(n));
}

void Tape::backward(Var loss) {
    Node& ln = nodes_[check(loss)];
    if (ln.val.size() != 1) throw std::invalid_argument("backward: loss must be scalar");
    for (Node& n : nodes_) {
        n.grad = Tensor(n.val.shape);
    }
    ln.grad.data[0] = 1.0;
    for (size_t i = nodes_.size(); i-- > 0;) backward_node(nodes_[i]);
}

void Tape::backward_node(Node& n) {
    auto g = [&](int slot) -> Tensor& { return nodes_[static_cast<size_t>(n.in[slot])].grad; };
    auto v = [&](int slot) -> const Tensor& {
        return nodes_[static_cast<size_t>(n.in[slot])].val;
    };
    switch (n.op) {
        case Op::kInput:
        case Op::kParam:
            return;
        case Op::kConv2d: {
            const Tensor& x = v(0);
            const Tensor& w = v(1);
            kernels::conv2d_backward(x.data.data(), x.dim(0), x.dim(1), x.dim(2), w.data.data(),
                                     w.dim(0), w.dim(3), n.grad.data.data(), g(0).data.data(),
                                     g(1).data.data(), g(2).data.data());
            return;
        }
        case Op::kAvgPool: {
            const Tensor& x = v(0);
            kernels::avg_pool_backward(n.grad.data.data(), x.dim(0), x.dim(1), x.dim(2), n.p, n.q,
                                       g(0).data.data());
            return;
        }
        case Op::kLeakyRelu: {
            const Tensor& x = v(0);
            kernels::leaky_relu_backward(x.data.data(), n.grad.data.data(), x.size(), n.scalar,
                                         g(0).data.data());
            return;
        }
        case Op::kAffine: {
            const Tensor& x = v(0);
            const Tensor& w = v(1);
            const int B = x.ndim() == 2 ? x.dim(0) : 1;
            const int in = x.ndim() == 2 ? x.dim(1) : x.dim(0);
            kernels::affine_backward(x.data.data(), B, in, w.data.data(), w.dim(1),
                                     n.grad.data.data(), g(0).data.data(), g(1).data.data(),
                                     g(2).data.data());
            return;
        }
        case Op::kSoftmax2d: {
            kernels::softmax2d_backward(n.val.data.data(), n.grad.data.data(), n.val.size(),
                                        g(0).data.data());
            return;
        }
        case Op::kAttention: {
            const Tensor& q = v(0);
            const Tensor& k = v(1);
            const Tensor& val = v(2);
            const Tensor& rh = v(3);
            const Tensor& rw = v(4);
            kernels::attention_backward(q.data.data(), k.data.data(), val.data.data(),
                                        rh.data.data(), rw.data.data(), n.aux.data.data(),
                                        n.grad.data.data(), q.dim(0), q.dim(1), q.dim(2),
                                        val.dim(2), g(0).data.data(), g(1).data.data(),
                                        g(2).data.data(), g(3).data.data(), g(4).data.data());
            return;
        }
        case Op::kConcatChannels: {
            Tensor& ga = g(0);
            Tensor& gb = g(1);
            const int Ca = v(0).dim(2), Cb = v(1).dim(2);
            const int64_t pixels = static_cast<int64_t>(v(0).dim(0)) * v(0).dim(1);
            for (int64_t i = 0; i < pixels; ++i) {
                const double* gp = n.grad.data.data() + i * (Ca + Cb);
                for (int c = 0; c < Ca; ++c) ga[i * Ca + c] += gp[c];
                for (int c = 0; c < Cb; ++c) gb[i * Cb + c] += gp[Ca + c];
            }
            return;
        }
        case Op::kReshape: {
            Tensor& gx = g(0);
            for (int64_t i = 0; i < gx.size(); ++i) gx[i] += n.grad[i];
            return;
        }
        case Op::kAdd: {
            for (int64_t i = 0; i < n.grad.size(); ++i) {
                g(0)[i] += n.grad[i];
                g(1)[i] += n.grad[i];
            }
            return;
        }
        case Op::kSub: {
            for (int64_t i = 0; i < n.grad.size(); ++i) {
                g(0)[i] += n.grad[i];
                g(1)[i] -= n.grad[i];
            }
            return;
        }
        case Op::kScale: {
            for (int64_t i = 0; i < n.grad.size(); ++i) g(0)[i] += n.scalar * n.grad[i];
            return;
        }
        case Op::kDot: {
            const double gy = n.grad[0];
            for (int64_t i = 0; i < v(0).size(); ++i) {
                g(0)[i] += gy * v(1)[i];
                g(1)[i] += gy * v(0)[i];
            }
            return;
        }
        case Op::kSum: {
            const double gy = n.grad[0];
            for (int64_t i = 0; i < g(0).size(); ++i) g(0)[i] += gy;
            return;
        }
        case Op::kSumSq: {
            const double gy = n.grad[0];
            for (int64_t i = 0; i < v(0).size(); ++i) g(0)[i] += 2.0 * gy * v(0)[i];
            return;
        }
    }
}

std::vector<Tape::ParamGrad> Tape::param_grads() const {
    std::vector<ParamGrad> out;
    out.reserve(param_nodes_.size());
    for (const auto& [ptr, id] : param_nodes_)
        out.push_back({ptr, &nodes_[static_cast<size_t>(id)].grad});
    return out;
}

const Tensor& Tape::grad_of(const Parameter& p) const {
    for (const auto& [ptr, id] : param_nodes_)
        if (ptr == &p) return nodes_[static_cast<size_t>(id)].grad;
    throw std::invalid_argument("grad_of: parameter " + p.name + " not on this tape");
}

double adam_lr(const AdamState& st, int epoch) {
    return st.base_lr * std::pow(0.5, epoch / st.halve_every);
}

void adam_step(std::span<Parameter* const> params, const std::vector<Tensor>& grads,
               AdamState& st, int epoch) {
    if (params.size() != grads.size())
        throw std::invalid_argument("adam_step: params/grads size mismatch");
    for (size_t i = 0; i < params.size(); ++i) {
        if (!params[i]->value.same_shape(grads[i]))
            throw std::invalid_argument("adam_step: gradient shape mismatch for " +
                                        params[i]->name);
        if (!grads[i].all_finite())
            throw numeric_error("adam_step: non-finite gradient for " + params[i]->name);
    }
    if (st.m.empty()) {
        for (const auto* p : params) {
            st.m.emplace_back(p->value.shape);
            st.v.emplace_back(p->value.shape);
        }
    }
    st.step += 1;
    const double lr = adam_lr(st, epoch);
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& m = st.m[i];
        Tensor& v = st.v[i];
        Tensor& p = params[i]->value;
        const Tensor& gr = grads[i];
        for (int64_t j = 0; j < p.size(); ++j) {
            m[j] = st.beta1 * m[j] + (1.0 - st.beta1) * gr[j];
            v[j] = st.beta2 * v[j] + (1.0 - st.beta2) * gr[j] * gr[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] -= lr * mhat / (std::sqrt(vhat) + st.eps);
        }
    }
}

double grad_check(std::span<Parameter* const> params, const std::vector<Tensor>& analytic,
                  const std::function<double()>& loss_fn, double eps, int min_samples,
                  uint64_t seed) {
    if (eps < 1e-7 || eps > 1e-3)
        throw std::invalid_argument("grad_check: eps must lie in [1e-7, 1e-3]");
    if (params.size() != analytic.size())
        throw std::invalid_argument("grad_check: params/analytic size mismatch");
    Rng rng(seed);
    double worst = 0.0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& val = params[pi]->value;
        const Tensor& an = analytic[pi];
        const int64_t n = val.size();
        const int64_t samples = std::min<int64_t>(n, min_samples);
        for (int64_t s = 0; s < samples; ++s) {
            const int64_t j = samples == n ? s : static_cast<int64_t>(rng.uniform_int(
                                                     static_cast<uint64_t>(n)));
            const double saved = val[j];
            val[j] = saved + eps;
            const double lp = loss_fn();
            val[j] = saved - eps;
            const double lm = loss_fn();
            val[j] = saved;
            const double fd = (lp - lm) / (2.0 * eps);
            const double rel =
                std::fabs(fd - an[j]) / std::max({std::fabs(fd), std::fabs(an[j]), 1e-6});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

}  // namespace csiloc
