#include "csiloc/posnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "csiloc/errors.hpp"
#include "csiloc/kernels.hpp"
#include "csiloc/rng.hpp"

namespace csiloc {

namespace {

// batch items are reduced chunk by chunk in index order, so gradients do not
// depend on the thread count
constexpr int kGradChunk = 16;

int int_pow(int base, int exp) {
    int r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

}  // namespace

void NetworkConfig::validate() const {
    if (input_h < 1 || input_w < 1 || input_c < 1)
        throw std::invalid_argument("network: input dims must be positive");
    if (channels < 1) throw std::invalid_argument("network: channels must be positive");
    if (kernel < 1 || kernel % 2 == 0)
        throw std::invalid_argument("network: kernel must be odd and positive");
    if (stages < 1) throw std::invalid_argument("network: stages must be >= 1");
    if (deep_blocks < 1) throw std::invalid_argument("network: deep_blocks must be >= 1");
    if (aarb_period < 1 || aarb_period > deep_blocks)
        throw std::invalid_argument("network: aarb_period must be in [1, deep_blocks]");
    if (attn_qk < 1 || attn_v < 1)
        throw std::invalid_argument("network: attention widths must be positive");
    if (fcn1 < 1 || fcn2 < 1) throw std::invalid_argument("network: fcn widths must be positive");
    if (pool_h < 1 || pool_w < 1) throw std::invalid_argument("network: pool sizes must be >= 1");
    if (input_h % int_pow(pool_h, stages) != 0 || input_w % int_pow(pool_w, stages) != 0)
        throw std::invalid_argument("network: pooling must divide the input dims evenly");
}

int NetworkConfig::deep_h() const { return input_h / int_pow(pool_h, stages); }
int NetworkConfig::deep_w() const { return input_w / int_pow(pool_w, stages); }

bool NetworkConfig::block_is_attention(int m) const {
    return use_attention && (m - 1) % aarb_period == 0;
}

namespace {

double kaiming_bound(int fan_in) {
    const double gain =
        std::sqrt(2.0 / (1.0 + kernels::kLeakyReluSlope * kernels::kLeakyReluSlope));
    return gain * std::sqrt(3.0 / fan_in);
}

Parameter make_conv_w(const std::string& name, int k, int ci, int co, Rng& rng) {
    Parameter p{Tensor({k, k, ci, co}), name};
    const double bound = kaiming_bound(k * k * ci);
    for (auto& v : p.value.data) v = rng.uniform(-bound, bound);
    return p;
}

Parameter make_bias(const std::string& name, int co) { return {Tensor({co}), name}; }

ConvParams make_conv(const std::string& name, int k, int ci, int co, Rng& rng) {
    return {make_conv_w(name + ".w", k, ci, co, rng), make_bias(name + ".b", co)};
}

Parameter make_affine_w(const std::string& name, int in, int out, Rng& rng) {
    Parameter p{Tensor({in, out}), name};
    const double bound = kaiming_bound(in);
    for (auto& v : p.value.data) v = rng.uniform(-bound, bound);
    return p;
}

Parameter make_encoding(const std::string& name, int count, int nq, Rng& rng) {
    Parameter p{Tensor({count, nq}), name};
    const double std = 1.0 / std::sqrt(static_cast<double>(nq));
    for (auto& v : p.value.data) v = rng.normal(0.0, std);
    return p;
}

AttnParams make_attn(const std::string& name, int ci, int nq, int nv, int H, int W, Rng& rng) {
    AttnParams a;
    a.q = make_conv(name + ".q", 1, ci, nq, rng);
    a.k = make_conv(name + ".k", 1, ci, nq, rng);
    a.v = make_conv(name + ".v", 1, ci, nv, rng);
    a.rel_h = make_encoding(name + ".rel_h", 2 * H - 1, nq, rng);
    a.rel_w = make_encoding(name + ".rel_w", 2 * W - 1, nq, rng);
    return a;
}

template <typename Model, typename Param, typename Push>
void visit_params(Model& m, Push&& push) {
    push(m.shallow.w);
    push(m.shallow.b);
    for (size_t d = 0; d < m.stage_rb.size(); ++d) {
        auto& rb = m.stage_rb[d];
        push(rb.c1.w);
        push(rb.c1.b);
        push(rb.c2.w);
        push(rb.c2.b);
        if (d < m.stage_pb.size()) {
            auto& pb = m.stage_pb[d];
            push(pb.expand.w);
            push(pb.expand.b);
            push(pb.reduce.w);
            push(pb.reduce.b);
        }
    }
    for (auto& block : m.deep) {
        if (auto* rb = std::get_if<RbParams>(&block)) {
            push(rb->c1.w);
            push(rb->c1.b);
            push(rb->c2.w);
            push(rb->c2.b);
        } else {
            auto& ab = std::get<AarbParams>(block);
            push(ab.c1.w);
            push(ab.c1.b);
            push(ab.attn.q.w);
            push(ab.attn.q.b);
            push(ab.attn.k.w);
            push(ab.attn.k.b);
            push(ab.attn.v.w);
            push(ab.attn.v.b);
            push(ab.attn.rel_h);
            push(ab.attn.rel_w);
            push(ab.c2.w);
            push(ab.c2.b);
        }
    }
    push(m.head.w1);
    push(m.head.b1);
    push(m.head.w2);
    push(m.head.b2);
    push(m.head.w3);
    push(m.head.b3);
}

}  // namespace

std::vector<Parameter*> PositionModel::all_params() {
    std::vector<Parameter*> out;
    visit_params<PositionModel, Parameter>(*this, [&](Parameter& p) { out.push_back(&p); });
    return out;
}

std::vector<const Parameter*> PositionModel::all_params() const {
    std::vector<const Parameter*> out;
    visit_params<const PositionModel, const Parameter>(
        *this, [&](const Parameter& p) { out.push_back(&p); });
    return out;
}

PositionModel init_position_model(const NetworkConfig& config, uint64_t seed) {
    config.validate();
    Rng rng(derive_seed(seed, {0x1417ea57ull}));
    PositionModel m;
    m.config = config;
    m.meta.best_val_mse = std::numeric_limits<double>::infinity();
    const int C = config.channels;
    const int k = config.kernel;
    m.shallow = make_conv("shallow", k, config.input_c, C, rng);
    for (int d = 0; d < config.stages; ++d) {
        const std::string tag = "stage" + std::to_string(d + 1);
        RbParams rb;
        rb.c1 = make_conv(tag + ".rb.c1", k, C, C, rng);
        rb.c2 = make_conv(tag + ".rb.c2", k, C, C, rng);
        m.stage_rb.push_back(std::move(rb));
        if (config.use_pooling_blocks) {
            PbParams pb;
            pb.expand = make_conv(tag + ".pb.expand", k, C, 2 * C, rng);
            pb.reduce = make_conv(tag + ".pb.reduce", k, 2 * C, C, rng);
            m.stage_pb.push_back(std::move(pb));
        }
    }
    const int dh = config.deep_h();
    const int dw = config.deep_w();
    for (int b = 1; b <= config.deep_blocks; ++b) {
        const std::string tag = "deep" + std::to_string(b);
        if (config.block_is_attention(b)) {
            AarbParams ab;
            ab.c1 = make_conv(tag + ".c1", k, C, C, rng);
            ab.attn = make_attn(tag + ".attn", C, config.attn_qk, config.attn_v, dh, dw, rng);
            ab.c2 = make_conv(tag + ".c2", k, C + config.attn_v, C, rng);
            m.deep.emplace_back(std::move(ab));
        } else {
            RbParams rb;
            rb.c1 = make_conv(tag + ".c1", k, C, C, rng);
            rb.c2 = make_conv(tag + ".c2", k, C, C, rng);
            m.deep.emplace_back(std::move(rb));
        }
    }
    const int flat = dh * dw * C;
    m.head.w1 = make_affine_w("head.w1", flat, config.fcn1, rng);
    m.head.b1 = make_bias("head.b1", config.fcn1);
    m.head.w2 = make_affine_w("head.w2", config.fcn1, config.fcn2, rng);
    m.head.b2 = make_bias("head.b2", config.fcn2);
    m.head.w3 = make_affine_w("head.w3", config.fcn2, 2, rng);
    m.head.b3 = make_bias("head.b3", 2);
    return m;
}

Var rb_forward(Tape& t, Var x, const RbParams& p) {
    Var h = t.conv2d(x, t.param(p.c1.w), t.param(p.c1.b));
    h = t.leaky_relu(h, kernels::kLeakyReluSlope);
    h = t.conv2d(h, t.param(p.c2.w), t.param(p.c2.b));
    return t.add(x, h);
}

Var pb_forward(Tape& t, Var x, const PbParams& p, int pool_h, int pool_w) {
    Var h = t.conv2d(x, t.param(p.expand.w), t.param(p.expand.b));
    h = t.avg_pool(h, pool_h, pool_w);
    return t.conv2d(h, t.param(p.reduce.w), t.param(p.reduce.b));
}

Var aaconv_forward(Tape& t, Var x, const AttnParams& p) {
    Var q = t.conv2d(x, t.param(p.q.w), t.param(p.q.b));
    Var k = t.conv2d(x, t.param(p.k.w), t.param(p.k.b));
    Var v = t.conv2d(x, t.param(p.v.w), t.param(p.v.b));
    return t.attention(q, k, v, t.param(p.rel_h), t.param(p.rel_w));
}

Var aarb_forward(Tape& t, Var x, const AarbParams& p) {
    Var conv_branch = t.conv2d(x, t.param(p.c1.w), t.param(p.c1.b));
    Var attn_branch = aaconv_forward(t, x, p.attn);
    Var h = t.concat_channels(conv_branch, attn_branch);
    h = t.leaky_relu(h, kernels::kLeakyReluSlope);
    h = t.conv2d(h, t.param(p.c2.w), t.param(p.c2.b));
    return t.add(x, h);
}

Var net_forward(Tape& t, const PositionModel& m, Var csi) {
    const NetworkConfig& cfg = m.config;
    const Tensor& in = t.value(csi);
    if (in.ndim() != 3 || in.dim(0) != cfg.input_h || in.dim(1) != cfg.input_w ||
        in.dim(2) != cfg.input_c)
        throw std::invalid_argument("net_forward: input shape does not match the model");
    Var f = t.conv2d(csi, t.param(m.shallow.w), t.param(m.shallow.b));
    for (int d = 0; d < cfg.stages; ++d) {
        f = rb_forward(t, f, m.stage_rb[static_cast<size_t>(d)]);
        if (cfg.use_pooling_blocks)
            f = pb_forward(t, f, m.stage_pb[static_cast<size_t>(d)], cfg.pool_h, cfg.pool_w);
        else
            f = t.avg_pool(f, cfg.pool_h, cfg.pool_w);
    }
    for (int b = 1; b <= cfg.deep_blocks; ++b) {
        const DeepBlockParams& block = m.deep[static_cast<size_t>(b - 1)];
        if (cfg.block_is_attention(b))
            f = aarb_forward(t, f, std::get<AarbParams>(block));
        else
            f = rb_forward(t, f, std::get<RbParams>(block));
    }
    Var flat = t.flatten(f);
    Var h = t.leaky_relu(t.affine(flat, t.param(m.head.w1), t.param(m.head.b1)),
                         kernels::kLeakyReluSlope);
    h = t.leaky_relu(t.affine(h, t.param(m.head.w2), t.param(m.head.b2)),
                     kernels::kLeakyReluSlope);
    return t.affine(h, t.param(m.head.w3), t.param(m.head.b3));
}

Tensor normalize_csi(const CsiTensor& csi) {
    Tensor out = csi;
    const double m = out.max_abs();
    if (m > 0.0) {
        const double inv = 1.0 / m;
        for (auto& v : out.data) v *= inv;
    }
    return out;
}

Vec2 predict(const PositionModel& m, const CsiTensor& csi) {
    Tape t;
    Var out = net_forward(t, m, t.input(normalize_csi(csi)));
    const Tensor& v = t.value(out);
    return {v[0], v[1]};
}

double eval_mse(const PositionModel& m, const std::vector<CsiSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("eval_mse: empty sample set");
    const int n = static_cast<int>(samples.size());
    std::vector<double> sq(static_cast<size_t>(n));
#pragma omp parallel for schedule(dynamic) if (n > 1)
    for (int i = 0; i < n; ++i) {
        const Vec2 pred = predict(m, samples[static_cast<size_t>(i)].csi);
        const Vec2 d = pred - samples[static_cast<size_t>(i)].pos;
        sq[static_cast<size_t>(i)] = d.x * d.x + d.y * d.y;
    }
    double acc = 0.0;
    for (double v : sq) acc += v;
    return acc / n;
}

TrainState init_train_state(const NetworkConfig& config, const TrainHyper& hyper) {
    TrainState st;
    st.model = init_position_model(config, hyper.seed);
    st.best_model = st.model;
    st.best_val = std::numeric_limits<double>::infinity();
    st.adam.base_lr = hyper.lr;
    st.adam.halve_every = hyper.lr_halve_every;
    st.next_epoch = 0;
    return st;
}

namespace {

/// Forward + backward for one sample; accumulates per-parameter gradients in
/// canonical (all_params) order and returns the squared-error loss.
double sample_grads(const PositionModel& model, const CsiSample& sample,
                    const std::vector<const Parameter*>& order, std::vector<Tensor>& acc) {
    Tape t;
    Var pred = net_forward(t, model, t.input(normalize_csi(sample.csi)));
    Var target = t.input(Tensor::from({2}, {sample.pos.x, sample.pos.y}));
    Var loss = t.sum_sq(t.sub(pred, target));
    t.backward(loss);
    for (size_t i = 0; i < order.size(); ++i) {
        const Tensor& g = t.grad_of(*order[i]);
        for (int64_t j = 0; j < g.size(); ++j) acc[i][j] += g[j];
    }
    return t.value(loss)[0];
}

}  // namespace

void train_epochs(TrainState& state, const std::vector<CsiSample>& train,
                  const std::vector<CsiSample>& val, const TrainHyper& hyper, int until_epoch) {
    if (train.empty() || val.empty())
        throw std::invalid_argument("train: train and val sets must be nonempty");
    PositionModel& model = state.model;
    std::vector<Parameter*> params = model.all_params();
    std::vector<const Parameter*> order(params.begin(), params.end());
    const int n = static_cast<int>(train.size());
    const int batch = std::max(1, std::min(hyper.batch_size, n));

    std::vector<Tensor> total(params.size());
    for (size_t i = 0; i < params.size(); ++i) total[i] = Tensor(params[i]->value.shape);

    for (int epoch = state.next_epoch; epoch < until_epoch; ++epoch) {
        std::vector<int> idx(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
        Rng shuffle_rng(derive_seed(hyper.seed, {0x5481ull, static_cast<uint64_t>(epoch)}));
        for (int i = n - 1; i > 0; --i)
            std::swap(idx[static_cast<size_t>(i)],
                      idx[static_cast<size_t>(shuffle_rng.uniform_int(static_cast<uint64_t>(i + 1)))]);

        double epoch_loss = 0.0;
        for (int start = 0; start < n; start += batch) {
            const int bsz = std::min(batch, n - start);
            const int nchunks = (bsz + kGradChunk - 1) / kGradChunk;
            std::vector<std::vector<Tensor>> chunk_grads(static_cast<size_t>(nchunks));
            std::vector<double> chunk_loss(static_cast<size_t>(nchunks), 0.0);
#pragma omp parallel for schedule(dynamic) if (nchunks > 1)
            for (int c = 0; c < nchunks; ++c) {
                auto& acc = chunk_grads[static_cast<size_t>(c)];
                acc.resize(params.size());
                for (size_t i = 0; i < params.size(); ++i) acc[i] = Tensor(params[i]->value.shape);
                const int lo = start + c * kGradChunk;
                const int hi = std::min(start + (c + 1) * kGradChunk, start + bsz);
                for (int s = lo; s < hi; ++s)
                    chunk_loss[static_cast<size_t>(c)] += sample_grads(
                        model, train[static_cast<size_t>(idx[static_cast<size_t>(s)])], order,
                        acc);
            }
            double batch_loss = 0.0;
            for (double l : chunk_loss) batch_loss += l;
            if (!std::isfinite(batch_loss)) {
                std::ostringstream msg;
                msg << "train: loss diverged (non-finite) at epoch " << epoch << ", batch offset "
                    << start;
                throw numeric_error(msg.str());
            }
            const double inv = 1.0 / bsz;
            for (size_t i = 0; i < total.size(); ++i) {
                total[i].fill(0.0);
                for (int c = 0; c < nchunks; ++c) {
                    const Tensor& g = chunk_grads[static_cast<size_t>(c)][i];
                    for (int64_t j = 0; j < g.size(); ++j) total[i][j] += g[j];
                }
                for (int64_t j = 0; j < total[i].size(); ++j) total[i][j] *= inv;
            }
            adam_step(params, total, state.adam, epoch);
            epoch_loss += batch_loss;
        }
        epoch_loss /= n;

        const double val_mse = eval_mse(model, val);
        if (val_mse < state.best_val) {
            state.best_val = val_mse;
            state.best_model = model;
        }
        state.next_epoch = epoch + 1;
        model.meta.epochs_run = epoch + 1;
        model.meta.best_val_mse = state.best_val;
        if (hyper.on_epoch) hyper.on_epoch(epoch, epoch_loss, val_mse, adam_lr(state.adam, epoch));
    }
    state.best_model.meta.epochs_run = state.next_epoch;
    state.best_model.meta.best_val_mse = state.best_val;
}

PositionModel train_position_net(const NetworkConfig& config,
                                 const std::vector<CsiSample>& train,
                                 const std::vector<CsiSample>& val, const TrainHyper& hyper) {
    TrainState st = init_train_state(config, hyper);
    train_epochs(st, train, val, hyper, hyper.epochs);
    return st.best_model;
}

OpKind parse_op_kind(const std::string& name) {
    if (name == "avep") return OpKind::kAveP;
    if (name == "conv") return OpKind::kConv;
    if (name == "aaconv") return OpKind::kAAConv;
    throw std::invalid_argument("unknown op kind: " + name);
}

OpCost flops_estimate(OpKind kind, int H, int W, int Ci, int k, int Nq, int Nv) {
    if (H < 1 || W < 1 || Ci < 1) throw std::invalid_argument("flops_estimate: bad dims");
    const int64_t HW = static_cast<int64_t>(H) * W;
    switch (kind) {
        case OpKind::kAveP:
            return {0, HW * Ci};
        case OpKind::kConv: {
            const int64_t k2 = static_cast<int64_t>(k) * k;
            const int64_t c2 = static_cast<int64_t>(Ci) * Ci;
            return {k2 * c2, 2 * k2 * HW * c2};
        }
        case OpKind::kAAConv: {
            const int64_t mix = static_cast<int64_t>(Ci) * (2 * Nq + Nv);
            return {mix + 2 * (H + W), 2 * HW * (HW * (3 * Nq + Nv) + mix)};
        }
    }
    throw std::invalid_argument("flops_estimate: unknown op kind");
}

std::vector<CostRow> network_cost_table(const NetworkConfig& cfg) {
    cfg.validate();
    std::vector<CostRow> rows;
    int H = cfg.input_h, W = cfg.input_w;
    const int C = cfg.channels;
    auto conv = [&](const std::string& layer, int h, int w, int ci) {
        rows.push_back({layer, "conv", h, w, ci,
                        flops_estimate(OpKind::kConv, h, w, ci, cfg.kernel, 0, 0)});
    };
    conv("shallow", H, W, cfg.input_c);
    for (int d = 1; d <= cfg.stages; ++d) {
        const std::string tag = "stage" + std::to_string(d);
        conv(tag + ".rb.c1", H, W, C);
        conv(tag + ".rb.c2", H, W, C);
        if (cfg.use_pooling_blocks) conv(tag + ".pb.expand", H, W, C);
        rows.push_back({tag + (cfg.use_pooling_blocks ? ".pb.pool" : ".pool"), "avep", H, W,
                        cfg.use_pooling_blocks ? 2 * C : C,
                        flops_estimate(OpKind::kAveP, H, W,
                                       cfg.use_pooling_blocks ? 2 * C : C, 0, 0, 0)});
        H /= cfg.pool_h;
        W /= cfg.pool_w;
        if (cfg.use_pooling_blocks) conv(tag + ".pb.reduce", H, W, 2 * C);
    }
    for (int b = 1; b <= cfg.deep_blocks; ++b) {
        const std::string tag = "deep" + std::to_string(b);
        conv(tag + ".c1", H, W, C);
        if (cfg.block_is_attention(b))
            rows.push_back({tag + ".aaconv", "aaconv", H, W, C,
                            flops_estimate(OpKind::kAAConv, H, W, C, 0, cfg.attn_qk,
                                           cfg.attn_v)});
        conv(tag + ".c2", H, W, cfg.block_is_attention(b) ? C + cfg.attn_v : C);
    }
    return rows;
}

}  // namespace csiloc
