#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "csiloc/autograd.hpp"
#include "csiloc/channel.hpp"
#include "csiloc/tensor.hpp"

namespace csiloc {

/// Position-estimator architecture: shallow conv, `stages` cascaded
/// residual+pooling stages, `deep_blocks` deep blocks (attention-augmented
/// every `aarb_period`-th block), flatten, 3-layer FCN head ending in 2 units.
struct NetworkConfig {
    int input_h = 64;
    int input_w = 100;
    int input_c = 2;
    int channels = 32;    // feature width C, constant across blocks
    int kernel = 5;       // k, odd
    int stages = 2;       // D
    int deep_blocks = 7;  // M
    int aarb_period = 1;  // z; block m is attention-augmented iff (m-1) mod z == 0
    int attn_qk = 4;      // N_q = N_k
    int attn_v = 4;       // N_v
    int fcn1 = 64;        // n_1
    int fcn2 = 32;        // n_2
    int pool_h = 2;       // p
    int pool_w = 2;       // q
    // ablation switches: attention off turns every deep block into a plain
    // residual block, pooling blocks off replaces them with bare average pools
    bool use_attention = true;
    bool use_pooling_blocks = true;

    void validate() const;
    int deep_h() const;
    int deep_w() const;
    bool block_is_attention(int m) const;  // m = 1..deep_blocks
};

struct ConvParams {
    Parameter w;  // (k, k, Ci, Co)
    Parameter b;  // (Co)
};

/// 1x1 query/key/value projections plus relative positional encodings
/// (2H-1 + 2W-1 vectors of width N_q).
struct AttnParams {
    ConvParams q, k, v;
    Parameter rel_h;  // (2H-1, Nq)
    Parameter rel_w;  // (2W-1, Nq)
};

struct RbParams {
    ConvParams c1, c2;
};

struct AarbParams {
    ConvParams c1;
    AttnParams attn;
    ConvParams c2;  // (C + Nv) -> C
};

struct PbParams {
    ConvParams expand;  // C -> 2C
    ConvParams reduce;  // 2C -> C
};

struct FcnParams {
    Parameter w1, b1, w2, b2, w3, b3;
};

using DeepBlockParams = std::variant<RbParams, AarbParams>;

struct TrainMeta {
    int epochs_run = 0;
    double best_val_mse = 0.0;
};

struct PositionModel {
    NetworkConfig config;
    ConvParams shallow;
    std::vector<RbParams> stage_rb;
    std::vector<PbParams> stage_pb;  // empty when pooling blocks are disabled
    std::vector<DeepBlockParams> deep;
    FcnParams head;
    TrainMeta meta;

    std::vector<Parameter*> all_params();
    std::vector<const Parameter*> all_params() const;
};

/// Fresh model with Kaiming-uniform conv/affine weights, zero biases, and
/// N(0, Nq^-1/2) positional encodings.
PositionModel init_position_model(const NetworkConfig& config, uint64_t seed);

// Graph builders. Shapes are validated by the underlying ops.
Var rb_forward(Tape& t, Var x, const RbParams& p);
Var pb_forward(Tape& t, Var x, const PbParams& p, int pool_h, int pool_w);
Var aaconv_forward(Tape& t, Var x, const AttnParams& p);
Var aarb_forward(Tape& t, Var x, const AarbParams& p);
Var net_forward(Tape& t, const PositionModel& m, Var csi);

/// Scales a channel response by 1/max-abs so the network sees bounded inputs.
Tensor normalize_csi(const CsiTensor& csi);

/// Normalize, run the network, return the 2-D estimate.
Vec2 predict(const PositionModel& m, const CsiTensor& csi);

/// Mean of the squared position error over a sample set (m^2).
double eval_mse(const PositionModel& m, const std::vector<CsiSample>& samples);

struct TrainHyper {
    int epochs = 1000;
    int batch_size = 128;
    double lr = 1e-3;
    int lr_halve_every = 200;
    uint64_t seed = 1;
    // called after each epoch with (epoch, mean train loss, val mse, lr)
    std::function<void(int, double, double, double)> on_epoch;
};

/// Full training state, checkpointable mid-run.
struct TrainState {
    PositionModel model;
    PositionModel best_model;
    AdamState adam;
    int next_epoch = 0;
    double best_val = 0.0;
};

TrainState init_train_state(const NetworkConfig& config, const TrainHyper& hyper);

/// Runs epochs [state.next_epoch, until_epoch). Resuming from a saved state
/// reproduces an uninterrupted run bit for bit.
void train_epochs(TrainState& state, const std::vector<CsiSample>& train,
                  const std::vector<CsiSample>& val, const TrainHyper& hyper, int until_epoch);

/// Trains for hyper.epochs epochs and returns the best-validation checkpoint.
PositionModel train_position_net(const NetworkConfig& config,
                                 const std::vector<CsiSample>& train,
                                 const std::vector<CsiSample>& val, const TrainHyper& hyper);

enum class OpKind { kAveP, kConv, kAAConv };

OpKind parse_op_kind(const std::string& name);  // "avep" | "conv" | "aaconv"

struct OpCost {
    int64_t params = 0;
    int64_t flops = 0;
};

/// Parameter/FLOP estimate for one operation on an (H, W, C_in) input:
///   AveP:   params 0,                      flops H*W*Cin
///   Conv:   params k^2*Cin^2,              flops 2*k^2*H*W*Cin^2
///   AAConv: params Cin*(2Nq+Nv) + 2(H+W),  flops 2*H*W*[H*W*(3Nq+Nv) + Cin*(2Nq+Nv)]
OpCost flops_estimate(OpKind kind, int H, int W, int Ci, int k, int Nq, int Nv);

struct CostRow {
    std::string layer;
    std::string op;
    int H, W, Ci;
    OpCost cost;
};

/// Per-operation cost estimate table for a configured network.
std::vector<CostRow> network_cost_table(const NetworkConfig& config);

}  // namespace csiloc
