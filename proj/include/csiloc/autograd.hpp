#pragma once

#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "csiloc/tensor.hpp"

namespace csiloc {

/// Trainable tensor. Gradients live on the tape that uses the parameter, not
/// here, so independent tapes over the same parameters can run concurrently.
struct Parameter {
    Tensor value;
    std::string name;
};

struct Var {
    int id = -1;
};

/// Reverse-mode tape. Ops evaluate eagerly and record what backward() needs.
/// Nodes are appended in evaluation order, which is already topological.
class Tape {
public:
    enum class Op {
        kInput,
        kParam,
        kConv2d,
        kAvgPool,
        kLeakyRelu,
        kAffine,
        kSoftmax2d,
        kAttention,
        kConcatChannels,
        kReshape,
        kAdd,
        kSub,
        kScale,
        kDot,
        kSum,
        kSumSq,
    };

    Var input(Tensor t);
    Var param(const Parameter& p);

    Var conv2d(Var x, Var w, Var b);
    Var avg_pool(Var x, int p, int q);
    Var leaky_relu(Var x, double slope);
    Var affine(Var x, Var w, Var b);
    Var softmax2d(Var x);
    Var attention(Var q, Var k, Var v, Var rh, Var rw);
    Var concat_channels(Var a, Var b);
    Var reshape(Var x, std::vector<int> shape);
    Var flatten(Var x);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var scale(Var x, double c);
    Var dot(Var a, Var b);
    Var sum(Var x);
    Var sum_sq(Var x);

    /// Fills gradient buffers for every node reachable from the scalar loss.
    void backward(Var loss);

    // references stay valid as more ops are appended (deque storage)
    const Tensor& value(Var v) const { return nodes_[check(v)].val; }
    const Tensor& grad(Var v) const { return nodes_[check(v)].grad; }

    /// Gradient accumulated for a parameter used on this tape. Valid after
    /// backward(); throws if the parameter never entered the graph.
    const Tensor& grad_of(const Parameter& p) const;

    /// Parameter nodes recorded on this tape, in first-use order. Note the
    /// order depends on expression evaluation order; prefer grad_of().
    struct ParamGrad {
        const Parameter* param;
        const Tensor* grad;
    };
    std::vector<ParamGrad> param_grads() const;

    size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Op op;
        Tensor val;
        Tensor grad;
        int in[5] = {-1, -1, -1, -1, -1};
        int nin = 0;
        const Parameter* param = nullptr;
        double scalar = 0.0;  // scale factor / activation slope
        int p = 0, q = 0;     // pool sizes
        Tensor aux;           // attention weight cache
    };

    size_t check(Var v) const;
    Var push(Node n);
    void backward_node(Node& n);

    std::deque<Node> nodes_;
    std::vector<std::pair<const Parameter*, int>> param_nodes_;
};

/// Adam with bias correction and a halve-every-N-epochs learning-rate schedule.
struct AdamState {
    double base_lr = 1e-3;
    int halve_every = 200;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int64_t step = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;
};

double adam_lr(const AdamState& st, int epoch);

/// One optimizer step. `grads` aligns with `params`. Throws numeric_error on a
/// non-finite gradient without touching the parameters.
void adam_step(std::span<Parameter* const> params, const std::vector<Tensor>& grads,
               AdamState& st, int epoch);

/// Compares analytic gradients against central finite differences on a random
/// subsample of at least `min_samples` components per parameter. `loss_fn`
/// re-evaluates the loss at the parameters' current values. Returns the max
/// relative error seen.
double grad_check(std::span<Parameter* const> params, const std::vector<Tensor>& analytic,
                  const std::function<double()>& loss_fn, double eps, int min_samples,
                  uint64_t seed);

}  // namespace csiloc
