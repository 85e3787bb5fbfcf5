#pragma once

#include <functional>
#include <map>
#include <string>
#include <deque>
#include <vector>

#include "san/tensor.hpp"

namespace san {

/// Named trainable parameters. std::map keeps iteration order deterministic,
/// which the checkpoint format and optimizers rely on.
class ParamStore {
public:
    Tensor& add(const std::string& name, Tensor value) {
        auto [it, inserted] = params_.emplace(name, std::move(value));
        if (!inserted) throw UsageError("duplicate parameter: " + name);
        return it->second;
    }

    bool contains(const std::string& name) const { return params_.count(name) != 0; }

    Tensor& at(const std::string& name) {
        auto it = params_.find(name);
        if (it == params_.end()) throw UsageError("unknown parameter: " + name);
        return it->second;
    }
    const Tensor& at(const std::string& name) const {
        auto it = params_.find(name);
        if (it == params_.end()) throw UsageError("unknown parameter: " + name);
        return it->second;
    }

    std::map<std::string, Tensor>& all() { return params_; }
    const std::map<std::string, Tensor>& all() const { return params_; }

private:
    std::map<std::string, Tensor> params_;
};

using GradientMap = std::map<std::string, Tensor>;

struct Var {
    int id = -1;
};

/// Define-by-run differentiable graph. Ops evaluate eagerly, so intermediate
/// values can be inspected while the graph is being built (used e.g. for the
/// hardest-negative selection). backward() walks the tape once in reverse.
class Graph {
public:
    explicit Graph(const ParamStore* params = nullptr) : params_(params) {}

    Var input(Tensor value);
    Var constant(double v) { return input(Tensor::scalar(v)); }
    Var param(const std::string& name);

    const Tensor& value(Var v) const { return nodes_[check(v)].value; }

    // elementwise / scalar
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double c);
    Var relu(Var a);
    Var sigmoid(Var a);
    Var tanh_(Var a);

    /// PReLU on a [C,H,W] map with one learnable slope per channel.
    Var prelu(Var x, Var slopes);

    // linear algebra
    Var matmul(Var a, Var b);
    Var matvec(Var w, Var x);
    /// rows(X) * W^T + b : X [L,n], W [m,n], b [m] -> [L,m]
    Var linear_rows(Var x, Var w, Var b);
    /// each row of X [L,k] multiplied elementwise by v [k]
    Var mul_rows(Var x, Var v);

    // spatial
    Var conv2d(Var input, Var kernels, Var bias, int stride, int padding);
    Var avg_pool2d(Var input, int stride_h, int stride_w);
    Var upsample2d(Var input, int factor);  // nearest-neighbor, rank 2 or 3
    Var concat_channels(Var a, Var b);      // [C1,H,W] + [C2,H,W] -> [C1+C2,H,W]

    // shape
    Var reshape(Var a, std::vector<std::size_t> shape);
    Var chw_to_rows(Var a);  // [C,H,W] -> [H*W, C], row-major over (i,j)
    Var row(Var x, std::size_t index);
    Var stack_rows(const std::vector<Var>& rows);

    // reductions
    Var mean_axis(Var x, int axis);  // rank-2 only
    Var sum_all(Var x);
    Var softmax(Var x, int axis = 0);  // rank-1, or rank-2 along given axis
    Var normalize_l1(Var x);           // x_i / sum(x), strictly positive input
    Var max_all(Var x);                // subgradient to the (first) argmax

    // fused domain ops
    Var cosine(Var a, Var b);
    /// column lookup: we [emb,V], ids in [0,V) -> [L,emb]
    Var embedding(Var we, const std::vector<int>& ids);
    /// mean binary cross-entropy between sigmoid(logits) and mask, log-sum-exp form
    Var bce_logits_mean(Var logits, const Tensor& mask);

    /// Reverse-mode differentiation from a scalar loss node; returns gradients
    /// for every trainable parameter touched by the graph.
    GradientMap backward(Var loss);

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::vector<int> inputs;
        std::function<void(Graph&, int)> backprop;  // accumulates into input grads
        std::string param_name;                      // nonempty for parameter leaves
    };

    int check(Var v) const {
        if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
            throw UsageError("invalid graph node id");
        return v.id;
    }

    Var push(Tensor value, std::vector<int> inputs,
             std::function<void(Graph&, int)> backprop);

    Tensor& grad_of(int id) { return nodes_[id].grad; }
    const Tensor& val_of(int id) const { return nodes_[id].value; }

    std::deque<Node> nodes_;
    std::map<std::string, int> param_nodes_;
    const ParamStore* params_;
};

}  // namespace san
