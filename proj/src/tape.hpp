#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

#include "params.hpp"
#include "tensor.hpp"

namespace svq {

struct Var {
    std::size_t id = static_cast<std::size_t>(-1);
    bool valid() const { return id != static_cast<std::size_t>(-1); }
};

// Records a forward computation over the fixed op set used in this library and
// replays it backwards. Parameter leaves accumulate into their ParamStore
// gradients, so several tapes can contribute to one optimizer step.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor2 value);
    // The same Param bound twice yields the same leaf.
    Var param(const Param& p);
    Var param(const ParamStore& store, const std::string& name) { return param(store.at(name)); }

    const Tensor2& value(Var v) const;
    // Gradient of the last backward() target with respect to v (zeros if unreached).
    Tensor2 grad(Var v) const;
    std::size_t size() const { return nodes_.size(); }

    // loss must be 1×1.
    void backward(Var loss);

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    // Adds a 1×n row to every row of a.
    Var add_row(Var a, Var row);
    Var scale(Var a, double s);
    Var add_scalar(Var a, double s);
    Var one_minus(Var a) { return add_scalar(scale(a, -1.0), 1.0); }
    // Multiplies row i of a by the constant factors[i].
    Var row_scale(Var a, std::vector<double> factors);
    Var sigmoid(Var a);
    Var tanh(Var a);
    Var exp(Var a);
    Var square(Var a);
    Var concat_cols(std::span<const Var> parts);
    Var concat_cols(std::initializer_list<Var> parts) {
        return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
    }
    Var slice_cols(Var a, std::size_t start, std::size_t count);
    Var slice_rows(Var a, std::size_t start, std::size_t count);
    Var concat_rows(std::span<const Var> parts);
    Var transpose(Var a);
    Var softmax_rows(Var a);
    Var gather_rows(Var table, std::vector<std::size_t> rows);
    Var sum(Var a);
    // sum(mask ⊙ (pred − target)²) / sum(mask); target and mask are constants of pred's shape.
    Var masked_mse(Var pred, const Tensor2& target, const Tensor2& mask);
    // Σ_rows −log softmax(logits)[row, targets[row]].
    Var cross_entropy(Var logits, const std::vector<std::size_t>& targets);
    Var stop_gradient(Var a);
    // Forward value of `quantized`, gradient routed unchanged to `encoded`.
    Var straight_through(Var encoded, Var quantized);

private:
    struct Node {
        Tensor2 value;
        Tensor2 grad;
        bool needs_grad = false;
        const Param* param = nullptr;
        std::function<void(Tape&, const Tensor2&)> back;
    };

    Var push(Tensor2 value, bool needs_grad, std::function<void(Tape&, const Tensor2&)> back);
    bool needs(Var v) const { return nodes_[v.id].needs_grad; }
    Tensor2& grad_buf(Var v);
    void check(Var v) const;

    std::vector<Node> nodes_;
    std::unordered_map<const Param*, std::size_t> param_leaves_;
    bool backward_done_ = false;
};

}  // namespace svq
