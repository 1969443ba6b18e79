// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "lrvae/tensor.hpp"

namespace lrvae {

enum class ActKind { none, relu, leaky_relu, tanh, sigmoid, silu };

const char* act_name(ActKind k);
ActKind act_from_name(const std::string& name);  // throws ConfigError

// Handle into a Tape. Only valid for the tape that produced it.
struct Var {
    int id = -1;
};

// Reverse-mode gradient tape over Tensor-valued primitives. Nodes are stored
// in construction order, which is a topological order by construction; the
// backward sweep walks it in reverse. A tape is built per computation and
// discarded (no persistent graph).
class Tape {
  public:
    Var leaf(Tensor value);

    // C[m x n] = A[m x k] * B[k x n]; shape error names both shapes.
    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);  // elementwise
    // X[n x d] + broadcast row b[d] (or [1 x d])
    Var add_rowvec(Var x, Var b);
    Var scale(Var a, double c);
    Var add_const(Var a, double c);
    Var activation(ActKind kind, Var x, double leaky_slope = 0.01);
    Var exp(Var a);
    // Gradient passes only where lo < value < hi.
    Var clamp(Var a, double lo, double hi);
    Var softplus(Var a);
    Var sum_all(Var a);                 // -> shape {1}
    Var sum_rows(Var a);                // [n x d] -> {n}
    Var mean_all(Var a);

    // loss must be scalar (contract error otherwise); seeds gradient 1.
    void backward(Var loss);
    // Seeds an arbitrary gradient at `out` (same shape).
    void backward_from(Var out, const Tensor& seed);

    const Tensor& value(Var v) const { return nodes_[check(v)].value; }
    const Tensor& grad(Var v) const;
    std::size_t size() const { return nodes_.size(); }

  private:
    struct Node {
        Tensor value;
        std::function<void(Tape&)> back;  // empty for leaves
    };

    int check(Var v) const;
    Var push(Tensor value, std::function<void(Tape&)> back);
    Tensor& grad_buf(int id);

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
    mutable Tensor zero_cache_;
    bool grads_valid_ = false;
};

// Central finite differences (f(x+h e_i) - f(x-h e_i)) / 2h per coordinate.
// Testing oracle; throws NumericError on non-finite f values.
template <typename F>
Tensor finite_diff_gradient(F&& f, const Tensor& x, double h) {
    if (!(h > 0)) throw ContractError("finite_diff_gradient: h must be > 0");
    Tensor g(x.shape());
    Tensor xp = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = xp[i];
        xp[i] = orig + h;
        const double fp = f(static_cast<const Tensor&>(xp));
        xp[i] = orig - h;
        const double fm = f(static_cast<const Tensor&>(xp));
        xp[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("finite_diff_gradient: non-finite function value");
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

}  // namespace lrvae
