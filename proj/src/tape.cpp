// SPDX-License-Identifier: Apache-2.0
#include "lrvae/tape.hpp"

#include <cmath>
#include <cstring>

#include "lrvae/kernels.hpp"

namespace lrvae {

namespace {

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double stable_softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

const char* act_name(ActKind k) {
    switch (k) {
        case ActKind::none: return "none";
        case ActKind::relu: return "relu";
        case ActKind::leaky_relu: return "leaky_relu";
        case ActKind::tanh: return "tanh";
        case ActKind::sigmoid: return "sigmoid";
        case ActKind::silu: return "silu";
    }
    return "?";
}

ActKind act_from_name(const std::string& name) {
    if (name == "none") return ActKind::none;
    if (name == "relu") return ActKind::relu;
    if (name == "leaky_relu") return ActKind::leaky_relu;
    if (name == "tanh") return ActKind::tanh;
    if (name == "sigmoid") return ActKind::sigmoid;
    if (name == "silu") return ActKind::silu;
    throw ConfigError("unknown activation kind: " + name);
}

int Tape::check(Var v) const {
    if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
        throw ContractError("Var does not belong to this tape");
    return v.id;
}

Var Tape::push(Tensor value, std::function<void(Tape&)> back) {
    nodes_.push_back(Node{std::move(value), std::move(back)});
    grads_valid_ = false;
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::grad_buf(int id) {
    if (grads_[id].size() == 0) grads_[id] = Tensor(nodes_[id].value.shape());
    return grads_[id];
}

Var Tape::leaf(Tensor value) { return push(std::move(value), {}); }

Var Tape::matmul(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows())
        throw ShapeError("matmul: incompatible shapes " + A.shape_str() + " * " + B.shape_str());
    const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    Tensor C({m, n});
    kernels::active().matmul_nn(A.data(), B.data(), C.data(), m, k, n, false);
    Var out = push(std::move(C), {});
    const int ia = a.id, ib = b.id, io = out.id;
    nodes_[io].back = [ia, ib, io, m, k, n](Tape& t) {
        const Tensor& g = t.grads_[io];
        const Tensor& A = t.nodes_[ia].value;
        const Tensor& B = t.nodes_[ib].value;
        // dA += g * B^T ; dB += A^T * g
        kernels::active().matmul_nt(g.data(), B.data(), t.grad_buf(ia).data(), m, n, k, true);
        kernels::active().matmul_tn(A.data(), g.data(), t.grad_buf(ib).data(), k, m, n, true);
    };
    return out;
}

Var Tape::add(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    require_same_shape(A, B, "add");
    Tensor C(A.shape());
    kernels::active().add(A.data(), B.data(), C.data(), A.size());
    Var out = push(std::move(C), {});
    const int ia = a.id, ib = b.id, io = out.id;
    nodes_[io].back = [ia, ib, io](Tape& t) {
        const Tensor& g = t.grads_[io];
        kernels::active().axpy(1.0, g.data(), t.grad_buf(ia).data(), g.size());
        kernels::active().axpy(1.0, g.data(), t.grad_buf(ib).data(), g.size());
    };
    return out;
}

Var Tape::sub(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    require_same_shape(A, B, "sub");
    Tensor C(A.shape());
    kernels::active().sub(A.data(), B.data(), C.data(), A.size());
    Var out = push(std::move(C), {});
    const int ia = a.id, ib = b.id, io = out.id;
    nodes_[io].back = [ia, ib, io](Tape& t) {
        const Tensor& g = t.grads_[io];
        kernels::active().axpy(1.0, g.data(), t.grad_buf(ia).data(), g.size());
        kernels::active().axpy(-1.0, g.data(), t.grad_buf(ib).data(), g.size());
    };
    return out;
}

Var Tape::mul(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    require_same_shape(A, B, "mul");
    Tensor C(A.shape());
    kernels::active().mul(A.data(), B.data(), C.data(), A.size());
    Var out = push(std::move(C), {});
    const int ia = a.id, ib = b.id, io = out.id;
    nodes_[io].back = [ia, ib, io](Tape& t) {
        const Tensor& g = t.grads_[io];
        const Tensor& A = t.nodes_[ia].value;
        const Tensor& B = t.nodes_[ib].value;
        Tensor& ga = t.grad_buf(ia);
        Tensor& gb = t.grad_buf(ib);
        const std::size_t n = g.size();
        const double* gd = g.data();
        for (std::size_t i = 0; i < n; ++i) {
            ga[i] += gd[i] * B[i];
            gb[i] += gd[i] * A[i];
        }
    };
    return out;
}

Var Tape::add_rowvec(Var x, Var b) {
    const Tensor& X = value(x);
    const Tensor& B = value(b);
    if (X.rank() != 2 || B.cols() != X.cols() || B.rows() != 1)
        throw ShapeError("add_rowvec: shapes " + X.shape_str() + " + " + B.shape_str());
    const std::size_t n = X.rows(), d = X.cols();
    Tensor C({n, d});
    for (std::size_t i = 0; i < n; ++i)
        kernels::active().add(X.data() + i * d, B.data(), C.data() + i * d, d);
    Var out = push(std::move(C), {});
    const int ix = x.id, ib = b.id, io = out.id;
    nodes_[io].back = [ix, ib, io, n, d](Tape& t) {
        const Tensor& g = t.grads_[io];
        kernels::active().axpy(1.0, g.data(), t.grad_buf(ix).data(), g.size());
        Tensor& gb = t.grad_buf(ib);
        for (std::size_t i = 0; i < n; ++i)
            kernels::active().axpy(1.0, g.data() + i * d, gb.data(), d);
    };
    return out;
}

Var Tape::scale(Var a, double c) {
    const Tensor& A = value(a);
    Tensor C = A;
    kernels::active().scale(c, C.data(), C.size());
    Var out = push(std::move(C), {});
    const int ia = a.id, io = out.id;
    nodes_[io].back = [ia, io, c](Tape& t) {
        const Tensor& g = t.grads_[io];
        kernels::active().axpy(c, g.data(), t.grad_buf(ia).data(), g.size());
    };
    return out;
}

Var Tape::add_const(Var a, double c) {
    const Tensor& A = value(a);
    Tensor C = A;
    for (std::size_t i = 0; i < C.size(); ++i) C[i] += c;
    Var out = push(std::move(C), {});
    const int ia = a.id, io = out.id;
    nodes_[io].back = [ia, io](Tape& t) {
        const Tensor& g = t.grads_[io];
        kernels::active().axpy(1.0, g.data(), t.grad_buf(ia).data(), g.size());
    };
    return out;
}

Var Tape::activation(ActKind kind, Var x, double leaky_slope) {
    if (kind == ActKind::none) return x;
    if (kind == ActKind::leaky_relu && !(leaky_slope > 0.0 && leaky_slope < 1.0))
        throw ContractError("leaky_relu slope must be in (0,1)");
    const Tensor& X = value(x);
    Tensor Y(X.shape());
    const std::size_t n = X.size();
    switch (kind) {
        case ActKind::relu:
            for (std::size_t i = 0; i < n; ++i) Y[i] = X[i] > 0.0 ? X[i] : 0.0;
            break;
        case ActKind::leaky_relu:
            for (std::size_t i = 0; i < n; ++i) Y[i] = X[i] > 0.0 ? X[i] : leaky_slope * X[i];
            break;
        case ActKind::tanh:
            for (std::size_t i = 0; i < n; ++i) Y[i] = std::tanh(X[i]);
            break;
        case ActKind::sigmoid:
            for (std::size_t i = 0; i < n; ++i) Y[i] = stable_sigmoid(X[i]);
            break;
        case ActKind::silu:
            for (std::size_t i = 0; i < n; ++i) Y[i] = X[i] * stable_sigmoid(X[i]);
            break;
        case ActKind::none:
            break;
    }
    Var out = push(std::move(Y), {});
    const int ix = x.id, io = out.id;
    nodes_[io].back = [ix, io, kind, leaky_slope](Tape& t) {
        const Tensor& g = t.grads_[io];
        const Tensor& X = t.nodes_[ix].value;
        const Tensor& Y = t.nodes_[io].value;
        Tensor& gx = t.grad_buf(ix);
        const std::size_t n = g.size();
        switch (kind) {
            case ActKind::relu:
                // subgradient at 0 is 0
                for (std::size_t i = 0; i < n; ++i)
                    if (X[i] > 0.0) gx[i] += g[i];
                break;
            case ActKind::leaky_relu:
                for (std::size_t i = 0; i < n; ++i)
                    gx[i] += g[i] * (X[i] > 0.0 ? 1.0 : leaky_slope);
                break;
            case ActKind::tanh:
                for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * (1.0 - Y[i] * Y[i]);
                break;
            case ActKind::sigmoid:
                for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * Y[i] * (1.0 - Y[i]);
                break;
            case ActKind::silu:
                for (std::size_t i = 0; i < n; ++i) {
                    const double s = stable_sigmoid(X[i]);
                    gx[i] += g[i] * s * (1.0 + X[i] * (1.0 - s));
                }
                break;
            case ActKind::none:
                break;
        }
    };
    return out;
}

Var Tape::exp(Var a) {
    const Tensor& A = value(a);
    Tensor C(A.shape());
    for (std::size_t i = 0; i < C.size(); ++i) C[i] = std::exp(A[i]);
    Var out = push(std::move(C), {});
    const int ia = a.id, io = out.id;
    nodes_[io].back = [ia, io](Tape& t) {
        const Tensor& g = t.grads_[io];
        const Tensor& Y = t.nodes_[io].value;
        Tensor& ga = t.grad_buf(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * Y[i];
    };
    return out;
}

Var Tape::clamp(Var a, double lo, double hi) {
    const Tensor& A = value(a);
    Tensor C(A.shape());
    for (std::size_t i = 0; i < C.size(); ++i)
        C[i] = A[i] < lo ? lo : (A[i] > hi ? hi : A[i]);
    Var out = push(std::move(C), {});
    const int ia = a.id, io = out.id;
    nodes_[io].back = [ia, io, lo, hi](Tape& t) {
        const Tensor& g = t.grads_[io];
        const Tensor& X = t.nodes_[ia].value;
        Tensor& ga = t.grad_buf(ia);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (X[i] > lo && X[i] < hi) ga[i] += g[i];
    };
    return out;
}

Var Tape::softplus(Var a) {
    const Tensor& A = value(a);
    Tensor C(A.shape());
    for (std::size_t i = 0; i < C.size(); ++i) C[i] = stable_softplus(A[i]);
    Var out = push(std::move(C), {});
    const int ia = a.id, io = out.id;
    nodes_[io].back = [ia, io](Tape& t) {
        const Tensor& g = t.grads_[io];
        const Tensor& X = t.nodes_[ia].value;
        Tensor& ga = t.grad_buf(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * stable_sigmoid(X[i]);
    };
    return out;
}

Var Tape::sum_all(Var a) {
    const Tensor& A = value(a);
    Var out = push(Tensor::scalar(kernels::active().sum(A.data(), A.size())), {});
    const int ia = a.id, io = out.id;
    nodes_[io].back = [ia, io](Tape& t) {
        const double g = t.grads_[io][0];
        Tensor& ga = t.grad_buf(ia);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    };
    return out;
}

Var Tape::sum_rows(Var a) {
    const Tensor& A = value(a);
    if (A.rank() != 2) throw ShapeError("sum_rows: expected 2-D, got " + A.shape_str());
    const std::size_t n = A.rows(), d = A.cols();
    Tensor C({n});
    for (std::size_t i = 0; i < n; ++i) C[i] = kernels::active().sum(A.data() + i * d, d);
    Var out = push(std::move(C), {});
    const int ia = a.id, io = out.id;
    nodes_[io].back = [ia, io, n, d](Tape& t) {
        const Tensor& g = t.grads_[io];
        Tensor& ga = t.grad_buf(ia);
        for (std::size_t i = 0; i < n; ++i) {
            const double gi = g[i];
            double* row = ga.data() + i * d;
            for (std::size_t j = 0; j < d; ++j) row[j] += gi;
        }
    };
    return out;
}

Var Tape::mean_all(Var a) {
    const std::size_t n = value(a).size();
    return scale(sum_all(a), 1.0 / static_cast<double>(n));
}

void Tape::backward(Var loss) {
    const Tensor& v = value(loss);
    if (!v.is_scalar())
        throw ContractError("backward: loss must be scalar, got shape " + v.shape_str());
    backward_from(loss, Tensor::scalar(1.0));
}

void Tape::backward_from(Var out, const Tensor& seed) {
    const int oid = check(out);
    if (!seed.same_shape(nodes_[oid].value))
        throw ShapeError("backward_from: seed shape " + seed.shape_str() + " != value shape " +
                         nodes_[oid].value.shape_str());
    grads_.assign(nodes_.size(), Tensor());
    grad_buf(oid) = seed;
    grads_valid_ = true;
    for (int i = oid; i >= 0; --i) {
        if (!nodes_[i].back) continue;
        if (grads_[i].size() == 0) continue;  // unreachable from out
        nodes_[i].back(*this);
    }
}

const Tensor& Tape::grad(Var v) const {
    const int id = check(v);
    if (!grads_valid_) throw ContractError("grad: backward has not been run");
    if (grads_[id].size() == 0) {
        // Unreachable node: gradient is zero by contract.
        zero_cache_ = Tensor(nodes_[id].value.shape());
        return zero_cache_;
    }
    return grads_[id];
}

}  // namespace lrvae
