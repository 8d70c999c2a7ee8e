#include "difo/graph.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace difo {

namespace {

using EigenMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using EigenConstMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

EigenConstMap as_eigen(const Tensor& t) { return EigenConstMap(t.data(), t.rows(), t.cols()); }
EigenMap as_eigen(Tensor& t) { return EigenMap(t.data(), t.rows(), t.cols()); }

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// max(x,0) + log1p(exp(-|x|)): exact and overflow-free at any magnitude.
double stable_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

[[noreturn]] void shape_error(Op op, const Tensor& a, const Tensor& b) {
    throw std::invalid_argument(std::string("graph: shape mismatch in ") + op_name(op) + ": " +
                                a.shape_str() + " vs " + b.shape_str());
}

}  // namespace

const char* op_name(Op op) {
    switch (op) {
        case Op::Leaf: return "leaf";
        case Op::MatMul: return "matmul";
        case Op::Add: return "add";
        case Op::Mul: return "mul";
        case Op::Relu: return "relu";
        case Op::Silu: return "silu";
        case Op::Tanh: return "tanh";
        case Op::Sigmoid: return "sigmoid";
        case Op::Softplus: return "softplus";
        case Op::Log: return "log";
        case Op::Exp: return "exp";
        case Op::Square: return "square";
        case Op::Mean: return "mean";
        case Op::Sum: return "sum";
        case Op::Concat: return "concat";
        case Op::Slice: return "slice";
        case Op::Broadcast: return "broadcast";
    }
    return "?";
}

int Graph::check(NodeId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
        throw std::invalid_argument("graph: invalid node id " + std::to_string(id));
    return id;
}

Graph::NodeId Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

Graph::NodeId Graph::leaf(Tensor value, bool requires_grad) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return push(std::move(n));
}

Graph::NodeId Graph::matmul(NodeId a, NodeId b) {
    const Tensor& ta = value(check(a));
    const Tensor& tb = value(check(b));
    if (ta.cols() != tb.rows()) shape_error(Op::MatMul, ta, tb);
    Node n;
    n.op = Op::MatMul;
    n.a = a;
    n.b = b;
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    n.value = Tensor(ta.rows(), tb.cols());
    as_eigen(n.value) = as_eigen(ta) * as_eigen(tb);
    return push(std::move(n));
}

Graph::NodeId Graph::add(NodeId a, NodeId b) {
    const Tensor& ta = value(check(a));
    const Tensor& tb = value(check(b));
    if (!ta.same_shape(tb)) shape_error(Op::Add, ta, tb);
    Node n;
    n.op = Op::Add;
    n.a = a;
    n.b = b;
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    n.value = ta;
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] += tb[i];
    return push(std::move(n));
}

Graph::NodeId Graph::mul(NodeId a, NodeId b) {
    const Tensor& ta = value(check(a));
    const Tensor& tb = value(check(b));
    if (!ta.same_shape(tb)) shape_error(Op::Mul, ta, tb);
    Node n;
    n.op = Op::Mul;
    n.a = a;
    n.b = b;
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    n.value = ta;
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] *= tb[i];
    return push(std::move(n));
}

Graph::NodeId Graph::unary(Op op, NodeId a) {
    const Tensor& ta = value(check(a));
    Node n;
    n.op = op;
    n.a = a;
    n.requires_grad = nodes_[a].requires_grad;
    n.value = ta;
    for (std::size_t i = 0; i < n.value.size(); ++i) {
        double x = ta[i];
        double y = 0.0;
        switch (op) {
            case Op::Relu: y = x > 0.0 ? x : 0.0; break;
            case Op::Silu: y = x * stable_sigmoid(x); break;
            case Op::Tanh: y = std::tanh(x); break;
            case Op::Sigmoid: y = stable_sigmoid(x); break;
            case Op::Softplus: y = stable_softplus(x); break;
            case Op::Log:
                if (x <= 0.0)
                    throw std::domain_error("graph: log of non-positive value " + std::to_string(x));
                y = std::log(x);
                break;
            case Op::Exp: y = std::exp(x); break;
            case Op::Square: y = x * x; break;
            default: throw std::logic_error("graph: unary called with non-unary op");
        }
        n.value[i] = y;
    }
    return push(std::move(n));
}

Graph::NodeId Graph::relu(NodeId a) { return unary(Op::Relu, a); }
Graph::NodeId Graph::silu(NodeId a) { return unary(Op::Silu, a); }
Graph::NodeId Graph::tanh(NodeId a) { return unary(Op::Tanh, a); }
Graph::NodeId Graph::sigmoid(NodeId a) { return unary(Op::Sigmoid, a); }
Graph::NodeId Graph::softplus(NodeId a) { return unary(Op::Softplus, a); }
Graph::NodeId Graph::log(NodeId a) { return unary(Op::Log, a); }
Graph::NodeId Graph::exp(NodeId a) { return unary(Op::Exp, a); }
Graph::NodeId Graph::square(NodeId a) { return unary(Op::Square, a); }

Graph::NodeId Graph::mean(NodeId a) {
    const Tensor& ta = value(check(a));
    if (ta.size() == 0) throw std::invalid_argument("graph: mean of empty tensor");
    Node n;
    n.op = Op::Mean;
    n.a = a;
    n.requires_grad = nodes_[a].requires_grad;
    double acc = 0.0;
    for (std::size_t i = 0; i < ta.size(); ++i) acc += ta[i];
    n.value = Tensor::scalar(acc / static_cast<double>(ta.size()));
    return push(std::move(n));
}

Graph::NodeId Graph::sum(NodeId a) {
    const Tensor& ta = value(check(a));
    Node n;
    n.op = Op::Sum;
    n.a = a;
    n.requires_grad = nodes_[a].requires_grad;
    double acc = 0.0;
    for (std::size_t i = 0; i < ta.size(); ++i) acc += ta[i];
    n.value = Tensor::scalar(acc);
    return push(std::move(n));
}

Graph::NodeId Graph::concat(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw std::invalid_argument("graph: concat of zero tensors");
    int rows = value(check(parts[0])).rows();
    int cols = 0;
    bool rg = false;
    for (NodeId p : parts) {
        const Tensor& tp = value(check(p));
        if (tp.rows() != rows) shape_error(Op::Concat, value(parts[0]), tp);
        cols += tp.cols();
        rg = rg || nodes_[p].requires_grad;
    }
    Node n;
    n.op = Op::Concat;
    n.parts = parts;
    n.requires_grad = rg;
    n.value = Tensor(rows, cols);
    int off = 0;
    for (NodeId p : parts) {
        const Tensor& tp = value(p);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < tp.cols(); ++c) n.value.at(r, off + c) = tp.at(r, c);
        off += tp.cols();
    }
    return push(std::move(n));
}

Graph::NodeId Graph::slice(NodeId a, int col_lo, int col_hi) {
    const Tensor& ta = value(check(a));
    if (col_lo < 0 || col_hi > ta.cols() || col_lo >= col_hi)
        throw std::invalid_argument("graph: slice [" + std::to_string(col_lo) + ", " +
                                    std::to_string(col_hi) + ") out of range for " + ta.shape_str());
    Node n;
    n.op = Op::Slice;
    n.a = a;
    n.aux0 = col_lo;
    n.aux1 = col_hi;
    n.requires_grad = nodes_[a].requires_grad;
    n.value = Tensor(ta.rows(), col_hi - col_lo);
    for (int r = 0; r < ta.rows(); ++r)
        for (int c = col_lo; c < col_hi; ++c) n.value.at(r, c - col_lo) = ta.at(r, c);
    return push(std::move(n));
}

Graph::NodeId Graph::broadcast(NodeId a, int rows) {
    const Tensor& ta = value(check(a));
    if (ta.rows() != 1)
        throw std::invalid_argument("graph: broadcast expects a single-row tensor, got " + ta.shape_str());
    if (rows < 1) throw std::invalid_argument("graph: broadcast to " + std::to_string(rows) + " rows");
    Node n;
    n.op = Op::Broadcast;
    n.a = a;
    n.aux0 = rows;
    n.requires_grad = nodes_[a].requires_grad;
    n.value = Tensor(rows, ta.cols());
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < ta.cols(); ++c) n.value.at(r, c) = ta.at(0, c);
    return push(std::move(n));
}

Tensor& Graph::grad_slot(NodeId id) {
    Node& n = nodes_[id];
    if (!n.grad_ready) {
        n.grad = Tensor(n.value.shape(), 0.0);
        n.grad_ready = true;
    }
    return n.grad;
}

const Tensor& Graph::grad(NodeId id) const {
    const Node& n = nodes_[check(id)];
    if (!n.grad_ready)
        throw std::logic_error("graph: gradient not computed for node " + std::to_string(id) +
                               " (run backward first; node must be on a path to the root)");
    return n.grad;
}

void Graph::backward(NodeId root) {
    const Tensor& rv = value(check(root));
    if (rv.size() != 1)
        throw std::invalid_argument("graph: backward root must be scalar, got " + rv.shape_str());

    for (Node& n : nodes_) n.grad_ready = false;
    grad_slot(root)[0] = 1.0;

    for (NodeId id = root; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.grad_ready || !n.requires_grad || n.op == Op::Leaf) continue;
        const Tensor& g = n.grad;
        switch (n.op) {
            case Op::MatMul: {
                const Tensor& ta = nodes_[n.a].value;
                const Tensor& tb = nodes_[n.b].value;
                if (nodes_[n.a].requires_grad)
                    as_eigen(grad_slot(n.a)) += as_eigen(g) * as_eigen(tb).transpose();
                if (nodes_[n.b].requires_grad)
                    as_eigen(grad_slot(n.b)) += as_eigen(ta).transpose() * as_eigen(g);
                break;
            }
            case Op::Add: {
                for (NodeId in : {n.a, n.b}) {
                    if (!nodes_[in].requires_grad) continue;
                    Tensor& gi = grad_slot(in);
                    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[i];
                }
                break;
            }
            case Op::Mul: {
                if (nodes_[n.a].requires_grad) {
                    Tensor& gi = grad_slot(n.a);
                    const Tensor& tb = nodes_[n.b].value;
                    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[i] * tb[i];
                }
                if (nodes_[n.b].requires_grad) {
                    Tensor& gi = grad_slot(n.b);
                    const Tensor& ta = nodes_[n.a].value;
                    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[i] * ta[i];
                }
                break;
            }
            case Op::Relu:
            case Op::Silu:
            case Op::Tanh:
            case Op::Sigmoid:
            case Op::Softplus:
            case Op::Log:
            case Op::Exp:
            case Op::Square: {
                if (!nodes_[n.a].requires_grad) break;
                Tensor& gi = grad_slot(n.a);
                const Tensor& x = nodes_[n.a].value;
                const Tensor& y = n.value;
                for (std::size_t i = 0; i < gi.size(); ++i) {
                    double d = 0.0;
                    switch (n.op) {
                        case Op::Relu: d = x[i] > 0.0 ? 1.0 : 0.0; break;  // relu'(0) := 0
                        case Op::Silu: {
                            double s = stable_sigmoid(x[i]);
                            d = s * (1.0 + x[i] * (1.0 - s));
                            break;
                        }
                        case Op::Tanh: d = 1.0 - y[i] * y[i]; break;
                        case Op::Sigmoid: d = y[i] * (1.0 - y[i]); break;
                        case Op::Softplus: d = stable_sigmoid(x[i]); break;
                        case Op::Log: d = 1.0 / x[i]; break;
                        case Op::Exp: d = y[i]; break;
                        case Op::Square: d = 2.0 * x[i]; break;
                        default: break;
                    }
                    gi[i] += g[i] * d;
                }
                break;
            }
            case Op::Mean: {
                if (!nodes_[n.a].requires_grad) break;
                Tensor& gi = grad_slot(n.a);
                double s = g[0] / static_cast<double>(gi.size());
                for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += s;
                break;
            }
            case Op::Sum: {
                if (!nodes_[n.a].requires_grad) break;
                Tensor& gi = grad_slot(n.a);
                for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[0];
                break;
            }
            case Op::Concat: {
                int off = 0;
                for (NodeId p : n.parts) {
                    const Tensor& tp = nodes_[p].value;
                    if (nodes_[p].requires_grad) {
                        Tensor& gi = grad_slot(p);
                        for (int r = 0; r < tp.rows(); ++r)
                            for (int c = 0; c < tp.cols(); ++c) gi.at(r, c) += g.at(r, off + c);
                    }
                    off += tp.cols();
                }
                break;
            }
            case Op::Slice: {
                if (!nodes_[n.a].requires_grad) break;
                Tensor& gi = grad_slot(n.a);
                for (int r = 0; r < n.value.rows(); ++r)
                    for (int c = 0; c < n.value.cols(); ++c) gi.at(r, n.aux0 + c) += g.at(r, c);
                break;
            }
            case Op::Broadcast: {
                if (!nodes_[n.a].requires_grad) break;
                Tensor& gi = grad_slot(n.a);
                for (int r = 0; r < n.aux0; ++r)
                    for (int c = 0; c < gi.cols(); ++c) gi.at(0, c) += g.at(r, c);
                break;
            }
            case Op::Leaf:
                break;
        }
    }
}

}  // namespace difo
