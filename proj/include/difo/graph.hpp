#pragma once

#include <cstddef>
#include <vector>

#include "difo/tensor.hpp"

namespace difo {

enum class Op {
    Leaf,
    MatMul,
    Add,
    Mul,
    Relu,
    Silu,
    Tanh,
    Sigmoid,
    Softplus,
    Log,
    Exp,
    Square,
    Mean,
    Sum,
    Concat,
    Slice,
    Broadcast,
};

const char* op_name(Op op);

// Reverse-mode autodiff over a define-by-run graph. Nodes are appended during
// the forward pass, so input ids are always smaller than the node's own id and
// backward() is a single reverse sweep with no explicit toposort. Graphs are
// rebuilt every training step; nothing is cached between steps.
class Graph {
public:
    using NodeId = int;

    NodeId leaf(Tensor value, bool requires_grad = false);

    NodeId matmul(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId relu(NodeId a);
    NodeId silu(NodeId a);
    NodeId tanh(NodeId a);
    NodeId sigmoid(NodeId a);
    NodeId softplus(NodeId a);
    NodeId log(NodeId a);
    NodeId exp(NodeId a);
    NodeId square(NodeId a);
    NodeId mean(NodeId a);  // reduces all elements to a 1x1 scalar
    NodeId sum(NodeId a);   // reduces all elements to a 1x1 scalar
    NodeId concat(const std::vector<NodeId>& parts);    // along columns
    NodeId slice(NodeId a, int col_lo, int col_hi);     // columns [col_lo, col_hi)
    NodeId broadcast(NodeId a, int rows);               // 1xN -> rows x N (or 1x1 -> rows x 1)

    // Gradient of `root` (must be 1x1) with respect to every requires_grad node.
    void backward(NodeId root);

    const Tensor& value(NodeId id) const { return nodes_[check(id)].value; }
    const Tensor& grad(NodeId id) const;
    // True when backward() reached this node (i.e. it lies on a path to the root).
    bool has_grad(NodeId id) const { return nodes_[check(id)].grad_ready; }
    bool requires_grad(NodeId id) const { return nodes_[check(id)].requires_grad; }
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Op op;
        NodeId a = -1;
        NodeId b = -1;
        std::vector<NodeId> parts;  // Concat only
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool grad_ready = false;
        int aux0 = 0;  // Slice: col_lo; Broadcast: target rows
        int aux1 = 0;  // Slice: col_hi
    };

    NodeId push(Node n);
    NodeId unary(Op op, NodeId a);
    int check(NodeId id) const;
    Tensor& grad_slot(NodeId id);

    std::vector<Node> nodes_;
};

}  // namespace difo
