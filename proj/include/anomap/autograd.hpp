#pragma once

#include <functional>
#include <vector>

#include "anomap/tensor.hpp"

namespace anomap {

// Reverse-mode tape. Nodes are created in topological order (every parent id
// is smaller than its child's), so the graph is acyclic by construction and
// backward() is a single reverse sweep.
class Graph {
public:
    using NodeId = int;

    NodeId leaf(Tensor value);

    const Tensor& value(NodeId id) const { return nodes_[check(id)].value; }
    // Valid after backward(); gradients of nodes past the loss stay empty.
    const Tensor& grad(NodeId id) const { return nodes_[check(id)].grad; }

    // Same zero padding, stride 1. x {Ci,H,W}, kernel {Co,Ci,kh,kw} with odd
    // kh/kw, bias {Co} -> {Co,H,W}.
    NodeId conv2d(NodeId x, NodeId kernel, NodeId bias);
    // Disjoint 2x2 windows; even spatial dims required. Gradient routes to
    // the argmax position only (first occurrence on ties).
    NodeId maxpool2x2(NodeId x);
    // Nearest-neighbor duplication: each cell fills a 2x2 block.
    NodeId upsample2x2(NodeId x);
    NodeId relu(NodeId x);  // subgradient at 0 is 0
    NodeId sigmoid(NodeId x);

    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId div(NodeId a, NodeId b);
    // scale * x + shift, elementwise.
    NodeId affine(NodeId x, double scale, double shift);
    NodeId reshape(NodeId x, std::vector<int> new_shape);

    // 1-d valid correlation along rows/cols of a {H,W} tensor with a fixed
    // (non-learnable) kernel.
    NodeId row_conv_valid(NodeId x, std::vector<double> kernel);
    NodeId col_conv_valid(NodeId x, std::vector<double> kernel);

    NodeId sum_all(NodeId x);   // -> {1}
    NodeId mean_all(NodeId x);  // -> {1}

    // Seeds d(loss)=1 and sweeps the tape in reverse. loss must be a scalar.
    void backward(NodeId loss);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Graph&, NodeId)> back;
    };

    NodeId push(Tensor value, std::function<void(Graph&, NodeId)> back);
    NodeId check(NodeId id) const;
    Tensor& grad_mut(NodeId id) { return nodes_[check(id)].grad; }

    std::vector<Node> nodes_;
};

}  // namespace anomap
