#pragma once

#include "tracecast/tensor.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace tracecast {

/**
 * Reverse-mode autodiff tape.
 *
 * Operations evaluate eagerly and append one node per result. Node ids are
 * assigned in creation order, so ancestors always have smaller ids and a
 * descending-id sweep over the nodes reachable from the loss is a reverse
 * topological order that visits each node exactly once.
 *
 * Elementwise ops broadcast only when the smaller operand's shape is a
 * trailing suffix of the larger's (i.e. over leading batch dimensions).
 * Every op validates shapes before computing and rejects non-finite results.
 *
 * A tape is confined to one training step on one thread; tensors handed in
 * are copied, so the caller's values stay immutable.
 */
class Tape {
public:
    using NodeId = std::int32_t;

    /// Insert an input or parameter. The name is used in error messages.
    NodeId leaf(Tensor value, std::string name = {});

    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);

    /// Matrix product. Supports [M,K]x[K,N], [B,M,K]x[K,N] and [B,M,K]x[B,K,N].
    NodeId matmul(NodeId a, NodeId b);

    NodeId relu(NodeId a);
    NodeId leaky_relu(NodeId a, double negative_slope);

    /// Concatenate along the last dimension; all other dimensions must match.
    NodeId concat_last(NodeId a, NodeId b);
    /// Take [offset, offset+len) of the last dimension.
    NodeId slice_last(NodeId a, std::size_t offset, std::size_t len);
    NodeId reshape(NodeId a, std::vector<std::size_t> shape);
    /// Tile a tensor n times along a new leading dimension.
    NodeId expand_leading(NodeId a, std::size_t n);

    /// out[b,i,j] = u[b,i] + w[b,j] for u,w of shape [B,D].
    NodeId outer_add(NodeId u, NodeId w);

    /// Row-wise softmax over the last dimension restricted to mask!=0 entries,
    /// computed with a row-max shift. Masked-out entries are exactly zero.
    /// The mask has the shape of the trailing two dimensions and is constant.
    NodeId masked_softmax(NodeId logits, const Tensor& mask);

    NodeId sum_all(NodeId a);
    NodeId scale(NodeId a, double factor);

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    const Tensor& grad(NodeId id) const { return nodes_[id].grad; }
    std::size_t node_count() const { return nodes_.size(); }

    /// Accumulate d(loss)/d(node) for every node reachable from the scalar
    /// loss; unreachable nodes keep zero gradients.
    void backward(NodeId loss);

private:
    enum class Op {
        Leaf,
        Add,
        Sub,
        Mul,
        MatMul,
        Relu,
        LeakyRelu,
        ConcatLast,
        SliceLast,
        Reshape,
        ExpandLeading,
        OuterAdd,
        MaskedSoftmax,
        SumAll,
        Scale,
    };

    struct Node {
        Op op = Op::Leaf;
        std::array<NodeId, 2> parent{-1, -1};
        Tensor value;
        Tensor grad;
        double darg = 0.0;      // slope / scale factor
        std::size_t arg0 = 0;   // slice offset, expand count
        std::size_t arg1 = 0;   // slice length
        Tensor mask;            // masked_softmax only
        std::string name;       // leaf only
    };

    NodeId push(Node node, const char* op_name);
    const Tensor& val(NodeId id) const { return nodes_[id].value; }
    void backward_node(NodeId id);

    std::vector<Node> nodes_;
};

} // namespace tracecast
