#include "tracecast/tape.hpp"

#include "tracecast/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

namespace tracecast {

namespace {

// Is `small` a trailing suffix of `big`?
bool is_suffix(const std::vector<std::size_t>& small, const std::vector<std::size_t>& big) {
    if (small.size() > big.size()) return false;
    return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

// 0: identical shapes, 1: b broadcasts over a's leading dims, 2: the reverse.
int broadcast_mode(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) return 0;
    if (is_suffix(b.shape(), a.shape())) return 1;
    if (is_suffix(a.shape(), b.shape())) return 2;
    throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_str() +
                     " and " + b.shape_str());
}

// C[M,N] += A[M,K] * B[K,N]. The k-ascending inner accumulation fixes the
// floating-point reduction order so repeated runs sum in the same sequence.
void gemm_acc(const double* A, const double* B, double* C,
              std::size_t M, std::size_t K, std::size_t N) {
    for (std::size_t i = 0; i < M; ++i) {
        double* c_row = C + i * N;
        const double* a_row = A + i * K;
        for (std::size_t k = 0; k < K; ++k) {
            const double a_ik = a_row[k];
            const double* b_row = B + k * N;
            for (std::size_t j = 0; j < N; ++j) c_row[j] += a_ik * b_row[j];
        }
    }
}

// C[M,K] += A[M,N] * B[K,N]^T, i.e. C[i,k] += sum_j A[i,j] * B[k,j].
void gemm_abt_acc(const double* A, const double* B, double* C,
                  std::size_t M, std::size_t N, std::size_t K) {
    for (std::size_t i = 0; i < M; ++i) {
        const double* a_row = A + i * N;
        double* c_row = C + i * K;
        for (std::size_t k = 0; k < K; ++k) {
            const double* b_row = B + k * N;
            double acc = 0.0;
            for (std::size_t j = 0; j < N; ++j) acc += a_row[j] * b_row[j];
            c_row[k] += acc;
        }
    }
}

// C[K,N] += A[M,K]^T * B[M,N], i.e. C[k,j] += sum_i A[i,k] * B[i,j].
void gemm_atb_acc(const double* A, const double* B, double* C,
                  std::size_t M, std::size_t K, std::size_t N) {
    for (std::size_t i = 0; i < M; ++i) {
        const double* a_row = A + i * K;
        const double* b_row = B + i * N;
        for (std::size_t k = 0; k < K; ++k) {
            const double a_ik = a_row[k];
            double* c_row = C + k * N;
            for (std::size_t j = 0; j < N; ++j) c_row[j] += a_ik * b_row[j];
        }
    }
}

} // namespace

Tape::NodeId Tape::push(Node node, const char* op_name) {
    if (!node.value.all_finite())
        throw NumericError(std::string(op_name) + " produced a non-finite value");
    nodes_.push_back(std::move(node));
    return static_cast<NodeId>(nodes_.size() - 1);
}

Tape::NodeId Tape::leaf(Tensor value, std::string name) {
    if (!value.all_finite())
        throw NumericError("leaf \"" + (name.empty() ? std::string("<unnamed>") : name) +
                           "\" holds a non-finite value");
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(value);
    n.name = std::move(name);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    const int mode = broadcast_mode("add", ta, tb);
    const Tensor& big = mode == 2 ? tb : ta;

    Node n;
    n.op = Op::Add;
    n.parent = {a, b};
    n.value = Tensor(big.shape());
    double* out = n.value.data();
    const double* pa = ta.data();
    const double* pb = tb.data();
    const std::size_t total = big.size();
    if (mode == 0) {
        for (std::size_t i = 0; i < total; ++i) out[i] = pa[i] + pb[i];
    } else if (mode == 1) {
        const std::size_t nb = tb.size();
        for (std::size_t i = 0; i < total; ++i) out[i] = pa[i] + pb[i % nb];
    } else {
        const std::size_t na = ta.size();
        for (std::size_t i = 0; i < total; ++i) out[i] = pa[i % na] + pb[i];
    }
    return push(std::move(n), "add");
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    const int mode = broadcast_mode("sub", ta, tb);
    const Tensor& big = mode == 2 ? tb : ta;

    Node n;
    n.op = Op::Sub;
    n.parent = {a, b};
    n.value = Tensor(big.shape());
    double* out = n.value.data();
    const double* pa = ta.data();
    const double* pb = tb.data();
    const std::size_t total = big.size();
    if (mode == 0) {
        for (std::size_t i = 0; i < total; ++i) out[i] = pa[i] - pb[i];
    } else if (mode == 1) {
        const std::size_t nb = tb.size();
        for (std::size_t i = 0; i < total; ++i) out[i] = pa[i] - pb[i % nb];
    } else {
        const std::size_t na = ta.size();
        for (std::size_t i = 0; i < total; ++i) out[i] = pa[i % na] - pb[i];
    }
    return push(std::move(n), "sub");
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    const int mode = broadcast_mode("mul", ta, tb);
    const Tensor& big = mode == 2 ? tb : ta;

    Node n;
    n.op = Op::Mul;
    n.parent = {a, b};
    n.value = Tensor(big.shape());
    double* out = n.value.data();
    const double* pa = ta.data();
    const double* pb = tb.data();
    const std::size_t total = big.size();
    if (mode == 0) {
        for (std::size_t i = 0; i < total; ++i) out[i] = pa[i] * pb[i];
    } else if (mode == 1) {
        const std::size_t nb = tb.size();
        for (std::size_t i = 0; i < total; ++i) out[i] = pa[i] * pb[i % nb];
    } else {
        const std::size_t na = ta.size();
        for (std::size_t i = 0; i < total; ++i) out[i] = pa[i % na] * pb[i];
    }
    return push(std::move(n), "mul");
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);

    Node n;
    n.op = Op::MatMul;
    n.parent = {a, b};

    if (ta.ndim() == 2 && tb.ndim() == 2) {
        const std::size_t M = ta.dim(0), K = ta.dim(1);
        if (tb.dim(0) != K)
            throw ShapeError("matmul: inner dimensions disagree, " + ta.shape_str() +
                             " x " + tb.shape_str());
        const std::size_t N = tb.dim(1);
        n.value = Tensor({M, N});
        gemm_acc(ta.data(), tb.data(), n.value.data(), M, K, N);
    } else if (ta.ndim() == 3 && tb.ndim() == 2) {
        const std::size_t B = ta.dim(0), M = ta.dim(1), K = ta.dim(2);
        if (tb.dim(0) != K)
            throw ShapeError("matmul: inner dimensions disagree, " + ta.shape_str() +
                             " x " + tb.shape_str());
        const std::size_t N = tb.dim(1);
        n.value = Tensor({B, M, N});
        for (std::size_t i = 0; i < B; ++i)
            gemm_acc(ta.data() + i * M * K, tb.data(),
                     n.value.data() + i * M * N, M, K, N);
    } else if (ta.ndim() == 3 && tb.ndim() == 3) {
        const std::size_t B = ta.dim(0), M = ta.dim(1), K = ta.dim(2);
        if (tb.dim(0) != B || tb.dim(1) != K)
            throw ShapeError("matmul: incompatible batched shapes " + ta.shape_str() +
                             " x " + tb.shape_str());
        const std::size_t N = tb.dim(2);
        n.value = Tensor({B, M, N});
        for (std::size_t i = 0; i < B; ++i)
            gemm_acc(ta.data() + i * M * K, tb.data() + i * K * N,
                     n.value.data() + i * M * N, M, K, N);
    } else {
        throw ShapeError("matmul: unsupported ranks for " + ta.shape_str() + " x " +
                         tb.shape_str());
    }
    return push(std::move(n), "matmul");
}

Tape::NodeId Tape::relu(NodeId a) {
    const Tensor& ta = val(a);
    Node n;
    n.op = Op::Relu;
    n.parent = {a, -1};
    n.value = Tensor(ta.shape());
    const double* in = ta.data();
    double* out = n.value.data();
    for (std::size_t i = 0; i < ta.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
    return push(std::move(n), "relu");
}

Tape::NodeId Tape::leaky_relu(NodeId a, double negative_slope) {
    const Tensor& ta = val(a);
    Node n;
    n.op = Op::LeakyRelu;
    n.parent = {a, -1};
    n.darg = negative_slope;
    n.value = Tensor(ta.shape());
    const double* in = ta.data();
    double* out = n.value.data();
    for (std::size_t i = 0; i < ta.size(); ++i)
        out[i] = in[i] > 0.0 ? in[i] : negative_slope * in[i];
    return push(std::move(n), "leaky_relu");
}

Tape::NodeId Tape::concat_last(NodeId a, NodeId b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (ta.ndim() == 0 || ta.ndim() != tb.ndim())
        throw ShapeError("concat_last: rank mismatch, " + ta.shape_str() + " vs " +
                         tb.shape_str());
    for (std::size_t d = 0; d + 1 < ta.ndim(); ++d)
        if (ta.dim(d) != tb.dim(d))
            throw ShapeError("concat_last: leading dimensions disagree, " +
                             ta.shape_str() + " vs " + tb.shape_str());

    const std::size_t la = ta.dim(ta.ndim() - 1);
    const std::size_t lb = tb.dim(tb.ndim() - 1);
    std::vector<std::size_t> shape = ta.shape();
    shape.back() = la + lb;

    Node n;
    n.op = Op::ConcatLast;
    n.parent = {a, b};
    n.arg0 = la;
    n.arg1 = lb;
    n.value = Tensor(shape);
    const std::size_t rows = la == 0 ? tb.size() / std::max<std::size_t>(lb, 1)
                                     : ta.size() / la;
    double* out = n.value.data();
    const double* pa = ta.data();
    const double* pb = tb.data();
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy(pa + r * la, pa + (r + 1) * la, out + r * (la + lb));
        std::copy(pb + r * lb, pb + (r + 1) * lb, out + r * (la + lb) + la);
    }
    return push(std::move(n), "concat_last");
}

Tape::NodeId Tape::slice_last(NodeId a, std::size_t offset, std::size_t len) {
    const Tensor& ta = val(a);
    if (ta.ndim() == 0)
        throw ShapeError("slice_last: cannot slice a scalar");
    const std::size_t last = ta.dim(ta.ndim() - 1);
    if (offset + len > last)
        throw ShapeError("slice_last: range [" + std::to_string(offset) + ", " +
                         std::to_string(offset + len) + ") exceeds last dimension of " +
                         ta.shape_str());

    std::vector<std::size_t> shape = ta.shape();
    shape.back() = len;

    Node n;
    n.op = Op::SliceLast;
    n.parent = {a, -1};
    n.arg0 = offset;
    n.arg1 = len;
    n.value = Tensor(shape);
    const std::size_t rows = last == 0 ? 0 : ta.size() / last;
    const double* in = ta.data();
    double* out = n.value.data();
    for (std::size_t r = 0; r < rows; ++r)
        std::copy(in + r * last + offset, in + r * last + offset + len, out + r * len);
    return push(std::move(n), "slice_last");
}

Tape::NodeId Tape::reshape(NodeId a, std::vector<std::size_t> shape) {
    const Tensor& ta = val(a);
    if (Tensor::shape_size(shape) != ta.size())
        throw ShapeError("reshape: cannot view " + ta.shape_str() + " as " +
                         Tensor::shape_str(shape));
    Node n;
    n.op = Op::Reshape;
    n.parent = {a, -1};
    n.value = Tensor(std::move(shape), std::vector<double>(ta.data(), ta.data() + ta.size()));
    return push(std::move(n), "reshape");
}

Tape::NodeId Tape::expand_leading(NodeId a, std::size_t n_copies) {
    const Tensor& ta = val(a);
    if (n_copies == 0)
        throw ShapeError("expand_leading: copy count must be positive");
    std::vector<std::size_t> shape;
    shape.reserve(ta.ndim() + 1);
    shape.push_back(n_copies);
    shape.insert(shape.end(), ta.shape().begin(), ta.shape().end());

    Node n;
    n.op = Op::ExpandLeading;
    n.parent = {a, -1};
    n.arg0 = n_copies;
    n.value = Tensor(shape);
    double* out = n.value.data();
    for (std::size_t c = 0; c < n_copies; ++c)
        std::copy(ta.data(), ta.data() + ta.size(), out + c * ta.size());
    return push(std::move(n), "expand_leading");
}

Tape::NodeId Tape::outer_add(NodeId u, NodeId w) {
    const Tensor& tu = val(u);
    const Tensor& tw = val(w);
    if (tu.ndim() != 2 || tw.ndim() != 2 || tu.shape() != tw.shape())
        throw ShapeError("outer_add: expected matching [B,D] operands, got " +
                         tu.shape_str() + " and " + tw.shape_str());
    const std::size_t B = tu.dim(0), D = tu.dim(1);

    Node n;
    n.op = Op::OuterAdd;
    n.parent = {u, w};
    n.value = Tensor({B, D, D});
    double* out = n.value.data();
    const double* pu = tu.data();
    const double* pw = tw.data();
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = 0; i < D; ++i) {
            const double ui = pu[b * D + i];
            double* row = out + (b * D + i) * D;
            const double* wrow = pw + b * D;
            for (std::size_t j = 0; j < D; ++j) row[j] = ui + wrow[j];
        }
    return push(std::move(n), "outer_add");
}

Tape::NodeId Tape::masked_softmax(NodeId logits, const Tensor& mask) {
    const Tensor& tl = val(logits);
    if (tl.ndim() < 2)
        throw ShapeError("masked_softmax: logits must have rank >= 2, got " +
                         tl.shape_str());
    if (mask.ndim() != 2 || mask.dim(0) != tl.dim(tl.ndim() - 2) ||
        mask.dim(1) != tl.dim(tl.ndim() - 1))
        throw ShapeError("masked_softmax: mask " + mask.shape_str() +
                         " does not match the trailing dimensions of " + tl.shape_str());

    const std::size_t R = mask.dim(0), C = mask.dim(1);
    const std::size_t blocks = tl.size() / (R * C);

    Node n;
    n.op = Op::MaskedSoftmax;
    n.parent = {logits, -1};
    n.mask = mask;
    n.value = Tensor(tl.shape());
    const double* in = tl.data();
    const double* m = mask.data();
    double* out = n.value.data();
    for (std::size_t blk = 0; blk < blocks; ++blk) {
        for (std::size_t r = 0; r < R; ++r) {
            const double* x = in + (blk * R + r) * C;
            const double* mrow = m + r * C;
            double* y = out + (blk * R + r) * C;
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < C; ++j)
                if (mrow[j] != 0.0 && x[j] > mx) mx = x[j];
            if (mx == -std::numeric_limits<double>::infinity())
                throw NumericError("masked_softmax: mask row " + std::to_string(r) +
                                   " has no active entries");
            double denom = 0.0;
            for (std::size_t j = 0; j < C; ++j)
                if (mrow[j] != 0.0) denom += std::exp(x[j] - mx);
            for (std::size_t j = 0; j < C; ++j)
                y[j] = mrow[j] != 0.0 ? std::exp(x[j] - mx) / denom : 0.0;
        }
    }
    return push(std::move(n), "masked_softmax");
}

Tape::NodeId Tape::sum_all(NodeId a) {
    const Tensor& ta = val(a);
    Node n;
    n.op = Op::SumAll;
    n.parent = {a, -1};
    const double* in = ta.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < ta.size(); ++i) acc += in[i];
    n.value = Tensor::scalar(acc);
    return push(std::move(n), "sum_all");
}

Tape::NodeId Tape::scale(NodeId a, double factor) {
    const Tensor& ta = val(a);
    Node n;
    n.op = Op::Scale;
    n.parent = {a, -1};
    n.darg = factor;
    n.value = Tensor(ta.shape());
    const double* in = ta.data();
    double* out = n.value.data();
    for (std::size_t i = 0; i < ta.size(); ++i) out[i] = factor * in[i];
    return push(std::move(n), "scale");
}

void Tape::backward(NodeId loss) {
    if (loss < 0 || static_cast<std::size_t>(loss) >= nodes_.size())
        throw ShapeError("backward: node id out of range");
    if (nodes_[loss].value.size() != 1)
        throw ShapeError("backward: loss must be a scalar, got " +
                         nodes_[loss].value.shape_str());

    // Mark everything the loss depends on; iterative DFS keeps deep graphs safe.
    std::vector<char> reachable(nodes_.size(), 0);
    std::vector<NodeId> stack{loss};
    while (!stack.empty()) {
        const NodeId id = stack.back();
        stack.pop_back();
        if (reachable[id]) continue;
        reachable[id] = 1;
        for (NodeId p : nodes_[id].parent)
            if (p >= 0 && !reachable[p]) stack.push_back(p);
    }

    for (auto& node : nodes_) node.grad = Tensor(node.value.shape());
    nodes_[loss].grad.data()[0] = 1.0;

    for (NodeId id = loss; id >= 0; --id)
        if (reachable[id]) backward_node(id);
}

void Tape::backward_node(NodeId id) {
    Node& n = nodes_[id];
    const double* g = n.grad.data();
    const std::size_t total = n.grad.size();

    // Accumulate into one parent, folding broadcast copies back together.
    // Block order ascends so the reduction sequence is reproducible.
    auto accumulate = [&](NodeId parent, auto term) {
        Tensor& pg = nodes_[parent].grad;
        double* dst = pg.data();
        const std::size_t np = pg.size();
        if (np == total) {
            for (std::size_t i = 0; i < total; ++i) dst[i] += term(i);
        } else {
            for (std::size_t i = 0; i < total; ++i) dst[i % np] += term(i);
        }
    };

    switch (n.op) {
    case Op::Leaf:
        break;
    case Op::Add:
        accumulate(n.parent[0], [&](std::size_t i) { return g[i]; });
        accumulate(n.parent[1], [&](std::size_t i) { return g[i]; });
        break;
    case Op::Sub:
        accumulate(n.parent[0], [&](std::size_t i) { return g[i]; });
        accumulate(n.parent[1], [&](std::size_t i) { return -g[i]; });
        break;
    case Op::Mul: {
        const Tensor& ta = nodes_[n.parent[0]].value;
        const Tensor& tb = nodes_[n.parent[1]].value;
        const double* pa = ta.data();
        const double* pb = tb.data();
        const std::size_t na = ta.size();
        const std::size_t nb = tb.size();
        accumulate(n.parent[0], [&](std::size_t i) { return g[i] * pb[i % nb]; });
        accumulate(n.parent[1], [&](std::size_t i) { return g[i] * pa[i % na]; });
        break;
    }
    case Op::MatMul: {
        const Tensor& ta = nodes_[n.parent[0]].value;
        const Tensor& tb = nodes_[n.parent[1]].value;
        Tensor& ga = nodes_[n.parent[0]].grad;
        Tensor& gb = nodes_[n.parent[1]].grad;
        if (ta.ndim() == 2) {
            const std::size_t M = ta.dim(0), K = ta.dim(1), N = tb.dim(1);
            gemm_abt_acc(g, tb.data(), ga.data(), M, N, K);
            gemm_atb_acc(ta.data(), g, gb.data(), M, K, N);
        } else if (tb.ndim() == 2) {
            const std::size_t B = ta.dim(0), M = ta.dim(1), K = ta.dim(2), N = tb.dim(1);
            for (std::size_t i = 0; i < B; ++i) {
                gemm_abt_acc(g + i * M * N, tb.data(), ga.data() + i * M * K, M, N, K);
                gemm_atb_acc(ta.data() + i * M * K, g + i * M * N, gb.data(), M, K, N);
            }
        } else {
            const std::size_t B = ta.dim(0), M = ta.dim(1), K = ta.dim(2), N = tb.dim(2);
            for (std::size_t i = 0; i < B; ++i) {
                gemm_abt_acc(g + i * M * N, tb.data() + i * K * N,
                             ga.data() + i * M * K, M, N, K);
                gemm_atb_acc(ta.data() + i * M * K, g + i * M * N,
                             gb.data() + i * K * N, M, K, N);
            }
        }
        break;
    }
    case Op::Relu: {
        const double* in = nodes_[n.parent[0]].value.data();
        accumulate(n.parent[0], [&](std::size_t i) { return in[i] > 0.0 ? g[i] : 0.0; });
        break;
    }
    case Op::LeakyRelu: {
        const double* in = nodes_[n.parent[0]].value.data();
        const double slope = n.darg;
        accumulate(n.parent[0],
                   [&](std::size_t i) { return in[i] > 0.0 ? g[i] : slope * g[i]; });
        break;
    }
    case Op::ConcatLast: {
        const std::size_t la = n.arg0, lb = n.arg1;
        double* da = nodes_[n.parent[0]].grad.data();
        double* db = nodes_[n.parent[1]].grad.data();
        const std::size_t rows = total / (la + lb);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* grow = g + r * (la + lb);
            for (std::size_t j = 0; j < la; ++j) da[r * la + j] += grow[j];
            for (std::size_t j = 0; j < lb; ++j) db[r * lb + j] += grow[la + j];
        }
        break;
    }
    case Op::SliceLast: {
        const Tensor& ta = nodes_[n.parent[0]].value;
        const std::size_t last = ta.dim(ta.ndim() - 1);
        const std::size_t offset = n.arg0, len = n.arg1;
        double* da = nodes_[n.parent[0]].grad.data();
        const std::size_t rows = len == 0 ? 0 : total / len;
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < len; ++j)
                da[r * last + offset + j] += g[r * len + j];
        break;
    }
    case Op::Reshape:
        accumulate(n.parent[0], [&](std::size_t i) { return g[i]; });
        break;
    case Op::ExpandLeading:
        // Copies fold back in ascending order via the modulo accumulate.
        accumulate(n.parent[0], [&](std::size_t i) { return g[i]; });
        break;
    case Op::OuterAdd: {
        const Tensor& tu = nodes_[n.parent[0]].value;
        const std::size_t B = tu.dim(0), D = tu.dim(1);
        double* du = nodes_[n.parent[0]].grad.data();
        double* dw = nodes_[n.parent[1]].grad.data();
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t i = 0; i < D; ++i) {
                const double* grow = g + (b * D + i) * D;
                double acc = 0.0;
                for (std::size_t j = 0; j < D; ++j) {
                    acc += grow[j];
                    dw[b * D + j] += grow[j];
                }
                du[b * D + i] += acc;
            }
        break;
    }
    case Op::MaskedSoftmax: {
        const double* y = n.value.data();
        const double* m = n.mask.data();
        const std::size_t R = n.mask.dim(0), C = n.mask.dim(1);
        const std::size_t blocks = total / (R * C);
        double* dx = nodes_[n.parent[0]].grad.data();
        for (std::size_t blk = 0; blk < blocks; ++blk)
            for (std::size_t r = 0; r < R; ++r) {
                const std::size_t base = (blk * R + r) * C;
                const double* mrow = m + r * C;
                double dot = 0.0;
                for (std::size_t j = 0; j < C; ++j)
                    if (mrow[j] != 0.0) dot += g[base + j] * y[base + j];
                for (std::size_t j = 0; j < C; ++j)
                    if (mrow[j] != 0.0)
                        dx[base + j] += y[base + j] * (g[base + j] - dot);
            }
        break;
    }
    case Op::SumAll: {
        // The output is a scalar, so spread its gradient over every input cell.
        const double gv = g[0];
        Tensor& pg = nodes_[n.parent[0]].grad;
        double* dst = pg.data();
        for (std::size_t i = 0; i < pg.size(); ++i) dst[i] += gv;
        break;
    }
    case Op::Scale: {
        const double f = n.darg;
        accumulate(n.parent[0], [&](std::size_t i) { return f * g[i]; });
        break;
    }
    }
}

} // namespace tracecast
