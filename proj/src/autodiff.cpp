#include "scbm/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "kernels_detail.hpp"
#include "scbm/kernels.hpp"

namespace scbm::ad {

namespace ker = scbm::kernels;

// ---------------------------------------------------------------- ParameterSet

void ParameterSet::add(const std::string& name, Tensor t, bool trainable) {
    if (entries_.count(name)) throw std::invalid_argument("ParameterSet: duplicate name " + name);
    entries_.emplace(name, Entry{std::move(t), trainable});
}

bool ParameterSet::has(const std::string& name) const { return entries_.count(name) != 0; }

Tensor& ParameterSet::value(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::invalid_argument("ParameterSet: unknown name " + name);
    return it->second.value;
}

const Tensor& ParameterSet::value(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::invalid_argument("ParameterSet: unknown name " + name);
    return it->second.value;
}

bool ParameterSet::trainable(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::invalid_argument("ParameterSet: unknown name " + name);
    return it->second.trainable;
}

std::vector<std::string> ParameterSet::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [k, v] : entries_) out.push_back(k);
    return out;
}

std::vector<std::string> ParameterSet::trainable_names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_)
        if (v.trainable) out.push_back(k);
    return out;
}

// --------------------------------------------------------------------- Graph

int Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

const Graph::Node& Graph::node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }

void Graph::check2d(int x, const char* op) const {
    if (node(x).val.ndim() != 2)
        throw std::invalid_argument(std::string(op) + ": expected rank-2 input, got shape " +
                                    node(x).val.shape_str());
}

int Graph::constant(Tensor t) {
    Node n;
    n.op = Op::Constant;
    n.val = std::move(t);
    return push(std::move(n));
}

int Graph::param(const std::string& name, const ParameterSet& ps) {
    Node n;
    n.op = Op::Param;
    n.pname = name;
    n.val = ps.value(name);  // shape fixed now, data refreshed each forward
    n.needs_grad = ps.trainable(name);
    return push(std::move(n));
}

int Graph::matmul(int a, int b) {
    check2d(a, "matmul");
    check2d(b, "matmul");
    const auto& ta = node(a).val;
    const auto& tb = node(b).val;
    if (ta.cols() != tb.rows())
        throw std::invalid_argument("matmul: inner dimensions " + ta.shape_str() + " x " + tb.shape_str());
    Node n;
    n.op = Op::MatMul;
    n.a = a;
    n.b = b;
    n.needs_grad = node(a).needs_grad || node(b).needs_grad;
    n.val = Tensor({ta.rows(), tb.cols()});
    return push(std::move(n));
}

int Graph::conv2d(int x, int w, int bias, std::size_t stride) {
    const auto& tx = node(x).val;
    const auto& tw = node(w).val;
    const auto& tb = node(bias).val;
    if (tx.ndim() != 4) throw std::invalid_argument("conv2d: input must be (N,H,W,C), got " + tx.shape_str());
    if (tw.ndim() != 4) throw std::invalid_argument("conv2d: weight must be (KH,KW,Cin,Cout), got " + tw.shape_str());
    if (tw.dim(2) != tx.dim(3))
        throw std::invalid_argument("conv2d: channel mismatch " + tx.shape_str() + " vs " + tw.shape_str());
    if (stride == 0) throw std::invalid_argument("conv2d: stride must be positive");
    if (tx.dim(1) < tw.dim(0) || tx.dim(2) < tw.dim(1))
        throw std::invalid_argument("conv2d: kernel larger than input " + tx.shape_str());
    if (tb.size() != tw.dim(3))
        throw std::invalid_argument("conv2d: bias size " + tb.shape_str() + " vs filters " + std::to_string(tw.dim(3)));
    const std::size_t oh = ker::conv_out_dim(tx.dim(1), tw.dim(0), stride);
    const std::size_t ow = ker::conv_out_dim(tx.dim(2), tw.dim(1), stride);
    Node n;
    n.op = Op::Conv2d;
    n.a = x;
    n.b = w;
    n.c = bias;
    n.attr = stride;
    n.needs_grad = node(x).needs_grad || node(w).needs_grad || node(bias).needs_grad;
    n.val = Tensor({tx.dim(0), oh, ow, tw.dim(3)});
    return push(std::move(n));
}

int Graph::maxpool2(int x, std::size_t size) {
    const auto& tx = node(x).val;
    if (tx.ndim() != 4) throw std::invalid_argument("maxpool2: input must be (N,H,W,C), got " + tx.shape_str());
    if (size == 0 || tx.dim(1) < size || tx.dim(2) < size)
        throw std::invalid_argument("maxpool2: bad pool size for input " + tx.shape_str());
    Node n;
    n.op = Op::MaxPool2;
    n.a = x;
    n.attr = size;
    n.needs_grad = node(x).needs_grad;
    n.val = Tensor({tx.dim(0), tx.dim(1) / size, tx.dim(2) / size, tx.dim(3)});
    return push(std::move(n));
}

int Graph::relu(int x) {
    Node n;
    n.op = Op::Relu;
    n.a = x;
    n.needs_grad = node(x).needs_grad;
    n.val = Tensor(node(x).val.shape());
    return push(std::move(n));
}

int Graph::sigmoid(int x) {
    Node n;
    n.op = Op::Sigmoid;
    n.a = x;
    n.needs_grad = node(x).needs_grad;
    n.val = Tensor(node(x).val.shape());
    return push(std::move(n));
}

int Graph::exp(int x) {
    Node n;
    n.op = Op::Exp;
    n.a = x;
    n.needs_grad = node(x).needs_grad;
    n.val = Tensor(node(x).val.shape());
    return push(std::move(n));
}

int Graph::log(int x) {
    Node n;
    n.op = Op::Log;
    n.a = x;
    n.needs_grad = node(x).needs_grad;
    n.val = Tensor(node(x).val.shape());
    return push(std::move(n));
}

int Graph::softmax(int x) {
    check2d(x, "softmax");
    Node n;
    n.op = Op::Softmax;
    n.a = x;
    n.needs_grad = node(x).needs_grad;
    n.val = Tensor(node(x).val.shape());
    return push(std::move(n));
}

int Graph::log_softmax(int x) {
    check2d(x, "log_softmax");
    Node n;
    n.op = Op::LogSoftmax;
    n.a = x;
    n.needs_grad = node(x).needs_grad;
    n.val = Tensor(node(x).val.shape());
    return push(std::move(n));
}

// Broadcast legality for elementwise binaries: equal shapes of any rank, or
// rank-2 with (1,n) / (m,1) / (1,1) against (m,n) on either side.
static bool broadcast_ok(const Tensor& a, const Tensor& b) {
    if (a.same_shape(b)) return true;
    if (a.ndim() != 2 || b.ndim() != 2) return false;
    auto fits = [](const Tensor& small, const Tensor& big) {
        return (small.rows() == 1 || small.rows() == big.rows()) &&
               (small.cols() == 1 || small.cols() == big.cols());
    };
    return fits(a, b) || fits(b, a);
}

static std::vector<std::size_t> broadcast_shape(const Tensor& a, const Tensor& b) {
    if (a.same_shape(b)) return a.shape();
    return {std::max(a.rows(), b.rows()), std::max(a.cols(), b.cols())};
}

int Graph::add(int a, int b) {
    const auto& ta = node(a).val;
    const auto& tb = node(b).val;
    if (!broadcast_ok(ta, tb))
        throw std::invalid_argument("add: incompatible shapes " + ta.shape_str() + " vs " + tb.shape_str());
    Node n;
    n.op = Op::Add;
    n.a = a;
    n.b = b;
    n.needs_grad = node(a).needs_grad || node(b).needs_grad;
    n.val = Tensor(broadcast_shape(ta, tb));
    return push(std::move(n));
}

int Graph::sub(int a, int b) {
    int r = add(a, b);
    nodes_.back().op = Op::Sub;
    (void)r;
    return static_cast<int>(nodes_.size()) - 1;
}

int Graph::mul(int a, int b) {
    int r = add(a, b);
    nodes_.back().op = Op::Mul;
    (void)r;
    return static_cast<int>(nodes_.size()) - 1;
}

int Graph::div(int a, int b) {
    int r = add(a, b);
    nodes_.back().op = Op::Div;
    (void)r;
    return static_cast<int>(nodes_.size()) - 1;
}

int Graph::sum_all(int x) {
    Node n;
    n.op = Op::SumAll;
    n.a = x;
    n.needs_grad = node(x).needs_grad;
    n.val = Tensor({1, 1});
    return push(std::move(n));
}

int Graph::sum_rows(int x) {
    check2d(x, "sum_rows");
    Node n;
    n.op = Op::SumRows;
    n.a = x;
    n.needs_grad = node(x).needs_grad;
    n.val = Tensor({node(x).val.rows(), 1});
    return push(std::move(n));
}

int Graph::sum_cols(int x) {
    check2d(x, "sum_cols");
    Node n;
    n.op = Op::SumCols;
    n.a = x;
    n.needs_grad = node(x).needs_grad;
    n.val = Tensor({1, node(x).val.cols()});
    return push(std::move(n));
}

int Graph::scale(int x, double s) {
    Node n;
    n.op = Op::Scale;
    n.a = x;
    n.scalar = s;
    n.needs_grad = node(x).needs_grad;
    n.val = Tensor(node(x).val.shape());
    return push(std::move(n));
}

int Graph::add_const(int x, double c) {
    Node n;
    n.op = Op::AddConst;
    n.a = x;
    n.scalar = c;
    n.needs_grad = node(x).needs_grad;
    n.val = Tensor(node(x).val.shape());
    return push(std::move(n));
}

int Graph::reshape(int x, std::vector<std::size_t> shape) {
    if (shape_product(shape) != node(x).val.size())
        throw std::invalid_argument("reshape: size mismatch for " + node(x).val.shape_str());
    Node n;
    n.op = Op::Reshape;
    n.a = x;
    n.needs_grad = node(x).needs_grad;
    n.val = Tensor(std::move(shape));
    return push(std::move(n));
}

int Graph::concat_cols(const std::vector<int>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_cols: no inputs");
    std::size_t rows = 0, cols = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        check2d(xs[i], "concat_cols");
        const auto& t = node(xs[i]).val;
        if (i == 0) rows = t.rows();
        else if (t.rows() != rows)
            throw std::invalid_argument("concat_cols: row mismatch " + t.shape_str());
        cols += t.cols();
    }
    Node n;
    n.op = Op::ConcatCols;
    n.list = xs;
    for (int x : xs) n.needs_grad = n.needs_grad || node(x).needs_grad;
    n.val = Tensor({rows, cols});
    return push(std::move(n));
}

int Graph::gather_rows(int x, std::vector<std::size_t> idx) {
    check2d(x, "gather_rows");
    const auto& t = node(x).val;
    for (std::size_t i : idx)
        if (i >= t.rows()) throw std::invalid_argument("gather_rows: index out of range");
    Node n;
    n.op = Op::GatherRows;
    n.a = x;
    n.indices = std::move(idx);
    n.needs_grad = node(x).needs_grad;
    n.val = Tensor({n.indices.size(), t.cols()});
    return push(std::move(n));
}

const Tensor& Graph::value(int i) const { return node(i).val; }

Tensor& Graph::grad_of(int i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.grad_live) {
        if (!n.grad.same_shape(n.val)) n.grad = Tensor(n.val.shape());
        else std::fill(n.grad.vec().begin(), n.grad.vec().end(), 0.0);
        n.grad_live = true;
    }
    return n.grad;
}

// elementwise binary with 2-D broadcasting; f indexes resolve the operand cell
static void broadcast_zip(ker::BinaryKind op, const Tensor& a, const Tensor& b, Tensor& out) {
    if (a.same_shape(b)) {
        ker::vzip(op, a.data(), b.data(), out.data(), out.size());
        return;
    }
    const std::size_t R = out.rows(), C = out.cols();
    const std::size_t ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
    for (std::size_t i = 0; i < R; ++i)
        for (std::size_t j = 0; j < C; ++j) {
            const double av = a.data()[(ar == 1 ? 0 : i) * ac + (ac == 1 ? 0 : j)];
            const double bv = b.data()[(br == 1 ? 0 : i) * bc + (bc == 1 ? 0 : j)];
            out.data()[i * C + j] = ker::detail::apply2(op, av, bv);
        }
}

void Graph::forward(const ParameterSet& ps) {
    std::uint64_t sig = 1469598103934665603ULL;  // FNV offset
    auto sig_mix = [&sig](std::uint64_t v) {
        sig ^= v;
        sig *= 1099511628211ULL;
    };

    for (auto& n : nodes_) {
        switch (n.op) {
            case Op::Constant:
                break;
            case Op::Param: {
                const Tensor& p = ps.value(n.pname);
                if (!p.same_shape(n.val))
                    throw std::invalid_argument("param " + n.pname + ": shape changed " + p.shape_str());
                n.val = p;
                break;
            }
            case Op::MatMul: {
                const Tensor& A = nodes_[n.a].val;
                const Tensor& B = nodes_[n.b].val;
                ker::matmul(A.data(), B.data(), n.val.data(), A.rows(), A.cols(), B.cols());
                break;
            }
            case Op::Conv2d: {
                const Tensor& X = nodes_[n.a].val;
                const Tensor& W = nodes_[n.b].val;
                const Tensor& Bv = nodes_[n.c].val;
                const std::size_t N = X.dim(0), H = X.dim(1), Wd = X.dim(2), Cin = X.dim(3);
                const std::size_t KH = W.dim(0), KW = W.dim(1), Cout = W.dim(3);
                const std::size_t OH = n.val.dim(1), OW = n.val.dim(2);
                const std::size_t patch = KH * KW * Cin;
                const std::size_t rows = N * OH * OW;
                if (n.scratch.size() != rows * patch) n.scratch = Tensor({rows, patch});
                ker::im2col(X.data(), N, H, Wd, Cin, KH, KW, n.attr, n.scratch.data());
                ker::matmul(n.scratch.data(), W.data(), n.val.data(), rows, patch, Cout);
                double* out = n.val.data();
                const double* bias = Bv.data();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < Cout; ++c) out[r * Cout + c] += bias[c];
                break;
            }
            case Op::MaxPool2: {
                const Tensor& X = nodes_[n.a].val;
                n.argmax.resize(n.val.size());
                ker::maxpool2(X.data(), X.dim(0), X.dim(1), X.dim(2), X.dim(3), n.attr,
                              n.val.data(), n.argmax.data());
                for (std::size_t i = 0; i < n.argmax.size(); ++i) sig_mix(n.argmax[i] + 0x9e37);
                break;
            }
            case Op::Relu: {
                const Tensor& X = nodes_[n.a].val;
                ker::vmap(ker::UnaryKind::Relu, X.data(), n.val.data(), X.size());
                std::uint64_t bits = 0;
                for (std::size_t i = 0; i < X.size(); ++i) {
                    bits = (bits << 1) | (X.data()[i] > 0.0 ? 1u : 0u);
                    if ((i & 63) == 63) {
                        sig_mix(bits);
                        bits = 0;
                    }
                }
                sig_mix(bits);
                break;
            }
            case Op::Sigmoid:
                ker::vmap(ker::UnaryKind::Sigmoid, nodes_[n.a].val.data(), n.val.data(), n.val.size());
                break;
            case Op::Exp:
                ker::vmap(ker::UnaryKind::Exp, nodes_[n.a].val.data(), n.val.data(), n.val.size());
                break;
            case Op::Log:
                ker::vmap(ker::UnaryKind::Log, nodes_[n.a].val.data(), n.val.data(), n.val.size());
                break;
            case Op::Softmax: {
                const Tensor& X = nodes_[n.a].val;
                ker::softmax_rows(X.data(), n.val.data(), X.rows(), X.cols());
                break;
            }
            case Op::LogSoftmax: {
                const Tensor& X = nodes_[n.a].val;
                ker::log_softmax_rows(X.data(), n.val.data(), X.rows(), X.cols());
                break;
            }
            case Op::Add:
                broadcast_zip(ker::BinaryKind::Add, nodes_[n.a].val, nodes_[n.b].val, n.val);
                break;
            case Op::Sub:
                broadcast_zip(ker::BinaryKind::Sub, nodes_[n.a].val, nodes_[n.b].val, n.val);
                break;
            case Op::Mul:
                broadcast_zip(ker::BinaryKind::Mul, nodes_[n.a].val, nodes_[n.b].val, n.val);
                break;
            case Op::Div:
                broadcast_zip(ker::BinaryKind::Div, nodes_[n.a].val, nodes_[n.b].val, n.val);
                break;
            case Op::SumAll:
                n.val.data()[0] = ker::reduce_sum(nodes_[n.a].val.data(), nodes_[n.a].val.size());
                break;
            case Op::SumRows: {
                const Tensor& X = nodes_[n.a].val;
                for (std::size_t i = 0; i < X.rows(); ++i)
                    n.val.data()[i] = ker::serial::reduce_sum(X.data() + i * X.cols(), X.cols());
                break;
            }
            case Op::SumCols: {
                const Tensor& X = nodes_[n.a].val;
                for (std::size_t j = 0; j < X.cols(); ++j) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < X.rows(); ++i) s += X.at2(i, j);
                    n.val.data()[j] = s;
                }
                break;
            }
            case Op::Scale: {
                const Tensor& X = nodes_[n.a].val;
                for (std::size_t i = 0; i < X.size(); ++i) n.val.data()[i] = X.data()[i] * n.scalar;
                break;
            }
            case Op::AddConst: {
                const Tensor& X = nodes_[n.a].val;
                for (std::size_t i = 0; i < X.size(); ++i) n.val.data()[i] = X.data()[i] + n.scalar;
                break;
            }
            case Op::Reshape:
                n.val.vec() = nodes_[n.a].val.vec();
                break;
            case Op::ConcatCols: {
                const std::size_t R = n.val.rows(), C = n.val.cols();
                std::size_t off = 0;
                for (int src : n.list) {
                    const Tensor& X = nodes_[src].val;
                    for (std::size_t i = 0; i < R; ++i)
                        for (std::size_t j = 0; j < X.cols(); ++j)
                            n.val.data()[i * C + off + j] = X.at2(i, j);
                    off += X.cols();
                }
                break;
            }
            case Op::GatherRows: {
                const Tensor& X = nodes_[n.a].val;
                const std::size_t C = X.cols();
                for (std::size_t r = 0; r < n.indices.size(); ++r)
                    for (std::size_t j = 0; j < C; ++j)
                        n.val.data()[r * C + j] = X.at2(n.indices[r], j);
                break;
            }
        }
    }
    kink_sig_ = sig;
}

// accumulate grad of a broadcast operand: reduce g over the broadcast dims
static void reduce_into(const Tensor& g, Tensor& acc) {
    if (g.same_shape(acc)) {
        for (std::size_t i = 0; i < g.size(); ++i) acc.vec()[i] += g.vec()[i];
        return;
    }
    const std::size_t R = g.rows(), C = g.cols();
    const std::size_t ar = acc.rows(), ac = acc.cols();
    for (std::size_t i = 0; i < R; ++i)
        for (std::size_t j = 0; j < C; ++j)
            acc.data()[(ar == 1 ? 0 : i) * ac + (ac == 1 ? 0 : j)] += g.data()[i * C + j];
}

GradientMap Graph::backward(int loss, const ParameterSet& ps) {
    if (!node(loss).val.is_scalar())
        throw std::invalid_argument("backward: designated loss is not scalar, shape " +
                                    node(loss).val.shape_str());
    for (auto& n : nodes_) n.grad_live = false;
    grad_of(loss).data()[0] = 1.0;

    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (!n.grad_live || !n.needs_grad) continue;
        const Tensor& g = n.grad;
        switch (n.op) {
            case Op::Constant:
            case Op::Param:
                break;
            case Op::MatMul: {
                const Tensor& A = nodes_[n.a].val;
                const Tensor& B = nodes_[n.b].val;
                const std::size_t m = A.rows(), k = A.cols(), c = B.cols();
                if (nodes_[n.a].needs_grad) {
                    Tensor da({m, k});
                    ker::matmul_nt(g.data(), B.data(), da.data(), m, c, k);
                    reduce_into(da, grad_of(n.a));
                }
                if (nodes_[n.b].needs_grad) {
                    Tensor db({k, c});
                    ker::matmul_tn(A.data(), g.data(), db.data(), k, m, c);
                    reduce_into(db, grad_of(n.b));
                }
                break;
            }
            case Op::Conv2d: {
                const Tensor& X = nodes_[n.a].val;
                const Tensor& W = nodes_[n.b].val;
                const std::size_t N = X.dim(0), H = X.dim(1), Wd = X.dim(2), Cin = X.dim(3);
                const std::size_t KH = W.dim(0), KW = W.dim(1), Cout = W.dim(3);
                const std::size_t OH = n.val.dim(1), OW = n.val.dim(2);
                const std::size_t patch = KH * KW * Cin;
                const std::size_t rows = N * OH * OW;
                if (nodes_[n.c].needs_grad) {
                    Tensor& db = grad_of(n.c);
                    for (std::size_t c2 = 0; c2 < Cout; ++c2) {
                        double s = 0.0;
                        for (std::size_t r = 0; r < rows; ++r) s += g.data()[r * Cout + c2];
                        db.data()[c2] += s;
                    }
                }
                if (nodes_[n.b].needs_grad) {
                    Tensor dw({patch, Cout});
                    ker::matmul_tn(n.scratch.data(), g.data(), dw.data(), patch, rows, Cout);
                    Tensor& acc = grad_of(n.b);
                    for (std::size_t j = 0; j < dw.size(); ++j) acc.vec()[j] += dw.vec()[j];
                }
                if (nodes_[n.a].needs_grad) {
                    Tensor dcols({rows, patch});
                    ker::matmul_nt(g.data(), W.data(), dcols.data(), rows, Cout, patch);
                    Tensor dx(X.shape());
                    ker::col2im_add(dcols.data(), N, H, Wd, Cin, KH, KW, n.attr, dx.data());
                    Tensor& acc = grad_of(n.a);
                    for (std::size_t j = 0; j < dx.size(); ++j) acc.vec()[j] += dx.vec()[j];
                }
                break;
            }
            case Op::MaxPool2: {
                if (nodes_[n.a].needs_grad) {
                    Tensor dx(nodes_[n.a].val.shape());
                    ker::maxpool2_backward(g.data(), n.argmax.data(), n.val.size(), dx.data());
                    Tensor& acc = grad_of(n.a);
                    for (std::size_t j = 0; j < dx.size(); ++j) acc.vec()[j] += dx.vec()[j];
                }
                break;
            }
            case Op::Relu: {
                const Tensor& X = nodes_[n.a].val;
                Tensor& acc = grad_of(n.a);
                // subgradient 0 at the kink
                for (std::size_t j = 0; j < X.size(); ++j)
                    if (X.vec()[j] > 0.0) acc.vec()[j] += g.vec()[j];
                break;
            }
            case Op::Sigmoid: {
                Tensor& acc = grad_of(n.a);
                for (std::size_t j = 0; j < n.val.size(); ++j) {
                    const double y = n.val.vec()[j];
                    acc.vec()[j] += g.vec()[j] * y * (1.0 - y);
                }
                break;
            }
            case Op::Exp: {
                Tensor& acc = grad_of(n.a);
                for (std::size_t j = 0; j < n.val.size(); ++j)
                    acc.vec()[j] += g.vec()[j] * n.val.vec()[j];
                break;
            }
            case Op::Log: {
                const Tensor& X = nodes_[n.a].val;
                Tensor& acc = grad_of(n.a);
                for (std::size_t j = 0; j < X.size(); ++j) acc.vec()[j] += g.vec()[j] / X.vec()[j];
                break;
            }
            case Op::Softmax: {
                const Tensor& Y = n.val;
                Tensor& acc = grad_of(n.a);
                const std::size_t R = Y.rows(), C = Y.cols();
                for (std::size_t r = 0; r < R; ++r) {
                    double dotgy = 0.0;
                    for (std::size_t j = 0; j < C; ++j) dotgy += g.at2(r, j) * Y.at2(r, j);
                    for (std::size_t j = 0; j < C; ++j)
                        acc.at2(r, j) += Y.at2(r, j) * (g.at2(r, j) - dotgy);
                }
                break;
            }
            case Op::LogSoftmax: {
                const Tensor& Y = n.val;
                Tensor& acc = grad_of(n.a);
                const std::size_t R = Y.rows(), C = Y.cols();
                for (std::size_t r = 0; r < R; ++r) {
                    double gsum = 0.0;
                    for (std::size_t j = 0; j < C; ++j) gsum += g.at2(r, j);
                    for (std::size_t j = 0; j < C; ++j)
                        acc.at2(r, j) += g.at2(r, j) - std::exp(Y.at2(r, j)) * gsum;
                }
                break;
            }
            case Op::Add: {
                if (nodes_[n.a].needs_grad) reduce_into(g, grad_of(n.a));
                if (nodes_[n.b].needs_grad) reduce_into(g, grad_of(n.b));
                break;
            }
            case Op::Sub: {
                if (nodes_[n.a].needs_grad) reduce_into(g, grad_of(n.a));
                if (nodes_[n.b].needs_grad) {
                    Tensor neg(g.shape());
                    for (std::size_t j = 0; j < g.size(); ++j) neg.vec()[j] = -g.vec()[j];
                    reduce_into(neg, grad_of(n.b));
                }
                break;
            }
            case Op::Mul: {
                const Tensor& A = nodes_[n.a].val;
                const Tensor& B = nodes_[n.b].val;
                if (nodes_[n.a].needs_grad) {
                    Tensor t(n.val.shape());
                    broadcast_zip(ker::BinaryKind::Mul, g, B, t);
                    reduce_into(t, grad_of(n.a));
                }
                if (nodes_[n.b].needs_grad) {
                    Tensor t(n.val.shape());
                    broadcast_zip(ker::BinaryKind::Mul, g, A, t);
                    reduce_into(t, grad_of(n.b));
                }
                break;
            }
            case Op::Div: {
                const Tensor& B = nodes_[n.b].val;
                if (nodes_[n.a].needs_grad) {
                    Tensor t(n.val.shape());
                    broadcast_zip(ker::BinaryKind::Div, g, B, t);
                    reduce_into(t, grad_of(n.a));
                }
                if (nodes_[n.b].needs_grad) {
                    // d(a/b)/db = -a / b^2 = -y / b
                    Tensor t(n.val.shape());
                    broadcast_zip(ker::BinaryKind::Mul, g, n.val, t);
                    Tensor t2(n.val.shape());
                    broadcast_zip(ker::BinaryKind::Div, t, B, t2);
                    for (std::size_t j = 0; j < t2.size(); ++j) t2.vec()[j] = -t2.vec()[j];
                    reduce_into(t2, grad_of(n.b));
                }
                break;
            }
            case Op::SumAll: {
                Tensor& acc = grad_of(n.a);
                const double gv = g.data()[0];
                for (std::size_t j = 0; j < acc.size(); ++j) acc.vec()[j] += gv;
                break;
            }
            case Op::SumRows: {
                Tensor& acc = grad_of(n.a);
                const std::size_t R = acc.rows(), C = acc.cols();
                for (std::size_t r = 0; r < R; ++r)
                    for (std::size_t j = 0; j < C; ++j) acc.at2(r, j) += g.data()[r];
                break;
            }
            case Op::SumCols: {
                Tensor& acc = grad_of(n.a);
                const std::size_t R = acc.rows(), C = acc.cols();
                for (std::size_t r = 0; r < R; ++r)
                    for (std::size_t j = 0; j < C; ++j) acc.at2(r, j) += g.data()[j];
                break;
            }
            case Op::Scale: {
                Tensor& acc = grad_of(n.a);
                for (std::size_t j = 0; j < acc.size(); ++j) acc.vec()[j] += g.vec()[j] * n.scalar;
                break;
            }
            case Op::AddConst: {
                Tensor& acc = grad_of(n.a);
                for (std::size_t j = 0; j < acc.size(); ++j) acc.vec()[j] += g.vec()[j];
                break;
            }
            case Op::Reshape: {
                Tensor& acc = grad_of(n.a);
                for (std::size_t j = 0; j < acc.size(); ++j) acc.vec()[j] += g.vec()[j];
                break;
            }
            case Op::ConcatCols: {
                const std::size_t R = n.val.rows(), C = n.val.cols();
                std::size_t off = 0;
                for (int src : n.list) {
                    const std::size_t sc = nodes_[src].val.cols();
                    if (nodes_[src].needs_grad) {
                        Tensor& acc = grad_of(src);
                        for (std::size_t r = 0; r < R; ++r)
                            for (std::size_t j = 0; j < sc; ++j)
                                acc.at2(r, j) += g.data()[r * C + off + j];
                    }
                    off += sc;
                }
                break;
            }
            case Op::GatherRows: {
                Tensor& acc = grad_of(n.a);
                const std::size_t C = acc.cols();
                for (std::size_t r = 0; r < n.indices.size(); ++r)
                    for (std::size_t j = 0; j < C; ++j)
                        acc.at2(n.indices[r], j) += g.data()[r * C + j];
                break;
            }
        }
    }

    GradientMap out;
    for (const auto& name : ps.trainable_names()) out.emplace(name, Tensor(ps.value(name).shape()));
    for (const auto& n : nodes_) {
        if (n.op != Op::Param || !n.grad_live) continue;
        auto it = out.find(n.pname);
        if (it == out.end()) continue;
        for (std::size_t j = 0; j < n.grad.size(); ++j) it->second.vec()[j] += n.grad.vec()[j];
    }
    return out;
}

FdReport finite_difference_check(Graph& g, int loss, ParameterSet& ps, double step) {
    if (step <= 0.0) throw std::invalid_argument("finite_difference_check: step must be positive");
    g.forward(ps);
    const std::uint64_t base_sig = g.kink_signature();
    GradientMap grads = g.backward(loss, ps);

    FdReport rep;
    for (const auto& name : ps.trainable_names()) {
        Tensor& p = ps.value(name);
        const Tensor& an = grads.at(name);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double saved = p.vec()[i];
            p.vec()[i] = saved + step;
            g.forward(ps);
            const double fp = g.value(loss).scalar_value();
            const std::uint64_t sp = g.kink_signature();
            p.vec()[i] = saved - step;
            g.forward(ps);
            const double fm = g.value(loss).scalar_value();
            const std::uint64_t sm = g.kink_signature();
            p.vec()[i] = saved;
            if (sp != base_sig || sm != base_sig) {
                ++rep.excluded;  // crossed a ReLU or pooling kink
                continue;
            }
            const double numeric = (fp - fm) / (2.0 * step);
            const double analytic = an.vec()[i];
            const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
            const double rel = std::fabs(analytic - numeric) / denom;
            if (rel > rep.max_rel_err) rep.max_rel_err = rel;
            ++rep.checked;
        }
    }
    g.forward(ps);  // leave values consistent with unperturbed params
    return rep;
}

}  // namespace scbm::ad
