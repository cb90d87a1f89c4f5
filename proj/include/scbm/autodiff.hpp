#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "scbm/tensor.hpp"

namespace scbm::ad {

/// Named tensors, each flagged trainable or frozen. Ordered map so every
/// iteration over parameters is deterministic.
class ParameterSet {
public:
    void add(const std::string& name, Tensor t, bool trainable = true);
    bool has(const std::string& name) const;
    Tensor& value(const std::string& name);
    const Tensor& value(const std::string& name) const;
    bool trainable(const std::string& name) const;
    std::vector<std::string> names() const;
    std::vector<std::string> trainable_names() const;
    std::size_t count() const { return entries_.size(); }

private:
    struct Entry {
        Tensor value;
        bool trainable;
    };
    std::map<std::string, Entry> entries_;
};

/// One gradient tensor per trainable parameter.
using GradientMap = std::map<std::string, Tensor>;

enum class Op {
    Constant,
    Param,
    MatMul,
    Conv2d,
    MaxPool2,
    Relu,
    Sigmoid,
    Exp,
    Log,
    Softmax,
    LogSoftmax,
    Add,
    Sub,
    Mul,
    Div,
    SumAll,
    SumRows,
    SumCols,
    Scale,
    AddConst,
    Reshape,
    ConcatCols,
    GatherRows,
};

/// Reverse-mode tape. Build a program once per batch, run forward against a
/// ParameterSet, then pull exact gradients of one scalar output. Shapes are
/// checked at build time; mismatches throw naming the offending op.
///
/// A graph instance is confined to one thread while executing; distinct
/// graphs run concurrently without restriction.
class Graph {
public:
    int constant(Tensor t);
    /// Alias for constant; marks non-trainable runtime data.
    int input(Tensor t) { return constant(std::move(t)); }
    int param(const std::string& name, const ParameterSet& ps);

    int matmul(int a, int b);
    /// x: (N,H,W,Cin), w: (KH,KW,Cin,Cout), bias: (Cout). Valid padding.
    int conv2d(int x, int w, int bias, std::size_t stride);
    int maxpool2(int x, std::size_t size);
    int relu(int x);
    int sigmoid(int x);
    int exp(int x);
    int log(int x);
    int softmax(int x);      // row-wise on rank 2
    int log_softmax(int x);  // row-wise on rank 2
    int add(int a, int b);
    int sub(int a, int b);
    int mul(int a, int b);
    int div(int a, int b);
    int sum_all(int x);
    int sum_rows(int x);
    int sum_cols(int x);
    int scale(int x, double s);
    int add_const(int x, double c);
    int reshape(int x, std::vector<std::size_t> shape);
    int concat_cols(const std::vector<int>& xs);
    int gather_rows(int x, std::vector<std::size_t> idx);

    // composites
    int dense(int x, int w, int bias) { return add(matmul(x, w), bias); }
    /// max(x, c) built from relu; gradient is zero on the clamped side
    int clamp_min(int x, double c) { return add_const(relu(add_const(x, -c)), c); }

    void forward(const ParameterSet& ps);
    /// Gradients of the scalar node `loss` for every trainable parameter
    /// (zero tensors for parameters the program never touches).
    GradientMap backward(int loss, const ParameterSet& ps);

    const Tensor& value(int node) const;
    std::size_t node_count() const { return nodes_.size(); }

    /// Hash of all ReLU sign patterns and pool argmax choices from the last
    /// forward pass. Finite-difference checks use it to detect kink
    /// crossings between perturbed evaluations.
    std::uint64_t kink_signature() const { return kink_sig_; }

private:
    struct Node {
        Op op;
        int a = -1, b = -1, c = -1;
        std::vector<int> list;
        double scalar = 0.0;
        std::size_t attr = 0;
        std::vector<std::size_t> indices;
        std::string pname;
        Tensor val;
        Tensor grad;
        bool needs_grad = false;
        bool grad_live = false;
        Tensor scratch;                    // conv: im2col buffer
        std::vector<std::size_t> argmax;   // maxpool
    };

    int push(Node n);
    const Node& node(int i) const;
    Tensor& grad_of(int i);
    void check2d(int x, const char* op) const;

    std::vector<Node> nodes_;
    std::uint64_t kink_sig_ = 0;
};

struct FdReport {
    double max_rel_err = 0.0;
    std::size_t checked = 0;
    std::size_t excluded = 0;  // coordinates whose perturbation crossed a kink
};

/// Central finite differences against reverse-mode gradients for every
/// trainable coordinate. Relative error denominator is
/// max(|analytic|, |numeric|, 1e-8).
FdReport finite_difference_check(Graph& g, int loss, ParameterSet& ps, double step);

}  // namespace scbm::ad
