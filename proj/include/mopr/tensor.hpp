#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

namespace mopr::nn {

// Reverse-mode autodiff over 2D double matrices. Graphs are built by the op
// functions below; backward() runs a topological sweep from a scalar root.
class Node {
public:
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;  // empty until touched by backward
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    explicit Node(Eigen::MatrixXd v, bool req = false)
        : value(std::move(v)), requires_grad(req) {}

    int rows() const { return static_cast<int>(value.rows()); }
    int cols() const { return static_cast<int>(value.cols()); }
    void ensure_grad() {
        if (grad.size() == 0) grad = Eigen::MatrixXd::Zero(value.rows(), value.cols());
    }
};

using NodePtr = std::shared_ptr<Node>;

struct Var {
    NodePtr node;

    Var() = default;
    Var(NodePtr n) : node(std::move(n)) {}  // NOLINT: implicit by design

    const Eigen::MatrixXd& value() const { return node->value; }
    const Eigen::MatrixXd& grad() const { return node->grad; }
    int rows() const { return node->rows(); }
    int cols() const { return node->cols(); }
    bool defined() const { return node != nullptr; }
};

Var constant(Eigen::MatrixXd v);
Var parameter(Eigen::MatrixXd v);  // leaf with requires_grad

// Seeds the 1x1 root with grad 1 and accumulates into every reachable
// parameter. Throws ShapeError if root is not scalar.
void backward(const Var& root);

// elementwise with numpy-style broadcast over rows/cols of extent 1
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }

Var scale(const Var& a, double c);
Var add_const(const Var& a, double c);

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

Var exp(const Var& a);
Var log(const Var& a);  // throws DegenerateInput on non-positive entries
Var sqrt(const Var& a);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var relu(const Var& a);

Var softmax_rows(const Var& a);
// per-row standardization (x - mean) / sqrt(var + eps); affine handled by callers
Var layer_norm_rows(const Var& a, double eps = 1e-5);

Var sum_all(const Var& a);   // 1x1
Var mean_all(const Var& a);  // 1x1
Var row_sum(const Var& a);   // m x 1
Var col_sum(const Var& a);   // 1 x n

Var slice_rows(const Var& a, int r0, int r1);
Var slice_cols(const Var& a, int c0, int c1);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);

// composites
Var mse(const Var& a, const Var& b);
Var cosine(const Var& a, const Var& b, double eps = 1e-24);  // flattened dot / norms

}  // namespace mopr::nn
