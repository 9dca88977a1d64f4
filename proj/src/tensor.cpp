#include "mopr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "mopr/errors.hpp"

namespace mopr::nn {

namespace {

std::string dims(const Eigen::MatrixXd& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_defined(const Var& v, const char* op) {
    if (!v.defined()) throw ShapeError(std::string(op) + ": undefined operand");
}

void check_broadcast(const Var& a, const Var& b, const char* op) {
    check_defined(a, op);
    check_defined(b, op);
    const bool rows_ok = a.rows() == b.rows() || a.rows() == 1 || b.rows() == 1;
    const bool cols_ok = a.cols() == b.cols() || a.cols() == 1 || b.cols() == 1;
    if (!rows_ok || !cols_ok)
        throw ShapeError(std::string(op) + ": incompatible shapes " + dims(a.value()) +
                         " and " + dims(b.value()));
}

Eigen::MatrixXd broadcast_to(const Eigen::MatrixXd& a, Eigen::Index r, Eigen::Index c) {
    if (a.rows() == r && a.cols() == c) return a;
    if (a.rows() == 1 && a.cols() == 1)
        return Eigen::MatrixXd::Constant(r, c, a(0, 0));
    if (a.rows() == 1) return a.replicate(r, 1);
    return a.replicate(1, c);
}

Eigen::MatrixXd reduce_to(const Eigen::MatrixXd& g, Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd out = g;
    if (r == 1 && out.rows() > 1) out = out.colwise().sum().eval();
    if (c == 1 && out.cols() > 1) out = out.rowwise().sum().eval();
    return out;
}

void accum(const NodePtr& p, const Eigen::MatrixXd& g) {
    if (!p->requires_grad) return;
    p->ensure_grad();
    p->grad += reduce_to(g, p->value.rows(), p->value.cols());
}

Var make_op(Eigen::MatrixXd value, std::vector<Var> parents, std::function<void(Node&)> fn) {
    bool req = false;
    for (const auto& p : parents) req = req || (p.node && p.node->requires_grad);
    auto n = std::make_shared<Node>(std::move(value), req);
    if (req) {
        n->parents.reserve(parents.size());
        for (auto& p : parents) n->parents.push_back(std::move(p.node));
        n->backward_fn = std::move(fn);
    }
    return Var(std::move(n));
}

}  // namespace

Var constant(Eigen::MatrixXd v) { return Var(std::make_shared<Node>(std::move(v), false)); }

Var parameter(Eigen::MatrixXd v) { return Var(std::make_shared<Node>(std::move(v), true)); }

void backward(const Var& root) {
    check_defined(root, "backward");
    if (root.rows() != 1 || root.cols() != 1)
        throw ShapeError("backward: root must be 1x1, got " + dims(root.value()));
    if (!root.node->requires_grad) return;

    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    struct Frame {
        Node* n;
        std::size_t i;
    };
    std::vector<Frame> stack{{root.node.get(), 0}};
    visited.insert(root.node.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.i < f.n->parents.size()) {
            Node* p = f.n->parents[f.i++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(f.n);
            stack.pop_back();
        }
    }

    root.node->ensure_grad();
    root.node->grad(0, 0) += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn) {
            n->ensure_grad();
            n->backward_fn(*n);
        }
    }
}

Var add(const Var& a, const Var& b) {
    check_broadcast(a, b, "add");
    const auto r = std::max(a.value().rows(), b.value().rows());
    const auto c = std::max(a.value().cols(), b.value().cols());
    Eigen::MatrixXd v = broadcast_to(a.value(), r, c) + broadcast_to(b.value(), r, c);
    return make_op(std::move(v), {a, b}, [](Node& self) {
        accum(self.parents[0], self.grad);
        accum(self.parents[1], self.grad);
    });
}

Var sub(const Var& a, const Var& b) {
    check_broadcast(a, b, "sub");
    const auto r = std::max(a.value().rows(), b.value().rows());
    const auto c = std::max(a.value().cols(), b.value().cols());
    Eigen::MatrixXd v = broadcast_to(a.value(), r, c) - broadcast_to(b.value(), r, c);
    return make_op(std::move(v), {a, b}, [](Node& self) {
        accum(self.parents[0], self.grad);
        accum(self.parents[1], -self.grad);
    });
}

Var mul(const Var& a, const Var& b) {
    check_broadcast(a, b, "mul");
    const auto r = std::max(a.value().rows(), b.value().rows());
    const auto c = std::max(a.value().cols(), b.value().cols());
    Eigen::MatrixXd v =
        broadcast_to(a.value(), r, c).cwiseProduct(broadcast_to(b.value(), r, c));
    return make_op(std::move(v), {a, b}, [r, c](Node& self) {
        const auto& av = self.parents[0]->value;
        const auto& bv = self.parents[1]->value;
        accum(self.parents[0], self.grad.cwiseProduct(broadcast_to(bv, r, c)));
        accum(self.parents[1], self.grad.cwiseProduct(broadcast_to(av, r, c)));
    });
}

Var div(const Var& a, const Var& b) {
    check_broadcast(a, b, "div");
    const auto r = std::max(a.value().rows(), b.value().rows());
    const auto c = std::max(a.value().cols(), b.value().cols());
    Eigen::MatrixXd bb = broadcast_to(b.value(), r, c);
    Eigen::MatrixXd v = broadcast_to(a.value(), r, c).cwiseQuotient(bb);
    return make_op(std::move(v), {a, b}, [r, c](Node& self) {
        const Eigen::MatrixXd ab = broadcast_to(self.parents[0]->value, r, c);
        const Eigen::MatrixXd bb2 = broadcast_to(self.parents[1]->value, r, c);
        accum(self.parents[0], self.grad.cwiseQuotient(bb2));
        accum(self.parents[1],
              -self.grad.cwiseProduct(ab).cwiseQuotient(bb2.cwiseProduct(bb2)));
    });
}

Var scale(const Var& a, double c) {
    check_defined(a, "scale");
    return make_op(a.value() * c, {a},
                   [c](Node& self) { accum(self.parents[0], self.grad * c); });
}

Var add_const(const Var& a, double c) {
    check_defined(a, "add_const");
    return make_op(a.value().array() + c, {a},
                   [](Node& self) { accum(self.parents[0], self.grad); });
}

Var matmul(const Var& a, const Var& b) {
    check_defined(a, "matmul");
    check_defined(b, "matmul");
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner dims differ, " + dims(a.value()) + " * " +
                         dims(b.value()));
    return make_op(a.value() * b.value(), {a, b}, [](Node& self) {
        accum(self.parents[0], self.grad * self.parents[1]->value.transpose());
        accum(self.parents[1], self.parents[0]->value.transpose() * self.grad);
    });
}

Var transpose(const Var& a) {
    check_defined(a, "transpose");
    return make_op(a.value().transpose(), {a},
                   [](Node& self) { accum(self.parents[0], self.grad.transpose()); });
}

Var exp(const Var& a) {
    check_defined(a, "exp");
    return make_op(a.value().array().exp(), {a}, [](Node& self) {
        accum(self.parents[0], self.grad.cwiseProduct(self.value));
    });
}

Var log(const Var& a) {
    check_defined(a, "log");
    if ((a.value().array() <= 0.0).any())
        throw DegenerateInput("log: non-positive entry");
    return make_op(a.value().array().log(), {a}, [](Node& self) {
        accum(self.parents[0], self.grad.cwiseQuotient(self.parents[0]->value));
    });
}

Var sqrt(const Var& a) {
    check_defined(a, "sqrt");
    if ((a.value().array() < 0.0).any()) throw DegenerateInput("sqrt: negative entry");
    return make_op(a.value().array().sqrt(), {a}, [](Node& self) {
        accum(self.parents[0], (self.grad.array() * 0.5 / self.value.array()).matrix());
    });
}

Var tanh(const Var& a) {
    check_defined(a, "tanh");
    return make_op(a.value().array().tanh(), {a}, [](Node& self) {
        accum(self.parents[0],
              (self.grad.array() * (1.0 - self.value.array().square())).matrix());
    });
}

Var sigmoid(const Var& a) {
    check_defined(a, "sigmoid");
    Eigen::MatrixXd v = (0.5 * (a.value().array() * 0.5).tanh() + 0.5).matrix();
    return make_op(std::move(v), {a}, [](Node& self) {
        accum(self.parents[0],
              (self.grad.array() * self.value.array() * (1.0 - self.value.array())).matrix());
    });
}

Var relu(const Var& a) {
    check_defined(a, "relu");
    return make_op(a.value().cwiseMax(0.0), {a}, [](Node& self) {
        const auto mask = (self.parents[0]->value.array() > 0.0).cast<double>();
        accum(self.parents[0], (self.grad.array() * mask).matrix());
    });
}

Var softmax_rows(const Var& a) {
    check_defined(a, "softmax_rows");
    Eigen::MatrixXd v = a.value();
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        const double m = v.row(i).maxCoeff();
        v.row(i) = (v.row(i).array() - m).exp();
        v.row(i) /= v.row(i).sum();
    }
    return make_op(std::move(v), {a}, [](Node& self) {
        const Eigen::MatrixXd gy = self.grad.cwiseProduct(self.value);
        const Eigen::VectorXd t = gy.rowwise().sum();
        accum(self.parents[0],
              gy - self.value.cwiseProduct(t.replicate(1, self.value.cols())));
    });
}

Var layer_norm_rows(const Var& a, double eps) {
    check_defined(a, "layer_norm_rows");
    const auto n = a.value().cols();
    Eigen::VectorXd inv_std(a.value().rows());
    Eigen::MatrixXd v(a.value().rows(), n);
    for (Eigen::Index i = 0; i < a.value().rows(); ++i) {
        const double mu = a.value().row(i).mean();
        const double var = (a.value().row(i).array() - mu).square().mean();
        inv_std[i] = 1.0 / std::sqrt(var + eps);
        v.row(i) = (a.value().row(i).array() - mu) * inv_std[i];
    }
    return make_op(std::move(v), {a}, [inv_std](Node& self) {
        const Eigen::VectorXd g_mean = self.grad.rowwise().mean();
        const Eigen::VectorXd gy_mean = self.grad.cwiseProduct(self.value).rowwise().mean();
        Eigen::MatrixXd dx = self.grad;
        dx.colwise() -= g_mean;
        dx -= self.value.cwiseProduct(gy_mean.replicate(1, self.value.cols()));
        dx.array().colwise() *= inv_std.array();
        accum(self.parents[0], dx);
    });
}

Var sum_all(const Var& a) {
    check_defined(a, "sum_all");
    Eigen::MatrixXd v(1, 1);
    v(0, 0) = a.value().sum();
    return make_op(std::move(v), {a}, [](Node& self) {
        const auto& p = self.parents[0];
        accum(p, Eigen::MatrixXd::Constant(p->value.rows(), p->value.cols(),
                                           self.grad(0, 0)));
    });
}

Var mean_all(const Var& a) {
    check_defined(a, "mean_all");
    Eigen::MatrixXd v(1, 1);
    v(0, 0) = a.value().mean();
    return make_op(std::move(v), {a}, [](Node& self) {
        const auto& p = self.parents[0];
        const double n = static_cast<double>(p->value.size());
        accum(p, Eigen::MatrixXd::Constant(p->value.rows(), p->value.cols(),
                                           self.grad(0, 0) / n));
    });
}

Var row_sum(const Var& a) {
    check_defined(a, "row_sum");
    return make_op(a.value().rowwise().sum(), {a}, [](Node& self) {
        accum(self.parents[0], self.grad.replicate(1, self.parents[0]->value.cols()));
    });
}

Var col_sum(const Var& a) {
    check_defined(a, "col_sum");
    return make_op(a.value().colwise().sum(), {a}, [](Node& self) {
        accum(self.parents[0], self.grad.replicate(self.parents[0]->value.rows(), 1));
    });
}

Var slice_rows(const Var& a, int r0, int r1) {
    check_defined(a, "slice_rows");
    if (r0 < 0 || r1 > a.rows() || r0 >= r1)
        throw ShapeError("slice_rows: [" + std::to_string(r0) + ", " + std::to_string(r1) +
                         ") of " + dims(a.value()));
    return make_op(a.value().middleRows(r0, r1 - r0), {a}, [r0, r1](Node& self) {
        const auto& p = self.parents[0];
        if (!p->requires_grad) return;
        p->ensure_grad();
        p->grad.middleRows(r0, r1 - r0) += self.grad;
    });
}

Var slice_cols(const Var& a, int c0, int c1) {
    check_defined(a, "slice_cols");
    if (c0 < 0 || c1 > a.cols() || c0 >= c1)
        throw ShapeError("slice_cols: [" + std::to_string(c0) + ", " + std::to_string(c1) +
                         ") of " + dims(a.value()));
    return make_op(a.value().middleCols(c0, c1 - c0), {a}, [c0, c1](Node& self) {
        const auto& p = self.parents[0];
        if (!p->requires_grad) return;
        p->ensure_grad();
        p->grad.middleCols(c0, c1 - c0) += self.grad;
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: empty list");
    Eigen::Index rows = 0;
    const auto cols = parts[0].value().cols();
    for (const auto& p : parts) {
        check_defined(p, "concat_rows");
        if (p.value().cols() != cols) throw ShapeError("concat_rows: column mismatch");
        rows += p.value().rows();
    }
    Eigen::MatrixXd v(rows, cols);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        v.middleRows(at, p.value().rows()) = p.value();
        at += p.value().rows();
    }
    return make_op(std::move(v), parts, [](Node& self) {
        Eigen::Index at = 0;
        for (auto& p : self.parents) {
            const auto nr = p->value.rows();
            if (p->requires_grad) {
                p->ensure_grad();
                p->grad += self.grad.middleRows(at, nr);
            }
            at += nr;
        }
    });
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: empty list");
    Eigen::Index cols = 0;
    const auto rows = parts[0].value().rows();
    for (const auto& p : parts) {
        check_defined(p, "concat_cols");
        if (p.value().rows() != rows) throw ShapeError("concat_cols: row mismatch");
        cols += p.value().cols();
    }
    Eigen::MatrixXd v(rows, cols);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        v.middleCols(at, p.value().cols()) = p.value();
        at += p.value().cols();
    }
    return make_op(std::move(v), parts, [](Node& self) {
        Eigen::Index at = 0;
        for (auto& p : self.parents) {
            const auto nc = p->value.cols();
            if (p->requires_grad) {
                p->ensure_grad();
                p->grad += self.grad.middleCols(at, nc);
            }
            at += nc;
        }
    });
}

Var mse(const Var& a, const Var& b) {
    Var d = sub(a, b);
    return mean_all(mul(d, d));
}

Var cosine(const Var& a, const Var& b, double eps) {
    Var dot = sum_all(mul(a, b));
    Var na = sqrt(add_const(sum_all(mul(a, a)), eps));
    Var nb = sqrt(add_const(sum_all(mul(b, b)), eps));
    return div(dot, mul(na, nb));
}

}  // namespace mopr::nn
