#include "pdg/autodiff.hpp"

#include <cmath>

namespace pdg::ad {

namespace {

std::string shape_str(const Tensor &t) {
    return "(" + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) + ")";
}

enum class Bcast { same, scalar, row, col };

Bcast classify(const std::string &op, const Tensor &a, const Tensor &b) {
    if (a.rows() == b.rows() && a.cols() == b.cols())
        return Bcast::same;
    if (b.rows() == 1 && b.cols() == 1)
        return Bcast::scalar;
    if (b.rows() == 1 && b.cols() == a.cols())
        return Bcast::row;
    if (b.cols() == 1 && b.rows() == a.rows())
        return Bcast::col;
    throw ShapeError(op, a, b, "right operand must match, be 1x1, 1xcols or rowsx1");
}

Tensor expand(const Tensor &b, Bcast kind, Eigen::Index rows, Eigen::Index cols) {
    switch (kind) {
    case Bcast::same:
        return b;
    case Bcast::scalar:
        return Tensor::Constant(rows, cols, b(0, 0));
    case Bcast::row:
        return b.replicate(rows, 1);
    case Bcast::col:
        return b.replicate(1, cols);
    }
    return b;
}

Tensor reduce(const Tensor &g, Bcast kind) {
    switch (kind) {
    case Bcast::same:
        return g;
    case Bcast::scalar:
        return Tensor::Constant(1, 1, g.sum());
    case Bcast::row:
        return g.colwise().sum();
    case Bcast::col:
        return g.rowwise().sum();
    }
    return g;
}

template <typename Fwd, typename Bwd> Var unary(const std::string &op, const Var &a, Fwd fwd, Bwd bwd) {
    Tape &t = *a.tape();
    Tensor out = fwd(a.value());
    return t.push(op, std::move(out), {a}, [a, bwd](Tape &tape, const Tensor &g) {
        tape.accumulate(a, bwd(tape.value(a.id()), g));
    });
}

void same_tape(const std::string &op, const Var &a, const Var &b) {
    if (!a.valid() || !b.valid() || a.tape() != b.tape())
        throw ShapeError(op + ": operands live on different tapes");
}

} // namespace

ShapeError::ShapeError(const std::string &op, const Tensor &a, const Tensor &b, const std::string &what)
    : std::invalid_argument(op + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b) +
                            (what.empty() ? "" : "; " + what)) {}

// ---------------------------------------------------------------------------
// ParameterStore / Adam

ParameterStore::Entry &ParameterStore::add(const std::string &name, Tensor value) {
    if (entries_.count(name))
        throw ShapeError("parameter store: duplicate parameter '" + name + "'");
    Entry e;
    e.grad = Tensor::Zero(value.rows(), value.cols());
    e.m = Tensor::Zero(value.rows(), value.cols());
    e.v = Tensor::Zero(value.rows(), value.cols());
    e.value = std::move(value);
    return entries_.emplace(name, std::move(e)).first->second;
}

ParameterStore::Entry &ParameterStore::at(const std::string &name) {
    auto it = entries_.find(name);
    if (it == entries_.end())
        throw ShapeError("parameter store: unknown parameter '" + name + "'");
    return it->second;
}

const ParameterStore::Entry &ParameterStore::at(const std::string &name) const {
    auto it = entries_.find(name);
    if (it == entries_.end())
        throw ShapeError("parameter store: unknown parameter '" + name + "'");
    return it->second;
}

std::size_t ParameterStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto &[_, e] : entries_)
        n += static_cast<std::size_t>(e.value.size());
    return n;
}

void ParameterStore::zero_grad() {
    for (auto &[_, e] : entries_)
        e.grad.setZero();
}

void adam_step(ParameterStore &store, double lr, double beta1, double beta2, double eps) {
    store.step += 1;
    const double t = static_cast<double>(store.step);
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    for (auto &[_, e] : store.entries()) {
        e.m = beta1 * e.m + (1.0 - beta1) * e.grad;
        e.v = beta2 * e.v + (1.0 - beta2) * e.grad.cwiseProduct(e.grad);
        const Tensor m_hat = e.m / bc1;
        const Tensor v_hat = e.v / bc2;
        e.value.array() -= lr * m_hat.array() / (v_hat.array().sqrt() + eps);
        e.grad.setZero();
    }
}

// ---------------------------------------------------------------------------
// Var / Tape

const Tensor &Var::value() const {
    if (!tape_)
        throw ShapeError("use of an unbound Var");
    return tape_->value(id_);
}

double Var::item() const {
    const Tensor &v = value();
    if (v.size() != 1)
        throw ShapeError("item() on a non-scalar node " + shape_str(v));
    return v(0, 0);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
    nodes_.push_back(Node{"constant", std::move(value), {}, false, false, nullptr});
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor value) {
    nodes_.push_back(Node{"leaf", std::move(value), {}, false, true, nullptr});
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(const ParameterStore &store, const std::string &name) {
    Var v = leaf(store.at(name).value);
    nodes_.back().op = "param:" + name;
    bindings_.emplace_back(v.id(), name);
    return v;
}

Var Tape::push(std::string op, Tensor value, std::vector<Var> parents, BackwardFn backward) {
    bool needs = false;
    for (const Var &p : parents) {
        if (p.tape() != this)
            throw ShapeError(op + ": parent belongs to a different tape");
        needs = needs || p.requires_grad();
    }
    nodes_.push_back(Node{std::move(op), std::move(value), {}, false, needs, needs ? std::move(backward) : nullptr});
    return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(const Var &v, const Tensor &contribution) {
    Node &n = nodes_[static_cast<std::size_t>(v.id())];
    if (!n.requires_grad)
        return;
    if (contribution.rows() != n.value.rows() || contribution.cols() != n.value.cols())
        throw ShapeError("backward(" + n.op + ")", n.value, contribution, "gradient shape differs from value shape");
    if (!n.has_grad) {
        n.grad = contribution;
        n.has_grad = true;
    } else {
        n.grad += contribution;
    }
}

Tensor Tape::grad(const Var &v) const {
    const Node &n = nodes_[static_cast<std::size_t>(v.id())];
    return n.has_grad ? n.grad : Tensor::Zero(n.value.rows(), n.value.cols());
}

void Tape::backward(const Var &loss, ParameterStore *store) {
    if (loss.tape() != this)
        throw ShapeError("backward: loss belongs to a different tape");
    if (loss.value().size() != 1)
        throw ShapeError("backward: loss must be scalar, got " + shape_str(loss.value()));
    for (Node &n : nodes_) {
        n.has_grad = false;
        n.grad.resize(0, 0);
    }
    accumulate(loss, Tensor::Ones(1, 1));
    for (int i = loss.id(); i >= 0; --i) {
        Node &n = nodes_[static_cast<std::size_t>(i)];
        if (!n.has_grad || !n.backward)
            continue;
        const Tensor g = n.grad;
        n.backward(*this, g);
    }
    if (store) {
        for (const auto &[id, name] : bindings_) {
            const Node &n = nodes_[static_cast<std::size_t>(id)];
            if (n.has_grad)
                store->at(name).grad += n.grad;
        }
    }
}

void backward(const Var &loss, ParameterStore &store) { loss.tape()->backward(loss, &store); }

// ---------------------------------------------------------------------------
// Ops

Var add(const Var &a, const Var &b) {
    same_tape("add", a, b);
    const Bcast k = classify("add", a.value(), b.value());
    Tensor out = a.value() + expand(b.value(), k, a.rows(), a.cols());
    return a.tape()->push("add", std::move(out), {a, b}, [a, b, k](Tape &t, const Tensor &g) {
        t.accumulate(a, g);
        t.accumulate(b, reduce(g, k));
    });
}

Var sub(const Var &a, const Var &b) {
    same_tape("sub", a, b);
    const Bcast k = classify("sub", a.value(), b.value());
    Tensor out = a.value() - expand(b.value(), k, a.rows(), a.cols());
    return a.tape()->push("sub", std::move(out), {a, b}, [a, b, k](Tape &t, const Tensor &g) {
        t.accumulate(a, g);
        t.accumulate(b, -reduce(g, k));
    });
}

Var mul(const Var &a, const Var &b) {
    same_tape("mul", a, b);
    const Bcast k = classify("mul", a.value(), b.value());
    const Tensor bx = expand(b.value(), k, a.rows(), a.cols());
    Tensor out = a.value().cwiseProduct(bx);
    return a.tape()->push("mul", std::move(out), {a, b}, [a, b, k](Tape &t, const Tensor &g) {
        const Tensor &av = t.value(a.id());
        const Tensor bx = expand(t.value(b.id()), k, av.rows(), av.cols());
        t.accumulate(a, g.cwiseProduct(bx));
        t.accumulate(b, reduce(g.cwiseProduct(av), k));
    });
}

Var div(const Var &a, const Var &b) {
    same_tape("div", a, b);
    const Bcast k = classify("div", a.value(), b.value());
    const Tensor bx = expand(b.value(), k, a.rows(), a.cols());
    Tensor out = a.value().cwiseQuotient(bx);
    return a.tape()->push("div", std::move(out), {a, b}, [a, b, k](Tape &t, const Tensor &g) {
        const Tensor &av = t.value(a.id());
        const Tensor bx = expand(t.value(b.id()), k, av.rows(), av.cols());
        t.accumulate(a, g.cwiseQuotient(bx));
        t.accumulate(b, reduce((-g.array() * av.array() / bx.array().square()).matrix(), k));
    });
}

Var add(const Var &a, double s) {
    return unary("add_scalar", a, [s](const Tensor &x) -> Tensor { return x.array() + s; },
                 [](const Tensor &, const Tensor &g) -> Tensor { return g; });
}

Var mul(const Var &a, double s) {
    return unary("scale", a, [s](const Tensor &x) -> Tensor { return x * s; },
                 [s](const Tensor &, const Tensor &g) -> Tensor { return g * s; });
}

Var neg(const Var &a) { return mul(a, -1.0); }

Var matmul(const Var &a, const Var &b) {
    same_tape("matmul", a, b);
    if (a.cols() != b.rows())
        throw ShapeError("matmul", a.value(), b.value(), "inner dimensions differ");
    Tensor out = a.value() * b.value();
    return a.tape()->push("matmul", std::move(out), {a, b}, [a, b](Tape &t, const Tensor &g) {
        if (a.requires_grad())
            t.accumulate(a, g * t.value(b.id()).transpose());
        if (b.requires_grad())
            t.accumulate(b, t.value(a.id()).transpose() * g);
    });
}

namespace {

/// Unary op whose backward needs the forward output; bwd(x, y, g).
template <typename Fwd, typename Bwd> Var unary_out(const std::string &op, const Var &a, Fwd fwd, Bwd bwd) {
    Tape &t = *a.tape();
    const int out_id = static_cast<int>(t.size());
    Tensor out = fwd(a.value());
    return t.push(op, std::move(out), {a}, [a, out_id, bwd](Tape &tape, const Tensor &g) {
        tape.accumulate(a, bwd(tape.value(a.id()), tape.value(out_id), g));
    });
}

} // namespace

Var tanh(const Var &a) {
    return unary_out("tanh", a, [](const Tensor &x) -> Tensor { return x.array().tanh(); },
                     [](const Tensor &, const Tensor &y, const Tensor &g) -> Tensor {
                         return (g.array() * (1.0 - y.array().square())).matrix();
                     });
}

Var sigmoid(const Var &a) {
    return unary_out("sigmoid", a,
                     [](const Tensor &x) -> Tensor { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); },
                     [](const Tensor &, const Tensor &y, const Tensor &g) -> Tensor {
                         return (g.array() * y.array() * (1.0 - y.array())).matrix();
                     });
}

Var relu(const Var &a) {
    return unary("relu", a, [](const Tensor &x) -> Tensor { return x.cwiseMax(0.0); },
                 [](const Tensor &x, const Tensor &g) -> Tensor {
                     return (x.array() > 0.0).select(g, Tensor::Zero(g.rows(), g.cols()));
                 });
}

Var exp(const Var &a) {
    return unary_out("exp", a, [](const Tensor &x) -> Tensor { return x.array().exp(); },
                     [](const Tensor &, const Tensor &y, const Tensor &g) -> Tensor { return g.cwiseProduct(y); });
}

Var sqrt(const Var &a) {
    return unary_out("sqrt", a, [](const Tensor &x) -> Tensor { return x.array().sqrt(); },
                     [](const Tensor &, const Tensor &y, const Tensor &g) -> Tensor {
                         return (0.5 * g.array() / y.array()).matrix();
                     });
}

Var square(const Var &a) {
    return unary("square", a, [](const Tensor &x) -> Tensor { return x.array().square(); },
                 [](const Tensor &x, const Tensor &g) -> Tensor { return 2.0 * g.cwiseProduct(x); });
}

Var norm2(const Var &a) {
    return unary_out("norm2", a, [](const Tensor &x) -> Tensor { return x.rowwise().norm(); },
                     [](const Tensor &x, const Tensor &y, const Tensor &g) -> Tensor {
                         Tensor out = Tensor::Zero(x.rows(), x.cols());
                         for (Eigen::Index r = 0; r < x.rows(); ++r)
                             if (y(r, 0) > 0.0)
                                 out.row(r) = x.row(r) * (g(r, 0) / y(r, 0));
                         return out;
                     });
}

Var clamp(const Var &a, double lo, double hi) {
    if (lo > hi)
        throw ShapeError("clamp: lo > hi");
    return unary("clamp", a, [lo, hi](const Tensor &x) -> Tensor { return x.cwiseMax(lo).cwiseMin(hi); },
                 [lo, hi](const Tensor &x, const Tensor &g) -> Tensor {
                     return ((x.array() > lo) && (x.array() < hi)).select(g, Tensor::Zero(g.rows(), g.cols()));
                 });
}

Var concat(const std::vector<Var> &parts) {
    if (parts.empty())
        throw ShapeError("concat: no operands");
    Tape &t = *parts.front().tape();
    const Eigen::Index rows = parts.front().rows();
    Eigen::Index cols = 0;
    for (const Var &p : parts) {
        if (p.tape() != &t)
            throw ShapeError("concat: operands live on different tapes");
        if (p.rows() != rows)
            throw ShapeError("concat", parts.front().value(), p.value(), "row counts differ");
        cols += p.cols();
    }
    Tensor out(rows, cols);
    std::vector<Eigen::Index> offsets;
    Eigen::Index c = 0;
    for (const Var &p : parts) {
        offsets.push_back(c);
        out.middleCols(c, p.cols()) = p.value();
        c += p.cols();
    }
    return t.push("concat", std::move(out), parts, [parts, offsets](Tape &tape, const Tensor &g) {
        for (std::size_t i = 0; i < parts.size(); ++i)
            tape.accumulate(parts[i], g.middleCols(offsets[i], parts[i].cols()));
    });
}

Var slice(const Var &a, Eigen::Index start, Eigen::Index count) {
    if (start < 0 || count < 0 || start + count > a.cols())
        throw ShapeError("slice: columns [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") out of range for " + shape_str(a.value()));
    return unary("slice", a, [start, count](const Tensor &x) -> Tensor { return x.middleCols(start, count); },
                 [start, count](const Tensor &x, const Tensor &g) -> Tensor {
                     Tensor out = Tensor::Zero(x.rows(), x.cols());
                     out.middleCols(start, count) = g;
                     return out;
                 });
}

Var sum(const Var &a) {
    return unary("sum", a, [](const Tensor &x) -> Tensor { return Tensor::Constant(1, 1, x.sum()); },
                 [](const Tensor &x, const Tensor &g) -> Tensor {
                     return Tensor::Constant(x.rows(), x.cols(), g(0, 0));
                 });
}

Var mean(const Var &a) {
    const double n = static_cast<double>(a.value().size());
    return unary("mean", a, [n](const Tensor &x) -> Tensor { return Tensor::Constant(1, 1, x.sum() / n); },
                 [n](const Tensor &x, const Tensor &g) -> Tensor {
                     return Tensor::Constant(x.rows(), x.cols(), g(0, 0) / n);
                 });
}

Var row_sum(const Var &a) {
    return unary("row_sum", a, [](const Tensor &x) -> Tensor { return x.rowwise().sum(); },
                 [](const Tensor &x, const Tensor &g) -> Tensor { return g.replicate(1, x.cols()); });
}

} // namespace pdg::ad
