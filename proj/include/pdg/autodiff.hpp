#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pdg::ad {

/// 2-D float64 tensor. Vectors are stored as B x n matrices (one row per batch element).
using Tensor = Eigen::MatrixXd;

/// Shape mismatch or misuse of the tape; the message names the operation and shapes.
class ShapeError : public std::invalid_argument {
  public:
    ShapeError(const std::string &op, const Tensor &a, const Tensor &b, const std::string &what = "");
    explicit ShapeError(const std::string &msg) : std::invalid_argument(msg) {}
};

/// Trainable tensors with accumulated gradients and Adam moment buffers.
class ParameterStore {
  public:
    struct Entry {
        Tensor value;
        Tensor grad;
        Tensor m; ///< first moment
        Tensor v; ///< second moment
    };

    /// Adds a parameter; grad and moments start at zero.
    Entry &add(const std::string &name, Tensor value);
    [[nodiscard]] bool contains(const std::string &name) const { return entries_.count(name) != 0; }
    [[nodiscard]] Entry &at(const std::string &name);
    [[nodiscard]] const Entry &at(const std::string &name) const;
    [[nodiscard]] const std::map<std::string, Entry> &entries() const { return entries_; }
    [[nodiscard]] std::map<std::string, Entry> &entries() { return entries_; }
    [[nodiscard]] std::size_t parameter_count() const;

    void zero_grad();
    /// Adam timestep (number of optimizer steps taken so far).
    std::uint64_t step = 0;

  private:
    std::map<std::string, Entry> entries_;
};

/// Standard Adam with bias correction; clears gradients afterwards.
void adam_step(ParameterStore &store, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

class Tape;

/// Handle to a node on a tape.
class Var {
  public:
    Var() = default;
    Var(Tape *tape, int id) : tape_(tape), id_(id) {}

    [[nodiscard]] const Tensor &value() const;
    [[nodiscard]] Eigen::Index rows() const { return value().rows(); }
    [[nodiscard]] Eigen::Index cols() const { return value().cols(); }
    /// Scalar value of a 1x1 node.
    [[nodiscard]] double item() const;
    [[nodiscard]] Tape *tape() const { return tape_; }
    [[nodiscard]] int id() const { return id_; }
    [[nodiscard]] bool valid() const { return tape_ != nullptr; }
    [[nodiscard]] bool requires_grad() const;

  private:
    Tape *tape_ = nullptr;
    int id_ = -1;
};

/// Append-only record of operations. Creation order is a topological order,
/// so backward is a reverse sweep. Single owner; not thread-safe.
class Tape {
  public:
    /// Receives the node's output gradient and accumulates into its parents.
    using BackwardFn = std::function<void(Tape &tape, const Tensor &grad_out)>;

    Tape() = default;
    Tape(const Tape &) = delete;
    Tape &operator=(const Tape &) = delete;

    /// Non-differentiable input.
    Var constant(Tensor value);
    /// Differentiable input not bound to a parameter (for gradient checks).
    Var leaf(Tensor value);
    /// Differentiable input bound to a named parameter of `store`.
    Var param(const ParameterStore &store, const std::string &name);

    /// Records an operation. `backward` is skipped if no parent requires grad.
    Var push(std::string op, Tensor value, std::vector<Var> parents, BackwardFn backward);

    void accumulate(const Var &v, const Tensor &contribution);
    [[nodiscard]] const Tensor &value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    [[nodiscard]] bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
    /// Gradient of a node after backward (zero tensor if none reached it).
    [[nodiscard]] Tensor grad(const Var &v) const;
    [[nodiscard]] std::size_t size() const { return nodes_.size(); }

    /// Reverse sweep from a scalar loss, then adds parameter-leaf gradients into `store`.
    void backward(const Var &loss, ParameterStore *store = nullptr);

  private:
    struct Node {
        std::string op;
        Tensor value;
        Tensor grad;
        bool has_grad = false;
        bool requires_grad = false;
        BackwardFn backward;
    };
    std::vector<Node> nodes_;
    std::vector<std::pair<int, std::string>> bindings_;
};

void backward(const Var &loss, ParameterStore &store);

// Elementwise binary ops. `b` may match `a`, be 1x1, a 1 x cols row or a rows x 1 column.
Var add(const Var &a, const Var &b);
Var sub(const Var &a, const Var &b);
Var mul(const Var &a, const Var &b);
Var div(const Var &a, const Var &b);
Var add(const Var &a, double s);
Var mul(const Var &a, double s);
Var neg(const Var &a);

Var matmul(const Var &a, const Var &b);
Var tanh(const Var &a);
Var sigmoid(const Var &a);
/// Subgradient 0 at 0.
Var relu(const Var &a);
Var exp(const Var &a);
Var sqrt(const Var &a);
Var square(const Var &a);
/// Row-wise Euclidean norm, rows x 1; subgradient 0 for a zero row.
Var norm2(const Var &a);
/// Gradient 1 strictly inside (lo, hi), 0 at and beyond the bounds.
Var clamp(const Var &a, double lo, double hi);
Var concat(const std::vector<Var> &parts);
/// Columns [start, start + count).
Var slice(const Var &a, Eigen::Index start, Eigen::Index count);
/// Sum of all entries, 1x1.
Var sum(const Var &a);
/// Mean of all entries, 1x1.
Var mean(const Var &a);
/// Per-row sum, rows x 1.
Var row_sum(const Var &a);

inline Var operator+(const Var &a, const Var &b) { return add(a, b); }
inline Var operator-(const Var &a, const Var &b) { return sub(a, b); }
inline Var operator*(const Var &a, const Var &b) { return mul(a, b); }
inline Var operator/(const Var &a, const Var &b) { return div(a, b); }
inline Var operator+(const Var &a, double s) { return add(a, s); }
inline Var operator-(const Var &a, double s) { return add(a, -s); }
inline Var operator*(const Var &a, double s) { return mul(a, s); }
inline Var operator*(double s, const Var &a) { return mul(a, s); }
inline Var operator-(const Var &a) { return neg(a); }

} // namespace pdg::ad
