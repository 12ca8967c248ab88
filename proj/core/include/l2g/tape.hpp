#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "l2g/matrix.hpp"
#include "l2g/params.hpp"

namespace l2g::ad {

/// Handle to a node recorded on a Tape.
struct Var {
  std::uint32_t index = std::numeric_limits<std::uint32_t>::max();
  [[nodiscard]] bool valid() const noexcept {
    return index != std::numeric_limits<std::uint32_t>::max();
  }
};

/// Reverse-mode gradient tape over dense matrices.
///
/// A tape borrows a read-only ParamStore; parameter leaves are created on first
/// use and cached, so each parameter appears on the tape at most once. After
/// backward() the tape is spent: a second backward() throws StaleTapeError and
/// a new forward pass needs a new tape (or reset()).
///
/// Non-smooth operators (max pooling, ReLU, nearest-neighbour selection) fold
/// their discrete choices into branch_signature(), which lets a finite-
/// difference check detect when a perturbation crossed a kink.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::uint32_t self)>;

  explicit Tape(const ParamStore& params) : params_(&params) {}

  Var constant(Matrix value);
  Var param(ParamId id);

  [[nodiscard]] const Matrix& value(Var v) const {
    const Node& n = nodes_.at(v.index);
    return n.external != nullptr ? *n.external : n.value;
  }
  [[nodiscard]] bool needs_grad(Var v) const { return nodes_.at(v.index).needs_grad; }
  /// Gradient accumulated at `v` by the last backward(); empty if unreached.
  [[nodiscard]] const Matrix& grad(Var v) const;

  /// Route parameter gradients into caller-owned buffers (one per ParamId,
  /// shaped like the parameter). backward() adds into them, so they should be
  /// zeroed first. The buffers must outlive the tape's use of them.
  void bind_param_gradients(std::span<Matrix> buffers);

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be 1x1.
  void backward(Var loss);

  /// Gradient per ParamId, zero-filled for parameters the loss never reached.
  [[nodiscard]] std::vector<Matrix> param_gradients() const;
  /// Same as param_gradients() but moves the buffers out of the tape.
  std::vector<Matrix> take_param_gradients();

  [[nodiscard]] std::uint64_t branch_signature() const noexcept { return signature_; }
  void note_branch(std::uint64_t value) noexcept;

  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] const ParamStore& params() const noexcept { return *params_; }

  void reset();

  // Operator-construction interface.
  Var record(Matrix value, std::span<const Var> parents, BackwardFn fn);
  /// Gradient buffer of a node, zero-allocated on first touch.
  Matrix& grad_buffer(std::uint32_t index);

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;  // parameter leaves read the store directly
    Matrix grad;
    bool needs_grad = false;
    std::int64_t param = -1;
    BackwardFn backward;
  };

  const ParamStore* params_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> param_nodes_;  // ParamId -> node index (or max)
  std::span<Matrix> bound_grads_;
  std::uint64_t signature_ = 0xcbf29ce484222325ULL;
  bool spent_ = false;
};

// ---------------------------------------------------------------------------
// Operators. Shapes are checked eagerly and mismatches raise ShapeError.

Var matmul(Tape& t, Var a, Var b);
/// a * b^T
Var matmul_nt(Tape& t, Var a, Var b);
/// a^T * b
Var matmul_tn(Tape& t, Var a, Var b);

/// x * w (+ b broadcast over rows). `b` may be an invalid Var.
Var affine(Tape& t, Var x, Var w, Var b = {});

Var add(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
/// 1 - a, elementwise
Var one_minus(Tape& t, Var a);

Var relu(Tape& t, Var x);
Var sigmoid(Tape& t, Var x);
Var tanh(Tape& t, Var x);

/// Softmax down each column: out(i,j) = exp(s(i,j)) / sum_i exp(s(i,j)).
Var softmax_columns(Tape& t, Var s);

/// Column-wise max over all rows -> 1xC. Ties route the gradient to the lowest row.
Var maxpool_rows(Tape& t, Var x);
/// Column-wise max within consecutive row segments -> (#segments)xC.
Var segment_maxpool(Tape& t, Var x, std::span<const std::size_t> segment_rows);

Var concat_cols(Tape& t, std::span<const Var> parts);
Var concat_rows(Tape& t, std::span<const Var> parts);
Var slice_rows(Tape& t, Var x, std::size_t begin, std::size_t count);
Var slice_cols(Tape& t, Var x, std::size_t begin, std::size_t count);
Var reshape(Tape& t, Var x, std::size_t rows, std::size_t cols);

/// Sum of all entries -> 1x1.
Var sum(Tape& t, Var x);

/// Chamfer distance (unsquared norms) between predicted points `pred` (Kx3)
/// and a constant target point set -> 1x1.
Var chamfer(Tape& t, Var pred, const Matrix& target);
/// Row r of `pred` holds K_r points flattened xyz-major; compared against
/// targets[r]. Returns Rx1 of per-row Chamfer distances.
Var chamfer_rows(Tape& t, Var pred, std::span<const Matrix> targets);

}  // namespace l2g::ad
