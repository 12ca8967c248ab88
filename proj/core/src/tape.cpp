#include "l2g/tape.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "l2g/errors.hpp"

namespace l2g::ad {
namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

[[noreturn]] void shape_fail(const char* op, const Matrix& a, const Matrix& b) {
  std::ostringstream os;
  os << op << ": incompatible shapes " << a.rows() << "x" << a.cols() << " and " << b.rows()
     << "x" << b.cols();
  throw ShapeError(os.str());
}

template <class F>
Var unary(Tape& t, Var x, Matrix out, F&& local_grad) {
  const Var parents[] = {x};
  return t.record(std::move(out), parents,
                  [x, local_grad](Tape& tape, std::uint32_t self) {
                    if (!tape.needs_grad(x)) return;
                    const Matrix& g = tape.grad(Var{self});
                    const Matrix& in = tape.value(x);
                    const Matrix& out = tape.value(Var{self});
                    Matrix& dx = tape.grad_buffer(x.index);
                    for (std::size_t i = 0; i < g.size(); ++i)
                      dx.values()[i] += g.values()[i] * local_grad(in.values()[i], out.values()[i]);
                  });
}

}  // namespace

// ---------------------------------------------------------------------------
// Tape

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{std::uint32_t(nodes_.size() - 1)};
}

Var Tape::param(ParamId id) {
  if (id >= params_->size()) throw InvalidInput("Tape::param: unknown parameter id");
  if (param_nodes_.size() < params_->size()) param_nodes_.resize(params_->size(), kNone);
  if (param_nodes_[id] != kNone) return Var{param_nodes_[id]};
  Node n;
  n.external = &(*params_)[id].value;
  n.needs_grad = true;
  n.param = id;
  nodes_.push_back(std::move(n));
  param_nodes_[id] = std::uint32_t(nodes_.size() - 1);
  return Var{param_nodes_[id]};
}

Var Tape::record(Matrix value, std::span<const Var> parents, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (auto p : parents) {
    if (p.valid() && nodes_.at(p.index).needs_grad) n.needs_grad = true;
  }
  if (n.needs_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{std::uint32_t(nodes_.size() - 1)};
}

const Matrix& Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.index);
  if (n.param >= 0 && !bound_grads_.empty()) return bound_grads_[std::size_t(n.param)];
  return n.grad;
}

void Tape::bind_param_gradients(std::span<Matrix> buffers) {
  if (buffers.size() != params_->size())
    throw ShapeError("bind_param_gradients: one buffer per parameter is required");
  for (std::size_t id = 0; id < buffers.size(); ++id) {
    const Matrix& v = (*params_)[ParamId(id)].value;
    if (buffers[id].rows() != v.rows() || buffers[id].cols() != v.cols())
      throw ShapeError("bind_param_gradients: buffer shape differs from '" + (*params_)[ParamId(id)].name + "'");
  }
  bound_grads_ = buffers;
}

Matrix& Tape::grad_buffer(std::uint32_t index) {
  Node& n = nodes_.at(index);
  if (n.param >= 0 && !bound_grads_.empty()) return bound_grads_[std::size_t(n.param)];
  if (n.grad.empty()) {
    const Matrix& v = value(Var{index});
    if (!v.empty()) n.grad = Matrix(v.rows(), v.cols());
  }
  return n.grad;
}

void Tape::note_branch(std::uint64_t value) noexcept {
  signature_ ^= value + 0x9E3779B97F4A7C15ULL + (signature_ << 6) + (signature_ >> 2);
}

void Tape::backward(Var loss) {
  if (spent_) throw StaleTapeError("backward() called twice on the same forward pass");
  const Matrix& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) throw ShapeError("backward: loss must be 1x1");
  spent_ = true;
  grad_buffer(loss.index)(0, 0) += 1.0;
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, std::uint32_t(i));
  }
}

std::vector<Matrix> Tape::param_gradients() const {
  if (!bound_grads_.empty()) return {bound_grads_.begin(), bound_grads_.end()};
  std::vector<Matrix> out = params_->zeros_like();
  for (std::size_t id = 0; id < param_nodes_.size(); ++id) {
    if (param_nodes_[id] == kNone) continue;
    const Node& n = nodes_[param_nodes_[id]];
    if (!n.grad.empty()) out[id] = n.grad;
  }
  return out;
}

std::vector<Matrix> Tape::take_param_gradients() {
  if (!bound_grads_.empty()) return param_gradients();
  std::vector<Matrix> out(params_->size());
  for (std::size_t id = 0; id < params_->size(); ++id) {
    const std::uint32_t node = id < param_nodes_.size() ? param_nodes_[id] : kNone;
    if (node != kNone && !nodes_[node].grad.empty()) {
      out[id] = std::move(nodes_[node].grad);
    } else {
      const Matrix& v = (*params_)[ParamId(id)].value;
      out[id] = Matrix(v.rows(), v.cols());
    }
  }
  return out;
}

void Tape::reset() {
  nodes_.clear();
  param_nodes_.clear();
  bound_grads_ = {};
  signature_ = 0xcbf29ce484222325ULL;
  spent_ = false;
}

// ---------------------------------------------------------------------------
// Linear algebra

Var matmul(Tape& t, Var a, Var b) {
  Matrix out = l2g::matmul(t.value(a), t.value(b));
  const Var parents[] = {a, b};
  return t.record(std::move(out), parents, [a, b](Tape& tape, std::uint32_t self) {
    const Matrix& g = tape.grad(Var{self});
    if (tape.needs_grad(a)) matmul_nt_acc(g, tape.value(b), tape.grad_buffer(a.index));
    if (tape.needs_grad(b)) matmul_tn_acc(tape.value(a), g, tape.grad_buffer(b.index));
  });
}

Var matmul_nt(Tape& t, Var a, Var b) {
  Matrix out = l2g::matmul_nt(t.value(a), t.value(b));
  const Var parents[] = {a, b};
  return t.record(std::move(out), parents, [a, b](Tape& tape, std::uint32_t self) {
    const Matrix& g = tape.grad(Var{self});
    if (tape.needs_grad(a)) matmul_acc(g, tape.value(b), tape.grad_buffer(a.index));
    if (tape.needs_grad(b)) matmul_tn_acc(g, tape.value(a), tape.grad_buffer(b.index));
  });
}

Var matmul_tn(Tape& t, Var a, Var b) {
  Matrix out = l2g::matmul_tn(t.value(a), t.value(b));
  const Var parents[] = {a, b};
  return t.record(std::move(out), parents, [a, b](Tape& tape, std::uint32_t self) {
    const Matrix& g = tape.grad(Var{self});
    if (tape.needs_grad(a)) matmul_nt_acc(tape.value(b), g, tape.grad_buffer(a.index));
    if (tape.needs_grad(b)) matmul_acc(tape.value(a), g, tape.grad_buffer(b.index));
  });
}

Var affine(Tape& t, Var x, Var w, Var b) {
  Matrix out = l2g::matmul(t.value(x), t.value(w));
  if (b.valid()) {
    const Matrix& bias = t.value(b);
    if (bias.rows() != 1 || bias.cols() != out.cols()) shape_fail("affine bias", out, bias);
    for (std::size_t r = 0; r < out.rows(); ++r) {
      auto row = out.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias(0, c);
    }
  }
  const Var parents[] = {x, w, b};
  return t.record(std::move(out), parents, [x, w, b](Tape& tape, std::uint32_t self) {
    const Matrix& g = tape.grad(Var{self});
    if (tape.needs_grad(x)) matmul_nt_acc(g, tape.value(w), tape.grad_buffer(x.index));
    if (tape.needs_grad(w)) matmul_tn_acc(tape.value(x), g, tape.grad_buffer(w.index));
    if (b.valid() && tape.needs_grad(b)) {
      Matrix& db = tape.grad_buffer(b.index);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) db(0, c) += g(r, c);
    }
  });
}

// ---------------------------------------------------------------------------
// Elementwise

Var add(Tape& t, Var a, Var b) {
  Matrix out = t.value(a);
  add_inplace(out, t.value(b));
  const Var parents[] = {a, b};
  return t.record(std::move(out), parents, [a, b](Tape& tape, std::uint32_t self) {
    const Matrix& g = tape.grad(Var{self});
    if (tape.needs_grad(a)) add_inplace(tape.grad_buffer(a.index), g);
    if (tape.needs_grad(b)) add_inplace(tape.grad_buffer(b.index), g);
  });
}

Var mul(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) shape_fail("mul", av, bv);
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = av.values()[i] * bv.values()[i];
  const Var parents[] = {a, b};
  return t.record(std::move(out), parents, [a, b](Tape& tape, std::uint32_t self) {
    const Matrix& g = tape.grad(Var{self});
    if (tape.needs_grad(a)) {
      Matrix& da = tape.grad_buffer(a.index);
      const Matrix& bv = tape.value(b);
      for (std::size_t i = 0; i < g.size(); ++i) da.values()[i] += g.values()[i] * bv.values()[i];
    }
    if (tape.needs_grad(b)) {
      Matrix& db = tape.grad_buffer(b.index);
      const Matrix& av = tape.value(a);
      for (std::size_t i = 0; i < g.size(); ++i) db.values()[i] += g.values()[i] * av.values()[i];
    }
  });
}

Var scale(Tape& t, Var a, double s) {
  Matrix out = t.value(a);
  for (auto& v : out.values()) v *= s;
  return unary(t, a, std::move(out), [s](double, double) { return s; });
}

Var one_minus(Tape& t, Var a) {
  Matrix out = t.value(a);
  for (auto& v : out.values()) v = 1.0 - v;
  return unary(t, a, std::move(out), [](double, double) { return -1.0; });
}

Var relu(Tape& t, Var x) {
  Matrix out = t.value(x);
  std::uint64_t mask_hash = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    double& v = out.values()[i];
    if (v > 0.0) {
      mask_hash = mask_hash * 31 + i + 1;
    } else {
      v = 0.0;
    }
  }
  t.note_branch(mask_hash);
  return unary(t, x, std::move(out), [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Tape& t, Var x) {
  Matrix out = t.value(x);
  for (auto& v : out.values()) v = 1.0 / (1.0 + std::exp(-v));
  return unary(t, x, std::move(out), [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Tape& t, Var x) {
  Matrix out = t.value(x);
  for (auto& v : out.values()) v = std::tanh(v);
  return unary(t, x, std::move(out), [](double, double y) { return 1.0 - y * y; });
}

// ---------------------------------------------------------------------------
// Softmax / pooling

Var softmax_columns(Tape& t, Var s) {
  const Matrix& in = t.value(s);
  Matrix out(in.rows(), in.cols());
  for (std::size_t j = 0; j < in.cols(); ++j) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < in.rows(); ++i) peak = std::max(peak, in(i, j));
    double denom = 0.0;
    for (std::size_t i = 0; i < in.rows(); ++i) {
      out(i, j) = std::exp(in(i, j) - peak);
      denom += out(i, j);
    }
    for (std::size_t i = 0; i < in.rows(); ++i) out(i, j) /= denom;
  }
  const Var parents[] = {s};
  return t.record(std::move(out), parents, [s](Tape& tape, std::uint32_t self) {
    const Matrix& g = tape.grad(Var{self});
    const Matrix& y = tape.value(Var{self});
    Matrix& ds = tape.grad_buffer(s.index);
    for (std::size_t j = 0; j < y.cols(); ++j) {
      double dot = 0.0;
      for (std::size_t i = 0; i < y.rows(); ++i) dot += y(i, j) * g(i, j);
      for (std::size_t i = 0; i < y.rows(); ++i) ds(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
}

Var maxpool_rows(Tape& t, Var x) {
  const std::size_t rows = t.value(x).rows();
  if (rows == 0) throw ShapeError("maxpool_rows: empty feature map");
  const std::size_t seg[] = {rows};
  return segment_maxpool(t, x, seg);
}

Var segment_maxpool(Tape& t, Var x, std::span<const std::size_t> segment_rows) {
  const Matrix& in = t.value(x);
  std::size_t total = 0;
  for (auto r : segment_rows) {
    if (r == 0) throw ShapeError("segment_maxpool: empty segment");
    total += r;
  }
  if (total != in.rows()) throw ShapeError("segment_maxpool: segments do not cover the rows");

  const std::size_t cols = in.cols();
  Matrix out(segment_rows.size(), cols);
  std::vector<std::uint32_t> argmax(segment_rows.size() * cols);
  std::uint64_t hash = 0;
  std::size_t start = 0;
  for (std::size_t s = 0; s < segment_rows.size(); ++s) {
    for (std::size_t c = 0; c < cols; ++c) {
      std::size_t best = start;
      for (std::size_t r = start + 1; r < start + segment_rows[s]; ++r) {
        if (in(r, c) > in(best, c)) best = r;
      }
      out(s, c) = in(best, c);
      argmax[s * cols + c] = std::uint32_t(best);
      hash = hash * 1000003ULL + best;
    }
    start += segment_rows[s];
  }
  t.note_branch(hash);
  const Var parents[] = {x};
  return t.record(std::move(out), parents,
                  [x, cols, argmax = std::move(argmax)](Tape& tape, std::uint32_t self) {
                    const Matrix& g = tape.grad(Var{self});
                    Matrix& dx = tape.grad_buffer(x.index);
                    for (std::size_t s = 0; s < g.rows(); ++s)
                      for (std::size_t c = 0; c < cols; ++c) dx(argmax[s * cols + c], c) += g(s, c);
                  });
}

// ---------------------------------------------------------------------------
// Structural

Var concat_cols(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: nothing to concatenate");
  const std::size_t rows = t.value(parts[0]).rows();
  std::size_t cols = 0;
  for (auto p : parts) {
    if (t.value(p).rows() != rows) shape_fail("concat_cols", t.value(parts[0]), t.value(p));
    cols += t.value(p).cols();
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (auto p : parts) {
    const Matrix& v = t.value(p);
    for (std::size_t r = 0; r < rows; ++r)
      std::copy(v.row(r).begin(), v.row(r).end(), out.row(r).begin() + std::ptrdiff_t(offset));
    offset += v.cols();
  }
  std::vector<Var> owned(parts.begin(), parts.end());
  return t.record(std::move(out), parts, [owned](Tape& tape, std::uint32_t self) {
    const Matrix& g = tape.grad(Var{self});
    std::size_t offset = 0;
    for (auto p : owned) {
      const std::size_t w = tape.value(p).cols();
      if (tape.needs_grad(p)) {
        Matrix& dp = tape.grad_buffer(p.index);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < w; ++c) dp(r, c) += g(r, offset + c);
      }
      offset += w;
    }
  });
}

Var concat_rows(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: nothing to concatenate");
  const std::size_t cols = t.value(parts[0]).cols();
  std::size_t rows = 0;
  for (auto p : parts) {
    if (t.value(p).cols() != cols) shape_fail("concat_rows", t.value(parts[0]), t.value(p));
    rows += t.value(p).rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (auto p : parts) {
    const auto v = t.value(p).values();
    data.insert(data.end(), v.begin(), v.end());
  }
  std::vector<Var> owned(parts.begin(), parts.end());
  return t.record(Matrix(rows, cols, std::move(data)), parts,
                  [owned](Tape& tape, std::uint32_t self) {
                    const Matrix& g = tape.grad(Var{self});
                    std::size_t offset = 0;
                    for (auto p : owned) {
                      const std::size_t n = tape.value(p).size();
                      if (tape.needs_grad(p)) {
                        Matrix& dp = tape.grad_buffer(p.index);
                        for (std::size_t i = 0; i < n; ++i) dp.values()[i] += g.values()[offset + i];
                      }
                      offset += n;
                    }
                  });
}

Var slice_rows(Tape& t, Var x, std::size_t begin, std::size_t count) {
  const Matrix& in = t.value(x);
  if (begin + count > in.rows()) throw ShapeError("slice_rows: range out of bounds");
  const auto first = in.values().begin() + std::ptrdiff_t(begin * in.cols());
  Matrix out(count, in.cols(),
             std::vector<double>(first, first + std::ptrdiff_t(count * in.cols())));
  const Var parents[] = {x};
  return t.record(std::move(out), parents, [x, begin](Tape& tape, std::uint32_t self) {
    const Matrix& g = tape.grad(Var{self});
    Matrix& dx = tape.grad_buffer(x.index);
    const std::size_t offset = begin * dx.cols();
    for (std::size_t i = 0; i < g.size(); ++i) dx.values()[offset + i] += g.values()[i];
  });
}

Var slice_cols(Tape& t, Var x, std::size_t begin, std::size_t count) {
  const Matrix& in = t.value(x);
  if (begin + count > in.cols()) throw ShapeError("slice_cols: range out of bounds");
  Matrix out(in.rows(), count);
  for (std::size_t r = 0; r < in.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = in(r, begin + c);
  const Var parents[] = {x};
  return t.record(std::move(out), parents, [x, begin](Tape& tape, std::uint32_t self) {
    const Matrix& g = tape.grad(Var{self});
    Matrix& dx = tape.grad_buffer(x.index);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) dx(r, begin + c) += g(r, c);
  });
}

Var reshape(Tape& t, Var x, std::size_t rows, std::size_t cols) {
  Matrix out = t.value(x).reshaped(rows, cols);
  const Var parents[] = {x};
  return t.record(std::move(out), parents, [x](Tape& tape, std::uint32_t self) {
    const Matrix& g = tape.grad(Var{self});
    Matrix& dx = tape.grad_buffer(x.index);
    for (std::size_t i = 0; i < g.size(); ++i) dx.values()[i] += g.values()[i];
  });
}

Var sum(Tape& t, Var x) {
  double total = 0.0;
  for (double v : t.value(x).values()) total += v;
  const Var parents[] = {x};
  return t.record(Matrix(1, 1, total), parents, [x](Tape& tape, std::uint32_t self) {
    const double g = tape.grad(Var{self})(0, 0);
    for (auto& v : tape.grad_buffer(x.index).values()) v += g;
  });
}

// ---------------------------------------------------------------------------
// Chamfer

namespace {

struct ChamferPlan {
  // For every target point: nearest predicted index and distance; and vice versa.
  std::vector<std::uint32_t> target_nn;
  std::vector<double> target_dist;
  std::vector<std::uint32_t> pred_nn;
  std::vector<double> pred_dist;
};

// pred points live at pred[3*i .. 3*i+2]
double chamfer_plan(const double* pred, std::size_t n_pred, const Matrix& target,
                    ChamferPlan& plan, std::uint64_t& hash) {
  const std::size_t n_target = target.rows();
  plan.target_nn.assign(n_target, 0);
  plan.target_dist.assign(n_target, std::numeric_limits<double>::infinity());
  plan.pred_nn.assign(n_pred, 0);
  plan.pred_dist.assign(n_pred, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n_target; ++i) {
    const double* q = target.data() + 3 * i;
    for (std::size_t j = 0; j < n_pred; ++j) {
      const double* p = pred + 3 * j;
      const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
      const double d2 = dx * dx + dy * dy + dz * dz;
      if (d2 < plan.target_dist[i]) {
        plan.target_dist[i] = d2;
        plan.target_nn[i] = std::uint32_t(j);
      }
      if (d2 < plan.pred_dist[j]) {
        plan.pred_dist[j] = d2;
        plan.pred_nn[j] = std::uint32_t(i);
      }
    }
  }
  double forward = 0.0, backward = 0.0;
  for (std::size_t i = 0; i < n_target; ++i) {
    plan.target_dist[i] = std::sqrt(plan.target_dist[i]);
    forward += plan.target_dist[i];
    hash = hash * 1000003ULL + plan.target_nn[i];
  }
  for (std::size_t j = 0; j < n_pred; ++j) {
    plan.pred_dist[j] = std::sqrt(plan.pred_dist[j]);
    backward += plan.pred_dist[j];
    hash = hash * 1000003ULL + plan.pred_nn[j];
  }
  return forward / double(n_target) + backward / double(n_pred);
}

void chamfer_grad(const double* pred, std::size_t n_pred, const Matrix& target,
                  const ChamferPlan& plan, double g, double* dpred) {
  const std::size_t n_target = target.rows();
  const double wf = g / double(n_target);
  const double wb = g / double(n_pred);
  for (std::size_t i = 0; i < n_target; ++i) {
    const double d = plan.target_dist[i];
    if (d == 0.0) continue;
    const std::size_t j = plan.target_nn[i];
    for (int a = 0; a < 3; ++a) dpred[3 * j + a] += wf * (pred[3 * j + a] - target(i, a)) / d;
  }
  for (std::size_t j = 0; j < n_pred; ++j) {
    const double d = plan.pred_dist[j];
    if (d == 0.0) continue;
    const std::size_t i = plan.pred_nn[j];
    for (int a = 0; a < 3; ++a) dpred[3 * j + a] += wb * (pred[3 * j + a] - target(i, a)) / d;
  }
}

}  // namespace

Var chamfer(Tape& t, Var pred, const Matrix& target) {
  const Matrix& p = t.value(pred);
  if (p.cols() != 3 || target.cols() != 3) shape_fail("chamfer", p, target);
  if (p.rows() == 0 || target.rows() == 0) throw InvalidInput("chamfer: empty point set");
  ChamferPlan plan;
  std::uint64_t hash = 0;
  const double value = chamfer_plan(p.data(), p.rows(), target, plan, hash);
  t.note_branch(hash);
  const Var parents[] = {pred};
  return t.record(Matrix(1, 1, value), parents,
                  [pred, target, plan = std::move(plan)](Tape& tape, std::uint32_t self) {
                    const double g = tape.grad(Var{self})(0, 0);
                    const Matrix& p = tape.value(pred);
                    chamfer_grad(p.data(), p.rows(), target, plan, g,
                                 tape.grad_buffer(pred.index).data());
                  });
}

Var chamfer_rows(Tape& t, Var pred, std::span<const Matrix> targets) {
  const Matrix& p = t.value(pred);
  if (p.rows() != targets.size()) throw ShapeError("chamfer_rows: one target per row required");
  if (p.cols() % 3 != 0 || p.cols() == 0) throw ShapeError("chamfer_rows: row width not 3K");
  const std::size_t n_pred = p.cols() / 3;
  std::vector<ChamferPlan> plans(targets.size());
  Matrix out(targets.size(), 1);
  std::uint64_t hash = 0;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    if (targets[r].cols() != 3 || targets[r].rows() == 0)
      throw ShapeError("chamfer_rows: target must be a non-empty Kx3 set");
    out(r, 0) = chamfer_plan(p.row(r).data(), n_pred, targets[r], plans[r], hash);
  }
  t.note_branch(hash);
  std::vector<Matrix> owned(targets.begin(), targets.end());
  const Var parents[] = {pred};
  return t.record(std::move(out), parents,
                  [pred, n_pred, owned = std::move(owned), plans = std::move(plans)](
                      Tape& tape, std::uint32_t self) {
                    const Matrix& g = tape.grad(Var{self});
                    const Matrix& p = tape.value(pred);
                    Matrix& dp = tape.grad_buffer(pred.index);
                    for (std::size_t r = 0; r < owned.size(); ++r) {
                      chamfer_grad(p.row(r).data(), n_pred, owned[r], plans[r], g(r, 0),
                                   dp.row(r).data());
                    }
                  });
}

}  // namespace l2g::ad
