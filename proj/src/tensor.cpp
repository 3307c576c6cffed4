// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "csg/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "csg/error.hpp"

namespace csg {

namespace {

thread_local Tape* g_current_tape = nullptr;

int64_t shape_size(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

void validate_shape(const Shape& s) {
  for (int d : s) check(d > 0, "tensor: non-positive dimension in shape " + shape_str(s));
}

double round_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

DType promote(DType a, DType b) {
  return (a == DType::F32 && b == DType::F32) ? DType::F32 : DType::F64;
}

}  // namespace

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

// --- Tensor -----------------------------------------------------------------

Tensor make_tensor(Shape shape, std::vector<double> values, DType dt) {
  validate_shape(shape);
  check(static_cast<int64_t>(values.size()) == shape_size(shape),
        "tensor: data length " + std::to_string(values.size()) + " does not match shape " +
            shape_str(shape));
  if (dt == DType::F32) {
    for (double& v : values) v = round_f32(v);
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::make_shared<const std::vector<double>>(std::move(values));
  t.dtype_ = dt;
  return t;
}

Tensor with_node(const Tensor& t, int node) {
  Tensor out = t;
  out.node_ = node;
  return out;
}

Tensor with_shape(const Tensor& t, Shape s) {
  Tensor out = t;
  out.shape_ = std::move(s);
  return out;
}

Tensor Tensor::zeros(Shape shape, DType dt) {
  int64_t n = shape_size(shape);
  return make_tensor(std::move(shape), std::vector<double>(static_cast<size_t>(n), 0.0), dt);
}

Tensor Tensor::full(Shape shape, double value, DType dt) {
  int64_t n = shape_size(shape);
  return make_tensor(std::move(shape), std::vector<double>(static_cast<size_t>(n), value), dt);
}

Tensor Tensor::scalar(double value, DType dt) { return make_tensor({}, {value}, dt); }

Tensor Tensor::from_data(Shape shape, std::vector<double> values, DType dt) {
  return make_tensor(std::move(shape), std::move(values), dt);
}

int64_t Tensor::size() const {
  check(defined(), "tensor: undefined");
  return static_cast<int64_t>(data_->size());
}

double Tensor::value() const {
  check(defined() && size() == 1, "tensor: value() requires a scalar, got shape " + shape_str(shape_));
  return (*data_)[0];
}

Tensor Tensor::detached() const {
  Tensor t = *this;
  t.node_ = -1;
  return t;
}

Tensor Tensor::to(DType dt) const {
  if (dt == dtype_) return *this;
  return make_tensor(shape_, *data_, dt);
}

bool all_finite(const Tensor& x) {
  for (double v : x.data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// --- Tape -------------------------------------------------------------------

Tape::~Tape() = default;

Tape* Tape::current() { return g_current_tape; }

Tape::Scope::Scope(Tape& t) : prev_(g_current_tape) { g_current_tape = &t; }
Tape::Scope::~Scope() { g_current_tape = prev_; }

int Tape::record(int64_t out_size, BackwardFn fn) {
  nodes_.push_back(Node{out_size, std::move(fn)});
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::watch(const Tensor& t) {
  check(t.defined(), "watch: undefined tensor");
  check(!t.tracked(), "watch: tensor is already tracked");
  int id = record(t.size(), BackwardFn{});
  leaves_.push_back(Leaf{id, t.shape()});
  return with_node(t, id);
}

std::vector<double>& Tape::grad_buf(int node) {
  auto& buf = bufs_[static_cast<size_t>(node)];
  if (buf.empty()) buf.assign(static_cast<size_t>(nodes_[static_cast<size_t>(node)].out_size), 0.0);
  return buf;
}

GradMap Tape::backward(const Tensor& root) {
  check(root.defined(), "backward: undefined root");
  check(root.size() == 1, "backward: root must be scalar, got shape " + shape_str(root.shape()));
  check(root.tracked() && root.node() < static_cast<int>(nodes_.size()),
        "backward: root is not tracked on this tape");

  bufs_.assign(nodes_.size(), {});
  grad_buf(root.node())[0] = 1.0;
  for (int i = root.node(); i >= 0; --i) {
    auto& node = nodes_[static_cast<size_t>(i)];
    if (bufs_[static_cast<size_t>(i)].empty() || !node.backward) continue;
    node.backward(bufs_[static_cast<size_t>(i)], *this);
  }

  GradMap out;
  for (const Leaf& leaf : leaves_) {
    auto& buf = bufs_[static_cast<size_t>(leaf.node)];
    Tensor g = buf.empty() ? Tensor::zeros(leaf.shape)
                           : make_tensor(leaf.shape, std::move(buf), DType::F64);
    out.grads_.emplace_back(leaf.node, std::move(g));
  }
  std::sort(out.grads_.begin(), out.grads_.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  bufs_.clear();
  return out;
}

void Tape::clear() {
  nodes_.clear();
  leaves_.clear();
  bufs_.clear();
}

const Tensor& GradMap::grad(int node_id) const {
  for (const auto& [id, g] : grads_) {
    if (id == node_id) return g;
  }
  fail("grad: node " + std::to_string(node_id) + " is not a watched leaf");
}

const Tensor& GradMap::grad(const Tensor& leaf) const {
  check(leaf.tracked(), "grad: tensor is not tracked");
  return grad(leaf.node());
}

bool GradMap::contains(int node_id) const {
  for (const auto& [id, g] : grads_) {
    if (id == node_id) return true;
  }
  return false;
}

// --- op helpers --------------------------------------------------------------

namespace {

using Data = std::shared_ptr<const std::vector<double>>;

Data payload(const Tensor& t) {
  return std::make_shared<const std::vector<double>>(t.data());
}

// Records a node if tracking is active and any input is tracked.
// `fn(gout, tape)` must accumulate into tape.grad_buf(parent) for each
// tracked parent it captured.
Tensor finish(Tensor out, bool any_tracked, Tape::BackwardFn fn) {
  Tape* tp = Tape::current();
  if (tp && any_tracked) {
    int id = tp->record(out.size(), std::move(fn));
    return with_node(out, id);
  }
  return out;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
}

void check_rank3(const char* op, const Tensor& x) {
  check(x.rank() == 3, std::string(op) + ": expected rank-3 [C,H,W], got shape " +
                           shape_str(x.shape()));
}

void check_scalar(const char* op, const Tensor& s) {
  check(s.size() == 1,
        std::string(op) + ": expected scalar operand, got shape " + shape_str(s.shape()));
}

void axpy(std::vector<double>& dst, double a, const std::vector<double>& x) {
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += a * x[i];
}

}  // namespace

// --- elementwise -------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  std::vector<double> out(a.data());
  for (size_t i = 0; i < out.size(); ++i) out[i] += b.at(static_cast<int>(i));
  Tensor r = make_tensor(a.shape(), std::move(out), promote(a.dtype(), b.dtype()));
  int na = a.node(), nb = b.node();
  return finish(std::move(r), a.tracked() || b.tracked(),
                [na, nb](const std::vector<double>& g, Tape& tp) {
                  if (na >= 0) axpy(tp.grad_buf(na), 1.0, g);
                  if (nb >= 0) axpy(tp.grad_buf(nb), 1.0, g);
                });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  std::vector<double> out(a.data());
  for (size_t i = 0; i < out.size(); ++i) out[i] -= b.at(static_cast<int>(i));
  Tensor r = make_tensor(a.shape(), std::move(out), promote(a.dtype(), b.dtype()));
  int na = a.node(), nb = b.node();
  return finish(std::move(r), a.tracked() || b.tracked(),
                [na, nb](const std::vector<double>& g, Tape& tp) {
                  if (na >= 0) axpy(tp.grad_buf(na), 1.0, g);
                  if (nb >= 0) axpy(tp.grad_buf(nb), -1.0, g);
                });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  std::vector<double> out(a.data());
  for (size_t i = 0; i < out.size(); ++i) out[i] *= b.at(static_cast<int>(i));
  Tensor r = make_tensor(a.shape(), std::move(out), promote(a.dtype(), b.dtype()));
  int na = a.node(), nb = b.node();
  Data da = a.tracked() || b.tracked() ? payload(a) : nullptr;
  Data db = da ? payload(b) : nullptr;
  return finish(std::move(r), a.tracked() || b.tracked(),
                [na, nb, da, db](const std::vector<double>& g, Tape& tp) {
                  if (na >= 0) {
                    auto& ga = tp.grad_buf(na);
                    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (*db)[i];
                  }
                  if (nb >= 0) {
                    auto& gb = tp.grad_buf(nb);
                    for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * (*da)[i];
                  }
                });
}

Tensor div(const Tensor& a, const Tensor& b) {
  check_same_shape("div", a, b);
  for (double v : b.data()) check(v != 0.0, "div: division by zero");
  std::vector<double> out(a.data());
  for (size_t i = 0; i < out.size(); ++i) out[i] /= b.at(static_cast<int>(i));
  Tensor r = make_tensor(a.shape(), std::move(out), promote(a.dtype(), b.dtype()));
  int na = a.node(), nb = b.node();
  Data da = a.tracked() || b.tracked() ? payload(a) : nullptr;
  Data db = da ? payload(b) : nullptr;
  return finish(std::move(r), a.tracked() || b.tracked(),
                [na, nb, da, db](const std::vector<double>& g, Tape& tp) {
                  if (na >= 0) {
                    auto& ga = tp.grad_buf(na);
                    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / (*db)[i];
                  }
                  if (nb >= 0) {
                    auto& gb = tp.grad_buf(nb);
                    for (size_t i = 0; i < g.size(); ++i)
                      gb[i] -= g[i] * (*da)[i] / ((*db)[i] * (*db)[i]);
                  }
                });
}

Tensor add_scalar(const Tensor& a, double c) {
  std::vector<double> out(a.data());
  for (double& v : out) v += c;
  Tensor r = make_tensor(a.shape(), std::move(out), a.dtype());
  int na = a.node();
  return finish(std::move(r), a.tracked(), [na](const std::vector<double>& g, Tape& tp) {
    axpy(tp.grad_buf(na), 1.0, g);
  });
}

Tensor mul_scalar(const Tensor& a, double c) {
  std::vector<double> out(a.data());
  for (double& v : out) v *= c;
  Tensor r = make_tensor(a.shape(), std::move(out), a.dtype());
  int na = a.node();
  return finish(std::move(r), a.tracked(), [na, c](const std::vector<double>& g, Tape& tp) {
    axpy(tp.grad_buf(na), c, g);
  });
}

// --- scalar-tensor broadcast --------------------------------------------------

Tensor add_s(const Tensor& a, const Tensor& s) {
  check_scalar("add_s", s);
  double sv = s.value();
  std::vector<double> out(a.data());
  for (double& v : out) v += sv;
  Tensor r = make_tensor(a.shape(), std::move(out), promote(a.dtype(), s.dtype()));
  int na = a.node(), ns = s.node();
  return finish(std::move(r), a.tracked() || s.tracked(),
                [na, ns](const std::vector<double>& g, Tape& tp) {
                  if (na >= 0) axpy(tp.grad_buf(na), 1.0, g);
                  if (ns >= 0) {
                    double acc = 0;
                    for (double v : g) acc += v;
                    tp.grad_buf(ns)[0] += acc;
                  }
                });
}

Tensor sub_s(const Tensor& a, const Tensor& s) {
  check_scalar("sub_s", s);
  double sv = s.value();
  std::vector<double> out(a.data());
  for (double& v : out) v -= sv;
  Tensor r = make_tensor(a.shape(), std::move(out), promote(a.dtype(), s.dtype()));
  int na = a.node(), ns = s.node();
  return finish(std::move(r), a.tracked() || s.tracked(),
                [na, ns](const std::vector<double>& g, Tape& tp) {
                  if (na >= 0) axpy(tp.grad_buf(na), 1.0, g);
                  if (ns >= 0) {
                    double acc = 0;
                    for (double v : g) acc += v;
                    tp.grad_buf(ns)[0] -= acc;
                  }
                });
}

Tensor mul_s(const Tensor& a, const Tensor& s) {
  check_scalar("mul_s", s);
  double sv = s.value();
  std::vector<double> out(a.data());
  for (double& v : out) v *= sv;
  Tensor r = make_tensor(a.shape(), std::move(out), promote(a.dtype(), s.dtype()));
  int na = a.node(), ns = s.node();
  Data da = s.tracked() ? payload(a) : nullptr;
  return finish(std::move(r), a.tracked() || s.tracked(),
                [na, ns, sv, da](const std::vector<double>& g, Tape& tp) {
                  if (na >= 0) axpy(tp.grad_buf(na), sv, g);
                  if (ns >= 0) {
                    double acc = 0;
                    for (size_t i = 0; i < g.size(); ++i) acc += g[i] * (*da)[i];
                    tp.grad_buf(ns)[0] += acc;
                  }
                });
}

Tensor div_s(const Tensor& a, const Tensor& s) {
  check_scalar("div_s", s);
  double sv = s.value();
  check(sv != 0.0, "div_s: division by zero");
  std::vector<double> out(a.data());
  for (double& v : out) v /= sv;
  Tensor r = make_tensor(a.shape(), std::move(out), promote(a.dtype(), s.dtype()));
  int na = a.node(), ns = s.node();
  Data da = s.tracked() ? payload(a) : nullptr;
  return finish(std::move(r), a.tracked() || s.tracked(),
                [na, ns, sv, da](const std::vector<double>& g, Tape& tp) {
                  if (na >= 0) axpy(tp.grad_buf(na), 1.0 / sv, g);
                  if (ns >= 0) {
                    double acc = 0;
                    for (size_t i = 0; i < g.size(); ++i) acc += g[i] * (*da)[i];
                    tp.grad_buf(ns)[0] -= acc / (sv * sv);
                  }
                });
}

// --- unary --------------------------------------------------------------------

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.data());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  Tensor r = make_tensor(x.shape(), std::move(out), x.dtype());
  int nx = x.node();
  Data dx = x.tracked() ? payload(x) : nullptr;
  return finish(std::move(r), x.tracked(), [nx, dx](const std::vector<double>& g, Tape& tp) {
    auto& gx = tp.grad_buf(nx);
    for (size_t i = 0; i < g.size(); ++i) gx[i] += (*dx)[i] > 0.0 ? g[i] : 0.0;
  });
}

Tensor silu(const Tensor& x) {
  std::vector<double> out(x.data());
  for (double& v : out) v = v / (1.0 + std::exp(-v));
  Tensor r = make_tensor(x.shape(), std::move(out), x.dtype());
  int nx = x.node();
  Data dx = x.tracked() ? payload(x) : nullptr;
  return finish(std::move(r), x.tracked(), [nx, dx](const std::vector<double>& g, Tape& tp) {
    auto& gx = tp.grad_buf(nx);
    for (size_t i = 0; i < g.size(); ++i) {
      double v = (*dx)[i];
      double s = 1.0 / (1.0 + std::exp(-v));
      gx[i] += g[i] * s * (1.0 + v * (1.0 - s));
    }
  });
}

Tensor log(const Tensor& x) {
  for (double v : x.data()) check(v > 0.0, "log: non-positive input");
  std::vector<double> out(x.data());
  for (double& v : out) v = std::log(v);
  Tensor r = make_tensor(x.shape(), std::move(out), x.dtype());
  int nx = x.node();
  Data dx = x.tracked() ? payload(x) : nullptr;
  return finish(std::move(r), x.tracked(), [nx, dx](const std::vector<double>& g, Tape& tp) {
    auto& gx = tp.grad_buf(nx);
    for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] / (*dx)[i];
  });
}

Tensor exp(const Tensor& x) {
  std::vector<double> out(x.data());
  for (double& v : out) v = std::exp(v);
  Tensor r = make_tensor(x.shape(), std::move(out), x.dtype());
  int nx = x.node();
  Data dout = x.tracked() ? std::make_shared<const std::vector<double>>(r.data()) : nullptr;
  return finish(std::move(r), x.tracked(), [nx, dout](const std::vector<double>& g, Tape& tp) {
    auto& gx = tp.grad_buf(nx);
    for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*dout)[i];
  });
}

Tensor sqrt(const Tensor& x) {
  for (double v : x.data()) check(v > 0.0, "sqrt: non-positive input");
  std::vector<double> out(x.data());
  for (double& v : out) v = std::sqrt(v);
  Tensor r = make_tensor(x.shape(), std::move(out), x.dtype());
  int nx = x.node();
  Data dout = x.tracked() ? std::make_shared<const std::vector<double>>(r.data()) : nullptr;
  return finish(std::move(r), x.tracked(), [nx, dout](const std::vector<double>& g, Tape& tp) {
    auto& gx = tp.grad_buf(nx);
    for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * 0.5 / (*dout)[i];
  });
}

Tensor square(const Tensor& x) {
  std::vector<double> out(x.data());
  for (double& v : out) v *= v;
  Tensor r = make_tensor(x.shape(), std::move(out), x.dtype());
  int nx = x.node();
  Data dx = x.tracked() ? payload(x) : nullptr;
  return finish(std::move(r), x.tracked(), [nx, dx](const std::vector<double>& g, Tape& tp) {
    auto& gx = tp.grad_buf(nx);
    for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * 2.0 * (*dx)[i];
  });
}

// --- reductions ----------------------------------------------------------------

Tensor sum(const Tensor& x) {
  double acc = 0;
  for (double v : x.data()) acc += v;
  Tensor r = make_tensor({}, {acc}, x.dtype());
  int nx = x.node();
  int64_t n = x.size();
  return finish(std::move(r), x.tracked(), [nx, n](const std::vector<double>& g, Tape& tp) {
    auto& gx = tp.grad_buf(nx);
    for (int64_t i = 0; i < n; ++i) gx[static_cast<size_t>(i)] += g[0];
  });
}

Tensor mean(const Tensor& x) {
  double acc = 0;
  for (double v : x.data()) acc += v;
  double inv = 1.0 / static_cast<double>(x.size());
  Tensor r = make_tensor({}, {acc * inv}, x.dtype());
  int nx = x.node();
  int64_t n = x.size();
  return finish(std::move(r), x.tracked(), [nx, n, inv](const std::vector<double>& g, Tape& tp) {
    auto& gx = tp.grad_buf(nx);
    for (int64_t i = 0; i < n; ++i) gx[static_cast<size_t>(i)] += g[0] * inv;
  });
}

// --- structure -------------------------------------------------------------------

Tensor reshape(const Tensor& x, Shape s) {
  validate_shape(s);
  check(shape_size(s) == x.size(), "reshape: size mismatch " + shape_str(x.shape()) + " vs " +
                                       shape_str(s));
  // Same flat data and same tape node; gradient buffers are flat.
  return with_shape(x, std::move(s));
}

Tensor concat_channels(const std::vector<Tensor>& xs) {
  check(!xs.empty(), "concat: no inputs");
  int r0 = xs[0].rank();
  check(r0 == 3 || r0 == 1, "concat: expected rank-3 or rank-1 inputs, got shape " +
                                shape_str(xs[0].shape()));
  int h = r0 == 3 ? xs[0].dim(1) : 0;
  int w = r0 == 3 ? xs[0].dim(2) : 0;
  int total_c = 0;
  bool any_tracked = false;
  DType dt = xs[0].dtype();
  for (const Tensor& x : xs) {
    check(x.rank() == r0, "concat: rank mismatch " + shape_str(xs[0].shape()) + " vs " +
                              shape_str(x.shape()));
    if (r0 == 3) {
      check(x.dim(1) == h && x.dim(2) == w, "concat: spatial mismatch " +
                                                shape_str(xs[0].shape()) + " vs " +
                                                shape_str(x.shape()));
    }
    total_c += x.dim(0);
    any_tracked = any_tracked || x.tracked();
    dt = promote(dt, x.dtype());
  }
  std::vector<double> out;
  out.reserve(static_cast<size_t>(total_c) * (r0 == 3 ? static_cast<size_t>(h) * w : 1));
  for (const Tensor& x : xs) out.insert(out.end(), x.data().begin(), x.data().end());
  Shape shape = r0 == 3 ? Shape{total_c, h, w} : Shape{total_c};
  Tensor r = make_tensor(std::move(shape), std::move(out), dt);

  std::vector<std::pair<int, int64_t>> segs;  // (node, length)
  for (const Tensor& x : xs) segs.emplace_back(x.node(), x.size());
  return finish(std::move(r), any_tracked, [segs](const std::vector<double>& g, Tape& tp) {
    size_t off = 0;
    for (const auto& [node, len] : segs) {
      if (node >= 0) {
        auto& gx = tp.grad_buf(node);
        for (int64_t i = 0; i < len; ++i) gx[static_cast<size_t>(i)] += g[off + static_cast<size_t>(i)];
      }
      off += static_cast<size_t>(len);
    }
  });
}

Tensor slice_channels(const Tensor& x, int c0, int c1) {
  check_rank3("slice_channels", x);
  check(0 <= c0 && c0 < c1 && c1 <= x.dim(0),
        "slice_channels: invalid range [" + std::to_string(c0) + "," + std::to_string(c1) +
            ") for shape " + shape_str(x.shape()));
  int h = x.dim(1), w = x.dim(2);
  size_t plane = static_cast<size_t>(h) * w;
  std::vector<double> out(x.data().begin() + static_cast<long>(c0 * plane),
                          x.data().begin() + static_cast<long>(c1 * plane));
  Tensor r = make_tensor({c1 - c0, h, w}, std::move(out), x.dtype());
  int nx = x.node();
  size_t off = static_cast<size_t>(c0) * plane;
  return finish(std::move(r), x.tracked(), [nx, off](const std::vector<double>& g, Tape& tp) {
    auto& gx = tp.grad_buf(nx);
    for (size_t i = 0; i < g.size(); ++i) gx[off + i] += g[i];
  });
}

Tensor stack_scalars(const std::vector<Tensor>& xs) {
  check(!xs.empty(), "stack_scalars: no inputs");
  std::vector<double> out;
  std::vector<int> nodes;
  bool any_tracked = false;
  for (const Tensor& x : xs) {
    check_scalar("stack_scalars", x);
    out.push_back(x.data()[0]);
    nodes.push_back(x.node());
    any_tracked = any_tracked || x.tracked();
  }
  Tensor r = make_tensor({static_cast<int>(xs.size())}, std::move(out), DType::F64);
  return finish(std::move(r), any_tracked, [nodes](const std::vector<double>& g, Tape& tp) {
    for (size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i] >= 0) tp.grad_buf(nodes[i])[0] += g[i];
    }
  });
}

Tensor broadcast_channel(const Tensor& v, int h, int w) {
  check(v.rank() == 1, "broadcast_channel: expected rank-1 vector, got shape " +
                           shape_str(v.shape()));
  check(h > 0 && w > 0, "broadcast_channel: non-positive spatial dims");
  int d = v.dim(0);
  std::vector<double> out(static_cast<size_t>(d) * h * w);
  for (int c = 0; c < d; ++c) {
    std::fill_n(out.begin() + static_cast<long>(c) * h * w, static_cast<size_t>(h) * w, v.at(c));
  }
  Tensor r = make_tensor({d, h, w}, std::move(out), v.dtype());
  int nv = v.node();
  size_t plane = static_cast<size_t>(h) * w;
  return finish(std::move(r), v.tracked(), [nv, d, plane](const std::vector<double>& g, Tape& tp) {
    auto& gv = tp.grad_buf(nv);
    for (int c = 0; c < d; ++c) {
      double acc = 0;
      for (size_t i = 0; i < plane; ++i) acc += g[static_cast<size_t>(c) * plane + i];
      gv[static_cast<size_t>(c)] += acc;
    }
  });
}

Tensor embedding_row(const Tensor& table, int row) {
  check(table.rank() == 2, "embedding_row: expected rank-2 table, got shape " +
                               shape_str(table.shape()));
  check(0 <= row && row < table.dim(0),
        "embedding_row: row " + std::to_string(row) + " out of range for shape " +
            shape_str(table.shape()));
  int d = table.dim(1);
  std::vector<double> out(table.data().begin() + static_cast<long>(row) * d,
                          table.data().begin() + static_cast<long>(row + 1) * d);
  Tensor r = make_tensor({d}, std::move(out), table.dtype());
  int nt = table.node();
  return finish(std::move(r), table.tracked(), [nt, row, d](const std::vector<double>& g, Tape& tp) {
    auto& gt = tp.grad_buf(nt);
    for (int i = 0; i < d; ++i) gt[static_cast<size_t>(row) * d + static_cast<size_t>(i)] += g[static_cast<size_t>(i)];
  });
}

// --- spatial --------------------------------------------------------------------

Tensor conv2d(const Tensor& x, const Tensor& w, int pad) {
  check_rank3("conv2d", x);
  check(w.rank() == 4, "conv2d: expected rank-4 kernel [Cout,Cin,kh,kw], got shape " +
                           shape_str(w.shape()));
  check(pad >= 0, "conv2d: negative padding");
  int cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  int cout = w.dim(0), kcin = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  check(cin == kcin, "conv2d: channel mismatch " + shape_str(x.shape()) + " vs " +
                         shape_str(w.shape()));
  int ho = h + 2 * pad - kh + 1;
  int wo = wd + 2 * pad - kw + 1;
  check(ho >= 1 && wo >= 1, "conv2d: kernel " + shape_str(w.shape()) + " too large for input " +
                                shape_str(x.shape()) + " with pad " + std::to_string(pad));

  const auto& xd = x.data();
  const auto& wdat = w.data();
  std::vector<double> out(static_cast<size_t>(cout) * ho * wo, 0.0);
  for (int co = 0; co < cout; ++co) {
    for (int ci = 0; ci < cin; ++ci) {
      const double* wbase = wdat.data() + (static_cast<size_t>(co) * cin + ci) * kh * kw;
      const double* xbase = xd.data() + static_cast<size_t>(ci) * h * wd;
      double* obase = out.data() + static_cast<size_t>(co) * ho * wo;
      for (int i = 0; i < ho; ++i) {
        for (int u = 0; u < kh; ++u) {
          int y = i + u - pad;
          if (y < 0 || y >= h) continue;
          for (int v = 0; v < kw; ++v) {
            double wv = wbase[u * kw + v];
            if (wv == 0.0) continue;
            int x0 = std::max(0, pad - v);
            int x1 = std::min(wo, wd + pad - v);
            const double* xrow = xbase + static_cast<size_t>(y) * wd - pad + v;
            double* orow = obase + static_cast<size_t>(i) * wo;
            for (int j = x0; j < x1; ++j) orow[j] += wv * xrow[j];
          }
        }
      }
    }
  }
  Tensor r = make_tensor({cout, ho, wo}, std::move(out), promote(x.dtype(), w.dtype()));
  int nx = x.node(), nw = w.node();
  bool tracked = x.tracked() || w.tracked();
  Data dx = tracked ? payload(x) : nullptr;
  Data dw = tracked ? payload(w) : nullptr;
  return finish(std::move(r), tracked,
                [=](const std::vector<double>& g, Tape& tp) {
                  if (nx >= 0) {
                    auto& gx = tp.grad_buf(nx);
                    for (int co = 0; co < cout; ++co)
                      for (int ci = 0; ci < cin; ++ci) {
                        const double* wbase =
                            dw->data() + (static_cast<size_t>(co) * cin + ci) * kh * kw;
                        for (int i = 0; i < ho; ++i)
                          for (int u = 0; u < kh; ++u) {
                            int y = i + u - pad;
                            if (y < 0 || y >= h) continue;
                            for (int v = 0; v < kw; ++v) {
                              double wv = wbase[u * kw + v];
                              if (wv == 0.0) continue;
                              for (int j = 0; j < wo; ++j) {
                                int xx = j + v - pad;
                                if (xx < 0 || xx >= wd) continue;
                                gx[(static_cast<size_t>(ci) * h + y) * wd + xx] +=
                                    wv * g[(static_cast<size_t>(co) * ho + i) * wo + j];
                              }
                            }
                          }
                      }
                  }
                  if (nw >= 0) {
                    auto& gw = tp.grad_buf(nw);
                    for (int co = 0; co < cout; ++co)
                      for (int ci = 0; ci < cin; ++ci)
                        for (int u = 0; u < kh; ++u)
                          for (int v = 0; v < kw; ++v) {
                            double acc = 0;
                            for (int i = 0; i < ho; ++i) {
                              int y = i + u - pad;
                              if (y < 0 || y >= h) continue;
                              for (int j = 0; j < wo; ++j) {
                                int xx = j + v - pad;
                                if (xx < 0 || xx >= wd) continue;
                                acc += g[(static_cast<size_t>(co) * ho + i) * wo + j] *
                                       (*dx)[(static_cast<size_t>(ci) * h + y) * wd + xx];
                              }
                            }
                            gw[((static_cast<size_t>(co) * cin + ci) * kh + u) * kw + v] += acc;
                          }
                  }
                });
}

Tensor bias_channels(const Tensor& x, const Tensor& b) {
  check_rank3("bias_channels", x);
  check(b.rank() == 1 && b.dim(0) == x.dim(0),
        "bias_channels: bias shape " + shape_str(b.shape()) + " does not match input " +
            shape_str(x.shape()));
  int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  size_t plane = static_cast<size_t>(h) * w;
  std::vector<double> out(x.data());
  for (int ci = 0; ci < c; ++ci) {
    double bv = b.at(ci);
    for (size_t i = 0; i < plane; ++i) out[static_cast<size_t>(ci) * plane + i] += bv;
  }
  Tensor r = make_tensor(x.shape(), std::move(out), promote(x.dtype(), b.dtype()));
  int nx = x.node(), nb = b.node();
  return finish(std::move(r), x.tracked() || b.tracked(),
                [nx, nb, c, plane](const std::vector<double>& g, Tape& tp) {
                  if (nx >= 0) axpy(tp.grad_buf(nx), 1.0, g);
                  if (nb >= 0) {
                    auto& gb = tp.grad_buf(nb);
                    for (int ci = 0; ci < c; ++ci) {
                      double acc = 0;
                      for (size_t i = 0; i < plane; ++i) acc += g[static_cast<size_t>(ci) * plane + i];
                      gb[static_cast<size_t>(ci)] += acc;
                    }
                  }
                });
}

Tensor depthwise_conv2d(const Tensor& x, const Tensor& k, int pad_h, int pad_w) {
  check_rank3("depthwise_conv2d", x);
  check(k.rank() == 2, "depthwise_conv2d: expected rank-2 kernel, got shape " +
                           shape_str(k.shape()));
  check(pad_h >= 0 && pad_w >= 0, "depthwise_conv2d: negative padding");
  int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  int kh = k.dim(0), kw = k.dim(1);
  int ho = h + 2 * pad_h - kh + 1;
  int wo = w + 2 * pad_w - kw + 1;
  check(ho >= 1 && wo >= 1, "depthwise_conv2d: kernel " + shape_str(k.shape()) +
                                " too large for input " + shape_str(x.shape()));
  const auto& xd = x.data();
  const auto& kd = k.data();
  std::vector<double> out(static_cast<size_t>(c) * ho * wo, 0.0);
  for (int ci = 0; ci < c; ++ci) {
    const double* xbase = xd.data() + static_cast<size_t>(ci) * h * w;
    double* obase = out.data() + static_cast<size_t>(ci) * ho * wo;
    for (int i = 0; i < ho; ++i) {
      for (int u = 0; u < kh; ++u) {
        int y = i + u - pad_h;
        if (y < 0 || y >= h) continue;
        for (int v = 0; v < kw; ++v) {
          double kv = kd[static_cast<size_t>(u) * kw + v];
          if (kv == 0.0) continue;
          int x0 = std::max(0, pad_w - v);
          int x1 = std::min(wo, w + pad_w - v);
          const double* xrow = xbase + static_cast<size_t>(y) * w - pad_w + v;
          double* orow = obase + static_cast<size_t>(i) * wo;
          for (int j = x0; j < x1; ++j) orow[j] += kv * xrow[j];
        }
      }
    }
  }
  Tensor r = make_tensor({c, ho, wo}, std::move(out), promote(x.dtype(), k.dtype()));
  int nx = x.node(), nk = k.node();
  bool tracked = x.tracked() || k.tracked();
  Data dx = tracked ? payload(x) : nullptr;
  Data dk = tracked ? payload(k) : nullptr;
  return finish(std::move(r), tracked, [=](const std::vector<double>& g, Tape& tp) {
    if (nx >= 0) {
      auto& gx = tp.grad_buf(nx);
      for (int ci = 0; ci < c; ++ci)
        for (int i = 0; i < ho; ++i)
          for (int u = 0; u < kh; ++u) {
            int y = i + u - pad_h;
            if (y < 0 || y >= h) continue;
            for (int v = 0; v < kw; ++v) {
              double kv = (*dk)[static_cast<size_t>(u) * kw + v];
              if (kv == 0.0) continue;
              for (int j = 0; j < wo; ++j) {
                int xx = j + v - pad_w;
                if (xx < 0 || xx >= w) continue;
                gx[(static_cast<size_t>(ci) * h + y) * w + xx] +=
                    kv * g[(static_cast<size_t>(ci) * ho + i) * wo + j];
              }
            }
          }
    }
    if (nk >= 0) {
      auto& gk = tp.grad_buf(nk);
      for (int u = 0; u < kh; ++u)
        for (int v = 0; v < kw; ++v) {
          double acc = 0;
          for (int ci = 0; ci < c; ++ci)
            for (int i = 0; i < ho; ++i) {
              int y = i + u - pad_h;
              if (y < 0 || y >= h) continue;
              for (int j = 0; j < wo; ++j) {
                int xx = j + v - pad_w;
                if (xx < 0 || xx >= w) continue;
                acc += g[(static_cast<size_t>(ci) * ho + i) * wo + j] *
                       (*dx)[(static_cast<size_t>(ci) * h + y) * w + xx];
              }
            }
          gk[static_cast<size_t>(u) * kw + v] += acc;
        }
    }
  });
}

Tensor record_op(Tensor out, bool any_tracked, Tape::BackwardFn fn) {
  return finish(std::move(out), any_tracked, std::move(fn));
}

Tensor avg_pool2x2(const Tensor& x) {
  check_rank3("avg_pool2x2", x);
  int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  check(h % 2 == 0 && w % 2 == 0,
        "avg_pool2x2: odd spatial dims in shape " + shape_str(x.shape()));
  int ho = h / 2, wo = w / 2;
  const auto& xd = x.data();
  std::vector<double> out(static_cast<size_t>(c) * ho * wo);
  for (int ci = 0; ci < c; ++ci)
    for (int i = 0; i < ho; ++i)
      for (int j = 0; j < wo; ++j) {
        size_t base = (static_cast<size_t>(ci) * h + 2 * i) * w + 2 * j;
        out[(static_cast<size_t>(ci) * ho + i) * wo + j] =
            0.25 * (xd[base] + xd[base + 1] + xd[base + w] + xd[base + w + 1]);
      }
  Tensor r = make_tensor({c, ho, wo}, std::move(out), x.dtype());
  int nx = x.node();
  return finish(std::move(r), x.tracked(), [nx, c, h, w, ho, wo](const std::vector<double>& g, Tape& tp) {
    auto& gx = tp.grad_buf(nx);
    for (int ci = 0; ci < c; ++ci)
      for (int i = 0; i < ho; ++i)
        for (int j = 0; j < wo; ++j) {
          double gv = 0.25 * g[(static_cast<size_t>(ci) * ho + i) * wo + j];
          size_t base = (static_cast<size_t>(ci) * h + 2 * i) * w + 2 * j;
          gx[base] += gv;
          gx[base + 1] += gv;
          gx[base + static_cast<size_t>(w)] += gv;
          gx[base + static_cast<size_t>(w) + 1] += gv;
        }
  });
}

Tensor upsample_nearest2x(const Tensor& x) {
  check_rank3("upsample_nearest2x", x);
  int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  int ho = 2 * h, wo = 2 * w;
  const auto& xd = x.data();
  std::vector<double> out(static_cast<size_t>(c) * ho * wo);
  for (int ci = 0; ci < c; ++ci)
    for (int i = 0; i < ho; ++i)
      for (int j = 0; j < wo; ++j)
        out[(static_cast<size_t>(ci) * ho + i) * wo + j] =
            xd[(static_cast<size_t>(ci) * h + i / 2) * w + j / 2];
  Tensor r = make_tensor({c, ho, wo}, std::move(out), x.dtype());
  int nx = x.node();
  return finish(std::move(r), x.tracked(), [nx, c, h, w, ho, wo](const std::vector<double>& g, Tape& tp) {
    auto& gx = tp.grad_buf(nx);
    for (int ci = 0; ci < c; ++ci)
      for (int i = 0; i < ho; ++i)
        for (int j = 0; j < wo; ++j)
          gx[(static_cast<size_t>(ci) * h + i / 2) * w + j / 2] +=
              g[(static_cast<size_t>(ci) * ho + i) * wo + j];
  });
}

namespace {

// Per-axis bilinear 2x taps: output o reads inputs (i0,i1) with weights
// (1-f, f); sample positions at half-pixel centers, edges clamped.
struct BilinearTap {
  int i0, i1;
  double w1;  // weight of i1; i0 gets 1-w1
};

std::vector<BilinearTap> bilinear_taps(int n) {
  std::vector<BilinearTap> taps(static_cast<size_t>(2 * n));
  for (int o = 0; o < 2 * n; ++o) {
    double s = (o + 0.5) * 0.5 - 0.5;
    int i0 = static_cast<int>(std::floor(s));
    double f = s - i0;
    int a = std::clamp(i0, 0, n - 1);
    int b = std::clamp(i0 + 1, 0, n - 1);
    taps[static_cast<size_t>(o)] = BilinearTap{a, b, f};
  }
  return taps;
}

}  // namespace

Tensor upsample_bilinear2x(const Tensor& x) {
  check_rank3("upsample_bilinear2x", x);
  int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  int ho = 2 * h, wo = 2 * w;
  auto ty = bilinear_taps(h);
  auto tx = bilinear_taps(w);
  const auto& xd = x.data();
  std::vector<double> out(static_cast<size_t>(c) * ho * wo);
  for (int ci = 0; ci < c; ++ci) {
    const double* xbase = xd.data() + static_cast<size_t>(ci) * h * w;
    for (int i = 0; i < ho; ++i) {
      const auto& a = ty[static_cast<size_t>(i)];
      for (int j = 0; j < wo; ++j) {
        const auto& b = tx[static_cast<size_t>(j)];
        double v00 = xbase[a.i0 * w + b.i0];
        double v01 = xbase[a.i0 * w + b.i1];
        double v10 = xbase[a.i1 * w + b.i0];
        double v11 = xbase[a.i1 * w + b.i1];
        out[(static_cast<size_t>(ci) * ho + i) * wo + j] =
            (1 - a.w1) * ((1 - b.w1) * v00 + b.w1 * v01) + a.w1 * ((1 - b.w1) * v10 + b.w1 * v11);
      }
    }
  }
  Tensor r = make_tensor({c, ho, wo}, std::move(out), x.dtype());
  int nx = x.node();
  return finish(std::move(r), x.tracked(),
                [nx, c, h, w, ho, wo, ty, tx](const std::vector<double>& g, Tape& tp) {
                  auto& gx = tp.grad_buf(nx);
                  for (int ci = 0; ci < c; ++ci) {
                    double* gbase = gx.data() + static_cast<size_t>(ci) * h * w;
                    for (int i = 0; i < ho; ++i) {
                      const auto& a = ty[static_cast<size_t>(i)];
                      for (int j = 0; j < wo; ++j) {
                        const auto& b = tx[static_cast<size_t>(j)];
                        double gv = g[(static_cast<size_t>(ci) * ho + i) * wo + j];
                        gbase[a.i0 * w + b.i0] += (1 - a.w1) * (1 - b.w1) * gv;
                        gbase[a.i0 * w + b.i1] += (1 - a.w1) * b.w1 * gv;
                        gbase[a.i1 * w + b.i0] += a.w1 * (1 - b.w1) * gv;
                        gbase[a.i1 * w + b.i1] += a.w1 * b.w1 * gv;
                      }
                    }
                  }
                });
}

Tensor clamp01_straight_through(const Tensor& x) {
  std::vector<double> out(x.data());
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  Tensor r = make_tensor(x.shape(), std::move(out), x.dtype());
  int nx = x.node();
  Data dx = x.tracked() ? payload(x) : nullptr;
  return finish(std::move(r), x.tracked(), [nx, dx](const std::vector<double>& g, Tape& tp) {
    auto& gx = tp.grad_buf(nx);
    for (size_t i = 0; i < g.size(); ++i) {
      double v = (*dx)[i];
      if (v >= 0.0 && v <= 1.0) gx[i] += g[i];
    }
  });
}

}  // namespace csg
