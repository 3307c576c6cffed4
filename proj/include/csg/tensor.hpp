// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense tensors with reverse-mode automatic differentiation over a flat tape.
//
// Tensors are immutable values: data lives behind a shared_ptr and is never
// written after construction, so copies are cheap and thread-safe. Gradient
// tracking is opt-in: ops record a tape node only when an active Tape exists
// on the current thread AND at least one input is tracked. With no tape (or
// untracked inputs) an op runs the exact same arithmetic, so tracked and
// untracked forward results are bit-identical.
//
// A Tape is confined to one thread for the duration of a training step and
// cleared afterwards; backward() walks the nodes in reverse creation order
// (which is a topological order, since the tape is append-only) and
// accumulates per-leaf gradients additively.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace csg {

enum class DType : uint8_t { F64 = 0, F32 = 1 };

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);

class Tape;

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, DType dt = DType::F64);
  static Tensor full(Shape shape, double value, DType dt = DType::F64);
  static Tensor scalar(double value, DType dt = DType::F64);
  static Tensor from_data(Shape shape, std::vector<double> values, DType dt = DType::F64);

  bool defined() const { return static_cast<bool>(data_); }
  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t size() const;
  bool is_scalar() const { return size() == 1; }
  double value() const;  // requires size()==1
  const std::vector<double>& data() const { return *data_; }
  double at(int i) const { return (*data_)[static_cast<size_t>(i)]; }
  DType dtype() const { return dtype_; }

  bool tracked() const { return node_ >= 0; }
  int node() const { return node_; }
  Tensor detached() const;

  // Casts preserve values (F64->F32 rounds through float precision).
  Tensor to(DType dt) const;

 private:
  std::shared_ptr<const std::vector<double>> data_;
  Shape shape_;
  DType dtype_ = DType::F64;
  int node_ = -1;

  friend class Tape;
  friend Tensor make_tensor(Shape, std::vector<double>, DType);
  friend Tensor with_node(const Tensor&, int);
  friend Tensor with_shape(const Tensor&, Shape);
};

// Gradients of one backward pass, keyed by leaf node id.
class GradMap {
 public:
  const Tensor& grad(const Tensor& leaf) const;
  const Tensor& grad(int node_id) const;
  bool contains(int node_id) const;
  size_t size() const { return grads_.size(); }

 private:
  std::vector<std::pair<int, Tensor>> grads_;  // sorted by node id
  friend class Tape;
};

class Tape {
 public:
  Tape() = default;
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers `t` as a differentiable leaf and returns the tracked handle.
  Tensor watch(const Tensor& t);

  // d(root)/d(leaf) for every watched leaf; untouched leaves get zeros.
  // root must be scalar and tracked on this tape.
  GradMap backward(const Tensor& root);

  void clear();
  size_t num_nodes() const { return nodes_.size(); }

  // Active tape for the current thread (nullptr when tracking is off).
  static Tape* current();

  class Scope {
   public:
    explicit Scope(Tape& t);
    ~Scope();
    Scope(const Scope&) = delete;

   private:
    Tape* prev_;
  };

  // --- recording interface used by op implementations ---
  using BackwardFn = std::function<void(const std::vector<double>& out_grad, Tape& tape)>;
  int record(int64_t out_size, BackwardFn fn);
  // Gradient accumulation buffer of a node, allocated on first use.
  std::vector<double>& grad_buf(int node);

 private:
  struct Node {
    int64_t out_size = 0;
    BackwardFn backward;  // empty for leaves
  };
  struct Leaf {
    int node = -1;
    Shape shape;
  };
  std::vector<Node> nodes_;
  std::vector<Leaf> leaves_;
  std::vector<std::vector<double>> bufs_;  // live only during backward()
};

// ---------------------------------------------------------------------------
// Op set. All ops validate shapes and raise csg::Error naming the op and the
// offending shapes. Spatial ops take rank-3 tensors laid out [C,H,W].
// ---------------------------------------------------------------------------

// elementwise, same shape
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

// scalar (plain double) broadcast
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);

// scalar-tensor broadcast (s has size 1, may be tracked)
Tensor add_s(const Tensor& a, const Tensor& s);
Tensor sub_s(const Tensor& a, const Tensor& s);  // a - s
Tensor mul_s(const Tensor& a, const Tensor& s);
Tensor div_s(const Tensor& a, const Tensor& s);  // a / s

// unary
Tensor relu(const Tensor& x);
Tensor silu(const Tensor& x);
Tensor log(const Tensor& x);   // natural log; requires x > 0
Tensor exp(const Tensor& x);
Tensor sqrt(const Tensor& x);  // requires x > 0
Tensor square(const Tensor& x);

// reductions to a rank-0 scalar
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// structure
Tensor reshape(const Tensor& x, Shape s);
Tensor concat_channels(const std::vector<Tensor>& xs);          // rank-3 along C, or rank-1
Tensor slice_channels(const Tensor& x, int c0, int c1);         // [c0,c1)
Tensor stack_scalars(const std::vector<Tensor>& xs);            // n scalars -> [n]
Tensor broadcast_channel(const Tensor& v, int h, int w);        // [d] -> [d,h,w]
Tensor embedding_row(const Tensor& table, int row);             // [n,d] -> [d]

// spatial (rank-3 [C,H,W]); zero padding
Tensor conv2d(const Tensor& x, const Tensor& w, int pad);           // w: [Cout,Cin,kh,kw]
Tensor bias_channels(const Tensor& x, const Tensor& b);             // b: [C]
// k: [kh,kw], same kernel applied to every channel; per-axis zero padding
Tensor depthwise_conv2d(const Tensor& x, const Tensor& k, int pad_h, int pad_w);
Tensor avg_pool2x2(const Tensor& x);
Tensor upsample_nearest2x(const Tensor& x);
Tensor upsample_bilinear2x(const Tensor& x);

// Hard clamp to [0,1] in the forward pass; gradient passes through where the
// pre-clamp value lies inside [0,1] and is zero outside.
Tensor clamp01_straight_through(const Tensor& x);

// For ops implemented outside this translation unit: records a tape node
// with the given backward rule when tracking is active and `any_tracked` is
// set, and returns the (possibly tracked) result. The backward fn must
// accumulate into tape.grad_buf(parent) for each tracked parent it captured.
Tensor record_op(Tensor out, bool any_tracked, Tape::BackwardFn fn);

bool all_finite(const Tensor& x);

}  // namespace csg
