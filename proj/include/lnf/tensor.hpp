#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lnf/error.hpp"

namespace lnf {

class Tape;

enum class Act { Tanh, Relu, Softplus, Sinh };
enum class Ewise { Add, Sub, Mul };

// Dense row-major 64-bit-float tensor. Copies share the payload (data and
// gradient buffers alike), so a Tensor behaves like a handle; contents are
// treated as immutable once an op has consumed them. Gradients live beside
// the data and accumulate additively until zero_grad().
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double value,
                     bool requires_grad = false);
  static Tensor from_data(std::vector<int> shape, std::span<const double> buf,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(p_); }
  const std::vector<int>& shape() const;
  int rank() const { return static_cast<int>(shape().size()); }
  int64_t size() const;
  bool is_scalar() const { return size() == 1; }
  double item() const;  // contract error unless scalar

  std::span<double> data();
  std::span<const double> data() const;

  bool requires_grad() const;
  void set_requires_grad(bool rg);
  bool has_grad() const;
  std::span<double> grad();             // materializes zeros on first use
  std::span<const double> grad() const; // contract error when absent
  void zero_grad();

  // Tape linkage: index of the node that produced this tensor, or -1 for
  // leaves / untracked results.
  int tape_node() const;
  Tape* tape() const;

 private:
  friend class Tape;
  friend struct OpCtx;
  struct Payload {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until materialized
    bool requires_grad = false;
    Tape* tape = nullptr;
    int node = -1;
  };
  explicit Tensor(std::shared_ptr<Payload> p) : p_(std::move(p)) {}
  std::shared_ptr<Payload> p_;
};

// Reverse-mode tape. Nodes are appended in execution order, which is a
// topological order of the DAG by construction; backward() walks them once in
// reverse. Intermediate gradients are cleared at the start of each backward
// pass, so repeated passes accumulate into leaf gradients only.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  int size() const { return static_cast<int>(nodes_.size()); }
  void backward_from(const Tensor& loss);

 private:
  friend struct OpCtx;
  struct Node {
    const char* kind;
    std::shared_ptr<Tensor::Payload> out;
    std::function<void()> pull;
  };
  std::vector<Node> nodes_;
};

// Activates a tape for the current thread; ops record onto it while in scope.
// Without an active tape, ops run forward-only and outputs do not require
// grad (inference mode).
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* prev_;
};

Tape* active_tape();

// --- operations -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);           // [m,k]x[k,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);        // [m,k]x[n,k]^T
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);  // x[mb,in]*w[in,out]+b

// Cross-correlation (no kernel flip), zero padding, uniform stride/padding on
// every spatial axis. input [C_in, S...], weight [C_out, C_in, K...],
// bias [C_out]; dims selects the spatial rank (1, 2 or 3).
Tensor conv_nd(const Tensor& input, const Tensor& weight, const Tensor& bias,
               int stride, int padding, int dims);

Tensor activation(const Tensor& x, Act kind);

// Same shapes, or b a scalar tensor (the alpha broadcast). No other
// broadcasting.
Tensor ewise(const Tensor& a, const Tensor& b, Ewise kind);
inline Tensor add(const Tensor& a, const Tensor& b) { return ewise(a, b, Ewise::Add); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return ewise(a, b, Ewise::Sub); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return ewise(a, b, Ewise::Mul); }

// x [C,H,W] -> [C,out_h,out_w]; window i covers [floor(i*H/h), ceil((i+1)*H/h)).
Tensor adaptive_avg_pool2d(const Tensor& x, int out_h, int out_w);

Tensor reshape(const Tensor& x, std::vector<int> shape);
Tensor concat(const std::vector<Tensor>& xs, int axis);
Tensor slice(const Tensor& x, int axis, int start, int stop);

Tensor sum(const Tensor& x);        // scalar
Tensor sqrt_elem(const Tensor& x);

// Backpropagates from a scalar loss through its tape. Every requires_grad
// leaf reachable from the loss receives (accumulates) a gradient.
void backward(const Tensor& loss);

int64_t shape_numel(const std::vector<int>& shape);

}  // namespace lnf
