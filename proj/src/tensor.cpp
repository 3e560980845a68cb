#include "lnf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "lnf/kernels.hpp"

namespace lnf {

namespace {

thread_local Tape* g_active_tape = nullptr;

void check_shape(const std::vector<int>& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must be nonempty");
  for (int d : shape) {
    if (d < 1) throw DimensionError("tensor dimensions must be >= 1");
  }
}

double stable_softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

int64_t shape_numel(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

// Shared op plumbing (friend of Tensor/Tape): payload access, gradient
// materialization, and node recording.
struct OpCtx {
  using P = std::shared_ptr<Tensor::Payload>;

  static std::vector<double>& grad_buf(const P& p) {
    if (p->grad.empty()) p->grad.assign(p->data.size(), 0.0);
    return p->grad;
  }

  static bool tracking(std::initializer_list<const Tensor*> inputs) {
    if (!g_active_tape) return false;
    for (const Tensor* t : inputs) {
      if (t->requires_grad()) return true;
    }
    return false;
  }

  static void record(const char* kind, Tensor& out, std::function<void()> pull) {
    out.p_->requires_grad = true;
    out.p_->tape = g_active_tape;
    g_active_tape->nodes_.push_back({kind, out.p_, std::move(pull)});
    out.p_->node = static_cast<int>(g_active_tape->nodes_.size()) - 1;
  }

  static P payload(const Tensor& t) { return t.p_; }

  static bool requires_grad(const P& p) { return p->requires_grad; }
  static std::vector<double>& node_grad(const Tape::Node& n) { return n.out->grad; }
};

namespace {
std::vector<double>& grad_buf(const OpCtx::P& p) { return OpCtx::grad_buf(p); }
}  // namespace

// --- Tensor ----------------------------------------------------------------

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  check_shape(shape);
  auto p = std::make_shared<Payload>();
  p->data.assign(shape_numel(shape), 0.0);
  p->shape = std::move(shape);
  p->requires_grad = requires_grad;
  return Tensor(std::move(p));
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.p_->data.begin(), t.p_->data.end(), value);
  return t;
}

Tensor Tensor::from_data(std::vector<int> shape, std::span<const double> buf,
                         bool requires_grad) {
  check_shape(shape);
  if (static_cast<int64_t>(buf.size()) != shape_numel(shape)) {
    throw DimensionError("buffer length does not match tensor shape");
  }
  auto p = std::make_shared<Payload>();
  p->shape = std::move(shape);
  p->data.assign(buf.begin(), buf.end());
  p->requires_grad = requires_grad;
  return Tensor(std::move(p));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return full({1}, value, requires_grad);
}

const std::vector<int>& Tensor::shape() const {
  if (!p_) throw ContractError("use of undefined tensor");
  return p_->shape;
}

int64_t Tensor::size() const { return static_cast<int64_t>(shape_numel(shape())); }

double Tensor::item() const {
  if (!is_scalar()) throw ContractError("item() requires a scalar tensor");
  return p_->data[0];
}

std::span<double> Tensor::data() {
  if (!p_) throw ContractError("use of undefined tensor");
  return p_->data;
}

std::span<const double> Tensor::data() const {
  if (!p_) throw ContractError("use of undefined tensor");
  return p_->data;
}

bool Tensor::requires_grad() const { return p_ && p_->requires_grad; }

void Tensor::set_requires_grad(bool rg) {
  if (!p_) throw ContractError("use of undefined tensor");
  p_->requires_grad = rg;
}

bool Tensor::has_grad() const { return p_ && !p_->grad.empty(); }

std::span<double> Tensor::grad() {
  if (!p_) throw ContractError("use of undefined tensor");
  return grad_buf(p_);
}

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw ContractError("tensor has no materialized gradient");
  return p_->grad;
}

void Tensor::zero_grad() {
  if (p_ && !p_->grad.empty()) std::fill(p_->grad.begin(), p_->grad.end(), 0.0);
}

int Tensor::tape_node() const { return p_ ? p_->node : -1; }
Tape* Tensor::tape() const { return p_ ? p_->tape : nullptr; }

// --- Tape ------------------------------------------------------------------

TapeScope::TapeScope(Tape& tape) : prev_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = prev_; }

Tape* active_tape() { return g_active_tape; }

void Tape::backward_from(const Tensor& loss) {
  if (!loss.defined() || loss.tape() != this || loss.tape_node() < 0) {
    throw ContractError("loss tensor is not a node of this tape");
  }
  if (!loss.is_scalar()) throw ContractError("backward requires a scalar loss");
  // Intermediate gradients are per-pass; only leaves accumulate across calls.
  for (auto& node : nodes_) node.out->grad.clear();
  grad_buf(nodes_[loss.tape_node()].out)[0] = 1.0;
  for (int i = loss.tape_node(); i >= 0; --i) {
    if (nodes_[i].out->grad.empty()) continue;  // does not feed the loss
    nodes_[i].pull();
  }
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.tape() == nullptr) {
    throw ContractError("loss is not attached to a tape");
  }
  loss.tape()->backward_from(loss);
}

namespace {

using P = OpCtx::P;

}  // namespace

// --- matmul family ---------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) throw DimensionError("matmul expects rank-2 tensors");
  int m = a.shape()[0], k = a.shape()[1];
  int k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2) throw DimensionError("matmul inner dimensions differ");
  Tensor out = Tensor::zeros({m, n});
  kernels::matmul_acc(kernels::active(), out.data().data(), a.data().data(),
                      b.data().data(), m, k, n);
  if (OpCtx::tracking({&a, &b})) {
    P pa = OpCtx::payload(a), pb = OpCtx::payload(b), po = OpCtx::payload(out);
    OpCtx::record("matmul", out, [pa, pb, po, m, k, n] {
      const auto& be = kernels::active();
      const double* go = po->grad.data();
      if (pa->requires_grad) {
        double* ga = grad_buf(pa).data();
        const double* bd = pb->data.data();
        for (int i = 0; i < m; ++i) {
          for (int t = 0; t < k; ++t) {
            ga[i * k + t] += be.dot(go + i * n, bd + t * n, n);
          }
        }
      }
      if (pb->requires_grad) {
        double* gb = grad_buf(pb).data();
        const double* ad = pa->data.data();
        for (int i = 0; i < m; ++i) {
          for (int t = 0; t < k; ++t) {
            be.axpy(gb + t * n, ad[i * k + t], go + i * n, n);
          }
        }
      }
    });
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) throw DimensionError("matmul_nt expects rank-2 tensors");
  int m = a.shape()[0], k = a.shape()[1];
  int n = b.shape()[0];
  if (b.shape()[1] != k) throw DimensionError("matmul_nt inner dimensions differ");
  Tensor out = Tensor::zeros({m, n});
  {
    const auto& be = kernels::active();
    double* od = out.data().data();
    const double* ad = a.data().data();
    const double* bd = b.data().data();
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) od[i * n + j] = be.dot(ad + i * k, bd + j * k, k);
    }
  }
  if (OpCtx::tracking({&a, &b})) {
    P pa = OpCtx::payload(a), pb = OpCtx::payload(b), po = OpCtx::payload(out);
    OpCtx::record("matmul_nt", out, [pa, pb, po, m, k, n] {
      const auto& be = kernels::active();
      const double* go = po->grad.data();
      if (pa->requires_grad) {
        double* ga = grad_buf(pa).data();
        const double* bd = pb->data.data();
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < n; ++j) be.axpy(ga + i * k, go[i * n + j], bd + j * k, k);
        }
      }
      if (pb->requires_grad) {
        double* gb = grad_buf(pb).data();
        const double* ad = pa->data.data();
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < n; ++j) be.axpy(gb + j * k, go[i * n + j], ad + i * k, k);
        }
      }
    });
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 2 || w.rank() != 2 || b.rank() != 1) {
    throw DimensionError("linear expects x[m,in], w[in,out], b[out]");
  }
  int m = x.shape()[0], in = x.shape()[1];
  int out_dim = w.shape()[1];
  if (w.shape()[0] != in || b.shape()[0] != out_dim) {
    throw DimensionError("linear shapes are inconsistent");
  }
  Tensor out = Tensor::zeros({m, out_dim});
  {
    double* od = out.data().data();
    const double* bd = b.data().data();
    for (int i = 0; i < m; ++i) std::memcpy(od + i * out_dim, bd, sizeof(double) * out_dim);
    kernels::matmul_acc(kernels::active(), od, x.data().data(), w.data().data(),
                        m, in, out_dim);
  }
  if (OpCtx::tracking({&x, &w, &b})) {
    P px = OpCtx::payload(x), pw = OpCtx::payload(w), pb = OpCtx::payload(b),
      po = OpCtx::payload(out);
    OpCtx::record("linear", out, [px, pw, pb, po, m, in, out_dim] {
      const auto& be = kernels::active();
      const double* go = po->grad.data();
      if (px->requires_grad) {
        double* gx = grad_buf(px).data();
        const double* wd = pw->data.data();
        for (int i = 0; i < m; ++i) {
          for (int t = 0; t < in; ++t) {
            gx[i * in + t] += be.dot(go + i * out_dim, wd + t * out_dim, out_dim);
          }
        }
      }
      if (pw->requires_grad) {
        double* gw = grad_buf(pw).data();
        const double* xd = px->data.data();
        for (int i = 0; i < m; ++i) {
          for (int t = 0; t < in; ++t) {
            be.axpy(gw + t * out_dim, xd[i * in + t], go + i * out_dim, out_dim);
          }
        }
      }
      if (pb->requires_grad) {
        double* gb = grad_buf(pb).data();
        for (int i = 0; i < m; ++i) be.axpy(gb, 1.0, go + i * out_dim, out_dim);
      }
    });
  }
  return out;
}

// --- convolution -----------------------------------------------------------

namespace {

struct ConvPlan {
  int c_in, c_out, dims;
  int in_sz[3], k_sz[3], out_sz[3], stride[3], pad[3];
  int64_t in_spatial, out_spatial, k_spatial;
};

ConvPlan plan_conv(const Tensor& input, const Tensor& weight, const Tensor& bias,
                   int stride, int padding, int dims) {
  if (dims < 1 || dims > 3) throw DimensionError("conv_nd supports dims 1..3");
  if (stride < 1 || padding < 0) throw DimensionError("conv_nd bad stride/padding");
  if (input.rank() != dims + 1) throw DimensionError("conv_nd input rank mismatch");
  if (weight.rank() != dims + 2) throw DimensionError("conv_nd weight rank mismatch");
  if (bias.rank() != 1) throw DimensionError("conv_nd bias must be rank 1");
  ConvPlan pl{};
  pl.dims = dims;
  pl.c_in = input.shape()[0];
  pl.c_out = weight.shape()[0];
  if (weight.shape()[1] != pl.c_in) throw DimensionError("conv_nd channel mismatch");
  if (bias.shape()[0] != pl.c_out) throw DimensionError("conv_nd bias size mismatch");
  // Leading fake axes of extent 1 make a single 3-D loop cover dims 1..3;
  // stride/padding only apply to real axes.
  for (int d = 0; d < 3; ++d) {
    int rd = d - (3 - dims);  // real-axis index or negative
    pl.in_sz[d] = rd >= 0 ? input.shape()[1 + rd] : 1;
    pl.k_sz[d] = rd >= 0 ? weight.shape()[2 + rd] : 1;
    pl.stride[d] = rd >= 0 ? stride : 1;
    pl.pad[d] = rd >= 0 ? padding : 0;
    int out = (pl.in_sz[d] + 2 * pl.pad[d] - pl.k_sz[d]) / pl.stride[d] + 1;
    if (pl.in_sz[d] + 2 * pl.pad[d] - pl.k_sz[d] < 0 || out < 1) {
      throw DimensionError("conv_nd output size would be non-positive");
    }
    pl.out_sz[d] = out;
  }
  pl.in_spatial = int64_t(pl.in_sz[0]) * pl.in_sz[1] * pl.in_sz[2];
  pl.out_spatial = int64_t(pl.out_sz[0]) * pl.out_sz[1] * pl.out_sz[2];
  pl.k_spatial = int64_t(pl.k_sz[0]) * pl.k_sz[1] * pl.k_sz[2];
  return pl;
}

void conv_forward(const ConvPlan& pl, const double* in, const double* w,
                  const double* bias, double* out) {
  for (int co = 0; co < pl.c_out; ++co) {
    const double* wc = w + int64_t(co) * pl.c_in * pl.k_spatial;
    double* oc = out + int64_t(co) * pl.out_spatial;
    for (int o0 = 0; o0 < pl.out_sz[0]; ++o0) {
      for (int o1 = 0; o1 < pl.out_sz[1]; ++o1) {
        for (int o2 = 0; o2 < pl.out_sz[2]; ++o2) {
          double acc = bias[co];
          int base0 = o0 * pl.stride[0] - pl.pad[0];
          int base1 = o1 * pl.stride[1] - pl.pad[1];
          int base2 = o2 * pl.stride[2] - pl.pad[2];
          for (int ci = 0; ci < pl.c_in; ++ci) {
            const double* icn = in + int64_t(ci) * pl.in_spatial;
            const double* wk = wc + int64_t(ci) * pl.k_spatial;
            for (int k0 = 0; k0 < pl.k_sz[0]; ++k0) {
              int i0 = base0 + k0;
              if (i0 < 0 || i0 >= pl.in_sz[0]) continue;
              for (int k1 = 0; k1 < pl.k_sz[1]; ++k1) {
                int i1 = base1 + k1;
                if (i1 < 0 || i1 >= pl.in_sz[1]) continue;
                const double* irow = icn + (int64_t(i0) * pl.in_sz[1] + i1) * pl.in_sz[2];
                const double* wrow = wk + (int64_t(k0) * pl.k_sz[1] + k1) * pl.k_sz[2];
                int k2lo = std::max(0, -base2);
                int k2hi = std::min(pl.k_sz[2], pl.in_sz[2] - base2);
                for (int k2 = k2lo; k2 < k2hi; ++k2) {
                  acc += wrow[k2] * irow[base2 + k2];
                }
              }
            }
          }
          oc[(int64_t(o0) * pl.out_sz[1] + o1) * pl.out_sz[2] + o2] = acc;
        }
      }
    }
  }
}

void conv_backward(const ConvPlan& pl, const double* in, const double* w,
                   const double* gout, double* gin, double* gw, double* gbias) {
  for (int co = 0; co < pl.c_out; ++co) {
    const double* wc = w + int64_t(co) * pl.c_in * pl.k_spatial;
    double* gwc = gw ? gw + int64_t(co) * pl.c_in * pl.k_spatial : nullptr;
    const double* goc = gout + int64_t(co) * pl.out_spatial;
    for (int o0 = 0; o0 < pl.out_sz[0]; ++o0) {
      for (int o1 = 0; o1 < pl.out_sz[1]; ++o1) {
        for (int o2 = 0; o2 < pl.out_sz[2]; ++o2) {
          double g = goc[(int64_t(o0) * pl.out_sz[1] + o1) * pl.out_sz[2] + o2];
          if (gbias) gbias[co] += g;
          if (g == 0.0 || (!gin && !gw)) continue;
          int base0 = o0 * pl.stride[0] - pl.pad[0];
          int base1 = o1 * pl.stride[1] - pl.pad[1];
          int base2 = o2 * pl.stride[2] - pl.pad[2];
          for (int ci = 0; ci < pl.c_in; ++ci) {
            const double* icn = in + int64_t(ci) * pl.in_spatial;
            double* gicn = gin ? gin + int64_t(ci) * pl.in_spatial : nullptr;
            const double* wk = wc + int64_t(ci) * pl.k_spatial;
            double* gwk = gwc ? gwc + int64_t(ci) * pl.k_spatial : nullptr;
            for (int k0 = 0; k0 < pl.k_sz[0]; ++k0) {
              int i0 = base0 + k0;
              if (i0 < 0 || i0 >= pl.in_sz[0]) continue;
              for (int k1 = 0; k1 < pl.k_sz[1]; ++k1) {
                int i1 = base1 + k1;
                if (i1 < 0 || i1 >= pl.in_sz[1]) continue;
                int64_t ibase = (int64_t(i0) * pl.in_sz[1] + i1) * pl.in_sz[2];
                int64_t kbase = (int64_t(k0) * pl.k_sz[1] + k1) * pl.k_sz[2];
                int k2lo = std::max(0, -base2);
                int k2hi = std::min(pl.k_sz[2], pl.in_sz[2] - base2);
                for (int k2 = k2lo; k2 < k2hi; ++k2) {
                  int64_t ii = ibase + base2 + k2;
                  if (gicn) gicn[ii] += g * wk[kbase + k2];
                  if (gwk) gwk[kbase + k2] += g * icn[ii];
                }
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv_nd(const Tensor& input, const Tensor& weight, const Tensor& bias,
               int stride, int padding, int dims) {
  ConvPlan pl = plan_conv(input, weight, bias, stride, padding, dims);
  std::vector<int> out_shape{pl.c_out};
  for (int d = 3 - dims; d < 3; ++d) out_shape.push_back(pl.out_sz[d]);
  Tensor out = Tensor::zeros(out_shape);
  conv_forward(pl, input.data().data(), weight.data().data(), bias.data().data(),
               out.data().data());
  if (OpCtx::tracking({&input, &weight, &bias})) {
    P pi = OpCtx::payload(input), pw = OpCtx::payload(weight),
      pb = OpCtx::payload(bias), po = OpCtx::payload(out);
    OpCtx::record("conv_nd", out, [pi, pw, pb, po, pl] {
      conv_backward(pl, pi->data.data(), pw->data.data(), po->grad.data(),
                    pi->requires_grad ? grad_buf(pi).data() : nullptr,
                    pw->requires_grad ? grad_buf(pw).data() : nullptr,
                    pb->requires_grad ? grad_buf(pb).data() : nullptr);
    });
  }
  return out;
}

// --- activations -----------------------------------------------------------

Tensor activation(const Tensor& x, Act kind) {
  switch (kind) {
    case Act::Tanh:
    case Act::Relu:
    case Act::Softplus:
    case Act::Sinh:
      break;
    default:
      throw ConfigError("unknown activation kind");
  }
  Tensor out = Tensor::zeros(x.shape());
  {
    auto xd = x.data();
    auto od = out.data();
    switch (kind) {
      case Act::Tanh:
        for (int64_t i = 0; i < x.size(); ++i) od[i] = std::tanh(xd[i]);
        break;
      case Act::Relu:
        for (int64_t i = 0; i < x.size(); ++i) od[i] = xd[i] > 0 ? xd[i] : 0.0;
        break;
      case Act::Softplus:
        for (int64_t i = 0; i < x.size(); ++i) od[i] = stable_softplus(xd[i]);
        break;
      case Act::Sinh:
        for (int64_t i = 0; i < x.size(); ++i) od[i] = std::sinh(xd[i]);
        break;
    }
  }
  if (OpCtx::tracking({&x})) {
    P px = OpCtx::payload(x), po = OpCtx::payload(out);
    OpCtx::record("activation", out, [px, po, kind] {
      double* gx = grad_buf(px).data();
      const double* go = po->grad.data();
      const double* xd = px->data.data();
      const double* od = po->data.data();
      int64_t n = static_cast<int64_t>(px->data.size());
      switch (kind) {
        case Act::Tanh:
          for (int64_t i = 0; i < n; ++i) gx[i] += go[i] * (1.0 - od[i] * od[i]);
          break;
        case Act::Relu:
          for (int64_t i = 0; i < n; ++i) gx[i] += xd[i] > 0 ? go[i] : 0.0;
          break;
        case Act::Softplus:
          for (int64_t i = 0; i < n; ++i) gx[i] += go[i] * sigmoid(xd[i]);
          break;
        case Act::Sinh:
          for (int64_t i = 0; i < n; ++i) gx[i] += go[i] * std::cosh(xd[i]);
          break;
      }
    });
  }
  return out;
}

// --- elementwise binary ----------------------------------------------------

Tensor ewise(const Tensor& a, const Tensor& b, Ewise kind) {
  bool scalar_b = b.is_scalar() && a.size() != 1;
  if (!scalar_b && a.shape() != b.shape()) {
    if (b.is_scalar()) {
      scalar_b = true;  // both scalar-sized but different rank
    } else {
      throw DimensionError("ewise operands must match shapes (or b scalar)");
    }
  }
  Tensor out = Tensor::zeros(a.shape());
  int64_t n = a.size();
  {
    const auto& be = kernels::active();
    const double* ad = a.data().data();
    double* od = out.data().data();
    if (scalar_b) {
      double bv = b.data()[0];
      switch (kind) {
        case Ewise::Add:
          for (int64_t i = 0; i < n; ++i) od[i] = ad[i] + bv;
          break;
        case Ewise::Sub:
          for (int64_t i = 0; i < n; ++i) od[i] = ad[i] - bv;
          break;
        case Ewise::Mul:
          for (int64_t i = 0; i < n; ++i) od[i] = ad[i] * bv;
          break;
      }
    } else {
      const double* bd = b.data().data();
      switch (kind) {
        case Ewise::Add: be.vadd(od, ad, bd, n); break;
        case Ewise::Sub: be.vsub(od, ad, bd, n); break;
        case Ewise::Mul: be.vmul(od, ad, bd, n); break;
      }
    }
  }
  if (OpCtx::tracking({&a, &b})) {
    P pa = OpCtx::payload(a), pb = OpCtx::payload(b), po = OpCtx::payload(out);
    OpCtx::record("ewise", out, [pa, pb, po, kind, scalar_b, n] {
      const auto& be = kernels::active();
      const double* go = po->grad.data();
      if (pa->requires_grad) {
        double* ga = grad_buf(pa).data();
        switch (kind) {
          case Ewise::Add:
          case Ewise::Sub:
            be.axpy(ga, 1.0, go, n);
            break;
          case Ewise::Mul:
            if (scalar_b) {
              be.axpy(ga, pb->data[0], go, n);
            } else {
              be.vfma(ga, go, pb->data.data(), n);
            }
            break;
        }
      }
      if (pb->requires_grad) {
        double* gb = grad_buf(pb).data();
        double sign = kind == Ewise::Sub ? -1.0 : 1.0;
        if (scalar_b) {
          // scalar b accumulates a full reduction
          switch (kind) {
            case Ewise::Add:
            case Ewise::Sub:
              gb[0] += sign * be.sum(go, n);
              break;
            case Ewise::Mul:
              gb[0] += be.dot(go, pa->data.data(), n);
              break;
          }
        } else {
          switch (kind) {
            case Ewise::Add:
              be.axpy(gb, 1.0, go, n);
              break;
            case Ewise::Sub:
              be.axpy(gb, -1.0, go, n);
              break;
            case Ewise::Mul:
              be.vfma(gb, go, pa->data.data(), n);
              break;
          }
        }
      }
    });
  }
  return out;
}

// --- pooling ---------------------------------------------------------------

Tensor adaptive_avg_pool2d(const Tensor& x, int out_h, int out_w) {
  if (x.rank() != 3) throw DimensionError("adaptive_avg_pool2d expects [C,H,W]");
  int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  if (out_h < 1 || out_w < 1 || out_h > h || out_w > w) {
    throw DimensionError("adaptive_avg_pool2d output exceeds input extent");
  }
  Tensor out = Tensor::zeros({c, out_h, out_w});
  auto win = [](int i, int in_sz, int out_sz) {
    int lo = (i * in_sz) / out_sz;
    int hi = ((i + 1) * in_sz + out_sz - 1) / out_sz;  // ceil
    return std::pair<int, int>(lo, hi);
  };
  {
    const double* xd = x.data().data();
    double* od = out.data().data();
    for (int ci = 0; ci < c; ++ci) {
      for (int i = 0; i < out_h; ++i) {
        auto [r0, r1] = win(i, h, out_h);
        for (int j = 0; j < out_w; ++j) {
          auto [c0, c1] = win(j, w, out_w);
          double acc = 0.0;
          for (int r = r0; r < r1; ++r) {
            for (int cc = c0; cc < c1; ++cc) acc += xd[(int64_t(ci) * h + r) * w + cc];
          }
          od[(int64_t(ci) * out_h + i) * out_w + j] = acc / ((r1 - r0) * (c1 - c0));
        }
      }
    }
  }
  if (OpCtx::tracking({&x})) {
    P px = OpCtx::payload(x), po = OpCtx::payload(out);
    OpCtx::record("adaptive_avg_pool2d", out, [px, po, c, h, w, out_h, out_w, win] {
      double* gx = grad_buf(px).data();
      const double* go = po->grad.data();
      for (int ci = 0; ci < c; ++ci) {
        for (int i = 0; i < out_h; ++i) {
          auto [r0, r1] = win(i, h, out_h);
          for (int j = 0; j < out_w; ++j) {
            auto [c0, c1] = win(j, w, out_w);
            double g = go[(int64_t(ci) * out_h + i) * out_w + j] / ((r1 - r0) * (c1 - c0));
            for (int r = r0; r < r1; ++r) {
              for (int cc = c0; cc < c1; ++cc) gx[(int64_t(ci) * h + r) * w + cc] += g;
            }
          }
        }
      }
    });
  }
  return out;
}

// --- shape ops --------------------------------------------------------------

Tensor reshape(const Tensor& x, std::vector<int> shape) {
  check_shape(shape);
  if (shape_numel(shape) != x.size()) {
    throw DimensionError("reshape must preserve element count");
  }
  Tensor out = Tensor::from_data(std::move(shape), x.data());
  if (OpCtx::tracking({&x})) {
    P px = OpCtx::payload(x), po = OpCtx::payload(out);
    OpCtx::record("reshape", out, [px, po] {
      kernels::active().axpy(grad_buf(px).data(), 1.0, po->grad.data(),
                             px->data.size());
    });
  }
  return out;
}

namespace {

// Row-major block view along `axis`: outer repeats, per-x block length.
struct AxisBlocks {
  int64_t outer, block, total;
};

AxisBlocks axis_blocks(const std::vector<int>& shape, int axis) {
  AxisBlocks ab{1, 1, shape_numel(shape)};
  for (int d = 0; d < axis; ++d) ab.outer *= shape[d];
  for (size_t d = axis; d < shape.size(); ++d) ab.block *= shape[d];
  return ab;
}

}  // namespace

Tensor concat(const std::vector<Tensor>& xs, int axis) {
  if (xs.empty()) throw DimensionError("concat of zero tensors");
  const auto& s0 = xs[0].shape();
  if (axis < 0 || axis >= static_cast<int>(s0.size())) {
    throw DimensionError("concat axis out of range");
  }
  std::vector<int> out_shape = s0;
  for (size_t i = 1; i < xs.size(); ++i) {
    const auto& s = xs[i].shape();
    if (s.size() != s0.size()) throw DimensionError("concat rank mismatch");
    for (size_t d = 0; d < s.size(); ++d) {
      if (static_cast<int>(d) != axis && s[d] != s0[d]) {
        throw DimensionError("concat operands disagree off the concat axis");
      }
    }
    out_shape[axis] += s[axis];
  }
  Tensor out = Tensor::zeros(out_shape);
  AxisBlocks ob = axis_blocks(out_shape, axis);
  {
    double* od = out.data().data();
    int64_t offset = 0;
    for (const Tensor& x : xs) {
      AxisBlocks xb = axis_blocks(x.shape(), axis);
      const double* xd = x.data().data();
      for (int64_t o = 0; o < ob.outer; ++o) {
        std::memcpy(od + o * ob.block + offset, xd + o * xb.block,
                    sizeof(double) * xb.block);
      }
      offset += xb.block;
    }
  }
  bool track = false;
  if (g_active_tape) {
    for (const Tensor& x : xs) track = track || x.requires_grad();
  }
  if (track) {
    std::vector<P> parts;
    parts.reserve(xs.size());
    for (const Tensor& x : xs) parts.push_back(OpCtx::payload(x));
    P po = OpCtx::payload(out);
    std::vector<int64_t> blocks;
    for (const Tensor& x : xs) blocks.push_back(axis_blocks(x.shape(), axis).block);
    OpCtx::record("concat", out, [parts, po, blocks, ob] {
      const double* go = po->grad.data();
      int64_t offset = 0;
      for (size_t i = 0; i < parts.size(); ++i) {
        if (parts[i]->requires_grad) {
          double* gx = grad_buf(parts[i]).data();
          for (int64_t o = 0; o < ob.outer; ++o) {
            kernels::active().axpy(gx + o * blocks[i], 1.0,
                                   go + o * ob.block + offset, blocks[i]);
          }
        }
        offset += blocks[i];
      }
    });
  }
  return out;
}

Tensor slice(const Tensor& x, int axis, int start, int stop) {
  const auto& s = x.shape();
  if (axis < 0 || axis >= static_cast<int>(s.size())) {
    throw DimensionError("slice axis out of range");
  }
  if (start < 0 || stop > s[axis] || start >= stop) {
    throw DimensionError("slice bounds out of range");
  }
  std::vector<int> out_shape = s;
  out_shape[axis] = stop - start;
  int64_t inner = 1;
  for (size_t d = axis + 1; d < s.size(); ++d) inner *= s[d];
  AxisBlocks xb = axis_blocks(s, axis);
  int64_t out_block = int64_t(stop - start) * inner;
  Tensor out = Tensor::zeros(out_shape);
  {
    const double* xd = x.data().data();
    double* od = out.data().data();
    for (int64_t o = 0; o < xb.outer; ++o) {
      std::memcpy(od + o * out_block, xd + o * xb.block + start * inner,
                  sizeof(double) * out_block);
    }
  }
  if (OpCtx::tracking({&x})) {
    P px = OpCtx::payload(x), po = OpCtx::payload(out);
    int64_t off = start * inner;
    int64_t outer = xb.outer, xblock = xb.block;
    OpCtx::record("slice", out, [px, po, off, outer, xblock, out_block] {
      double* gx = grad_buf(px).data();
      const double* go = po->grad.data();
      for (int64_t o = 0; o < outer; ++o) {
        kernels::active().axpy(gx + o * xblock + off, 1.0, go + o * out_block,
                               out_block);
      }
    });
  }
  return out;
}

// --- reductions ------------------------------------------------------------

Tensor sum(const Tensor& x) {
  Tensor out = Tensor::scalar(kernels::active().sum(x.data().data(), x.size()));
  if (OpCtx::tracking({&x})) {
    P px = OpCtx::payload(x), po = OpCtx::payload(out);
    OpCtx::record("sum", out, [px, po] {
      double g = po->grad[0];
      double* gx = grad_buf(px).data();
      for (size_t i = 0; i < px->data.size(); ++i) gx[i] += g;
    });
  }
  return out;
}

Tensor sqrt_elem(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  {
    auto xd = x.data();
    auto od = out.data();
    for (int64_t i = 0; i < x.size(); ++i) od[i] = std::sqrt(xd[i]);
  }
  if (OpCtx::tracking({&x})) {
    P px = OpCtx::payload(x), po = OpCtx::payload(out);
    OpCtx::record("sqrt", out, [px, po] {
      double* gx = grad_buf(px).data();
      const double* go = po->grad.data();
      const double* od = po->data.data();
      for (size_t i = 0; i < px->data.size(); ++i) {
        // Subgradient 0 at exactly zero (loss terms sit at their minimum there).
        if (od[i] > 0) gx[i] += go[i] * 0.5 / od[i];
      }
    });
  }
  return out;
}

}  // namespace lnf
