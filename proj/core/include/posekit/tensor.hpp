#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

namespace posekit {

/// Dense row-major double tensor. Every op validates shapes and checks its
/// output for NaN/Inf (NonFiniteValue).
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, double value);
  /// Entries uniform in [-scale, scale), SplitMix64(seed).
  static Tensor uniform(std::vector<int> shape, std::uint64_t seed, double scale = 1.0);
  /// Entries with random sign and magnitude uniform in [lo, hi); keeps
  /// finite-difference probes away from the relative-error noise floor.
  static Tensor bounded_uniform(std::vector<int> shape, std::uint64_t seed, double lo, double hi);
  /// Entries standard normal times `scale`, SplitMix64(seed) + Box-Muller.
  static Tensor gaussian(std::vector<int> shape, std::uint64_t seed, double scale = 1.0);

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  Tensor reshaped(std::vector<int> shape) const;

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool operator==(const Tensor& o) const = default;

private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

/// Trainable value + accumulated gradient, always shape-matched.
struct Parameter {
  Tensor value;
  Tensor grad;

  Parameter() = default;
  explicit Parameter(Tensor v) : value(std::move(v)), grad(Tensor::zeros(value.shape())) {}

  void zero_grad() { grad = Tensor::zeros(value.shape()); }
};

/// Throws NonFiniteValue naming `what` if any entry is NaN/Inf.
void ensure_finite(const Tensor& t, const char* what);

// ---- elementwise helpers ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // Hadamard
Tensor scale(const Tensor& a, double s);
double sum(const Tensor& a);
double dot(const Tensor& a, const Tensor& b);
double mean_sq_error(const Tensor& a, const Tensor& b);

// ---- matmul ----
/// a[m,k] * b[k,n] -> [m,n].
Tensor matmul(const Tensor& a, const Tensor& b);
/// dA = dC B^T, dB = A^T dC, accumulated into the outputs.
void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& d_out,
                     Tensor& d_a, Tensor& d_b);

// ---- layer norm (no affine; population variance over the last axis) ----
Tensor layer_norm(const Tensor& x, double eps = 1e-5);
/// Gradient of layer_norm w.r.t. x, accumulated into d_x.
void layer_norm_backward(const Tensor& x, const Tensor& d_out, Tensor& d_x,
                         double eps = 1e-5);

// ---- GELU (erf form) ----
double gelu(double x);
double gelu_grad(double x);

// ---- two-layer MLP: x W1 + b1 -> GELU -> W2 + b2, over the last axis ----
struct MlpParams {
  Parameter w1, b1, w2, b2;

  MlpParams() = default;
  MlpParams(int in, int hidden, int out, std::uint64_t seed);
  /// Zero the output layer so the fresh MLP maps everything to zero.
  void zero_output_layer();
  std::vector<Parameter*> parameters();
};

Tensor mlp_forward(const Tensor& x, const MlpParams& p);
/// Accumulates into d_x and the parameter grads of p.
void mlp_backward(const Tensor& x, MlpParams& p, const Tensor& d_out, Tensor& d_x);

// ---- scaled dot-product attention: softmax(q k^T / sqrt(d)) v ----
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v);
void attention_backward(const Tensor& q, const Tensor& k, const Tensor& v,
                        const Tensor& d_out, Tensor& d_q, Tensor& d_k, Tensor& d_v);

/// Row-wise softmax with max subtraction (exposed for tests).
Tensor softmax_rows(const Tensor& logits);

// ---- optimizer ----
/// value <- value - lr * grad for every parameter; grads are zeroed.
void sgd_step(const std::vector<Parameter*>& params, double lr);

// ---- gradient checking ----
/// Central finite differences of scalar f around x against analytic_grad.
/// Returns max over coordinates of |fd - an| / max(|fd|, |an|, 1e-8).
double finite_diff_check(const std::function<double(const Tensor&)>& f,
                         const Tensor& x, const Tensor& analytic_grad,
                         double eps = 1e-5);

// ---- text dump: "d0 d1 ... dk\n" then values at full precision ----
std::string dump_tensor(const Tensor& t);
Tensor parse_tensor(const std::string& text);

}  // namespace posekit
