#include "posekit/tensor.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <sstream>

#include "posekit/errors.hpp"
#include "posekit/rng.hpp"

namespace posekit {

namespace {

std::size_t shape_product(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeMismatch("tensor dims must be positive");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeMismatch(std::string(op) + ": shapes " + shape_str(a.shape()) + " vs " +
                        shape_str(b.shape()));
  }
}

// Last axis length and the number of leading slices.
void last_axis(const Tensor& t, std::size_t& slices, std::size_t& d) {
  if (t.rank() < 1) throw ShapeMismatch("tensor must have rank >= 1");
  d = static_cast<std::size_t>(t.dim(t.rank() - 1));
  slices = t.size() / d;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
  data_.assign(shape_product(shape_), 0.0);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_product(shape_)) {
    throw ShapeMismatch("data size does not match shape " + shape_str(shape_));
  }
}

Tensor Tensor::full(std::vector<int> shape, double value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

Tensor Tensor::uniform(std::vector<int> shape, std::uint64_t seed, double scale) {
  Tensor t(std::move(shape));
  SplitMix64 rng(seed);
  for (double& v : t.data_) v = scale * rng.next_signed();
  return t;
}

Tensor Tensor::bounded_uniform(std::vector<int> shape, std::uint64_t seed, double lo, double hi) {
  Tensor t(std::move(shape));
  SplitMix64 rng(seed);
  for (double& v : t.data_) {
    const double sign = (rng.next_double() < 0.5) ? -1.0 : 1.0;
    v = sign * rng.next_in(lo, hi);
  }
  return t;
}

Tensor Tensor::gaussian(std::vector<int> shape, std::uint64_t seed, double scale) {
  Tensor t(std::move(shape));
  GaussianSampler g(seed);
  for (double& v : t.data_) v = scale * g.next();
  return t;
}

Tensor Tensor::reshaped(std::vector<int> shape) const {
  if (shape_product(shape) != size()) {
    throw ShapeMismatch("reshape " + shape_str(shape_) + " -> " + shape_str(shape) +
                        " changes element count");
  }
  return Tensor(std::move(shape), data_);
}

void ensure_finite(const Tensor& t, const char* what) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) {
      throw NonFiniteValue(std::string(what) + ": non-finite entry at index " +
                           std::to_string(i));
    }
  }
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  ensure_finite(out, "add");
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  ensure_finite(out, "sub");
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  ensure_finite(out, "mul");
  return out;
}

Tensor scale(const Tensor& a, double s) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  ensure_finite(out, "scale");
  return out;
}

double sum(const Tensor& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i];
  return s;
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double mean_sq_error(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mean_sq_error");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeMismatch("matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const double av = a[static_cast<std::size_t>(i) * k + p];
      if (av == 0.0) continue;
      const std::size_t brow = static_cast<std::size_t>(p) * n;
      const std::size_t orow = static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) out[orow + j] += av * b[brow + j];
    }
  }
  ensure_finite(out, "matmul");
  return out;
}

void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& d_out,
                     Tensor& d_a, Tensor& d_b) {
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (d_out.rank() != 2 || d_out.dim(0) != m || d_out.dim(1) != n) {
    throw ShapeMismatch("matmul_backward: bad upstream gradient shape");
  }
  // dA = dC B^T
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) {
        s += d_out[static_cast<std::size_t>(i) * n + j] * b[static_cast<std::size_t>(p) * n + j];
      }
      d_a[static_cast<std::size_t>(i) * k + p] += s;
    }
  }
  // dB = A^T dC
  for (int p = 0; p < k; ++p) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < m; ++i) {
        s += a[static_cast<std::size_t>(i) * k + p] * d_out[static_cast<std::size_t>(i) * n + j];
      }
      d_b[static_cast<std::size_t>(p) * n + j] += s;
    }
  }
}

Tensor layer_norm(const Tensor& x, double eps) {
  std::size_t slices, d;
  last_axis(x, slices, d);
  Tensor out = x;
  for (std::size_t s = 0; s < slices; ++s) {
    double* row = out.data() + s * d;
    double mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean += row[i];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double c = row[i] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);  // population variance
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < d; ++i) row[i] = (row[i] - mean) * inv;
  }
#ifdef POSEKIT_FAULT_LAYERNORM
  if (out.size() > 0) out[0] *= 1.02;  // deliberate corruption for selftest drills
#endif
  ensure_finite(out, "layer_norm");
  return out;
}

void layer_norm_backward(const Tensor& x, const Tensor& d_out, Tensor& d_x, double eps) {
  require_same_shape(x, d_out, "layer_norm_backward");
  std::size_t slices, d;
  last_axis(x, slices, d);
  const double nd = static_cast<double>(d);
  for (std::size_t s = 0; s < slices; ++s) {
    const double* xr = x.data() + s * d;
    const double* gr = d_out.data() + s * d;
    double* dr = d_x.data() + s * d;

    double mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean += xr[i];
    mean /= nd;
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double c = xr[i] - mean;
      var += c * c;
    }
    var /= nd;
    const double inv = 1.0 / std::sqrt(var + eps);

    double g_mean = 0.0, gx_mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double xhat = (xr[i] - mean) * inv;
      g_mean += gr[i];
      gx_mean += gr[i] * xhat;
    }
    g_mean /= nd;
    gx_mean /= nd;
    for (std::size_t i = 0; i < d; ++i) {
      const double xhat = (xr[i] - mean) * inv;
      dr[i] += inv * (gr[i] - g_mean - xhat * gx_mean);
    }
  }
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return cdf + x * pdf;
}

MlpParams::MlpParams(int in, int hidden, int out, std::uint64_t seed) {
  const double s1 = 1.0 / std::sqrt(static_cast<double>(in));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  w1 = Parameter(Tensor::uniform({in, hidden}, seed, s1));
  b1 = Parameter(Tensor::zeros({hidden}));
  w2 = Parameter(Tensor::uniform({hidden, out}, seed + 1, s2));
  b2 = Parameter(Tensor::zeros({out}));
}

void MlpParams::zero_output_layer() {
  w2.value = Tensor::zeros(w2.value.shape());
  b2.value = Tensor::zeros(b2.value.shape());
}

std::vector<Parameter*> MlpParams::parameters() { return {&w1, &b1, &w2, &b2}; }

Tensor mlp_forward(const Tensor& x, const MlpParams& p) {
  const int in = p.w1.value.dim(0), hidden = p.w1.value.dim(1), out = p.w2.value.dim(1);
  if (x.dim(x.rank() - 1) != in) {
    throw ShapeMismatch("mlp_forward: input channels " + std::to_string(x.dim(x.rank() - 1)) +
                        " != " + std::to_string(in));
  }
  std::size_t rows, d;
  last_axis(x, rows, d);
  const Tensor x2 = x.reshaped({static_cast<int>(rows), in});

  Tensor h = matmul(x2, p.w1.value);
  for (std::size_t r = 0; r < rows; ++r) {
    for (int j = 0; j < hidden; ++j) {
      double& v = h[r * static_cast<std::size_t>(hidden) + static_cast<std::size_t>(j)];
      v = gelu(v + p.b1.value[static_cast<std::size_t>(j)]);
    }
  }
  Tensor y = matmul(h, p.w2.value);
  for (std::size_t r = 0; r < rows; ++r) {
    for (int j = 0; j < out; ++j) {
      y[r * static_cast<std::size_t>(out) + static_cast<std::size_t>(j)] +=
          p.b2.value[static_cast<std::size_t>(j)];
    }
  }
  std::vector<int> out_shape = x.shape();
  out_shape.back() = out;
  return y.reshaped(std::move(out_shape));
}

void mlp_backward(const Tensor& x, MlpParams& p, const Tensor& d_out, Tensor& d_x) {
  const int in = p.w1.value.dim(0), hidden = p.w1.value.dim(1), out = p.w2.value.dim(1);
  std::size_t rows, d;
  last_axis(x, rows, d);
  const Tensor x2 = x.reshaped({static_cast<int>(rows), in});
  const Tensor g2 = d_out.reshaped({static_cast<int>(rows), out});

  // Recompute pre-activation and hidden activation.
  Tensor pre = matmul(x2, p.w1.value);
  for (std::size_t r = 0; r < rows; ++r) {
    for (int j = 0; j < hidden; ++j) {
      pre[r * static_cast<std::size_t>(hidden) + static_cast<std::size_t>(j)] +=
          p.b1.value[static_cast<std::size_t>(j)];
    }
  }
  Tensor h = pre;
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = gelu(h[i]);

  // Output layer.
  Tensor d_h(std::vector<int>{static_cast<int>(rows), hidden});
  matmul_backward(h, p.w2.value, g2, d_h, p.w2.grad);
  for (std::size_t r = 0; r < rows; ++r) {
    for (int j = 0; j < out; ++j) {
      p.b2.grad[static_cast<std::size_t>(j)] +=
          g2[r * static_cast<std::size_t>(out) + static_cast<std::size_t>(j)];
    }
  }

  // GELU.
  for (std::size_t i = 0; i < d_h.size(); ++i) d_h[i] *= gelu_grad(pre[i]);

  // Input layer.
  Tensor d_x2(std::vector<int>{static_cast<int>(rows), in});
  matmul_backward(x2, p.w1.value, d_h, d_x2, p.w1.grad);
  for (std::size_t r = 0; r < rows; ++r) {
    for (int j = 0; j < hidden; ++j) {
      p.b1.grad[static_cast<std::size_t>(j)] +=
          d_h[r * static_cast<std::size_t>(hidden) + static_cast<std::size_t>(j)];
    }
  }
  for (std::size_t i = 0; i < d_x.size(); ++i) d_x[i] += d_x2[i];
}

Tensor softmax_rows(const Tensor& logits) {
  if (logits.rank() != 2) throw ShapeMismatch("softmax_rows expects rank 2");
  const int n = logits.dim(0), m = logits.dim(1);
  Tensor out = logits;
  for (int i = 0; i < n; ++i) {
    double* row = out.data() + static_cast<std::size_t>(i) * m;
    const double mx = *std::max_element(row, row + m);
    double z = 0.0;
    for (int j = 0; j < m; ++j) {
      row[j] = std::exp(row[j] - mx);
      z += row[j];
    }
    for (int j = 0; j < m; ++j) row[j] /= z;
  }
  ensure_finite(out, "softmax_rows");
  return out;
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2 || q.dim(1) != k.dim(1) ||
      k.dim(0) != v.dim(0)) {
    throw ShapeMismatch("attention: q" + shape_str(q.shape()) + " k" + shape_str(k.shape()) +
                        " v" + shape_str(v.shape()));
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.dim(1)));
  Tensor kt({k.dim(1), k.dim(0)});
  for (int i = 0; i < k.dim(0); ++i) {
    for (int j = 0; j < k.dim(1); ++j) {
      kt[static_cast<std::size_t>(j) * k.dim(0) + i] = k[static_cast<std::size_t>(i) * k.dim(1) + j];
    }
  }
  const Tensor weights = softmax_rows(scale(matmul(q, kt), inv_sqrt_d));
  return matmul(weights, v);
}

void attention_backward(const Tensor& q, const Tensor& k, const Tensor& v,
                        const Tensor& d_out, Tensor& d_q, Tensor& d_k, Tensor& d_v) {
  const int n = q.dim(0), d = q.dim(1), m = k.dim(0);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  Tensor kt({d, m});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < d; ++j) {
      kt[static_cast<std::size_t>(j) * m + i] = k[static_cast<std::size_t>(i) * d + j];
    }
  }
  const Tensor a = softmax_rows(scale(matmul(q, kt), inv_sqrt_d));  // [n, m]

  // dV = A^T dOut
  for (int p = 0; p < m; ++p) {
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        s += a[static_cast<std::size_t>(i) * m + p] * d_out[static_cast<std::size_t>(i) * d + j];
      }
      d_v[static_cast<std::size_t>(p) * d + j] += s;
    }
  }

  // dA = dOut V^T, then through the row softmax: dS_i = A_i (dA_i - <dA_i, A_i>)
  Tensor d_scores({n, m});
  for (int i = 0; i < n; ++i) {
    double inner = 0.0;
    std::vector<double> da(static_cast<std::size_t>(m));
    for (int p = 0; p < m; ++p) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) {
        s += d_out[static_cast<std::size_t>(i) * d + j] * v[static_cast<std::size_t>(p) * d + j];
      }
      da[static_cast<std::size_t>(p)] = s;
      inner += s * a[static_cast<std::size_t>(i) * m + p];
    }
    for (int p = 0; p < m; ++p) {
      d_scores[static_cast<std::size_t>(i) * m + p] =
          a[static_cast<std::size_t>(i) * m + p] * (da[static_cast<std::size_t>(p)] - inner);
    }
  }

  // scores = q k^T / sqrt(d)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int p = 0; p < m; ++p) {
        s += d_scores[static_cast<std::size_t>(i) * m + p] * k[static_cast<std::size_t>(p) * d + j];
      }
      d_q[static_cast<std::size_t>(i) * d + j] += s * inv_sqrt_d;
    }
  }
  for (int p = 0; p < m; ++p) {
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        s += d_scores[static_cast<std::size_t>(i) * m + p] * q[static_cast<std::size_t>(i) * d + j];
      }
      d_k[static_cast<std::size_t>(p) * d + j] += s * inv_sqrt_d;
    }
  }
}

void sgd_step(const std::vector<Parameter*>& params, double lr) {
  for (Parameter* p : params) {
    if (!p->value.same_shape(p->grad)) throw ShapeMismatch("sgd_step: value/grad shape mismatch");
    for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] -= lr * p->grad[i];
    ensure_finite(p->value, "sgd_step");
    p->zero_grad();
  }
}

double finite_diff_check(const std::function<double(const Tensor&)>& f,
                         const Tensor& x, const Tensor& analytic_grad, double eps) {
  if (!x.same_shape(analytic_grad)) {
    throw ShapeMismatch("finite_diff_check: gradient shape mismatch");
  }
  if (eps < 1e-7 || eps > 1e-3) {
    throw Error("finite_diff_check: eps must lie in [1e-7, 1e-3]");
  }
  Tensor probe = x;
  double max_rel = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double fp = f(probe);
    probe[i] = orig - eps;
    const double fm = f(probe);
    probe[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NonFiniteValue("finite_diff_check: non-finite function value");
    }
    const double fd = (fp - fm) / (2.0 * eps);
    const double an = analytic_grad[i];
    const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

std::string dump_tensor(const Tensor& t) {
  std::string out;
  for (int i = 0; i < t.rank(); ++i) {
    if (i) out.push_back(' ');
    out += std::to_string(t.dim(i));
  }
  out.push_back('\n');
  char buf[64];
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), t[i], std::chars_format::general, 17);
    out.append(buf, res.ptr);
    out.push_back(((i + 1) % 8 == 0) ? '\n' : ' ');
  }
  if (!out.empty() && out.back() == ' ') out.back() = '\n';
  return out;
}

Tensor parse_tensor(const std::string& text) {
  std::istringstream iss(text);
  std::string header;
  if (!std::getline(iss, header)) throw ShapeMismatch("parse_tensor: missing shape header");
  std::vector<int> shape;
  {
    std::istringstream hs(header);
    int d = 0;
    while (hs >> d) shape.push_back(d);
  }
  if (shape.empty()) throw ShapeMismatch("parse_tensor: empty shape header");
  const std::size_t n = shape_product(shape);
  std::vector<double> data;
  data.reserve(n);
  std::string tok;
  while (data.size() < n && iss >> tok) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
      throw NumericError("parse_tensor: bad value '" + tok + "'");
    }
    data.push_back(v);
  }
  if (data.size() != n) throw ShapeMismatch("parse_tensor: value count does not match shape");
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace posekit
