#include "posekit/tai.hpp"

#include <cmath>
#include <cstring>

#include "posekit/errors.hpp"

namespace posekit {

namespace {

void require_features(const Tensor& t, const char* what) {
  if (t.rank() != 3) throw ShapeMismatch(std::string(what) + " must be [p, f, d]");
}

// Copy patch i of [p, f, d] into a [f, d] tensor.
Tensor patch_slice(const Tensor& z, int i) {
  const int f = z.dim(1), d = z.dim(2);
  Tensor out({f, d});
  std::memcpy(out.data(), z.data() + static_cast<std::size_t>(i) * f * d,
              sizeof(double) * static_cast<std::size_t>(f) * d);
  return out;
}

void patch_accumulate(Tensor& z, int i, const Tensor& delta) {
  const int f = z.dim(1), d = z.dim(2);
  double* dst = z.data() + static_cast<std::size_t>(i) * f * d;
  for (std::size_t j = 0; j < delta.size(); ++j) dst[j] += delta[j];
}

}  // namespace

TaiParams TaiParams::init(int patches_in, int patches_out, int feature_dim, std::uint64_t seed) {
  TaiParams p;
  p.gamma = Parameter(Tensor::full({feature_dim}, 1.0));
  p.beta = Parameter(Tensor::zeros({feature_dim}));
  // Channel map starts at zero so a fresh module injects exactly nothing.
  p.channel_w = Parameter(Tensor::zeros({4, feature_dim}));
  p.channel_b = Parameter(Tensor::zeros({feature_dim}));
  p.patch_map = Parameter(
      Tensor::uniform({patches_in, patches_out}, seed, 1.0 / std::sqrt(patches_in)));
  return p;
}

std::vector<Parameter*> TaiParams::parameters() {
  return {&gamma, &beta, &channel_w, &channel_b, &patch_map};
}

Tensor align_pose_latent(const PoseLatent& z_p, const TaiParams& params, int expected_frames) {
  if (z_p.data.rank() != 4 || z_p.data.dim(3) != 4) {
    throw ShapeMismatch("pose latent must be [l, m, n, 4]");
  }
  const int l = z_p.data.dim(0);
  const int pc = z_p.data.dim(1) * z_p.data.dim(2);
  if (l != expected_frames) {
    throw FrameCountMismatch("pose latent has " + std::to_string(l) + " frames, block expects " +
                             std::to_string(expected_frames));
  }
  if (pc != params.patches_in()) {
    throw ShapeMismatch("pose latent has " + std::to_string(pc) + " patches, map expects " +
                        std::to_string(params.patches_in()));
  }
  const int p = params.patches_out(), d = params.feature_dim();

  // [l, m, n, 4] -> [l*pc, 4] -> channel map -> [l, pc, d]
  Tensor channels = matmul(z_p.data.reshaped({l * pc, 4}), params.channel_w.value);
  for (int r = 0; r < l * pc; ++r) {
    for (int c = 0; c < d; ++c) {
      channels[static_cast<std::size_t>(r) * d + c] += params.channel_b.value[static_cast<std::size_t>(c)];
    }
  }

  // Patch-axis linear map and transpose to [p, f, d].
  Tensor out({p, l, d});
  for (int fr = 0; fr < l; ++fr) {
    for (int pi = 0; pi < p; ++pi) {
      for (int ci = 0; ci < d; ++ci) {
        double s = 0.0;
        for (int q = 0; q < pc; ++q) {
          s += params.patch_map.value[static_cast<std::size_t>(q) * p + pi] *
               channels[(static_cast<std::size_t>(fr) * pc + q) * d + ci];
        }
        out[(static_cast<std::size_t>(pi) * l + fr) * d + ci] = s;
      }
    }
  }
  ensure_finite(out, "align_pose_latent");
  return out;
}

void align_pose_latent_backward(const PoseLatent& z_p, TaiParams& params,
                                const Tensor& d_out, Tensor& d_zp) {
  const int l = z_p.data.dim(0);
  const int pc = z_p.data.dim(1) * z_p.data.dim(2);
  const int p = params.patches_out(), d = params.feature_dim();

  const Tensor x = z_p.data.reshaped({l * pc, 4});
  Tensor channels = matmul(x, params.channel_w.value);
  for (int r = 0; r < l * pc; ++r) {
    for (int c = 0; c < d; ++c) {
      channels[static_cast<std::size_t>(r) * d + c] += params.channel_b.value[static_cast<std::size_t>(c)];
    }
  }

  // Back through the patch map.
  Tensor d_channels(std::vector<int>{l * pc, d});
  for (int fr = 0; fr < l; ++fr) {
    for (int q = 0; q < pc; ++q) {
      for (int ci = 0; ci < d; ++ci) {
        double s = 0.0;
        for (int pi = 0; pi < p; ++pi) {
          s += params.patch_map.value[static_cast<std::size_t>(q) * p + pi] *
               d_out[(static_cast<std::size_t>(pi) * l + fr) * d + ci];
        }
        d_channels[(static_cast<std::size_t>(fr) * pc + q) * d + ci] = s;
      }
    }
  }
  for (int q = 0; q < pc; ++q) {
    for (int pi = 0; pi < p; ++pi) {
      double s = 0.0;
      for (int fr = 0; fr < l; ++fr) {
        for (int ci = 0; ci < d; ++ci) {
          s += channels[(static_cast<std::size_t>(fr) * pc + q) * d + ci] *
               d_out[(static_cast<std::size_t>(pi) * l + fr) * d + ci];
        }
      }
      params.patch_map.grad[static_cast<std::size_t>(q) * p + pi] += s;
    }
  }

  // Back through the channel map into the latent.
  Tensor d_x(std::vector<int>{l * pc, 4});
  matmul_backward(x, params.channel_w.value, d_channels, d_x, params.channel_w.grad);
  for (int r = 0; r < l * pc; ++r) {
    for (int c = 0; c < d; ++c) {
      params.channel_b.grad[static_cast<std::size_t>(c)] +=
          d_channels[static_cast<std::size_t>(r) * d + c];
    }
  }
  for (std::size_t i = 0; i < d_zp.size(); ++i) d_zp[i] += d_x[i];
}

Tensor tai_inject(const Tensor& z_k, const Tensor& z_p_aligned, const TaiParams& params) {
  require_features(z_k, "z_k");
  if (!z_k.same_shape(z_p_aligned)) {
    throw ShapeMismatch("tai_inject: z_k and aligned pose latent shapes differ");
  }
  const int d = z_k.dim(2);
  if (params.feature_dim() != d) throw ShapeMismatch("tai_inject: gamma/beta dim mismatch");

  Tensor out = add(layer_norm(z_k), z_p_aligned);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t c = i % static_cast<std::size_t>(d);
    out[i] = params.gamma.value[c] * out[i] + params.beta.value[c];
  }
  ensure_finite(out, "tai_inject");
  return out;
}

void tai_inject_backward(const Tensor& z_k, const Tensor& z_p_aligned, TaiParams& params,
                         const Tensor& d_out, Tensor& d_zk, Tensor& d_zp) {
  const int d = z_k.dim(2);
  const Tensor zhat_all = add(layer_norm(z_k), z_p_aligned);

  Tensor d_zhat(z_k.shape());
  for (std::size_t i = 0; i < d_out.size(); ++i) {
    const std::size_t c = i % static_cast<std::size_t>(d);
    params.gamma.grad[c] += d_out[i] * zhat_all[i];
    params.beta.grad[c] += d_out[i];
    const double g = d_out[i] * params.gamma.value[c];
    d_zp[i] += g;
    d_zhat[i] = g;
  }
  layer_norm_backward(z_k, d_zhat, d_zk);
}

ConcatParams ConcatParams::init(int feature_dim, std::uint64_t seed) {
  ConcatParams p;
  p.proj = Parameter(
      Tensor::uniform({2 * feature_dim, feature_dim}, seed, 1.0 / std::sqrt(2.0 * feature_dim)));
  return p;
}

ConcatParams ConcatParams::identity(int feature_dim) {
  ConcatParams p;
  p.proj = Parameter(Tensor::zeros({2 * feature_dim, feature_dim}));
  for (int i = 0; i < feature_dim; ++i) {
    p.proj.value[static_cast<std::size_t>(i) * feature_dim + i] = 1.0;
  }
  return p;
}

std::vector<Parameter*> ConcatParams::parameters() { return {&proj}; }

Tensor concat_inject(const Tensor& z_k, const Tensor& z_p_aligned, const ConcatParams& params) {
  require_features(z_k, "z_k");
  if (!z_k.same_shape(z_p_aligned)) throw ShapeMismatch("concat_inject: shapes differ");
  const int p = z_k.dim(0), f = z_k.dim(1), d = z_k.dim(2);
  if (params.proj.value.dim(0) != 2 * d || params.proj.value.dim(1) != d) {
    throw ShapeMismatch("concat_inject: projection must be [2d, d]");
  }

  const int rows = p * f;
  Tensor cat({rows, 2 * d});
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < d; ++c) {
      cat[static_cast<std::size_t>(r) * 2 * d + c] = z_k[static_cast<std::size_t>(r) * d + c];
      cat[static_cast<std::size_t>(r) * 2 * d + d + c] =
          z_p_aligned[static_cast<std::size_t>(r) * d + c];
    }
  }
  return matmul(cat, params.proj.value).reshaped({p, f, d});
}

void concat_inject_backward(const Tensor& z_k, const Tensor& z_p_aligned, ConcatParams& params,
                            const Tensor& d_out, Tensor& d_zk, Tensor& d_zp) {
  const int p = z_k.dim(0), f = z_k.dim(1), d = z_k.dim(2);
  const int rows = p * f;
  Tensor cat({rows, 2 * d});
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < d; ++c) {
      cat[static_cast<std::size_t>(r) * 2 * d + c] = z_k[static_cast<std::size_t>(r) * d + c];
      cat[static_cast<std::size_t>(r) * 2 * d + d + c] =
          z_p_aligned[static_cast<std::size_t>(r) * d + c];
    }
  }
  Tensor d_cat(std::vector<int>{rows, 2 * d});
  matmul_backward(cat, params.proj.value, d_out.reshaped({rows, d}), d_cat, params.proj.grad);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < d; ++c) {
      d_zk[static_cast<std::size_t>(r) * d + c] += d_cat[static_cast<std::size_t>(r) * 2 * d + c];
      d_zp[static_cast<std::size_t>(r) * d + c] +=
          d_cat[static_cast<std::size_t>(r) * 2 * d + d + c];
    }
  }
}

Tensor cross_attn_inject(const Tensor& z_k, const Tensor& z_p_aligned) {
  require_features(z_k, "z_k");
  if (!z_k.same_shape(z_p_aligned)) throw ShapeMismatch("cross_attn_inject: shapes differ");
  const int p = z_k.dim(0);

  Tensor out = z_k;
  for (int i = 0; i < p; ++i) {
    const Tensor q = patch_slice(z_k, i);
    const Tensor kv = patch_slice(z_p_aligned, i);
    patch_accumulate(out, i, attention(q, kv, kv));
  }
  ensure_finite(out, "cross_attn_inject");
  return out;
}

void cross_attn_inject_backward(const Tensor& z_k, const Tensor& z_p_aligned,
                                const Tensor& d_out, Tensor& d_zk, Tensor& d_zp) {
  const int p = z_k.dim(0), f = z_k.dim(1), d = z_k.dim(2);
  for (int i = 0; i < p; ++i) {
    const Tensor q = patch_slice(z_k, i);
    const Tensor kv = patch_slice(z_p_aligned, i);
    const Tensor g = patch_slice(d_out, i);

    Tensor d_q({f, d}), d_k({f, d}), d_v({f, d});
    attention_backward(q, kv, kv, g, d_q, d_k, d_v);
    patch_accumulate(d_zk, i, add(g, d_q));  // residual + query path
    patch_accumulate(d_zp, i, add(d_k, d_v));
  }
}

AttentionBlockParams AttentionBlockParams::init(int feature_dim, std::uint64_t seed) {
  const double s = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  AttentionBlockParams p;
  p.wq = Parameter(Tensor::uniform({feature_dim, feature_dim}, seed, s));
  p.wk = Parameter(Tensor::uniform({feature_dim, feature_dim}, seed + 1, s));
  p.wv = Parameter(Tensor::uniform({feature_dim, feature_dim}, seed + 2, s));
  return p;
}

std::vector<Parameter*> AttentionBlockParams::parameters() { return {&wq, &wk, &wv}; }

Tensor temporal_attention_block(const Tensor& z, const AttentionBlockParams& params) {
  require_features(z, "z");
  const int p = z.dim(0), d = z.dim(2);
  if (params.wq.value.dim(0) != d) throw ShapeMismatch("block params disagree with feature dim");

  Tensor out = z;
  for (int i = 0; i < p; ++i) {
    const Tensor zi = patch_slice(z, i);
    const Tensor att = attention(matmul(zi, params.wq.value), matmul(zi, params.wk.value),
                                 matmul(zi, params.wv.value));
    patch_accumulate(out, i, att);
  }
  ensure_finite(out, "temporal_attention_block");
  return out;
}

void temporal_attention_block_backward(const Tensor& z, AttentionBlockParams& params,
                                       const Tensor& d_out, Tensor& d_z) {
  const int p = z.dim(0), f = z.dim(1), d = z.dim(2);
  for (int i = 0; i < p; ++i) {
    const Tensor zi = patch_slice(z, i);
    const Tensor q = matmul(zi, params.wq.value);
    const Tensor k = matmul(zi, params.wk.value);
    const Tensor v = matmul(zi, params.wv.value);
    const Tensor g = patch_slice(d_out, i);

    Tensor d_q({f, d}), d_k({f, d}), d_v({f, d});
    attention_backward(q, k, v, g, d_q, d_k, d_v);

    Tensor d_zi(std::vector<int>{f, d});
    matmul_backward(zi, params.wq.value, d_q, d_zi, params.wq.grad);
    matmul_backward(zi, params.wk.value, d_k, d_zi, params.wk.grad);
    matmul_backward(zi, params.wv.value, d_v, d_zi, params.wv.grad);
    patch_accumulate(d_z, i, add(g, d_zi));  // residual + projections
  }
}

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw StepOutOfRange("schedule needs at least 1 step");
  NoiseSchedule s;
  s.alpha.reserve(static_cast<std::size_t>(steps));
  s.alpha_bar.reserve(static_cast<std::size_t>(steps));
  double prod = 1.0;
  for (int t = 0; t < steps; ++t) {
    const double frac = (steps == 1) ? 0.0 : static_cast<double>(t) / (steps - 1);
    const double beta = beta_start + (beta_end - beta_start) * frac;
    s.alpha.push_back(1.0 - beta);
    prod *= s.alpha.back();
    s.alpha_bar.push_back(prod);
  }
  return s;
}

Tensor noise_forward(const Tensor& z0, const Tensor& eps, const NoiseSchedule& sched, int t) {
  if (!z0.same_shape(eps)) throw ShapeMismatch("noise_forward: z0/eps shapes differ");
  if (t < 0 || t >= sched.steps()) {
    throw StepOutOfRange("step " + std::to_string(t) + " outside schedule of " +
                         std::to_string(sched.steps()));
  }
  const double ab = sched.alpha_bar[static_cast<std::size_t>(t)];
  const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
  Tensor out = z0;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * out[i] + b * eps[i];
  ensure_finite(out, "noise_forward");
  return out;
}

double diffusion_loss(const Tensor& eps_pred, const Tensor& eps) {
  return mean_sq_error(eps_pred, eps);
}

Tensor diffusion_loss_grad(const Tensor& eps_pred, const Tensor& eps) {
  Tensor g = sub(eps_pred, eps);
  return scale(g, 2.0 / static_cast<double>(g.size()));
}

}  // namespace posekit
