#pragma once

#include <cstdint>
#include <vector>

#include "posekit/tensor.hpp"
#include "posekit/vae.hpp"

namespace posekit {

// Temporal features are tensors [p, f, d]: p spatial patches, f latent
// frames, d feature channels.

/// Parameters of the temporal-attention injection: per-channel scale/shift
/// applied after normalization plus the two-layer alignment map that takes a
/// pose latent [l, m, n, 4] onto [p, f=l, d] (channel axis 4 -> d, then
/// patch axis p_c = m*n -> p).
///
/// Fresh parameters are a no-op on the host block: gamma = 1, beta = 0 and
/// the channel map starts at zero, so the aligned latent starts at zero.
struct TaiParams {
  Parameter gamma;      // [d]
  Parameter beta;       // [d]
  Parameter channel_w;  // [4, d]
  Parameter channel_b;  // [d]
  Parameter patch_map;  // [p_c, p]

  static TaiParams init(int patches_in, int patches_out, int feature_dim, std::uint64_t seed);
  int patches_in() const { return patch_map.value.dim(0); }
  int patches_out() const { return patch_map.value.dim(1); }
  int feature_dim() const { return gamma.value.dim(0); }
  std::vector<Parameter*> parameters();
};

/// [l, m, n, 4] -> reshape [l, m*n, 4] -> channel MLP (4 -> d) -> patch-axis
/// linear map (p_c -> p) -> transpose to [p, f=l, d]. Throws
/// FrameCountMismatch when l != expected_frames.
Tensor align_pose_latent(const PoseLatent& z_p, const TaiParams& params, int expected_frames);
void align_pose_latent_backward(const PoseLatent& z_p, TaiParams& params,
                                const Tensor& d_out, Tensor& d_zp);

/// The injection: zhat = layer_norm(z_k) over d; zhat_all = zhat + z_p;
/// out = gamma * zhat_all + beta (gamma/beta broadcast over [p, f]).
Tensor tai_inject(const Tensor& z_k, const Tensor& z_p_aligned, const TaiParams& params);
void tai_inject_backward(const Tensor& z_k, const Tensor& z_p_aligned, TaiParams& params,
                         const Tensor& d_out, Tensor& d_zk, Tensor& d_zp);

/// Ablation 1: concatenate along d -> [p, f, 2d] -> linear projection back
/// to d (weight [2d, d], no bias).
struct ConcatParams {
  Parameter proj;

  static ConcatParams init(int feature_dim, std::uint64_t seed);
  /// Projection [I; 0] that ignores the pose half entirely.
  static ConcatParams identity(int feature_dim);
  std::vector<Parameter*> parameters();
};

Tensor concat_inject(const Tensor& z_k, const Tensor& z_p_aligned, const ConcatParams& params);
void concat_inject_backward(const Tensor& z_k, const Tensor& z_p_aligned, ConcatParams& params,
                            const Tensor& d_out, Tensor& d_zk, Tensor& d_zp);

/// Ablation 2: per spatial patch, attention over the frame axis with
/// q = z_k rows and k = v = z_p rows, added residually to z_k. No learned
/// parameters.
Tensor cross_attn_inject(const Tensor& z_k, const Tensor& z_p_aligned);
void cross_attn_inject_backward(const Tensor& z_k, const Tensor& z_p_aligned,
                                const Tensor& d_out, Tensor& d_zk, Tensor& d_zp);

/// Minimal host block: per spatial patch, self-attention across the frame
/// axis with q/k/v projections and a residual connection.
struct AttentionBlockParams {
  Parameter wq, wk, wv;  // [d, d]

  static AttentionBlockParams init(int feature_dim, std::uint64_t seed);
  std::vector<Parameter*> parameters();
};

Tensor temporal_attention_block(const Tensor& z, const AttentionBlockParams& params);
void temporal_attention_block_backward(const Tensor& z, AttentionBlockParams& params,
                                       const Tensor& d_out, Tensor& d_z);

/// Forward-process schedule: alpha_bar[t] = prod_{i<=t} alpha[i],
/// non-increasing, alpha_bar[0] <= 1. Indices are 0-based.
struct NoiseSchedule {
  std::vector<double> alpha;
  std::vector<double> alpha_bar;

  /// alpha_t = 1 - beta_t with beta linear from beta_start to beta_end,
  /// so alpha is linear in t.
  static NoiseSchedule linear(int steps = 1000, double beta_start = 1e-4,
                              double beta_end = 0.02);
  int steps() const { return static_cast<int>(alpha.size()); }
};

/// z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps.
Tensor noise_forward(const Tensor& z0, const Tensor& eps, const NoiseSchedule& sched, int t);

/// Mean squared error between predicted and true noise.
double diffusion_loss(const Tensor& eps_pred, const Tensor& eps);
/// d loss / d eps_pred = 2 (eps_pred - eps) / N.
Tensor diffusion_loss_grad(const Tensor& eps_pred, const Tensor& eps);

}  // namespace posekit
