#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "posekit/render.hpp"
#include "posekit/tensor.hpp"

namespace posekit {

/// A normalized motion-image clip [L, H, W, C] with L % 4 == 0 and
/// H, W % 8 == 0 (see pad_clip). C is 3 for RGB renders, 6 for raw
/// Plucker-delta channels. Values lie in [-1, 1].
struct MotionClip {
  Tensor data;
  int orig_frames = 0;
  int orig_height = 0;
  int orig_width = 0;

  int frames() const { return data.dim(0); }
  int height() const { return data.dim(1); }
  int width() const { return data.dim(2); }
  int channels() const { return data.dim(3); }
};

/// VAE latent [l, m, n, 4] with l = L/4, m = H/8, n = W/8.
struct PoseLatent {
  Tensor data;

  bool same_shape(const PoseLatent& o) const { return data.same_shape(o.data); }
};

/// Factorized linear per-block VAE. Each non-overlapping 4x8x8xC block maps
/// through one linear layer to 4 mean + 4 logvar channels; the decoder is a
/// single linear layer back. Only the compression ratios (temporal /4,
/// spatial /8, 4 latent channels) are contractual.
struct VaeParams {
  int channels = 3;
  Parameter enc_w;  // [4*8*8*C, 8]
  Parameter enc_b;  // [8]
  Parameter dec_w;  // [4, 4*8*8*C]
  Parameter dec_b;  // [4*8*8*C]

  static VaeParams init(int channels, std::uint64_t seed);
  int block_size() const { return 4 * 8 * 8 * channels; }
  std::vector<Parameter*> parameters();
};

/// Bytes to [-1, 1] via x / 127.5 - 1; stacks frames into [L, H, W, 3].
Tensor clip_tensor_from_images(const std::vector<RgbImage>& frames);

/// Plucker-delta channels sampled on the grid: [L, N, M, 6], each component
/// divided by `scale` and clamped to [-1, 1]. Invalid vectors become zeros.
Tensor clip_tensor_from_field(const SparseMotionField& field, double scale = 1.0);

/// Replicate-pad the last frame until L % 4 == 0 and edge-pad spatially
/// until H, W % 8 == 0; original dims are recorded for unpadding.
MotionClip pad_clip(const Tensor& raw);

/// Drop padding again (inverse of pad_clip's extension).
Tensor unpad_clip(const MotionClip& clip, const Tensor& padded);

void encode(const MotionClip& clip, const VaeParams& p, PoseLatent& mean, PoseLatent& logvar);

/// z = mean + exp(logvar/2) * eps with eps ~ N(0,1) from
/// SplitMix64(seed) + Box-Muller; deterministic per seed.
PoseLatent reparameterize(const PoseLatent& mean, const PoseLatent& logvar, std::uint64_t seed);

/// Inverse block mapping; output shape equals the padded clip shape.
Tensor decode(const PoseLatent& z, const VaeParams& p, int height, int width);

struct ElboTerms {
  double total = 0.0;
  double recon_mse = 0.0;
  double kl = 0.0;
};

/// recon_mse = mean (recon - target)^2 over elements;
/// kl = mean over latent elements of (mean^2 + exp(logvar) - 1 - logvar)/2;
/// total = recon_mse + beta * kl.
ElboTerms elbo_loss(const Tensor& recon, const Tensor& target, const PoseLatent& mean,
                    const PoseLatent& logvar, double beta);

/// Analytic gradient of elbo_loss's total w.r.t. its tensor inputs,
/// accumulated into the outputs.
void elbo_backward(const Tensor& recon, const Tensor& target, const PoseLatent& mean,
                   const PoseLatent& logvar, double beta, Tensor& d_recon, Tensor& d_mean,
                   Tensor& d_logvar);

/// Full forward pass for one clip (encode, reparameterize with noise_seed,
/// decode, elbo_loss).
ElboTerms vae_loss(const MotionClip& clip, const VaeParams& p, double beta,
                   std::uint64_t noise_seed);

/// vae_loss plus analytic gradients of `total` accumulated into p's grads.
ElboTerms vae_backward(const MotionClip& clip, VaeParams& p, double beta,
                       std::uint64_t noise_seed);

struct VaeTrainConfig {
  int steps = 500;
  double lr = 1.0;
  double beta = 1e-3;
  std::uint64_t seed = 0;
};

struct TrainStepLoss {
  double total = 0.0;
  double recon_mse = 0.0;
  double kl = 0.0;
};

struct VaeTrainResult {
  VaeParams params;
  std::vector<TrainStepLoss> history;  // one entry per step, losses before the update
};

/// Full-batch SGD over the clips; deterministic given cfg.seed. Throws
/// NonFiniteLoss (message carries the step index) if the loss leaves the
/// finite range.
VaeTrainResult train(const std::vector<MotionClip>& clips, const VaeTrainConfig& cfg);

void save_vae(const std::string& path, const VaeParams& p);
VaeParams load_vae(const std::string& path);

}  // namespace posekit
