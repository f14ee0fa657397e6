#include "posekit/vae.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "posekit/checkpoint.hpp"
#include "posekit/errors.hpp"
#include "posekit/rng.hpp"

namespace posekit {

namespace {

struct LatentDims {
  int l, m, n;
};

LatentDims latent_dims(const Tensor& clip) {
  if (clip.rank() != 4) throw ShapeMismatch("clip must be [L, H, W, C]");
  const int L = clip.dim(0), H = clip.dim(1), W = clip.dim(2);
  if (L % 4 != 0 || H % 8 != 0 || W % 8 != 0) {
    throw ShapeMismatch("clip dims must satisfy L%4==0, H%8==0, W%8==0; pad_clip first");
  }
  return {L / 4, H / 8, W / 8};
}

// Gather one 4x8x8xC block into `vec` (row-major t, y, x, c order).
void gather_block(const Tensor& clip, int bl, int bm, int bn, std::vector<double>& vec) {
  const int H = clip.dim(1), W = clip.dim(2), C = clip.dim(3);
  std::size_t o = 0;
  for (int t = 4 * bl; t < 4 * bl + 4; ++t) {
    for (int y = 8 * bm; y < 8 * bm + 8; ++y) {
      for (int x = 8 * bn; x < 8 * bn + 8; ++x) {
        const std::size_t base =
            ((static_cast<std::size_t>(t) * H + y) * W + x) * static_cast<std::size_t>(C);
        for (int c = 0; c < C; ++c) vec[o++] = clip[base + static_cast<std::size_t>(c)];
      }
    }
  }
}

void scatter_block(Tensor& clip, int bl, int bm, int bn, const std::vector<double>& vec) {
  const int H = clip.dim(1), W = clip.dim(2), C = clip.dim(3);
  std::size_t o = 0;
  for (int t = 4 * bl; t < 4 * bl + 4; ++t) {
    for (int y = 8 * bm; y < 8 * bm + 8; ++y) {
      for (int x = 8 * bn; x < 8 * bn + 8; ++x) {
        const std::size_t base =
            ((static_cast<std::size_t>(t) * H + y) * W + x) * static_cast<std::size_t>(C);
        for (int c = 0; c < C; ++c) clip[base + static_cast<std::size_t>(c)] = vec[o++];
      }
    }
  }
}

std::size_t latent_index(const LatentDims& d, int bl, int bm, int bn, int c) {
  return ((static_cast<std::size_t>(bl) * d.m + bm) * static_cast<std::size_t>(d.n) + bn) * 4 +
         static_cast<std::size_t>(c);
}

}  // namespace

VaeParams VaeParams::init(int channels, std::uint64_t seed) {
  VaeParams p;
  p.channels = channels;
  const int block = p.block_size();
  p.enc_w = Parameter(Tensor::uniform({block, 8}, seed, 1.0 / std::sqrt(block)));
  p.enc_b = Parameter(Tensor::zeros({8}));
  p.dec_w = Parameter(Tensor::uniform({4, block}, seed + 1, 1.0 / std::sqrt(block)));
  p.dec_b = Parameter(Tensor::zeros({block}));
  return p;
}

std::vector<Parameter*> VaeParams::parameters() { return {&enc_w, &enc_b, &dec_w, &dec_b}; }

Tensor clip_tensor_from_images(const std::vector<RgbImage>& frames) {
  if (frames.empty()) throw ShapeMismatch("clip needs at least 1 frame");
  const int h = frames[0].height, w = frames[0].width;
  Tensor out({static_cast<int>(frames.size()), h, w, 3});
  std::size_t o = 0;
  for (const RgbImage& img : frames) {
    if (img.width != w || img.height != h) throw ShapeMismatch("frames differ in size");
    for (std::uint8_t byte : img.pixels) out[o++] = byte / 127.5 - 1.0;
  }
  return out;
}

Tensor clip_tensor_from_field(const SparseMotionField& field, double scale) {
  const int rows = field.grid.rows, cols = field.grid.cols;
  Tensor out({field.n_motion_frames, rows, cols, 6});
  std::size_t o = 0;
  for (int f = 0; f < field.n_motion_frames; ++f) {
    for (int j = 0; j < rows; ++j) {
      for (int i = 0; i < cols; ++i) {
        const MotionVector& mv = field.at(f, j, i);
        for (int c = 0; c < 6; ++c) {
          const double v = mv.valid ? mv.plucker_delta[static_cast<std::size_t>(c)] / scale : 0.0;
          out[o++] = std::clamp(v, -1.0, 1.0);
        }
      }
    }
  }
  return out;
}

MotionClip pad_clip(const Tensor& raw) {
  if (raw.rank() != 4) throw ShapeMismatch("pad_clip expects [L, H, W, C]");
  const int L = raw.dim(0), H = raw.dim(1), W = raw.dim(2), C = raw.dim(3);
  const int Lp = (L % 4 == 0) ? L : L + (4 - L % 4);
  const int Hp = (H % 8 == 0) ? H : H + (8 - H % 8);
  const int Wp = (W % 8 == 0) ? W : W + (8 - W % 8);

  MotionClip clip;
  clip.orig_frames = L;
  clip.orig_height = H;
  clip.orig_width = W;
  if (Lp == L && Hp == H && Wp == W) {
    clip.data = raw;
    return clip;
  }

  Tensor padded({Lp, Hp, Wp, C});
  for (int t = 0; t < Lp; ++t) {
    const int ts = std::min(t, L - 1);  // replicate last frame
    for (int y = 0; y < Hp; ++y) {
      const int ys = std::min(y, H - 1);  // edge-pad rows
      for (int x = 0; x < Wp; ++x) {
        const int xs = std::min(x, W - 1);  // edge-pad cols
        const std::size_t src =
            ((static_cast<std::size_t>(ts) * H + ys) * W + xs) * static_cast<std::size_t>(C);
        const std::size_t dst =
            ((static_cast<std::size_t>(t) * Hp + y) * Wp + x) * static_cast<std::size_t>(C);
        for (int c = 0; c < C; ++c) padded[dst + static_cast<std::size_t>(c)] = raw[src + static_cast<std::size_t>(c)];
      }
    }
  }
  clip.data = std::move(padded);
  return clip;
}

Tensor unpad_clip(const MotionClip& clip, const Tensor& padded) {
  const int C = padded.dim(3);
  Tensor out({clip.orig_frames, clip.orig_height, clip.orig_width, C});
  for (int t = 0; t < clip.orig_frames; ++t) {
    for (int y = 0; y < clip.orig_height; ++y) {
      for (int x = 0; x < clip.orig_width; ++x) {
        const std::size_t src = ((static_cast<std::size_t>(t) * padded.dim(1) + y) * padded.dim(2) + x) *
                                static_cast<std::size_t>(C);
        const std::size_t dst =
            ((static_cast<std::size_t>(t) * clip.orig_height + y) * clip.orig_width + x) *
            static_cast<std::size_t>(C);
        for (int c = 0; c < C; ++c) out[dst + static_cast<std::size_t>(c)] = padded[src + static_cast<std::size_t>(c)];
      }
    }
  }
  return out;
}

void encode(const MotionClip& clip, const VaeParams& p, PoseLatent& mean, PoseLatent& logvar) {
  if (clip.channels() != p.channels) {
    throw ShapeMismatch("clip channels " + std::to_string(clip.channels()) +
                        " != VAE channels " + std::to_string(p.channels));
  }
  const LatentDims d = latent_dims(clip.data);
  const int block = p.block_size();
  mean.data = Tensor({d.l, d.m, d.n, 4});
  logvar.data = Tensor({d.l, d.m, d.n, 4});

  std::vector<double> vec(static_cast<std::size_t>(block));
  for (int bl = 0; bl < d.l; ++bl) {
    for (int bm = 0; bm < d.m; ++bm) {
      for (int bn = 0; bn < d.n; ++bn) {
        gather_block(clip.data, bl, bm, bn, vec);
        for (int q = 0; q < 8; ++q) {
          double s = p.enc_b.value[static_cast<std::size_t>(q)];
          for (int i = 0; i < block; ++i) {
            s += vec[static_cast<std::size_t>(i)] * p.enc_w.value[static_cast<std::size_t>(i) * 8 + q];
          }
          if (q < 4) {
            mean.data[latent_index(d, bl, bm, bn, q)] = s;
          } else {
            logvar.data[latent_index(d, bl, bm, bn, q - 4)] = s;
          }
        }
      }
    }
  }
  ensure_finite(mean.data, "encode mean");
  ensure_finite(logvar.data, "encode logvar");
}

PoseLatent reparameterize(const PoseLatent& mean, const PoseLatent& logvar, std::uint64_t seed) {
  if (!mean.same_shape(logvar)) throw ShapeMismatch("reparameterize: mean/logvar shapes differ");
  GaussianSampler g(seed);
  PoseLatent z;
  z.data = mean.data;
  for (std::size_t i = 0; i < z.data.size(); ++i) {
    z.data[i] += std::exp(0.5 * logvar.data[i]) * g.next();
  }
  ensure_finite(z.data, "reparameterize");
  return z;
}

Tensor decode(const PoseLatent& z, const VaeParams& p, int height, int width) {
  if (z.data.rank() != 4 || z.data.dim(3) != 4) throw ShapeMismatch("latent must be [l, m, n, 4]");
  const LatentDims d{z.data.dim(0), z.data.dim(1), z.data.dim(2)};
  if (height != d.m * 8 || width != d.n * 8) {
    throw ShapeMismatch("decode target " + std::to_string(height) + "x" + std::to_string(width) +
                        " does not match latent " + std::to_string(d.m * 8) + "x" +
                        std::to_string(d.n * 8));
  }
  const int block = p.block_size();
  Tensor out({d.l * 4, height, width, p.channels});

  std::vector<double> vec(static_cast<std::size_t>(block));
  for (int bl = 0; bl < d.l; ++bl) {
    for (int bm = 0; bm < d.m; ++bm) {
      for (int bn = 0; bn < d.n; ++bn) {
        for (int i = 0; i < block; ++i) {
          double s = p.dec_b.value[static_cast<std::size_t>(i)];
          for (int c = 0; c < 4; ++c) {
            s += z.data[latent_index(d, bl, bm, bn, c)] *
                 p.dec_w.value[static_cast<std::size_t>(c) * block + i];
          }
          vec[static_cast<std::size_t>(i)] = s;
        }
        scatter_block(out, bl, bm, bn, vec);
      }
    }
  }
  ensure_finite(out, "decode");
  return out;
}

ElboTerms elbo_loss(const Tensor& recon, const Tensor& target, const PoseLatent& mean,
                    const PoseLatent& logvar, double beta) {
  if (!recon.same_shape(target)) throw ShapeMismatch("elbo_loss: recon/target shapes differ");
  if (!mean.same_shape(logvar)) throw ShapeMismatch("elbo_loss: mean/logvar shapes differ");

  ElboTerms t;
  t.recon_mse = mean_sq_error(recon, target);
  double kl = 0.0;
  for (std::size_t i = 0; i < mean.data.size(); ++i) {
    const double mu = mean.data[i], lv = logvar.data[i];
    kl += 0.5 * (mu * mu + std::exp(lv) - 1.0 - lv);
  }
  t.kl = kl / static_cast<double>(mean.data.size());
  t.total = t.recon_mse + beta * t.kl;
  return t;
}

void elbo_backward(const Tensor& recon, const Tensor& target, const PoseLatent& mean,
                   const PoseLatent& logvar, double beta, Tensor& d_recon, Tensor& d_mean,
                   Tensor& d_logvar) {
  const double n_total = static_cast<double>(recon.size());
  const double n_latent = static_cast<double>(mean.data.size());
  for (std::size_t i = 0; i < recon.size(); ++i) {
    d_recon[i] += 2.0 * (recon[i] - target[i]) / n_total;
  }
  for (std::size_t i = 0; i < mean.data.size(); ++i) {
    d_mean[i] += beta * mean.data[i] / n_latent;
    d_logvar[i] += beta * 0.5 * (std::exp(logvar.data[i]) - 1.0) / n_latent;
  }
}

ElboTerms vae_loss(const MotionClip& clip, const VaeParams& p, double beta,
                   std::uint64_t noise_seed) {
  PoseLatent mean, logvar;
  encode(clip, p, mean, logvar);
  const PoseLatent z = reparameterize(mean, logvar, noise_seed);
  const Tensor recon = decode(z, p, clip.height(), clip.width());
  return elbo_loss(recon, clip.data, mean, logvar, beta);
}

ElboTerms vae_backward(const MotionClip& clip, VaeParams& p, double beta,
                       std::uint64_t noise_seed) {
  PoseLatent mean, logvar;
  encode(clip, p, mean, logvar);

  // Keep the exact noise draw so the analytic path matches vae_loss.
  Tensor eps(mean.data.shape());
  {
    GaussianSampler g(noise_seed);
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = g.next();
  }
  PoseLatent z;
  z.data = mean.data;
  for (std::size_t i = 0; i < z.data.size(); ++i) {
    z.data[i] += std::exp(0.5 * logvar.data[i]) * eps[i];
  }
  const Tensor recon = decode(z, p, clip.height(), clip.width());
  const ElboTerms terms = elbo_loss(recon, clip.data, mean, logvar, beta);

  const LatentDims d = latent_dims(clip.data);
  const int block = p.block_size();
  const double n_total = static_cast<double>(recon.size());
  const double n_latent = static_cast<double>(mean.data.size());

  Tensor d_z(z.data.shape());
  std::vector<double> d_block(static_cast<std::size_t>(block));
  std::vector<double> vec(static_cast<std::size_t>(block));

  // Through the decoder: d recon = 2 (recon - target) / N.
  for (int bl = 0; bl < d.l; ++bl) {
    for (int bm = 0; bm < d.m; ++bm) {
      for (int bn = 0; bn < d.n; ++bn) {
        gather_block(recon, bl, bm, bn, vec);
        std::vector<double> tgt(static_cast<std::size_t>(block));
        gather_block(clip.data, bl, bm, bn, tgt);
        for (int i = 0; i < block; ++i) {
          d_block[static_cast<std::size_t>(i)] =
              2.0 * (vec[static_cast<std::size_t>(i)] - tgt[static_cast<std::size_t>(i)]) / n_total;
        }
        for (int i = 0; i < block; ++i) {
          p.dec_b.grad[static_cast<std::size_t>(i)] += d_block[static_cast<std::size_t>(i)];
        }
        for (int c = 0; c < 4; ++c) {
          const double zc = z.data[latent_index(d, bl, bm, bn, c)];
          double s = 0.0;
          for (int i = 0; i < block; ++i) {
            const double g = d_block[static_cast<std::size_t>(i)];
            p.dec_w.grad[static_cast<std::size_t>(c) * block + i] += zc * g;
            s += p.dec_w.value[static_cast<std::size_t>(c) * block + i] * g;
          }
          d_z[latent_index(d, bl, bm, bn, c)] += s;
        }
      }
    }
  }

  // Through the reparameterization and the KL term.
  Tensor d_mean(mean.data.shape());
  Tensor d_logvar(logvar.data.shape());
  for (std::size_t i = 0; i < d_z.size(); ++i) {
    const double lv = logvar.data[i];
    d_mean[i] = d_z[i] + beta * mean.data[i] / n_latent;
    d_logvar[i] = d_z[i] * 0.5 * std::exp(0.5 * lv) * eps[i] +
                  beta * 0.5 * (std::exp(lv) - 1.0) / n_latent;
  }

  // Into the encoder weights.
  for (int bl = 0; bl < d.l; ++bl) {
    for (int bm = 0; bm < d.m; ++bm) {
      for (int bn = 0; bn < d.n; ++bn) {
        gather_block(clip.data, bl, bm, bn, vec);
        double d_out[8];
        for (int c = 0; c < 4; ++c) {
          d_out[c] = d_mean[latent_index(d, bl, bm, bn, c)];
          d_out[4 + c] = d_logvar[latent_index(d, bl, bm, bn, c)];
        }
        for (int q = 0; q < 8; ++q) p.enc_b.grad[static_cast<std::size_t>(q)] += d_out[q];
        for (int i = 0; i < block; ++i) {
          const double x = vec[static_cast<std::size_t>(i)];
          if (x == 0.0) continue;
          for (int q = 0; q < 8; ++q) {
            p.enc_w.grad[static_cast<std::size_t>(i) * 8 + q] += x * d_out[q];
          }
        }
      }
    }
  }
  return terms;
}

VaeTrainResult train(const std::vector<MotionClip>& clips, const VaeTrainConfig& cfg) {
  if (clips.empty()) throw Error("train needs at least 1 clip");
  if (cfg.steps < 1) throw Error("train needs steps >= 1");
  const int channels = clips[0].channels();
  for (const MotionClip& c : clips) {
    if (c.channels() != channels) throw ShapeMismatch("clips disagree on channel count");
  }

  VaeTrainResult result;
  result.params = VaeParams::init(channels, cfg.seed);
  result.history.reserve(static_cast<std::size_t>(cfg.steps));

  SplitMix64 noise_seeds(cfg.seed ^ 0xA5A5A5A55A5A5A5AULL);
  const double inv_clips = 1.0 / static_cast<double>(clips.size());

  for (int step = 0; step < cfg.steps; ++step) {
    TrainStepLoss loss;
    try {
      for (const MotionClip& clip : clips) {
        const ElboTerms t = vae_backward(clip, result.params, cfg.beta, noise_seeds.next_u64());
        loss.total += t.total * inv_clips;
        loss.recon_mse += t.recon_mse * inv_clips;
        loss.kl += t.kl * inv_clips;
      }
      for (Parameter* p : result.params.parameters()) {
        for (std::size_t i = 0; i < p->grad.size(); ++i) p->grad[i] *= inv_clips;
      }
      sgd_step(result.params.parameters(), cfg.lr);
    } catch (const NonFiniteValue& e) {
      throw NonFiniteLoss("step " + std::to_string(step) + ": " + e.what());
    }
    if (!std::isfinite(loss.total)) {
      throw NonFiniteLoss("step " + std::to_string(step) + ": loss diverged");
    }
    result.history.push_back(loss);
  }
  return result;
}

void save_vae(const std::string& path, const VaeParams& p) {
  save_checkpoint(path, {
    {"channels", Tensor({1}, {static_cast<double>(p.channels)})},
    {"enc_w", p.enc_w.value},
    {"enc_b", p.enc_b.value},
    {"dec_w", p.dec_w.value},
    {"dec_b", p.dec_b.value},
  });
}

VaeParams load_vae(const std::string& path) {
  const std::vector<NamedTensor> tensors = load_checkpoint(path);
  VaeParams p;
  bool have[5] = {};
  for (const NamedTensor& nt : tensors) {
    if (nt.name == "channels") {
      p.channels = static_cast<int>(nt.tensor[0]);
      have[0] = true;
    } else if (nt.name == "enc_w") {
      p.enc_w = Parameter(nt.tensor);
      have[1] = true;
    } else if (nt.name == "enc_b") {
      p.enc_b = Parameter(nt.tensor);
      have[2] = true;
    } else if (nt.name == "dec_w") {
      p.dec_w = Parameter(nt.tensor);
      have[3] = true;
    } else if (nt.name == "dec_b") {
      p.dec_b = Parameter(nt.tensor);
      have[4] = true;
    }
  }
  for (bool h : have) {
    if (!h) throw CheckpointError("VAE checkpoint at '" + path + "' is missing tensors");
  }
  if (p.enc_w.value.dim(0) != p.block_size() || p.enc_w.value.dim(1) != 8 ||
      p.dec_w.value.dim(0) != 4 || p.dec_w.value.dim(1) != p.block_size()) {
    throw CheckpointError("VAE checkpoint shapes are inconsistent");
  }
  return p;
}

}  // namespace posekit
