// Acceptance suite: one line per criterion, [PASS]/[FAIL], exit 0 iff all
// criteria hold at their stated tolerances.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "posekit/errors.hpp"
#include "posekit/metrics.hpp"
#include "posekit/pose_io.hpp"
#include "posekit/render.hpp"
#include "posekit/rng.hpp"
#include "posekit/tai.hpp"
#include "posekit/tensor.hpp"
#include "posekit/trajectory.hpp"
#include "posekit/vae.hpp"

#include "helpers.hpp"

using namespace posekit;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool ok, const std::string& detail,
            double seconds) {
  std::printf("[%s] criterion %2d: %-36s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", index,
              name.c_str(), seconds, detail.empty() ? "" : " -- ", detail.c_str());
  if (!ok) ++g_failures;
}

void run(int index, const std::string& name, const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool ok = false;
  const auto start = Clock::now();
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = e.what();
  }
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  report(index, name, ok, detail, seconds);
}

double elapsed_since(const Clock::time_point& start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Shared gradient-check helper: scalarize through a fixed probe.
bool grad_ok(const std::function<double(const Tensor&)>& f, const Tensor& x,
             const Tensor& analytic, std::string& detail, const char* what) {
  const double err = finite_diff_check(f, x, analytic, 1e-5);
  if (err >= 1e-4) {
    detail = std::string(what) + " max rel err " + format_number(err);
    return false;
  }
  return true;
}

std::vector<MotionClip> synthetic_clips() {
  const TrajectoryKind kinds[5] = {TrajectoryKind::ZoomIn, TrajectoryKind::PanLeft,
                                   TrajectoryKind::PanRight, TrajectoryKind::Roundabout,
                                   TrajectoryKind::Shake};
  std::vector<MotionClip> clips;
  for (int i = 0; i < 5; ++i) {
    TrajectorySpec spec;
    spec.kind = kinds[i];
    spec.n_frames = 17;
    spec.speed = 0.02 + 0.01 * i;
    spec.seed = 42 + static_cast<std::uint64_t>(i);
    const SparseMotionField field = motion_field(generate(spec), sparse_grid(80, 48, 8, 8));
    RenderConfig rc;
    rc.out_width = 80;
    rc.out_height = 48;
    rc.max_magnitude = 5.0;
    clips.push_back(pad_clip(clip_tensor_from_images(field_to_sequence(field, rc))));
  }
  return clips;
}

}  // namespace

int main() {
  run(1, "plucker invariant suite (1e5 draws)", [](std::string& detail) {
    const auto start = Clock::now();
    SplitMix64 rng(1);
    for (int i = 0; i < 100000; ++i) {
      const CameraPose pose = test::random_pose(rng);
      const CameraIntrinsics k = test::random_intrinsics(rng);
      const PluckerRay ray =
          plucker_ray(pose, k, rng.next_in(0, 640), rng.next_in(0, 360), 640, 360);
      if (std::abs(ray.direction.dot(ray.moment)) >= 1e-9) {
        detail = "d.m violated at draw " + std::to_string(i);
        return false;
      }
      if (std::abs(ray.direction.norm() - 1.0) >= 1e-12) {
        detail = "|d| violated at draw " + std::to_string(i);
        return false;
      }
    }
    if (elapsed_since(start) >= 10.0) {
      detail = "runtime budget (10 s) exceeded";
      return false;
    }
    return true;
  });

  run(2, "grid law for strides 20/40/80", [](std::string& detail) {
    const int table[3][3] = {{20, 32, 18}, {40, 16, 9}, {80, 8, 4}};
    for (const auto& row : table) {
      const SampleGrid g = sparse_grid(640, 360, row[0], row[0]);
      if (g.cols != row[1] || g.rows != row[2] ||
          static_cast<int>(g.points.size()) != row[1] * row[2]) {
        detail = "stride " + std::to_string(row[0]) + " gave " + std::to_string(g.cols) + "x" +
                 std::to_string(g.rows);
        return false;
      }
    }
    return true;
  });

  run(3, "latent shape contract", [](std::string& detail) {
    PoseLatent mean, logvar;
    encode(pad_clip(Tensor::uniform({16, 80, 48, 3}, 2)), VaeParams::init(3, 3), mean, logvar);
    if (mean.data.shape() != std::vector<int>{4, 10, 6, 4}) {
      detail = "16x80x48x3 clip broke the shape law";
      return false;
    }
    SplitMix64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      const int l = 1 + static_cast<int>(rng.next_double() * 18);
      const int h = 1 + static_cast<int>(rng.next_double() * 40);
      const int w = 1 + static_cast<int>(rng.next_double() * 40);
      const MotionClip clip = pad_clip(Tensor::uniform({l, h, w, 3}, 5));
      encode(clip, VaeParams::init(3, 6), mean, logvar);
      const std::vector<int> expect = {clip.frames() / 4, clip.height() / 8, clip.width() / 8, 4};
      if (mean.data.shape() != expect || logvar.data.shape() != expect) {
        detail = "padded clip broke the shape law";
        return false;
      }
    }
    return true;
  });

  run(4, "gradient oracle over every trainable op", [](std::string& detail) {
    const auto start = Clock::now();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      {  // layer_norm
        const Tensor x = Tensor::uniform({3, 7}, 10 + seed, 2.0);
        const Tensor probe = Tensor::bounded_uniform({3, 7}, 20 + seed, 0.3, 1.0);
        Tensor d_x(x.shape());
        layer_norm_backward(x, probe, d_x);
        if (!grad_ok([&](const Tensor& t) { return dot(layer_norm(t), probe); }, x, d_x, detail,
                     "layer_norm")) {
          return false;
        }
      }
      {  // MLP (input + parameters)
        MlpParams p(4, 6, 3, 30 + seed);
        p.w2.value = Tensor::uniform({6, 3}, 40 + seed, 0.5);
        p.b2.value = Tensor::uniform({3}, 45 + seed, 0.5);
        const Tensor x = Tensor::uniform({5, 4}, 50 + seed);
        const Tensor probe = Tensor::bounded_uniform({5, 3}, 60 + seed, 0.3, 1.0);
        Tensor d_x(x.shape());
        for (Parameter* par : p.parameters()) par->zero_grad();
        mlp_backward(x, p, probe, d_x);
        if (!grad_ok([&](const Tensor& t) { return dot(mlp_forward(t, p), probe); }, x, d_x,
                     detail, "mlp input")) {
          return false;
        }
        for (Parameter* par : p.parameters()) {
          const Tensor orig = par->value;
          const Tensor analytic = par->grad;
          const bool ok = grad_ok(
              [&](const Tensor& t) {
                par->value = t;
                const double v = dot(mlp_forward(x, p), probe);
                par->value = orig;
                return v;
              },
              orig, analytic, detail, "mlp param");
          if (!ok) return false;
        }
      }
      {  // attention
        const Tensor q = Tensor::uniform({4, 8}, 70 + seed);
        const Tensor k = Tensor::uniform({4, 8}, 80 + seed);
        const Tensor v = Tensor::uniform({4, 8}, 90 + seed);
        const Tensor probe = Tensor::bounded_uniform({4, 8}, 100 + seed, 0.3, 1.0);
        Tensor d_q(q.shape()), d_k(k.shape()), d_v(v.shape());
        attention_backward(q, k, v, probe, d_q, d_k, d_v);
        if (!grad_ok([&](const Tensor& t) { return dot(attention(t, k, v), probe); }, q, d_q,
                     detail, "attention q") ||
            !grad_ok([&](const Tensor& t) { return dot(attention(q, t, v), probe); }, k, d_k,
                     detail, "attention k") ||
            !grad_ok([&](const Tensor& t) { return dot(attention(q, k, t), probe); }, v, d_v,
                     detail, "attention v")) {
          return false;
        }
      }
      {  // temporal attention block
        AttentionBlockParams params = AttentionBlockParams::init(5, 110 + seed);
        const Tensor z = Tensor::uniform({2, 4, 5}, 120 + seed);
        const Tensor probe = Tensor::bounded_uniform({2, 4, 5}, 130 + seed, 0.3, 1.0);
        for (Parameter* par : params.parameters()) par->zero_grad();
        Tensor d_z(z.shape());
        temporal_attention_block_backward(z, params, probe, d_z);
        if (!grad_ok(
                [&](const Tensor& t) { return dot(temporal_attention_block(t, params), probe); },
                z, d_z, detail, "temporal block")) {
          return false;
        }
      }
      {  // TAI injection
        TaiParams params = TaiParams::init(4, 3, 6, 140 + seed);
        params.gamma.value = Tensor::bounded_uniform({6}, 150 + seed, 0.3, 0.9);
        params.beta.value = Tensor::uniform({6}, 160 + seed, 0.5);
        const Tensor z_k = Tensor::uniform({3, 4, 6}, 170 + seed, 1.5);
        const Tensor z_p = Tensor::uniform({3, 4, 6}, 180 + seed);
        const Tensor probe = Tensor::bounded_uniform({3, 4, 6}, 190 + seed, 0.3, 1.0);
        for (Parameter* par : params.parameters()) par->zero_grad();
        Tensor d_zk(z_k.shape()), d_zp(z_p.shape());
        tai_inject_backward(z_k, z_p, params, probe, d_zk, d_zp);
        if (!grad_ok([&](const Tensor& t) { return dot(tai_inject(t, z_p, params), probe); },
                     z_k, d_zk, detail, "tai z_k") ||
            !grad_ok([&](const Tensor& t) { return dot(tai_inject(z_k, t, params), probe); },
                     z_p, d_zp, detail, "tai z_p")) {
          return false;
        }
      }
      {  // concat injection
        ConcatParams params = ConcatParams::init(5, 200 + seed);
        const Tensor z_k = Tensor::uniform({2, 3, 5}, 210 + seed);
        const Tensor z_p = Tensor::uniform({2, 3, 5}, 220 + seed);
        const Tensor probe = Tensor::bounded_uniform({2, 3, 5}, 230 + seed, 0.3, 1.0);
        params.proj.zero_grad();
        Tensor d_zk(z_k.shape()), d_zp(z_p.shape());
        concat_inject_backward(z_k, z_p, params, probe, d_zk, d_zp);
        if (!grad_ok([&](const Tensor& t) { return dot(concat_inject(t, z_p, params), probe); },
                     z_k, d_zk, detail, "concat z_k")) {
          return false;
        }
      }
      {  // cross-attention injection
        const Tensor z_k = Tensor::uniform({2, 4, 5}, 240 + seed);
        const Tensor z_p = Tensor::uniform({2, 4, 5}, 250 + seed);
        const Tensor probe = Tensor::bounded_uniform({2, 4, 5}, 260 + seed, 0.3, 1.0);
        Tensor d_zk(z_k.shape()), d_zp(z_p.shape());
        cross_attn_inject_backward(z_k, z_p, probe, d_zk, d_zp);
        if (!grad_ok([&](const Tensor& t) { return dot(cross_attn_inject(t, z_p), probe); }, z_k,
                     d_zk, detail, "cross-attn z_k") ||
            !grad_ok([&](const Tensor& t) { return dot(cross_attn_inject(z_k, t), probe); }, z_p,
                     d_zp, detail, "cross-attn z_p")) {
          return false;
        }
      }
      {  // elbo_loss over recon, mean and logvar
        const Tensor target = Tensor::uniform({4, 8, 8, 3}, 270 + seed, 0.9);
        Tensor recon = target;
        SplitMix64 rng(271 + seed);
        for (std::size_t i = 0; i < recon.size(); ++i) {
          recon[i] += (rng.next_double() < 0.5 ? -1.0 : 1.0) * rng.next_in(0.2, 0.8);
        }
        PoseLatent mean, logvar;
        mean.data = Tensor({1, 2, 2, 4});
        logvar.data = Tensor({1, 2, 2, 4});
        for (std::size_t i = 0; i < mean.data.size(); ++i) {
          mean.data[i] = (rng.next_double() < 0.5 ? -1.0 : 1.0) * rng.next_in(0.3, 1.0);
          logvar.data[i] = (rng.next_double() < 0.5 ? -1.0 : 1.0) * rng.next_in(0.3, 1.0);
        }
        const double beta = 1.0;
        Tensor d_recon(recon.shape()), d_mean(mean.data.shape()), d_logvar(logvar.data.shape());
        elbo_backward(recon, target, mean, logvar, beta, d_recon, d_mean, d_logvar);

        const auto total = [&](const Tensor& r, const PoseLatent& m, const PoseLatent& lv) {
          return elbo_loss(r, target, m, lv, beta).total;
        };
        if (!grad_ok([&](const Tensor& t) { return total(t, mean, logvar); }, recon, d_recon,
                     detail, "elbo recon") ||
            !grad_ok(
                [&](const Tensor& t) {
                  PoseLatent m;
                  m.data = t;
                  return total(recon, m, logvar);
                },
                mean.data, d_mean, detail, "elbo mean") ||
            !grad_ok(
                [&](const Tensor& t) {
                  PoseLatent lv;
                  lv.data = t;
                  return total(recon, mean, lv);
                },
                logvar.data, d_logvar, detail, "elbo logvar")) {
          return false;
        }
      }
      {  // diffusion loss
        const Tensor pred = Tensor::uniform({4, 4}, 280 + seed);
        const Tensor eps = Tensor::uniform({4, 4}, 290 + seed);
        if (!grad_ok([&](const Tensor& t) { return diffusion_loss(t, eps); }, pred,
                     diffusion_loss_grad(pred, eps), detail, "diffusion_loss")) {
          return false;
        }
      }
    }
    if (elapsed_since(start) >= 60.0) {
      detail = "runtime budget (60 s) exceeded";
      return false;
    }
    return true;
  });

  run(5, "TAI reduction to plain layer norm", [](std::string& detail) {
    const TaiParams params = TaiParams::init(4, 3, 8, 300);  // gamma=1, beta=0
    const Tensor z_k = Tensor::uniform({3, 4, 8}, 301, 2.0);
    const Tensor out = tai_inject(z_k, Tensor::zeros({3, 4, 8}), params);
    const Tensor ln = layer_norm(z_k);
    double max_diff = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      max_diff = std::max(max_diff, std::abs(out[i] - ln[i]));
    }
    if (max_diff >= 1e-12) {
      detail = "max abs diff " + format_number(max_diff);
      return false;
    }
    return true;
  });

  run(6, "noise-schedule variance conservation", [](std::string& detail) {
    const NoiseSchedule sched = NoiseSchedule::linear(1000);
    const int n = 100000;
    std::uint64_t seed = 302;
    for (int t : {0, 249, 499, 749, 999}) {
      const Tensor z0 = Tensor::gaussian({n}, seed++);
      const Tensor eps = Tensor::gaussian({n}, seed++);
      const Tensor zt = noise_forward(z0, eps, sched, t);
      double m = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < zt.size(); ++i) {
        m += zt[i];
        sq += zt[i] * zt[i];
      }
      m /= n;
      const double var = sq / n - m * m;
      if (var < 0.95 || var > 1.05) {
        detail = "t=" + std::to_string(t) + " var " + format_number(var);
        return false;
      }
    }
    return true;
  });

  run(7, "VAE desk training (5 clips, 500 steps)", [](std::string& detail) {
    const auto start = Clock::now();
    const std::vector<MotionClip> clips = synthetic_clips();
    if (clips.size() != 5) {
      detail = "expected 5 clips";
      return false;
    }
    VaeTrainConfig cfg;  // default lr and beta
    cfg.steps = 500;
    cfg.seed = 9;
    const VaeTrainResult a = train(clips, cfg);
    const VaeTrainResult b = train(clips, cfg);

    const double first = a.history.front().recon_mse;
    const double last = a.history.back().recon_mse;
    if (!(last < 0.1 * first)) {
      detail = "recon mse " + format_number(first) + " -> " + format_number(last);
      return false;
    }
    for (std::size_t i = 0; i < a.history.size(); ++i) {
      if (a.history[i].total != b.history[i].total ||
          a.history[i].recon_mse != b.history[i].recon_mse ||
          a.history[i].kl != b.history[i].kl) {
        detail = "history differs at step " + std::to_string(i);
        return false;
      }
    }
    if (elapsed_since(start) >= 180.0) {
      detail = "runtime budget (3 min) exceeded";
      return false;
    }
    detail = "recon mse " + format_number(first) + " -> " + format_number(last);
    return true;
  });

  run(8, "CamMC closed-form oracle", [](std::string& detail) {
    SplitMix64 rng(303);
    const PoseSequence x = test::random_sequence(rng, 9);
    if (cammc(x, x).value != 0.0) {
      detail = "cammc(x, x) != 0";
      return false;
    }

    TrajectorySpec left;
    left.kind = TrajectoryKind::PanLeft;
    left.n_frames = 9;
    left.speed = 0.05;
    TrajectorySpec right = left;
    right.kind = TrajectoryKind::PanRight;
    const double pan = cammc(generate(left), generate(right)).value;
    if (std::abs(pan - 2.0 * 0.05) >= 1e-9) {
      detail = "pan-left/pan-right gave " + format_number(pan);
      return false;
    }

    TrajectorySpec zoom;
    zoom.kind = TrajectoryKind::ZoomIn;
    zoom.n_frames = 9;
    zoom.speed = 0.07;
    PoseSequence still;
    still.url = "static";
    for (int i = 0; i < 9; ++i) {
      PoseFrame f;
      f.timestamp_us = i * 33333;
      still.frames.push_back(f);
    }
    const double z = cammc(generate(zoom), still).value;
    if (std::abs(z - 0.07) >= 1e-9) {
      detail = "zoom-in vs static gave " + format_number(z);
      return false;
    }
    return true;
  });

  run(9, "round trips (pose text, PPM)", [](std::string& detail) {
    SplitMix64 rng(304);
    for (int trial = 0; trial < 100; ++trial) {
      const PoseSequence raw =
          test::random_sequence(rng, 2 + static_cast<int>(rng.next_double() * 6));
      const PoseSequence normalized = parse_sequence(serialize_sequence(raw));
      if (!(parse_sequence(serialize_sequence(normalized)) == normalized)) {
        detail = "pose round trip failed at trial " + std::to_string(trial);
        return false;
      }
    }

    RgbImage img;
    img.width = 37;
    img.height = 23;
    img.pixels.resize(static_cast<std::size_t>(37) * 23 * 3);
    for (std::uint8_t& bgr : img.pixels) bgr = static_cast<std::uint8_t>(rng.next_u64() & 0xFF);
    std::stringstream ss;
    write_ppm(img, ss);
    if (!(test::read_ppm(ss) == img)) {
      detail = "PPM round trip failed";
      return false;
    }
    return true;
  });

  run(10, "ablation harness structural parity", [](std::string& detail) {
    const int p = 6, f = 4, d = 8;
    const Tensor z_k = Tensor::uniform({p, f, d}, 305, 1.5);
    const Tensor z_p = Tensor::uniform({p, f, d}, 306);
    const Tensor probe = Tensor::bounded_uniform({p, f, d}, 307, 0.3, 1.0);

    TaiParams tai = TaiParams::init(4, p, d, 308);
    tai.gamma.value = Tensor::bounded_uniform({d}, 309, 0.3, 0.9);
    tai.beta.value = Tensor::uniform({d}, 310, 0.5);
    ConcatParams concat = ConcatParams::init(d, 311);

    const Tensor out_tai = tai_inject(z_k, z_p, tai);
    const Tensor out_concat = concat_inject(z_k, z_p, concat);
    const Tensor out_cross = cross_attn_inject(z_k, z_p);
    if (!out_tai.same_shape(z_k) || !out_concat.same_shape(z_k) || !out_cross.same_shape(z_k)) {
      detail = "an injection strategy changed the shape";
      return false;
    }

    for (Parameter* par : tai.parameters()) par->zero_grad();
    concat.proj.zero_grad();
    Tensor d_zk(z_k.shape()), d_zp(z_p.shape());
    tai_inject_backward(z_k, z_p, tai, probe, d_zk, d_zp);
    if (!grad_ok([&](const Tensor& t) { return dot(tai_inject(t, z_p, tai), probe); }, z_k, d_zk,
                 detail, "tai")) {
      return false;
    }
    d_zk = Tensor(z_k.shape());
    d_zp = Tensor(z_p.shape());
    concat_inject_backward(z_k, z_p, concat, probe, d_zk, d_zp);
    if (!grad_ok([&](const Tensor& t) { return dot(concat_inject(t, z_p, concat), probe); }, z_k,
                 d_zk, detail, "concat")) {
      return false;
    }
    d_zk = Tensor(z_k.shape());
    d_zp = Tensor(z_p.shape());
    cross_attn_inject_backward(z_k, z_p, probe, d_zk, d_zp);
    if (!grad_ok([&](const Tensor& t) { return dot(cross_attn_inject(t, z_p), probe); }, z_k,
                 d_zk, detail, "cross-attn")) {
      return false;
    }
    return true;
  });

  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
