#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include "posekit/errors.hpp"
#include "posekit/metrics.hpp"
#include "posekit/pose_io.hpp"
#include "posekit/render.hpp"
#include "posekit/rng.hpp"
#include "posekit/tai.hpp"
#include "posekit/tensor.hpp"
#include "posekit/trajectory.hpp"
#include "posekit/vae.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace posekit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct RunConfig {
  int width = 640;
  int height = 360;
  int stride = 40;
  double lr = 1.0;  // working SGD rate for the desk-scale VAE
  double beta = 1e-3;
  double guidance_scale = 7.0;  // recorded in metadata, drives nothing
  double max_magnitude = 20.0;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

json config_json(const RunConfig& cfg) {
  json j;
  j["width"] = cfg.width;
  j["height"] = cfg.height;
  j["stride"] = cfg.stride;
  j["lr"] = cfg.lr;
  j["beta"] = cfg.beta;
  j["guidance_scale"] = cfg.guidance_scale;
  j["seed"] = cfg.seed;
  return j;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw IoError("failed writing '" + path + "'");
}

std::string frame_path(const std::string& dir, const std::string& prefix, int index) {
  char name[64];
  std::snprintf(name, sizeof(name), "%s_%04d.ppm", prefix.c_str(), index);
  return (fs::path(dir) / name).string();
}

// Pose file -> motion field -> rendered frames, the shared front half of
// encode and train-vae.
struct EncodedPoses {
  PoseSequence seq;
  SparseMotionField field;
  std::vector<RgbImage> images;
};

EncodedPoses render_pose_file(const std::string& path, const RunConfig& cfg) {
  EncodedPoses out;
  out.seq = parse_sequence(read_file(path));
  out.field = motion_field(out.seq, sparse_grid(cfg.width, cfg.height, cfg.stride, cfg.stride));
  RenderConfig rc;
  rc.out_width = cfg.width;
  rc.out_height = cfg.height;
  rc.max_magnitude = cfg.max_magnitude;
  out.images = field_to_sequence(out.field, rc);
  return out;
}

int cmd_gen_traj(const std::string& kind_name, int frames, double speed, std::uint64_t seed,
                 const std::string& out_path) {
  TrajectorySpec spec;
  try {
    spec.kind = trajectory_kind_from_name(kind_name);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n"
              << "usage: posekit gen-traj <pan-left|pan-right|pan-up|pan-down|zoom-in|zoom-out|"
                 "roundabout|shake> [--frames N] [--speed S] [--seed X] --out FILE\n";
    return kExitUsage;
  }
  spec.n_frames = frames;
  spec.speed = speed;
  spec.seed = seed;

  const PoseSequence seq = generate(spec);
  write_file(out_path, serialize_sequence(seq));
  std::cout << describe(spec) << "\n";
  return kExitOk;
}

int cmd_encode(const std::string& pose_file, const RunConfig& cfg, const std::string& checkpoint,
               const std::string& channels, bool arrows) {
  const EncodedPoses enc = render_pose_file(pose_file, cfg);
  fs::create_directories(cfg.out_dir);

  if (arrows) {
    RenderConfig rc;
    rc.out_width = cfg.width;
    rc.out_height = cfg.height;
    rc.max_magnitude = cfg.max_magnitude;
    rc.draw_arrows = true;
    const std::vector<RgbImage> overlaid = field_to_sequence(enc.field, rc);
    for (std::size_t i = 0; i < overlaid.size(); ++i) {
      write_ppm_file(overlaid[i], frame_path(cfg.out_dir, "motion", static_cast<int>(i)));
    }
  } else {
    for (std::size_t i = 0; i < enc.images.size(); ++i) {
      write_ppm_file(enc.images[i], frame_path(cfg.out_dir, "motion", static_cast<int>(i)));
    }
  }

  Tensor raw;
  if (channels == "rgb") {
    raw = clip_tensor_from_images(enc.images);
  } else if (channels == "plucker") {
    raw = clip_tensor_from_field(enc.field);
  } else {
    std::cerr << "unknown --channels '" << channels << "' (rgb|plucker)\n";
    return kExitUsage;
  }
  const MotionClip clip = pad_clip(raw);

  VaeParams params;
  if (!checkpoint.empty()) {
    params = load_vae(checkpoint);
    if (params.channels != clip.channels()) {
      throw CheckpointError("checkpoint channels " + std::to_string(params.channels) +
                            " do not match clip channels " + std::to_string(clip.channels()));
    }
  } else {
    std::cerr << "warning: no --checkpoint given, encoding with untrained VAE parameters\n";
    params = VaeParams::init(clip.channels(), cfg.seed);
  }

  PoseLatent mean, logvar;
  encode(clip, params, mean, logvar);
  write_file((fs::path(cfg.out_dir) / "latent.txt").string(), dump_tensor(mean.data));

  json summary;
  summary["frames"] = enc.seq.size();
  summary["grid"] = {enc.field.grid.cols, enc.field.grid.rows};
  summary["latent_shape"] = mean.data.shape();
  summary["config"] = config_json(cfg);
  const std::string text = summary.dump();
  write_file((fs::path(cfg.out_dir) / "summary.json").string(), text + "\n");
  std::cout << text << "\n";
  return kExitOk;
}

int cmd_train_vae(const std::string& data_dir, const RunConfig& cfg, int steps) {
  std::vector<fs::path> files;
  if (fs::is_directory(data_dir)) {
    for (const auto& entry : fs::directory_iterator(data_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt") {
        files.push_back(entry.path());
      }
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cerr << "no .txt pose files in '" << data_dir << "'\n";
    return kExitUsage;
  }

  std::vector<MotionClip> clips;
  for (const fs::path& f : files) {
    const EncodedPoses enc = render_pose_file(f.string(), cfg);
    clips.push_back(pad_clip(clip_tensor_from_images(enc.images)));
  }

  VaeTrainConfig tc;
  tc.steps = steps;
  tc.lr = cfg.lr;
  tc.beta = cfg.beta;
  tc.seed = cfg.seed;
  const VaeTrainResult result = train(clips, tc);

  fs::create_directories(cfg.out_dir);
  save_vae((fs::path(cfg.out_dir) / "vae_checkpoint.txt").string(), result.params);

  json history;
  history["config"] = config_json(cfg);
  history["config"]["steps"] = steps;
  history["clips"] = files.size();
  json total = json::array(), recon = json::array(), kl = json::array();
  for (const TrainStepLoss& l : result.history) {
    total.push_back(l.total);
    recon.push_back(l.recon_mse);
    kl.push_back(l.kl);
  }
  history["total"] = std::move(total);
  history["recon_mse"] = std::move(recon);
  history["kl"] = std::move(kl);
  write_file((fs::path(cfg.out_dir) / "loss_history.json").string(), history.dump() + "\n");

  std::cout << "trained " << clips.size() << " clips for " << steps << " steps; final recon mse "
            << format_number(result.history.back().recon_mse) << "\n";
  return kExitOk;
}

int cmd_inject_demo(const std::string& strategy, int patches, int frames, int dim,
                    std::uint64_t seed, bool zero_pose) {
  if (strategy != "tai" && strategy != "concat" && strategy != "cross-attn") {
    std::cerr << "unknown strategy '" << strategy << "'\n"
              << "usage: posekit inject-demo <tai|concat|cross-attn> [--patches P] [--frames F]"
                 " [--dim D] [--seed X] [--zero-pose]\n";
    return kExitUsage;
  }

  const Tensor z_k = Tensor::uniform({patches, frames, dim}, seed + 1, 1.5);
  const Tensor z_p = zero_pose ? Tensor::zeros({patches, frames, dim})
                               : Tensor::uniform({patches, frames, dim}, seed + 2);
  const Tensor probe = Tensor::bounded_uniform({patches, frames, dim}, seed + 3, 0.3, 1.0);

  Tensor out;
  double grad_err = 0.0;
  double zero_pose_diff = -1.0;

  if (strategy == "tai") {
    TaiParams params = TaiParams::init(4, patches, dim, seed);
    if (!zero_pose) {
      params.gamma.value = Tensor::bounded_uniform({dim}, seed + 10, 0.3, 0.9);
      params.beta.value = Tensor::uniform({dim}, seed + 11, 0.5);
    }
    out = tai_inject(z_k, z_p, params);

    for (Parameter* p : params.parameters()) p->zero_grad();
    Tensor d_zk(z_k.shape()), d_zp(z_p.shape());
    tai_inject_backward(z_k, z_p, params, probe, d_zk, d_zp);
    grad_err = std::max(
        finite_diff_check(
            [&](const Tensor& t) { return dot(tai_inject(t, z_p, params), probe); }, z_k, d_zk),
        finite_diff_check(
            [&](const Tensor& t) { return dot(tai_inject(z_k, t, params), probe); }, z_p, d_zp));
    for (Parameter* par : {&params.gamma, &params.beta}) {
      const Tensor orig = par->value;
      const Tensor analytic = par->grad;
      grad_err = std::max(grad_err, finite_diff_check(
                                        [&](const Tensor& t) {
                                          par->value = t;
                                          const double v =
                                              dot(tai_inject(z_k, z_p, params), probe);
                                          par->value = orig;
                                          return v;
                                        },
                                        orig, analytic));
    }
    if (zero_pose) {
      const Tensor ln = layer_norm(z_k);
      double diff = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) diff = std::max(diff, std::abs(out[i] - ln[i]));
      zero_pose_diff = diff;
    }
  } else if (strategy == "concat") {
    ConcatParams params = ConcatParams::init(dim, seed);
    out = concat_inject(z_k, z_p, params);

    params.proj.zero_grad();
    Tensor d_zk(z_k.shape()), d_zp(z_p.shape());
    concat_inject_backward(z_k, z_p, params, probe, d_zk, d_zp);
    grad_err = std::max(
        finite_diff_check(
            [&](const Tensor& t) { return dot(concat_inject(t, z_p, params), probe); }, z_k, d_zk),
        finite_diff_check(
            [&](const Tensor& t) { return dot(concat_inject(z_k, t, params), probe); }, z_p,
            d_zp));
    const Tensor orig = params.proj.value;
    const Tensor analytic = params.proj.grad;
    grad_err = std::max(grad_err, finite_diff_check(
                                      [&](const Tensor& t) {
                                        params.proj.value = t;
                                        const double v =
                                            dot(concat_inject(z_k, z_p, params), probe);
                                        params.proj.value = orig;
                                        return v;
                                      },
                                      orig, analytic));
  } else {  // cross-attn
    out = cross_attn_inject(z_k, z_p);
    Tensor d_zk(z_k.shape()), d_zp(z_p.shape());
    cross_attn_inject_backward(z_k, z_p, probe, d_zk, d_zp);
    grad_err = std::max(
        finite_diff_check(
            [&](const Tensor& t) { return dot(cross_attn_inject(t, z_p), probe); }, z_k, d_zk),
        finite_diff_check(
            [&](const Tensor& t) { return dot(cross_attn_inject(z_k, t), probe); }, z_p, d_zp));
  }

  double mean = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) mean += out[i];
  mean /= static_cast<double>(out.size());
  double var = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) var += (out[i] - mean) * (out[i] - mean);
  var /= static_cast<double>(out.size());

  json j;
  j["strategy"] = strategy;
  j["shape"] = {patches, frames, dim};
  j["output_mean"] = mean;
  j["output_variance"] = var;
  j["grad_check_max_rel_err"] = grad_err;
  if (zero_pose_diff >= 0.0) j["zero_pose_max_abs_diff"] = zero_pose_diff;
  std::cout << j.dump() << "\n";

  const bool ok = grad_err < 1e-4 && (zero_pose_diff < 0.0 || zero_pose_diff < 1e-12);
  return ok ? kExitOk : kExitRuntime;
}

int cmd_cammc(const std::string& file_a, const std::string& file_b) {
  const PoseSequence a = parse_sequence(read_file(file_a));
  const PoseSequence b = parse_sequence(read_file(file_b));
  const MetricReport r = cammc(a, b);
  std::cout << to_json(r) << "\n";
  return kExitOk;
}

// ---- selftest ----

struct Check {
  std::string name;
  std::function<bool(std::string&)> run;
};

bool approx_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                 const Tensor& analytic, double tol, std::string& detail) {
  const double err = finite_diff_check(f, x, analytic);
  if (err >= tol) {
    detail = "max rel err " + format_number(err);
    return false;
  }
  return true;
}

std::vector<Check> selftest_checks() {
  std::vector<Check> checks;

  checks.push_back({"plucker-invariants", [](std::string& detail) {
                      SplitMix64 rng(1);
                      for (int i = 0; i < 100000; ++i) {
                        CameraPose pose;
                        const double angle = rng.next_in(-M_PI, M_PI);
                        Eigen::Vector3d axis(rng.next_signed(), rng.next_signed(),
                                             rng.next_signed());
                        if (axis.norm() < 1e-6) axis = Eigen::Vector3d(1, 0, 0);
                        pose.rotation = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
                        pose.translation = Eigen::Vector3d(rng.next_signed(), rng.next_signed(),
                                                           rng.next_signed()) *
                                           2.0;
                        CameraIntrinsics k{rng.next_in(0.3, 2.0), rng.next_in(0.3, 2.0),
                                           rng.next_in(0.2, 0.8), rng.next_in(0.2, 0.8)};
                        const PluckerRay ray = plucker_ray(pose, k, rng.next_in(0, 640),
                                                           rng.next_in(0, 360), 640, 360);
                        if (std::abs(ray.direction.norm() - 1.0) >= 1e-12 ||
                            std::abs(ray.direction.dot(ray.moment)) >= 1e-9) {
                          detail = "violated at draw " + std::to_string(i);
                          return false;
                        }
                      }
                      return true;
                    }});

  checks.push_back({"grid-law", [](std::string& detail) {
                      const int table[3][3] = {{20, 32, 18}, {40, 16, 9}, {80, 8, 4}};
                      for (const auto& row : table) {
                        const SampleGrid g = sparse_grid(640, 360, row[0], row[0]);
                        if (g.cols != row[1] || g.rows != row[2]) {
                          detail = "stride " + std::to_string(row[0]);
                          return false;
                        }
                      }
                      return true;
                    }});

  checks.push_back({"latent-shape-contract", [](std::string& detail) {
                      const MotionClip clip = pad_clip(Tensor::uniform({16, 80, 48, 3}, 2));
                      PoseLatent mean, logvar;
                      encode(clip, VaeParams::init(3, 3), mean, logvar);
                      if (mean.data.shape() != std::vector<int>{4, 10, 6, 4}) {
                        detail = "shape law broken";
                        return false;
                      }
                      return true;
                    }});

  checks.push_back({"layer-norm-grad", [](std::string& detail) {
                      for (std::uint64_t seed = 0; seed < 10; ++seed) {
                        const Tensor x = Tensor::uniform({3, 7}, 10 + seed, 2.0);
                        const Tensor probe = Tensor::bounded_uniform({3, 7}, 20 + seed, 0.3, 1.0);
                        Tensor d_x(x.shape());
                        layer_norm_backward(x, probe, d_x);
                        if (!approx_grad(
                                [&](const Tensor& t) { return dot(layer_norm(t), probe); }, x,
                                d_x, 1e-4, detail)) {
                          return false;
                        }
                      }
                      return true;
                    }});

  checks.push_back({"mlp-grad", [](std::string& detail) {
                      for (std::uint64_t seed = 0; seed < 10; ++seed) {
                        MlpParams p(4, 6, 3, 30 + seed);
                        p.w2.value = Tensor::uniform({6, 3}, 40 + seed, 0.5);
                        const Tensor x = Tensor::uniform({5, 4}, 50 + seed);
                        const Tensor probe = Tensor::bounded_uniform({5, 3}, 60 + seed, 0.3, 1.0);
                        Tensor d_x(x.shape());
                        for (Parameter* par : p.parameters()) par->zero_grad();
                        mlp_backward(x, p, probe, d_x);
                        if (!approx_grad(
                                [&](const Tensor& t) { return dot(mlp_forward(t, p), probe); }, x,
                                d_x, 1e-4, detail)) {
                          return false;
                        }
                      }
                      return true;
                    }});

  checks.push_back({"attention-grad", [](std::string& detail) {
                      for (std::uint64_t seed = 0; seed < 10; ++seed) {
                        const Tensor q = Tensor::uniform({4, 8}, 70 + seed);
                        const Tensor k = Tensor::uniform({4, 8}, 80 + seed);
                        const Tensor v = Tensor::uniform({4, 8}, 90 + seed);
                        const Tensor probe = Tensor::bounded_uniform({4, 8}, 100 + seed, 0.3, 1.0);
                        Tensor d_q(q.shape()), d_k(k.shape()), d_v(v.shape());
                        attention_backward(q, k, v, probe, d_q, d_k, d_v);
                        if (!approx_grad(
                                [&](const Tensor& t) { return dot(attention(t, k, v), probe); },
                                q, d_q, 1e-4, detail)) {
                          return false;
                        }
                      }
                      return true;
                    }});

  checks.push_back({"temporal-block-grad", [](std::string& detail) {
                      for (std::uint64_t seed = 0; seed < 10; ++seed) {
                        AttentionBlockParams params = AttentionBlockParams::init(5, 110 + seed);
                        const Tensor z = Tensor::uniform({2, 4, 5}, 120 + seed);
                        const Tensor probe = Tensor::bounded_uniform({2, 4, 5}, 130 + seed, 0.3, 1.0);
                        for (Parameter* par : params.parameters()) par->zero_grad();
                        Tensor d_z(z.shape());
                        temporal_attention_block_backward(z, params, probe, d_z);
                        if (!approx_grad(
                                [&](const Tensor& t) {
                                  return dot(temporal_attention_block(t, params), probe);
                                },
                                z, d_z, 1e-4, detail)) {
                          return false;
                        }
                      }
                      return true;
                    }});

  checks.push_back({"tai-inject-grad", [](std::string& detail) {
                      for (std::uint64_t seed = 0; seed < 10; ++seed) {
                        TaiParams params = TaiParams::init(4, 3, 6, 140 + seed);
                        params.gamma.value = Tensor::bounded_uniform({6}, 150 + seed, 0.3, 0.9);
                        params.beta.value = Tensor::uniform({6}, 160 + seed, 0.5);
                        const Tensor z_k = Tensor::uniform({3, 4, 6}, 170 + seed, 1.5);
                        const Tensor z_p = Tensor::uniform({3, 4, 6}, 180 + seed);
                        const Tensor probe = Tensor::bounded_uniform({3, 4, 6}, 190 + seed, 0.3, 1.0);
                        for (Parameter* par : params.parameters()) par->zero_grad();
                        Tensor d_zk(z_k.shape()), d_zp(z_p.shape());
                        tai_inject_backward(z_k, z_p, params, probe, d_zk, d_zp);
                        if (!approx_grad(
                                [&](const Tensor& t) {
                                  return dot(tai_inject(t, z_p, params), probe);
                                },
                                z_k, d_zk, 1e-4, detail)) {
                          return false;
                        }
                      }
                      return true;
                    }});

  checks.push_back({"concat-inject-grad", [](std::string& detail) {
                      for (std::uint64_t seed = 0; seed < 10; ++seed) {
                        ConcatParams params = ConcatParams::init(5, 200 + seed);
                        const Tensor z_k = Tensor::uniform({2, 3, 5}, 210 + seed);
                        const Tensor z_p = Tensor::uniform({2, 3, 5}, 220 + seed);
                        const Tensor probe = Tensor::bounded_uniform({2, 3, 5}, 230 + seed, 0.3, 1.0);
                        params.proj.zero_grad();
                        Tensor d_zk(z_k.shape()), d_zp(z_p.shape());
                        concat_inject_backward(z_k, z_p, params, probe, d_zk, d_zp);
                        if (!approx_grad(
                                [&](const Tensor& t) {
                                  return dot(concat_inject(t, z_p, params), probe);
                                },
                                z_k, d_zk, 1e-4, detail)) {
                          return false;
                        }
                      }
                      return true;
                    }});

  checks.push_back({"cross-attn-grad", [](std::string& detail) {
                      for (std::uint64_t seed = 0; seed < 10; ++seed) {
                        const Tensor z_k = Tensor::uniform({2, 4, 5}, 240 + seed);
                        const Tensor z_p = Tensor::uniform({2, 4, 5}, 250 + seed);
                        const Tensor probe = Tensor::bounded_uniform({2, 4, 5}, 260 + seed, 0.3, 1.0);
                        Tensor d_zk(z_k.shape()), d_zp(z_p.shape());
                        cross_attn_inject_backward(z_k, z_p, probe, d_zk, d_zp);
                        if (!approx_grad(
                                [&](const Tensor& t) {
                                  return dot(cross_attn_inject(t, z_p), probe);
                                },
                                z_k, d_zk, 1e-4, detail)) {
                          return false;
                        }
                      }
                      return true;
                    }});

  checks.push_back({"elbo-grad", [](std::string& detail) {
                      const Tensor target = Tensor::uniform({4, 8, 8, 3}, 270, 0.9);
                      Tensor recon = target;
                      SplitMix64 rng(271);
                      for (std::size_t i = 0; i < recon.size(); ++i) {
                        recon[i] += (rng.next_double() < 0.5 ? -1.0 : 1.0) * rng.next_in(0.2, 0.8);
                      }
                      PoseLatent mean, logvar;
                      mean.data = Tensor({1, 2, 2, 4});
                      logvar.data = Tensor({1, 2, 2, 4});
                      for (std::size_t i = 0; i < mean.data.size(); ++i) {
                        mean.data[i] = (rng.next_double() < 0.5 ? -1.0 : 1.0) * rng.next_in(0.3, 1.0);
                        logvar.data[i] =
                            (rng.next_double() < 0.5 ? -1.0 : 1.0) * rng.next_in(0.3, 1.0);
                      }
                      Tensor d_recon(recon.shape()), d_mean(mean.data.shape()),
                          d_logvar(logvar.data.shape());
                      elbo_backward(recon, target, mean, logvar, 1.0, d_recon, d_mean, d_logvar);
                      return approx_grad(
                          [&](const Tensor& t) {
                            return elbo_loss(t, target, mean, logvar, 1.0).total;
                          },
                          recon, d_recon, 1e-4, detail);
                    }});

  checks.push_back({"diffusion-loss-grad", [](std::string& detail) {
                      for (std::uint64_t seed = 0; seed < 10; ++seed) {
                        const Tensor pred = Tensor::uniform({4, 4}, 280 + seed);
                        const Tensor eps = Tensor::uniform({4, 4}, 290 + seed);
                        if (!approx_grad([&](const Tensor& t) { return diffusion_loss(t, eps); },
                                         pred, diffusion_loss_grad(pred, eps), 1e-4, detail)) {
                          return false;
                        }
                      }
                      return true;
                    }});

  checks.push_back({"tai-reduction", [](std::string& detail) {
                      const TaiParams params = TaiParams::init(4, 3, 8, 300);
                      const Tensor z_k = Tensor::uniform({3, 4, 8}, 301, 2.0);
                      const Tensor out = tai_inject(z_k, Tensor::zeros({3, 4, 8}), params);
                      const Tensor ln = layer_norm(z_k);
                      for (std::size_t i = 0; i < out.size(); ++i) {
                        if (std::abs(out[i] - ln[i]) >= 1e-12) {
                          detail = "diff " + format_number(std::abs(out[i] - ln[i]));
                          return false;
                        }
                      }
                      return true;
                    }});

  checks.push_back({"noise-conservation", [](std::string& detail) {
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
                    }});

  checks.push_back({"vae-determinism", [](std::string& detail) {
                      const std::vector<MotionClip> clips = {
                          pad_clip(Tensor::uniform({8, 16, 16, 3}, 303, 0.9))};
                      VaeTrainConfig cfg;
                      cfg.steps = 40;
                      cfg.seed = 304;
                      const VaeTrainResult a = train(clips, cfg);
                      const VaeTrainResult b = train(clips, cfg);
                      for (std::size_t i = 0; i < a.history.size(); ++i) {
                        if (a.history[i].total != b.history[i].total) {
                          detail = "diverged at step " + std::to_string(i);
                          return false;
                        }
                      }
                      if (!(a.params.enc_w.value == b.params.enc_w.value)) {
                        detail = "final params differ";
                        return false;
                      }
                      return true;
                    }});

  return checks;
}

int cmd_selftest() {
  const bool color = isatty(1) && std::getenv("NO_COLOR") == nullptr;
  const char* green = color ? "\033[32m" : "";
  const char* red = color ? "\033[31m" : "";
  const char* reset = color ? "\033[0m" : "";

  int failures = 0;
  for (const Check& check : selftest_checks()) {
    std::string detail;
    bool ok = false;
    try {
      ok = check.run(detail);
    } catch (const std::exception& e) {
      detail = e.what();
    }
    if (ok) {
      std::cout << green << "[PASS]" << reset << " " << check.name << "\n";
    } else {
      std::cout << red << "[FAIL]" << reset << " " << check.name;
      if (!detail.empty()) std::cout << " (" << detail << ")";
      std::cout << "\n";
      ++failures;
    }
  }
  if (failures > 0) {
    std::cout << failures << " check(s) failed\n";
    return kExitRuntime;
  }
  std::cout << "all checks passed\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"camera pose conditioning toolkit"};
  app.require_subcommand(1);

  RunConfig cfg;

  // gen-traj
  std::string kind, out_path = "trajectory.txt";
  int gen_frames = 17;
  double gen_speed = 0.1;
  std::uint64_t gen_seed = 0;
  CLI::App* gen = app.add_subcommand("gen-traj", "generate a synthetic camera trajectory file");
  gen->add_option("kind", kind, "trajectory kind (pan-left, ..., zoom-in, roundabout, shake)")
      ->required();
  gen->add_option("--frames", gen_frames, "number of poses")->check(CLI::PositiveNumber);
  gen->add_option("--speed", gen_speed, "per-frame magnitude");
  gen->add_option("--seed", gen_seed, "jitter seed (shake)");
  gen->add_option("--out", out_path, "output pose file");

  // encode
  std::string pose_file, checkpoint, channels = "rgb";
  bool arrows = false;
  CLI::App* enc = app.add_subcommand("encode", "render a pose file and encode its pose latent");
  enc->add_option("pose_file", pose_file, "RealEstate10K-format camera file")->required();
  enc->add_option("--out-dir", cfg.out_dir, "output directory");
  enc->add_option("--width", cfg.width, "pixel width");
  enc->add_option("--height", cfg.height, "pixel height");
  enc->add_option("--stride", cfg.stride, "sampling stride in pixels");
  enc->add_option("--max-magnitude", cfg.max_magnitude, "flow normalization ceiling (px)");
  enc->add_option("--seed", cfg.seed, "seed for untrained VAE parameters");
  enc->add_option("--checkpoint", checkpoint, "trained VAE checkpoint");
  enc->add_option("--channels", channels, "clip channels: rgb or plucker");
  enc->add_flag("--arrows", arrows, "overlay motion arrows on the PPM frames");
  enc->add_option("--guidance-scale", cfg.guidance_scale, "recorded in metadata only");

  // train-vae
  std::string data_dir;
  int steps = 500;
  CLI::App* tr = app.add_subcommand("train-vae", "train the pose VAE on a directory of pose files");
  tr->add_option("data_dir", data_dir, "directory of .txt pose files")->required();
  tr->add_option("--steps", steps, "SGD steps")->check(CLI::PositiveNumber);
  tr->add_option("--lr", cfg.lr, "SGD learning rate");
  tr->add_option("--beta", cfg.beta, "KL weight");
  tr->add_option("--seed", cfg.seed, "training seed");
  tr->add_option("--out-dir", cfg.out_dir, "output directory");
  tr->add_option("--width", cfg.width, "pixel width");
  tr->add_option("--height", cfg.height, "pixel height");
  tr->add_option("--stride", cfg.stride, "sampling stride in pixels");
  tr->add_option("--max-magnitude", cfg.max_magnitude, "flow normalization ceiling (px)");
  tr->add_option("--guidance-scale", cfg.guidance_scale, "recorded in metadata only");

  // inject-demo
  std::string strategy;
  int patches = 6, inj_frames = 4, dim = 8;
  std::uint64_t inj_seed = 0;
  bool zero_pose = false;
  CLI::App* inj = app.add_subcommand("inject-demo", "run one injection strategy on seeded tensors");
  inj->add_option("strategy", strategy, "tai, concat or cross-attn")->required();
  inj->add_option("--patches", patches, "spatial patches")->check(CLI::PositiveNumber);
  inj->add_option("--frames", inj_frames, "latent frames")->check(CLI::PositiveNumber);
  inj->add_option("--dim", dim, "feature dim")->check(CLI::PositiveNumber);
  inj->add_option("--seed", inj_seed, "tensor seed");
  inj->add_flag("--zero-pose", zero_pose, "zero pose latent (reduction check)");

  // cammc
  std::string file_a, file_b;
  CLI::App* cm = app.add_subcommand("cammc", "camera motion consistency between two pose files");
  cm->add_option("file_a", file_a)->required();
  cm->add_option("file_b", file_b)->required();

  CLI::App* st = app.add_subcommand("selftest", "run the invariant and gradient-check suite");
  (void)st;

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_traj(kind, gen_frames, gen_speed, gen_seed, out_path);
    if (enc->parsed()) return cmd_encode(pose_file, cfg, checkpoint, channels, arrows);
    if (tr->parsed()) return cmd_train_vae(data_dir, cfg, steps);
    if (inj->parsed()) {
      return cmd_inject_demo(strategy, patches, inj_frames, dim, inj_seed, zero_pose);
    }
    if (cm->parsed()) return cmd_cammc(file_a, file_b);
    if (st->parsed()) return cmd_selftest();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
