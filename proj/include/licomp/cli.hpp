// Copyright (c) the licomp project authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "licomp/cae.hpp"
#include "licomp/checkpoint.hpp"
#include "licomp/corpus.hpp"
#include "licomp/gan.hpp"
#include "licomp/rd_sweep.hpp"
#include "licomp/sr.hpp"

namespace licomp {

// Checkpoints are plain named-tensor containers; the architecture rides along
// as small "meta.*" tensors so that decode needs nothing but the stream and
// the checkpoint.
namespace detail {

inline constexpr float kKindCae = 0.0f, kKindGan = 1.0f, kKindSrcnn = 2.0f;

template <typename T>
void save_with_meta(const std::string& path, std::vector<Param<T>*> params, float kind,
                    std::vector<float> meta) {
  Param<T> kind_p("meta.kind", Tensor<T>({1}, {static_cast<T>(kind)}));
  std::vector<T> mv(meta.begin(), meta.end());
  Param<T> meta_p("meta.config",
                  mv.empty() ? Tensor<T>({0}) : Tensor<T>({static_cast<int>(mv.size())}, mv));
  params.push_back(&kind_p);
  if (!mv.empty()) params.push_back(&meta_p);
  save_checkpoint(path, params);
}

inline float checkpoint_kind(const std::map<std::string, Tensor<float>>& stored,
                             const std::string& path) {
  auto it = stored.find("meta.kind");
  if (it == stored.end() || it->second.numel() != 1)
    fail(ErrorKind::kFormat, path + ": checkpoint carries no model kind");
  return it->second.data[0];
}

template <typename T>
void assign_params(const std::map<std::string, Tensor<float>>& stored,
                   const std::vector<Param<T>*>& params, const std::string& path) {
  for (auto* p : params) {
    auto it = stored.find(p->name);
    if (it == stored.end()) fail(ErrorKind::kFormat, path + ": checkpoint missing " + p->name);
    if (it->second.shape != p->node->value.shape)
      fail(ErrorKind::kFormat, path + ": shape mismatch for " + p->name);
    p->node->value = it->second.template cast<T>();
  }
}

}  // namespace detail

template <typename T>
void save_cae_model(CaeModel<T>& model, const std::string& path) {
  std::vector<float> meta = {static_cast<float>(model.config.stages),
                             static_cast<float>(model.config.latent_channels)};
  for (int c : model.config.stage_channels) meta.push_back(static_cast<float>(c));
  detail::save_with_meta<T>(path, model.params(), detail::kKindCae, std::move(meta));
}

inline CaeModel<float> load_cae_model(const std::string& path) {
  auto stored = parse_checkpoint(read_file_bytes(path));
  if (detail::checkpoint_kind(stored, path) != detail::kKindCae)
    fail(ErrorKind::kFormat, path + ": not a CAE checkpoint");
  auto meta = stored.at("meta.config");
  if (meta.numel() < 2) fail(ErrorKind::kFormat, path + ": corrupt CAE meta");
  CaeConfig cfg;
  cfg.stages = static_cast<int>(meta.data[0]);
  cfg.latent_channels = static_cast<int>(meta.data[1]);
  cfg.stage_channels.clear();
  for (int64_t i = 2; i < meta.numel(); ++i)
    cfg.stage_channels.push_back(static_cast<int>(meta.data[i]));
  auto model = CaeModel<float>::make(cfg, 0);
  detail::assign_params(stored, model.params(), path);
  return model;
}

template <typename T>
void save_gan_model(GanModel<T>& model, const std::string& path) {
  std::vector<float> meta = {static_cast<float>(model.config.tile),
                             static_cast<float>(model.config.code_size)};
  detail::save_with_meta<T>(path, model.state_params(), detail::kKindGan, std::move(meta));
}

inline GanModel<float> load_gan_model(const std::string& path) {
  auto stored = parse_checkpoint(read_file_bytes(path));
  if (detail::checkpoint_kind(stored, path) != detail::kKindGan)
    fail(ErrorKind::kFormat, path + ": not a GAN checkpoint");
  auto meta = stored.at("meta.config");
  if (meta.numel() != 2) fail(ErrorKind::kFormat, path + ": corrupt GAN meta");
  GanConfig cfg;
  cfg.tile = static_cast<int>(meta.data[0]);
  cfg.code_size = static_cast<int>(meta.data[1]);
  auto model = GanModel<float>::make(cfg, 0);
  detail::assign_params(stored, model.state_params(), path);
  return model;
}

template <typename T>
void save_srcnn_model(SrcnnModel<T>& model, const std::string& path) {
  detail::save_with_meta<T>(path, model.params(), detail::kKindSrcnn, {});
}

inline SrcnnModel<float> load_srcnn_model(const std::string& path) {
  auto stored = parse_checkpoint(read_file_bytes(path));
  if (detail::checkpoint_kind(stored, path) != detail::kKindSrcnn)
    fail(ErrorKind::kFormat, path + ": not an SRCNN checkpoint");
  auto model = SrcnnModel<float>::make(0);
  detail::assign_params(stored, model.params(), path);
  return model;
}

namespace detail {

class LossLog {
 public:
  LossLog(const std::string& path, const std::string& header) {
    if (path.empty()) return;
    bool fresh = !std::filesystem::exists(path);
    out_.open(path, std::ios::app);
    if (!out_) fail(ErrorKind::kIo, "cannot open loss log " + path);
    if (fresh) out_ << header << "\n";
  }
  void row(int64_t step, double loss, double aux = 0.0) {
    if (!out_.is_open()) return;
    out_ << step << "," << loss << "," << aux << "\n";
  }

 private:
  std::ofstream out_;
};

struct TrainArgs {
  std::string codec, corpus_dir, out_path, log_path, split = "train";
  uint64_t seed = 0;
  int iters = 2000, batch = 16, patch = 0;
  double lr = 1e-4;
  // cae
  double lambda = 0.01, noise_width = 0.5;
  int stages = 3, latent_channels = 32;
  // gan
  int tile = 128, code_size = 128;
  double beta = 0.01;
};

inline CorpusSplit parse_split(const std::string& s) {
  if (s == "train") return CorpusSplit::kTrain;
  if (s == "valid") return CorpusSplit::kValid;
  if (s == "all") return CorpusSplit::kAll;
  fail(ErrorKind::kUsage, "unknown split " + s);
}

inline int cmd_train(const TrainArgs& a) {
  auto images = Corpus::from_dir(a.corpus_dir, parse_split(a.split)).load_all();
  std::vector<std::string> warnings;
  AdamConfig adam{.lr = a.lr};

  if (a.codec == "cae") {
    CaeConfig cfg;
    cfg.lambda = static_cast<float>(a.lambda);
    cfg.noise_width = static_cast<float>(a.noise_width);
    cfg.stages = a.stages;
    cfg.latent_channels = a.latent_channels;
    cfg.stage_channels.clear();
    for (int s = 0; s + 1 < a.stages; ++s)
      cfg.stage_channels.push_back(std::min(256, 32 << s));
    int patch = a.patch ? a.patch : 64;
    if (patch % cfg.stage_multiple() != 0)
      fail(ErrorKind::kUsage, "patch size must be divisible by 2^stages");
    auto model = CaeModel<float>::make(cfg, a.seed);
    AdamOptimizer<float> opt(model.params(), adam);
    LossLog log(a.log_path, "step,loss,aux");
    std::mt19937_64 rng(a.seed);
    for (int step = 0; step < a.iters; ++step) {
      auto batch = sample_patches(images, patch, a.batch, rng(), PatchRange::kUnit, false,
                                  &warnings);
      float loss = cae_train_step(model, batch, opt, rng);
      log.row(step, loss);
    }
    save_cae_model(model, a.out_path);
  } else if (a.codec == "gan") {
    GanConfig cfg;
    cfg.tile = a.tile;
    cfg.code_size = a.code_size;
    cfg.beta = static_cast<float>(a.beta);
    auto model = GanModel<float>::make(cfg, a.seed);
    AdamOptimizer<float> g_opt(model.generator_params(), adam);
    AdamOptimizer<float> d_opt(model.discriminator_params(), adam);
    LossLog log(a.log_path, "step,loss,aux");
    std::mt19937_64 rng(a.seed);
    for (int step = 0; step < a.iters; ++step) {
      auto batch = sample_patches(images, cfg.tile, a.batch, rng(), PatchRange::kSigned, true,
                                  &warnings);
      auto [g, d] = gan_train_step(model, batch, g_opt, d_opt);
      log.row(step, g, d);
    }
    save_gan_model(model, a.out_path);
  } else if (a.codec == "srcnn") {
    int patch = a.patch ? a.patch : 32;
    auto model = SrcnnModel<float>::near_identity(a.seed);
    AdamOptimizer<float> opt(model.params(), adam);
    LossLog log(a.log_path, "step,loss,aux");
    std::mt19937_64 rng(a.seed);
    for (int step = 0; step < a.iters; ++step) {
      auto target = sample_patches(images, patch, a.batch, rng(), PatchRange::kUnit, false,
                                   &warnings);
      // scale-2 degradation: lanczos down to half, bicubic back up
      Tensor<float> input = target;
      for (int n = 0; n < a.batch; ++n) {
        Image p = Image::make(patch, patch, 1, Colorspace::kGray, Depth::kF32);
        for (int i = 0; i < patch * patch; ++i) p.planes[0][i] = target.data[
            static_cast<size_t>(n) * patch * patch + i];
        Image down = resample(p, 0.5, ResampleKernel::kLanczos3);
        Image up = resample_to(down, patch, patch, ResampleKernel::kBicubic);
        for (int i = 0; i < patch * patch; ++i)
          input.data[static_cast<size_t>(n) * patch * patch + i] = up.planes[0][i];
      }
      float loss = srcnn_train_step(model, input, target, opt);
      log.row(step, loss);
    }
    save_srcnn_model(model, a.out_path);
  } else {
    fail(ErrorKind::kUsage, "unknown codec " + a.codec + " (expected cae, gan or srcnn)");
  }

  for (const auto& w : warnings) std::cerr << "lic train: " << w << "\n";
  return 0;
}

struct CodecArgs {
  std::string codec, input, output, model_path;
  int bits = 8;
  // gan
  double scale = 1.0;
  bool use_pca = false;
  // sr
  double threshold = 33.0;
  std::string base = "builtin";
  int qp = 80;
};

inline BaseCodecParams parse_base(const std::string& base, int qp) {
  if (base == "builtin") return {BaseCodecKind::kBuiltinDct, qp};
  if (base == "bpg") return {BaseCodecKind::kExternalBpg, qp};
  fail(ErrorKind::kUsage, "unknown base codec " + base + " (expected builtin or bpg)");
}

inline int cmd_encode(const CodecArgs& a) {
  Image img = load_image(a.input);
  Bitstream bs;
  if (a.codec == "cae") {
    if (a.model_path.empty()) fail(ErrorKind::kUsage, "cae encode needs --model");
    auto model = load_cae_model(a.model_path);
    bs = cae_encode(img, model, a.bits);
  } else if (a.codec == "gan") {
    if (a.model_path.empty()) fail(ErrorKind::kUsage, "gan encode needs --model");
    auto model = load_gan_model(a.model_path);
    GanConfig cfg = model.config;
    cfg.quant_bits = a.bits;
    cfg.interp_scale = a.scale;
    cfg.use_pca = a.use_pca;
    bs = gan_encode(img, model, cfg);
  } else if (a.codec == "sr") {
    SrcnnModel<float> model = SrcnnModel<float>::identity();
    if (!a.model_path.empty()) {
      model = load_srcnn_model(a.model_path);
    } else {
      std::cerr << "lic encode: no --model given, using the identity SRCNN\n";
    }
    AdaptiveConfig cfg;
    cfg.threshold_db = a.threshold;
    bs = sr_encode(img, model, cfg, parse_base(a.base, a.qp));
  } else {
    fail(ErrorKind::kUsage, "unknown codec " + a.codec);
  }
  write_file_bytes(a.output, bs.bytes);
  return 0;
}

inline int cmd_decode(const CodecArgs& a) {
  Bitstream bs{read_file_bytes(a.input)};
  ByteReader r(bs.bytes);
  ContainerPrefix prefix = read_container_prefix(r);
  Image out;
  switch (prefix.codec_id) {
    case CodecId::kCae: {
      if (a.model_path.empty()) fail(ErrorKind::kUsage, "decoding a CAE stream needs --model");
      auto model = load_cae_model(a.model_path);
      out = cae_decode(bs, model);
      break;
    }
    case CodecId::kGan: {
      if (a.model_path.empty()) fail(ErrorKind::kUsage, "decoding a GAN stream needs --model");
      auto model = load_gan_model(a.model_path);
      out = gan_decode(bs, model);
      break;
    }
    case CodecId::kSr: {
      SrcnnModel<float> model = SrcnnModel<float>::identity();
      if (!a.model_path.empty()) model = load_srcnn_model(a.model_path);
      out = sr_decode(bs, &model);
      break;
    }
  }
  save_image(out, a.output);
  return 0;
}

struct EvalArgs {
  std::string ref, test, out_csv;
};

inline int cmd_eval(const EvalArgs& a) {
  Image ref = load_image(a.ref);
  Image test = load_image(a.test);
  double p = psnr(ref, test);
  double s = ms_ssim(ref, test);
  std::printf("psnr_db=%.6g ms_ssim=%.6g\n", p, s);
  if (!a.out_csv.empty()) {
    bool fresh = !std::filesystem::exists(a.out_csv);
    std::ofstream f(a.out_csv, std::ios::app);
    if (!f) fail(ErrorKind::kIo, "cannot open " + a.out_csv);
    if (fresh) f << rd_csv_header();
    RdPoint point{0.0, p, s, "eval",
                  std::filesystem::path(a.ref).filename().string() + "|" +
                      std::filesystem::path(a.test).filename().string()};
    f << rd_csv_row(point);
  }
  return 0;
}

struct CompareArgs {
  std::vector<std::string> codecs;
  std::string corpus_dir, out_csv, bd_report;
  std::vector<std::string> cae_models, gan_models;
  std::string sr_model;
  std::vector<int> cae_bits{8}, gan_bits{8};
  std::vector<double> gan_scales{1.0};
  std::vector<int> sr_qps{60, 75, 90};
  double threshold = 33.0;
  std::string base = "builtin";
};

// Plain-text BD-rate report: the first codec anchors, every other curve is
// measured against it.
inline std::string bd_rate_report(const std::vector<RdCurve>& curves) {
  std::string out = "bd-rate report (PSNR axis, negative = test cheaper)\n";
  if (curves.size() < 2) return out + "  (need at least two codecs)\n";
  const RdCurve& anchor = curves.front();
  for (size_t i = 1; i < curves.size(); ++i) {
    out += "  anchor=" + anchor.label + " test=" + curves[i].label + ": ";
    try {
      RdCurve a = anchor, t = curves[i];
      a.sort_and_check();
      t.sort_and_check();
      char buf[64];
      std::snprintf(buf, sizeof buf, "%+.2f%%\n", bd_rate(a, t));
      out += buf;
    } catch (const Error& e) {
      out += std::string("n/a (") + e.what() + ")\n";
    }
  }
  return out;
}

inline int cmd_compare(const CompareArgs& a) {
  auto images = Corpus::from_dir(a.corpus_dir, CorpusSplit::kAll).load_all();
  std::vector<std::string> warnings;
  std::vector<RdCurve> curves;
  std::string csv = rd_csv_header();

  for (const auto& codec : a.codecs) {
    std::vector<SweepConfig> configs;
    if (codec == "cae") {
      if (a.cae_models.empty()) fail(ErrorKind::kUsage, "compare: cae requested without --cae-model");
      for (const auto& path : a.cae_models) {
        auto model = std::make_shared<CaeModel<float>>(load_cae_model(path));
        for (int bits : a.cae_bits) {
          std::string note = std::filesystem::path(path).stem().string() + "@b" +
                             std::to_string(bits);
          configs.push_back({"cae", note,
                             [model, bits](const Image& img) { return cae_encode(img, *model, bits); },
                             [model](const Bitstream& bs) { return cae_decode(bs, *model); }});
        }
      }
    } else if (codec == "gan") {
      if (a.gan_models.empty()) fail(ErrorKind::kUsage, "compare: gan requested without --gan-model");
      for (const auto& path : a.gan_models) {
        auto model = std::make_shared<GanModel<float>>(load_gan_model(path));
        for (int bits : a.gan_bits)
          for (double scale : a.gan_scales) {
            GanConfig cfg = model->config;
            cfg.quant_bits = bits;
            cfg.interp_scale = scale;
            char note[128];
            std::snprintf(note, sizeof note, "%s@b%d_s%.2f",
                          std::filesystem::path(path).stem().string().c_str(), bits, scale);
            configs.push_back({"gan", note,
                               [model, cfg](const Image& img) { return gan_encode(img, *model, cfg); },
                               [model](const Bitstream& bs) { return gan_decode(bs, *model); }});
          }
      }
    } else if (codec == "sr") {
      auto model = std::make_shared<SrcnnModel<float>>(
          a.sr_model.empty() ? SrcnnModel<float>::identity() : load_srcnn_model(a.sr_model));
      for (int qp : a.sr_qps) {
        AdaptiveConfig cfg;
        cfg.threshold_db = a.threshold;
        BaseCodecParams base = parse_base(a.base, qp);
        configs.push_back({"sr", "qp" + std::to_string(qp),
                           [model, cfg, base](const Image& img) {
                             return sr_encode(img, *model, cfg, base);
                           },
                           [model](const Bitstream& bs) { return sr_decode(bs, model.get()); }});
      }
    } else {
      fail(ErrorKind::kUsage, "unknown codec " + codec + " in --codecs");
    }

    RdCurve curve = rd_sweep(images, codec, configs, &warnings);
    for (const auto& p : curve.points) csv += rd_csv_row(p);
    curves.push_back(std::move(curve));
  }

  if (a.out_csv.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    std::ofstream f(a.out_csv, std::ios::trunc);
    if (!f) fail(ErrorKind::kIo, "cannot open " + a.out_csv);
    f << csv;
  }
  if (curves.size() >= 2) {
    std::string report = bd_rate_report(curves);
    if (a.bd_report.empty()) {
      std::fputs(report.c_str(), stdout);
    } else {
      std::ofstream f(a.bd_report, std::ios::trunc);
      if (!f) fail(ErrorKind::kIo, "cannot open " + a.bd_report);
      f << report;
    }
  }
  for (const auto& w : warnings) std::cerr << "lic compare: " << w << "\n";
  return 0;
}

}  // namespace detail

// Entry point behind the `lic` binary. Exit codes: 0 ok, 2 usage, 3 I/O or
// format, 4 numeric failure.
inline int run_command(const std::vector<std::string>& args) {
  CLI::App app{"licomp: learned image compression workbench"};
  app.require_subcommand(1);
  app.set_config("--config");

  detail::TrainArgs train;
  auto* t = app.add_subcommand("train", "train a codec network");
  t->add_option("--codec", train.codec, "cae, gan or srcnn")->required();
  t->add_option("--corpus", train.corpus_dir, "training image directory")->required();
  t->add_option("-o,--out", train.out_path, "output checkpoint (.licw)")->required();
  t->add_option("--seed", train.seed, "RNG seed (all randomness flows from it)")->required();
  t->add_option("--iters", train.iters, "training steps");
  t->add_option("--batch", train.batch, "batch size");
  t->add_option("--patch", train.patch, "patch side (default 64 cae / tile gan / 32 srcnn)");
  t->add_option("--lr", train.lr, "Adam learning rate");
  t->add_option("--split", train.split, "train|valid|all (filename-hash 90/10)");
  t->add_option("--log", train.log_path, "append-only loss CSV");
  t->add_option("--lambda", train.lambda, "cae rate weight");
  t->add_option("--noise-width", train.noise_width, "cae latent noise half-width");
  t->add_option("--stages", train.stages, "cae downsampling stages");
  t->add_option("--latent-channels", train.latent_channels, "cae latent channels");
  t->add_option("--tile", train.tile, "gan tile side");
  t->add_option("--code-size", train.code_size, "gan code length N");
  t->add_option("--beta", train.beta, "gan feature-matching weight");

  detail::CodecArgs enc;
  auto* e = app.add_subcommand("encode", "encode an image to a .lic stream");
  e->add_option("--codec", enc.codec, "cae, gan or sr")->required();
  e->add_option("-i,--input", enc.input, "input image (ppm/pgm/png)")->required();
  e->add_option("-o,--output", enc.output, "output stream (.lic)")->required();
  e->add_option("-m,--model", enc.model_path, "checkpoint (.licw)");
  e->add_option("--bits", enc.bits, "quantizer bits");
  e->add_option("--scale", enc.scale, "gan interpolation scale");
  e->add_flag("--pca", enc.use_pca, "gan: rotate tile codes by PCA");
  e->add_option("--threshold", enc.threshold, "sr routing threshold (dB)");
  e->add_option("--base", enc.base, "sr base codec: builtin|bpg");
  e->add_option("--qp", enc.qp, "sr base codec quality");

  detail::CodecArgs dec;
  auto* d = app.add_subcommand("decode", "decode a .lic stream to an image");
  d->add_option("-i,--input", dec.input, "input stream (.lic)")->required();
  d->add_option("-o,--output", dec.output, "output image")->required();
  d->add_option("-m,--model", dec.model_path, "checkpoint (.licw)");

  detail::EvalArgs ev;
  auto* v = app.add_subcommand("eval", "PSNR / MS-SSIM between two images");
  v->add_option("-a,--ref", ev.ref, "reference image")->required();
  v->add_option("-b,--test", ev.test, "test image")->required();
  v->add_option("--out", ev.out_csv, "append a CSV row here");

  detail::CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "RD sweep over codecs and configs");
  c->add_option("--codecs", cmp.codecs, "comma-separated subset of cae,gan,sr")
      ->required()
      ->delimiter(',');
  c->add_option("--corpus", cmp.corpus_dir, "evaluation image directory")->required();
  c->add_option("--out", cmp.out_csv, "output CSV (stdout when omitted)");
  c->add_option("--bd-report", cmp.bd_report, "plain-text BD-rate report file");
  c->add_option("--cae-model", cmp.cae_models, "cae checkpoints")->delimiter(',');
  c->add_option("--cae-bits", cmp.cae_bits, "cae quantizer bits grid")->delimiter(',');
  c->add_option("--gan-model", cmp.gan_models, "gan checkpoints")->delimiter(',');
  c->add_option("--gan-bits", cmp.gan_bits, "gan quantizer bits grid")->delimiter(',');
  c->add_option("--gan-scale", cmp.gan_scales, "gan interpolation scale grid")->delimiter(',');
  c->add_option("--sr-model", cmp.sr_model, "srcnn checkpoint");
  c->add_option("--sr-qp", cmp.sr_qps, "sr base-codec quality grid")->delimiter(',');
  c->add_option("--threshold", cmp.threshold, "sr routing threshold (dB)");
  c->add_option("--base", cmp.base, "sr base codec: builtin|bpg");

  std::vector<const char*> argv;
  argv.push_back("lic");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (*t) return detail::cmd_train(train);
    if (*e) return detail::cmd_encode(enc);
    if (*d) return detail::cmd_decode(dec);
    if (*v) return detail::cmd_eval(ev);
    if (*c) return detail::cmd_compare(cmp);
    return 2;
  } catch (const CLI::CallForHelp& h) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& pe) {
    std::cerr << "lic: " << pe.what() << "\n" << app.help();
    return 2;
  } catch (const Error& err) {
    std::cerr << "lic: " << err.what() << "\n";
    return exit_code_for(err.kind());
  } catch (const std::exception& ex) {
    std::cerr << "lic: " << ex.what() << "\n";
    return 1;
  }
}

}  // namespace licomp
