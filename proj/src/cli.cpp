#include "can/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "can/dataset.hpp"
#include "can/forward.hpp"
#include "can/image_io.hpp"
#include "can/image_ops.hpp"
#include "can/metrics.hpp"
#include "can/operators.hpp"
#include "can/parallel.hpp"
#include "can/synthetic.hpp"
#include "can/training.hpp"

namespace fs = std::filesystem;

namespace can {

double bench_forward(const CanModel &model, int height, int repeats, bool constant_content) {
  if (repeats < 3) fail(errc::bad_argument, "bench needs at least 3 repeats");
  const int width = static_cast<int>(std::lround(height * 16.0 / 9.0));
  Rng rng(1234);
  Image img = constant_content ? Image(height, width, 3, 0.5f)
                               : random_noise_image(height, width, rng);
  std::vector<float> aux(model.config.aux_channels, 0.5f);
  ForwardWorkspace ws;
  (void)forward(model, img, aux, &ws); // warm-up
  std::vector<double> ms(repeats);
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    (void)forward(model, img, aux, &ws);
    const auto t1 = std::chrono::steady_clock::now();
    ms[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
  std::sort(ms.begin(), ms.end());
  const int n = repeats;
  return n % 2 ? ms[n / 2] : 0.5 * (ms[n / 2 - 1] + ms[n / 2]);
}

namespace cli {

namespace {

int exit_code_for(const Error &e) {
  switch (e.code()) {
  case errc::bad_argument:
  case errc::dimension_mismatch:
  case errc::empty_dataset:
    return 1;
  case errc::file_not_found:
  case errc::file_write_failed:
  case errc::png_unsupported:
  case errc::png_malformed:
  case errc::bad_magic:
  case errc::bad_version:
  case errc::truncated_stream:
  case errc::non_finite_value:
    return 2;
  case errc::solver_failure:
  case errc::divergence:
    return 3;
  }
  return 3;
}

std::vector<std::string> split_list(const std::string &s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

std::vector<float> parse_aux(const std::string &s) {
  std::vector<float> out;
  for (const std::string &tok : split_list(s)) out.push_back(std::stof(tok));
  return out;
}

std::vector<std::string> list_pngs(const std::string &dir) {
  std::vector<std::string> paths;
  if (!fs::is_directory(dir)) fail(errc::file_not_found, "not a directory: " + dir);
  for (const auto &entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".png")
      paths.push_back(entry.path().string());
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) fail(errc::empty_dataset, "no PNG files in " + dir);
  return paths;
}

std::map<std::string, std::string> parse_config_file(const std::string &path) {
  std::ifstream f(path);
  if (!f) fail(errc::file_not_found, "cannot open config " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(f, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos) fail(errc::bad_argument, "config line is not key = value: " + line);
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return kv;
}

// Operator parameter flags shared by `op` and `dataset`.
struct OpFlags {
  double lambda = 0;
  int iters = 0;
  double sigma = 0, tau = 0, theta = 0;
  double beta0 = 0, kappa = 0, beta_max = 0;
  double rtv_sigma = 0, eps = 0, eps_s = 0, cg_tol = 0;
  int outer_iters = 0, cg_max_iters = 0;
  double omega = 0, t0 = 0, top_fraction = 0, guided_eps = 0;
  int patch_radius = 0, guided_radius = 0;

  CLI::Option *o_lambda = nullptr, *o_iters = nullptr, *o_sigma = nullptr, *o_tau = nullptr,
              *o_theta = nullptr, *o_beta0 = nullptr, *o_kappa = nullptr, *o_beta_max = nullptr,
              *o_rtv_sigma = nullptr, *o_eps = nullptr, *o_eps_s = nullptr, *o_cg_tol = nullptr,
              *o_outer = nullptr, *o_cg_max = nullptr, *o_omega = nullptr, *o_t0 = nullptr,
              *o_topf = nullptr, *o_geps = nullptr, *o_pradius = nullptr, *o_gradius = nullptr;

  void attach(CLI::App *cmd) {
    o_lambda = cmd->add_option("--lambda", lambda, "data-term weight (rof/tvl1/l0/rtv)");
    o_iters = cmd->add_option("--iters", iters, "primal-dual iterations (rof/tvl1)");
    o_sigma = cmd->add_option("--sigma", sigma, "dual step (rof/tvl1)");
    o_tau = cmd->add_option("--tau", tau, "primal step (rof/tvl1)");
    o_theta = cmd->add_option("--theta", theta, "over-relaxation (rof/tvl1)");
    o_beta0 = cmd->add_option("--beta0", beta0, "initial splitting weight (l0)");
    o_kappa = cmd->add_option("--kappa", kappa, "beta multiplier (l0)");
    o_beta_max = cmd->add_option("--beta-max", beta_max, "beta cap (l0)");
    o_rtv_sigma = cmd->add_option("--rtv-sigma", rtv_sigma, "Gaussian scale (rtv)");
    o_eps = cmd->add_option("--eps", eps, "windowed-variation regulariser (rtv)");
    o_eps_s = cmd->add_option("--eps-s", eps_s, "pointwise regulariser (rtv)");
    o_outer = cmd->add_option("--outer-iters", outer_iters, "IRLS outer iterations (rtv)");
    o_cg_tol = cmd->add_option("--cg-tol", cg_tol, "CG tolerance (rtv)");
    o_cg_max = cmd->add_option("--cg-max-iters", cg_max_iters, "CG iteration cap (rtv)");
    o_omega = cmd->add_option("--omega", omega, "haze retention (dehaze)");
    o_t0 = cmd->add_option("--t0", t0, "transmission floor (dehaze)");
    o_pradius = cmd->add_option("--patch-radius", patch_radius, "dark-channel patch radius (dehaze)");
    o_topf = cmd->add_option("--top-fraction", top_fraction, "airlight pixel fraction (dehaze)");
    o_gradius = cmd->add_option("--guided-radius", guided_radius, "guided filter radius (dehaze)");
    o_geps = cmd->add_option("--guided-eps", guided_eps, "guided filter eps (dehaze)");
  }

  OperatorSpec build(OperatorId id) const {
    auto used = [](const CLI::Option *o) { return o && o->count() > 0; };
    std::set<std::string> wrong;
    auto allow = [&](const CLI::Option *o, bool ok) {
      if (used(o) && !ok) wrong.insert(o->get_name());
    };
    const bool tv = id == OperatorId::Rof || id == OperatorId::TvL1;
    const bool l0 = id == OperatorId::L0Smooth;
    const bool rt = id == OperatorId::Rtv;
    const bool dh = id == OperatorId::DarkChannelDehaze;
    allow(o_lambda, !dh);
    allow(o_iters, tv);
    allow(o_sigma, tv);
    allow(o_tau, tv);
    allow(o_theta, tv);
    allow(o_beta0, l0);
    allow(o_kappa, l0);
    allow(o_beta_max, l0);
    allow(o_rtv_sigma, rt);
    allow(o_eps, rt);
    allow(o_eps_s, rt);
    allow(o_outer, rt);
    allow(o_cg_tol, rt);
    allow(o_cg_max, rt);
    allow(o_omega, dh);
    allow(o_t0, dh);
    allow(o_pradius, dh);
    allow(o_topf, dh);
    allow(o_gradius, dh);
    allow(o_geps, dh);
    if (!wrong.empty()) {
      std::string msg = "flags not valid for this operator:";
      for (const std::string &w : wrong) msg += " " + w;
      fail(errc::bad_argument, msg);
    }

    OperatorSpec spec = OperatorSpec::make(id);
    switch (id) {
    case OperatorId::Rof: {
      RofParams &p = std::get<RofParams>(spec.params);
      if (used(o_lambda)) p.lambda = lambda;
      if (used(o_iters)) p.iters = iters;
      if (used(o_sigma)) p.sigma = sigma;
      if (used(o_tau)) p.tau = tau;
      if (used(o_theta)) p.theta = theta;
      p.validate();
      break;
    }
    case OperatorId::TvL1: {
      TvL1Params &p = std::get<TvL1Params>(spec.params);
      if (used(o_lambda)) p.lambda = lambda;
      if (used(o_iters)) p.iters = iters;
      if (used(o_sigma)) p.sigma = sigma;
      if (used(o_tau)) p.tau = tau;
      if (used(o_theta)) p.theta = theta;
      p.validate();
      break;
    }
    case OperatorId::L0Smooth: {
      L0Params &p = std::get<L0Params>(spec.params);
      if (used(o_lambda)) p.lambda = lambda;
      if (used(o_beta0)) p.beta0 = beta0;
      if (used(o_kappa)) p.kappa = kappa;
      if (used(o_beta_max)) p.beta_max = beta_max;
      p.validate();
      break;
    }
    case OperatorId::Rtv: {
      RtvParams &p = std::get<RtvParams>(spec.params);
      if (used(o_lambda)) p.lambda = lambda;
      if (used(o_rtv_sigma)) p.sigma = rtv_sigma;
      if (used(o_eps)) p.eps = eps;
      if (used(o_eps_s)) p.eps_s = eps_s;
      if (used(o_outer)) p.outer_iters = outer_iters;
      if (used(o_cg_tol)) p.cg_tol = cg_tol;
      if (used(o_cg_max)) p.cg_max_iters = cg_max_iters;
      p.validate();
      break;
    }
    case OperatorId::DarkChannelDehaze: {
      DehazeParams &p = std::get<DehazeParams>(spec.params);
      if (used(o_omega)) p.omega = omega;
      if (used(o_t0)) p.t0 = t0;
      if (used(o_pradius)) p.patch_radius = patch_radius;
      if (used(o_topf)) p.top_fraction = top_fraction;
      if (used(o_gradius)) p.guided_radius = guided_radius;
      if (used(o_geps)) p.guided_eps = guided_eps;
      p.validate();
      break;
    }
    }
    return spec;
  }
};

struct TrainFileConfig {
  CanConfig model;
  TrainConfig train;
};

TrainFileConfig parse_train_config(const std::string &path) {
  TrainFileConfig out;
  for (const auto &[key, val] : parse_config_file(path)) {
    if (key == "depth") out.model.depth = std::stoi(val);
    else if (key == "width") out.model.width = std::stoi(val);
    else if (key == "norm") out.model.norm = parse_norm_mode(val);
    else if (key == "plain") out.model.dilation = std::stoi(val) ? DilationMode::None : DilationMode::Exponential;
    else if (key == "lrelu_alpha") out.model.lrelu_alpha = std::stof(val);
    else if (key == "init_noise_std") out.model.init_noise_std = std::stof(val);
    else if (key == "bn_eps") out.model.bn_eps = std::stof(val);
    else if (key == "bn_momentum") out.model.bn_momentum = std::stof(val);
    else if (key == "iterations") out.train.iterations = std::stoll(val);
    else if (key == "lr") out.train.lr = std::stod(val);
    else if (key == "adam_beta1") out.train.adam_beta1 = std::stod(val);
    else if (key == "adam_beta2") out.train.adam_beta2 = std::stod(val);
    else if (key == "adam_eps") out.train.adam_eps = std::stod(val);
    else if (key == "min_res") out.train.min_res = std::stoi(val);
    else if (key == "max_res") out.train.max_res = std::stoi(val);
    else if (key == "seed") out.train.seed = std::stoull(val);
    else if (key == "checkpoint_every") out.train.checkpoint_every = std::stoll(val);
    else if (key == "log_every") out.train.log_every = std::stoll(val);
    else fail(errc::bad_argument, "unknown config key: " + key);
  }
  return out;
}

int run_parsed(CLI::App &app);

} // namespace

int run_command(const std::vector<std::string> &args) {
  CLI::App app{"classical image operators and compact dilated-network approximators"};
  app.fallthrough();
  app.require_subcommand(1);

  int threads = 1;
  app.add_option("--threads", threads, "worker threads (results are thread-count independent)");

  // op
  auto *op = app.add_subcommand("op", "apply a reference operator to one image");
  std::string op_name, op_input, op_output;
  op->add_option("--operator", op_name, "rof|tvl1|l0|rtv|dehaze")->required();
  op->add_option("--input", op_input)->required();
  op->add_option("--output", op_output)->required();
  OpFlags op_flags;
  op_flags.attach(op);

  // dataset
  auto *dsc = app.add_subcommand("dataset", "run an operator over a directory to build pairs");
  std::string ds_inputs, ds_out, ds_operator, ds_multi;
  uint64_t ds_seed = 0;
  bool ds_param_sampled = false;
  double ds_lambda_bar = 0;
  dsc->add_option("--inputs", ds_inputs, "directory of input PNGs")->required();
  dsc->add_option("--out", ds_out, "output directory (index.txt + targets)")->required();
  dsc->add_option("--seed", ds_seed);
  dsc->add_option("--operator", ds_operator, "single operator (fixed / param-sampled)");
  dsc->add_flag("--param-sampled", ds_param_sampled, "sample lambda = lambda_bar*exp(U(-ln10,ln10)) per image");
  auto *ds_lb = dsc->add_option("--lambda-bar", ds_lambda_bar, "centre of the sampled lambda range");
  dsc->add_option("--multi-op", ds_multi, "comma list; one operator drawn per image, one-hot aux");
  OpFlags ds_flags;
  ds_flags.attach(dsc);

  // train
  auto *tr = app.add_subcommand("train", "train an approximator on a dataset");
  std::string tr_config, tr_dataset, tr_out;
  tr->add_option("--config", tr_config, "key = value file")->required();
  tr->add_option("--dataset", tr_dataset, "dataset index file")->required();
  tr->add_option("--out", tr_out, "output model path (.can)")->required();

  // apply
  auto *ap = app.add_subcommand("apply", "run a trained model on one image");
  std::string ap_model, ap_input, ap_output, ap_aux;
  ap->add_option("--model", ap_model)->required();
  ap->add_option("--input", ap_input)->required();
  ap->add_option("--output", ap_output)->required();
  ap->add_option("--aux", ap_aux, "comma-separated aux channel values");

  // eval
  auto *ev = app.add_subcommand("eval", "evaluate a model over a dataset");
  std::string ev_model, ev_dataset, ev_report;
  ev->add_option("--model", ev_model)->required();
  ev->add_option("--dataset", ev_dataset)->required();
  ev->add_option("--report", ev_report, "output CSV")->required();

  // inspect
  auto *in = app.add_subcommand("inspect", "print parameter counts, schedule, receptive field");
  std::string in_model, in_norm = "adaptive";
  int in_depth = 0, in_width = 0, in_aux = 0;
  bool in_plain = false;
  in->add_option("--model", in_model, "model file to inspect");
  in->add_option("--depth", in_depth);
  in->add_option("--width", in_width);
  in->add_option("--norm", in_norm, "none|batch|adaptive");
  in->add_option("--aux", in_aux);
  in->add_flag("--plain", in_plain, "no-dilation variant");

  // bench
  auto *be = app.add_subcommand("bench", "median forward wall time at 16:9 resolutions");
  std::string be_model, be_heights = "480,1080";
  int be_repeats = 5;
  bool be_constant = false;
  be->add_option("--model", be_model)->required();
  be->add_option("--heights", be_heights, "comma list of heights");
  be->add_option("--repeats", be_repeats);
  be->add_flag("--constant", be_constant, "constant instead of random content");

  std::vector<const char *> argv;
  argv.push_back("canop");
  for (const std::string &a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    set_threads(threads);

    if (op->parsed()) {
      const OperatorSpec spec = op_flags.build(parse_operator(op_name));
      save_image(apply_operator(spec, load_image(op_input)), op_output);
      return 0;
    }

    if (dsc->parsed()) {
      BuildOptions opt;
      opt.seed = ds_seed;
      if (!ds_multi.empty()) {
        if (!ds_operator.empty() || ds_param_sampled)
          fail(errc::bad_argument, "--multi-op excludes --operator/--param-sampled");
        opt.mode = DatasetMode::MultiOp;
        for (const std::string &name : split_list(ds_multi))
          opt.ops.push_back(ds_flags.build(parse_operator(name)));
        if (opt.ops.size() < 2) fail(errc::bad_argument, "--multi-op needs at least two operators");
      } else {
        if (ds_operator.empty()) fail(errc::bad_argument, "need --operator or --multi-op");
        OperatorSpec spec = ds_flags.build(parse_operator(ds_operator));
        if (ds_param_sampled) {
          opt.mode = DatasetMode::ParamSampled;
          if (ds_lb->count() > 0) spec = with_lambda(spec, ds_lambda_bar);
        } else {
          opt.mode = DatasetMode::Fixed;
        }
        opt.ops.push_back(spec);
      }
      fs::create_directories(ds_out);
      BuildReport report;
      DatasetIndex index = build_dataset(list_pngs(ds_inputs), ds_out, opt, &report);
      save_index(index, ds_out + "/index.txt");
      for (const BuildFailure &f : report.failures)
        std::cerr << "skipped " << f.path << ": " << f.message << "\n";
      std::cout << "built " << index.entries.size() << " pairs -> " << ds_out << "/index.txt\n";
      return 0;
    }

    if (tr->parsed()) {
      TrainFileConfig cfg = parse_train_config(tr_config);
      const DatasetIndex index = load_index(tr_dataset);
      const LoadedDataset pairs = load_pairs(index);
      cfg.model.aux_channels = pairs.aux_width();
      CanModel model = init_model(cfg.model, cfg.train.seed);
      const TrainResult res = train(model, pairs, cfg.train, tr_out, tr_out + ".loss.csv");
      if (!res.log.empty())
        std::cout << "final loss " << res.log.back().loss << " after " << cfg.train.iterations
                  << " iterations -> " << tr_out << "\n";
      return 0;
    }

    if (ap->parsed()) {
      const CanModel model = load_model(ap_model);
      const std::vector<float> aux = parse_aux(ap_aux);
      save_image(forward(model, load_image(ap_input), aux), ap_output);
      return 0;
    }

    if (ev->parsed()) {
      const CanModel model = load_model(ev_model);
      const CorpusEval eval = evaluate_corpus(model, load_index(ev_dataset));
      write_corpus_csv(eval, ev_report);
      for (const auto &[path, msg] : eval.failures)
        std::cerr << "failed " << path << ": " << msg << "\n";
      std::printf("model mean: mse255 %.6g psnr %.6g ssim %.6g\n", eval.mean_model.mse255,
                  eval.mean_model.psnr, eval.mean_model.ssim);
      std::printf("input mean: mse255 %.6g psnr %.6g ssim %.6g\n", eval.mean_input.mse255,
                  eval.mean_input.psnr, eval.mean_input.ssim);
      return 0;
    }

    if (in->parsed()) {
      CanConfig cfg;
      if (!in_model.empty()) {
        cfg = load_model(in_model).config;
      } else {
        if (in_depth < 3 || in_width < 1)
          fail(errc::bad_argument, "inspect needs --model or --depth/--width");
        cfg.depth = in_depth;
        cfg.width = in_width;
        cfg.norm = parse_norm_mode(in_norm);
        cfg.aux_channels = in_aux;
        cfg.dilation = in_plain ? DilationMode::None : DilationMode::Exponential;
      }
      const ParamCount pc = param_count(cfg);
      std::printf("depth %d width %d norm %s aux %d dilation %s\n", cfg.depth, cfg.width,
                  norm_mode_name(cfg.norm), cfg.aux_channels,
                  cfg.dilation == DilationMode::Exponential ? "exponential" : "plain");
      std::printf("conv_params %lld\n", pc.conv_params);
      std::printf("norm_params %lld\n", pc.norm_params);
      std::printf("dilation_schedule");
      for (int r : dilation_schedule(cfg)) std::printf(" %d", r);
      std::printf("\nreceptive_field %d\n", receptive_field(cfg));
      return 0;
    }

    if (be->parsed()) {
      const CanModel model = load_model(be_model);
      std::printf("height,width,median_ms\n");
      for (const std::string &tok : split_list(be_heights)) {
        const int height = std::stoi(tok);
        const double ms = bench_forward(model, height, be_repeats, be_constant);
        std::printf("%d,%d,%.3f\n", height, static_cast<int>(std::lround(height * 16.0 / 9.0)), ms);
      }
      return 0;
    }

    return 1;
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

} // namespace cli
} // namespace can
