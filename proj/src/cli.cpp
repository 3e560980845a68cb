#include "lnf/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include "lnf/datagen.hpp"
#include "lnf/parallel.hpp"
#include "lnf/train.hpp"

namespace lnf::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// All run-configuration keys, canonical order. A key=value config file may
// set any of them; command-line flags override.
struct RunConfig {
  std::string benchmark;
  std::string model = "lnfno";
  std::string preset = "auto";
  std::string ablation = "full";
  int epochs = 0;     // 0 = model default (500 lnfno / 5000 deeponet)
  double lr = 0.0;    // 0 = model default (1e-3 lnfno / 1e-4 deeponet)
  int batch = 20;
  double wd = 1e-4;
  uint64_t seed = 0;
  std::string data;
  std::string out;
  std::string ckpt;
  std::string mesh;
  int n = 0;
  int res = 0;
  int res_fine = 0;
  double k = -1.0;
  double nu = 0.0;
  double t_final = 0.0;
  double dt = 0.0;
  int n_t = 0;
  int n_check = 10;
  int sample = 0;
  int enc1d_channels = 64;
  int enc2d_channels = 32;
  int branch_width = 256;
  int dec_channels = 0;  // 0 = preset default (64 for D, else 32)
  int don_basis = 1024;
  int don_width = 256;
  int don_depth = 5;

  void set(const std::string& key, const std::string& value) {
    auto to_i = [&] { return std::stoi(value); };
    auto to_d = [&] { return std::stod(value); };
    if (key == "benchmark") benchmark = value;
    else if (key == "model") model = value;
    else if (key == "preset") preset = value;
    else if (key == "ablation") ablation = value;
    else if (key == "epochs") epochs = to_i();
    else if (key == "lr") lr = to_d();
    else if (key == "batch") batch = to_i();
    else if (key == "wd") wd = to_d();
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "data") data = value;
    else if (key == "out") out = value;
    else if (key == "ckpt") ckpt = value;
    else if (key == "mesh") mesh = value;
    else if (key == "n") n = to_i();
    else if (key == "res") res = to_i();
    else if (key == "res_fine") res_fine = to_i();
    else if (key == "k") k = to_d();
    else if (key == "nu") nu = to_d();
    else if (key == "T") t_final = to_d();
    else if (key == "dt") dt = to_d();
    else if (key == "n_t") n_t = to_i();
    else if (key == "n_check") n_check = to_i();
    else if (key == "sample") sample = to_i();
    else if (key == "enc1d_channels") enc1d_channels = to_i();
    else if (key == "enc2d_channels") enc2d_channels = to_i();
    else if (key == "branch_width") branch_width = to_i();
    else if (key == "dec_channels") dec_channels = to_i();
    else if (key == "don_basis") don_basis = to_i();
    else if (key == "don_width") don_width = to_i();
    else if (key == "don_depth") don_depth = to_i();
    else throw UsageError("unknown config key: " + key);
  }

  std::string dump() const {
    std::string s;
    auto kv = [&](const std::string& k2, const std::string& v) {
      s += k2;
      s += '=';
      s += v;
      s += '\n';
    };
    kv("benchmark", benchmark);
    kv("model", model);
    kv("preset", preset);
    kv("ablation", ablation);
    kv("epochs", std::to_string(epochs));
    kv("lr", fmt(lr));
    kv("batch", std::to_string(batch));
    kv("wd", fmt(wd));
    kv("seed", std::to_string(seed));
    kv("data", data);
    kv("out", out);
    kv("ckpt", ckpt);
    kv("mesh", mesh);
    kv("n", std::to_string(n));
    kv("res", std::to_string(res));
    kv("res_fine", std::to_string(res_fine));
    kv("k", fmt(k));
    kv("nu", fmt(nu));
    kv("T", fmt(t_final));
    kv("dt", fmt(dt));
    kv("n_t", std::to_string(n_t));
    kv("n_check", std::to_string(n_check));
    kv("sample", std::to_string(sample));
    kv("enc1d_channels", std::to_string(enc1d_channels));
    kv("enc2d_channels", std::to_string(enc2d_channels));
    kv("branch_width", std::to_string(branch_width));
    kv("dec_channels", std::to_string(dec_channels));
    kv("don_basis", std::to_string(don_basis));
    kv("don_width", std::to_string(don_width));
    kv("don_depth", std::to_string(don_depth));
    return s;
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      size_t eq = line.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw UsageError("config line " + std::to_string(lineno) +
                         " is not key=value");
      }
      try {
        set(line.substr(0, eq), line.substr(eq + 1));
      } catch (const UsageError&) {
        throw;
      } catch (const std::exception&) {
        throw UsageError("config line " + std::to_string(lineno) +
                         ": bad value for key " + line.substr(0, eq));
      }
    }
  }
};

models::Preset resolve_preset(const RunConfig& cfg, const nodf::NodfFile& ds) {
  if (cfg.preset != "auto") return models::parse_preset(cfg.preset);
  std::string bench = ds.meta("benchmark");
  bool don = cfg.model == "deeponet";
  int inputs = 0;
  for (const auto& c : ds.components) inputs += c.role == nodf::Role::Input;
  if (don) {
    if (bench == "pnp") return models::Preset::Mimo;
    return inputs >= 2 ? models::Preset::Miso : models::Preset::Siso;
  }
  if (bench == "pb_fem") return models::Preset::C;
  if (bench == "pnp") return models::Preset::D;
  if (bench == "pb_3d") return models::Preset::E;
  if (inputs >= 2) return models::Preset::B;
  return models::Preset::A;
}

models::ModelSpec build_spec(const RunConfig& cfg, const nodf::NodfFile& ds) {
  models::Kind kind = models::parse_kind(cfg.model);
  models::Preset preset = resolve_preset(cfg, ds);
  models::Ablation ablation = models::parse_ablation(cfg.ablation);
  models::ModelSpec spec = models::spec_from_dataset(ds, kind, preset, ablation);
  spec.enc1d_channels = cfg.enc1d_channels;
  spec.enc2d_channels = cfg.enc2d_channels;
  spec.branch_width = cfg.branch_width;
  if (cfg.dec_channels > 0) spec.dec_channels = cfg.dec_channels;
  spec.don_basis = cfg.don_basis;
  spec.don_width = cfg.don_width;
  spec.don_depth = cfg.don_depth;
  spec.validate();
  return spec;
}

train::TrainConfig train_config(const RunConfig& cfg) {
  train::TrainConfig tc;
  bool don = cfg.model == "deeponet";
  tc.epochs = cfg.epochs > 0 ? cfg.epochs : (don ? 5000 : 500);
  tc.lr = cfg.lr > 0 ? cfg.lr : (don ? 1e-4 : 1e-3);
  tc.batch = cfg.batch;
  tc.wd = cfg.wd;
  tc.seed = cfg.seed;
  return tc;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

std::string history_csv(const train::Metrics& m) {
  std::string s = "epoch,train_loss\n";
  for (size_t e = 0; e < m.epoch_loss.size(); ++e) {
    s += std::to_string(e) + "," + fmt(m.epoch_loss[e]) + "\n";
  }
  return s;
}

std::string final_csv(double mean, const std::vector<double>& per_field,
                      double wall_seconds, bool with_wall) {
  std::string s = fmt(mean);
  for (double f : per_field) s += "," + fmt(f);
  if (with_wall) s += "," + fmt(wall_seconds);
  s += "\n";
  return s;
}

void write_pgm(const std::string& path, std::span<const double> values, int h,
               int w) {
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double span = hi - lo;
  std::string bytes;
  bytes.reserve(values.size());
  for (double v : values) {
    int b = span > 0 ? static_cast<int>(255.0 * (v - lo) / span + 0.5) : 0;
    bytes.push_back(static_cast<char>(b));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << "P5\n" << w << " " << h << "\n255\n" << bytes;
  if (!out) throw IoError("write failed: " + path);
}

datagen::BenchmarkSpec benchmark_spec(const RunConfig& cfg) {
  datagen::BenchmarkSpec spec;
  spec.id = cfg.benchmark;
  spec.n_samples = cfg.n;
  spec.seed = cfg.seed;
  spec.k = cfg.k;
  spec.res = cfg.res;
  spec.res_fine = cfg.res_fine;
  spec.nu = cfg.nu;
  spec.t_final = cfg.t_final;
  spec.dt = cfg.dt;
  spec.n_t = cfg.n_t;
  spec.mesh_path = cfg.mesh;
  return spec;
}

int cmd_gen(const RunConfig& cfg) {
  if (cfg.benchmark.empty() || cfg.out.empty()) {
    throw UsageError("gen needs --benchmark and --out");
  }
  if (cfg.benchmark == "pb_fem" && cfg.mesh.empty()) {
    throw UsageError("gen --benchmark pb_fem needs --mesh");
  }
  nodf::NodfFile file = datagen::generate(benchmark_spec(cfg));
  nodf::write_nodf(file, cfg.out);
  std::cout << "wrote " << cfg.out << ": benchmark=" << file.meta("benchmark")
            << " n=" << file.meta("n") << " discards=" << file.meta("discards");
  for (const auto& c : file.components) {
    if (c.role == nodf::Role::Aux) continue;
    std::cout << " " << c.name << "[";
    for (size_t i = 0; i < c.dims.size(); ++i) {
      std::cout << (i ? "," : "") << c.dims[i];
    }
    std::cout << "]";
  }
  std::cout << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  if (cfg.data.empty() || cfg.out.empty()) {
    throw UsageError("train needs --data and --out (output prefix)");
  }
  nodf::NodfFile dsfile = nodf::read_nodf(cfg.data);
  train::Dataset ds = train::Dataset::from_nodf(dsfile);
  train::SplitIdx split = train::split_dataset(ds.n_samples, cfg.seed);
  train::Normalizer norm = train::fit_normalizer(ds, split.train);
  models::ModelSpec spec = build_spec(cfg, dsfile);
  models::Model model(spec, cfg.seed);
  train::TrainConfig tc = train_config(cfg);
  nn::AdamWState opt = nn::AdamWState::for_params(model.params());
  train::Metrics metrics = train::train_loop(model, ds, split, norm, tc, &opt);

  nodf::Metadata extra = {
      {"seed", std::to_string(cfg.seed)},
      {"benchmark", dsfile.meta("benchmark")},
      {"epochs", std::to_string(tc.epochs)},
      {"lr", fmt(tc.lr)},
      {"batch", std::to_string(tc.batch)},
      {"wd", fmt(tc.wd)},
  };
  train::save_checkpoint(cfg.out + ".ckpt.nodf", model, &opt, norm, ds, extra);
  write_text(cfg.out + ".history.csv", history_csv(metrics));
  write_text(cfg.out + ".final.csv",
             final_csv(metrics.test_rel_l2, metrics.per_field,
                       metrics.wall_seconds, true));
  std::cout << "train done: params=" << model.param_count()
            << " test_rel_l2=" << fmt(metrics.test_rel_l2)
            << " wall_s=" << fmt(metrics.wall_seconds) << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  if (cfg.data.empty() || cfg.ckpt.empty() || cfg.out.empty()) {
    throw UsageError("eval needs --data, --ckpt and --out");
  }
  nodf::NodfFile dsfile = nodf::read_nodf(cfg.data);
  train::Dataset ds = train::Dataset::from_nodf(dsfile);
  train::Checkpoint ck = train::load_checkpoint(cfg.ckpt, dsfile);
  models::Model model(ck.spec, ck.init_seed);
  train::restore_params(model, ck);
  train::SplitIdx split = train::split_dataset(ds.n_samples, ck.init_seed);
  train::EvalResult ev = train::evaluate(model, ds, split.test, ck.norm);
  write_text(cfg.out, final_csv(ev.mean_rel_l2, ev.per_field, 0.0, false));
  std::cout << "eval: test_rel_l2=" << fmt(ev.mean_rel_l2) << "\n";
  return 0;
}

int cmd_ablate(const RunConfig& cfg) {
  if (cfg.data.empty() || cfg.out.empty()) {
    throw UsageError("ablate needs --data and --out");
  }
  static const char* kVariants[] = {
      "full",       "only_nonlinear", "only_linear",        "no_encoder",
      "no_decoder", "no_enc_dec",     "pure_nonlinear_mlp", "pure_linear_mlp",
  };
  nodf::NodfFile dsfile = nodf::read_nodf(cfg.data);
  train::Dataset ds = train::Dataset::from_nodf(dsfile);
  train::SplitIdx split = train::split_dataset(ds.n_samples, cfg.seed);
  train::Normalizer norm = train::fit_normalizer(ds, split.train);
  train::TrainConfig tc = train_config(cfg);

  struct Row {
    int64_t params;
    double seconds;
    double rel_l2;
  };
  std::array<Row, 8> rows{};
  parallel_for(8, [&](int64_t v) {
    RunConfig vc = cfg;
    vc.ablation = kVariants[v];
    models::ModelSpec spec = build_spec(vc, dsfile);
    models::Model model(spec, cfg.seed);
    train::Metrics m = train::train_loop(model, ds, split, norm, tc);
    rows[v] = {model.param_count(), m.wall_seconds, m.test_rel_l2};
  });

  std::string csv = "variant,params,epochs,seconds,test_rel_l2\n";
  for (int v = 0; v < 8; ++v) {
    csv += std::string(kVariants[v]) + "," + std::to_string(rows[v].params) + "," +
           std::to_string(tc.epochs) + "," + fmt(rows[v].seconds) + "," +
           fmt(rows[v].rel_l2) + "\n";
  }
  write_text(cfg.out, csv);
  std::cout << "ablate done: 8 variants -> " << cfg.out << "\n";
  return 0;
}

int cmd_plot(const RunConfig& cfg) {
  if (cfg.data.empty() || cfg.ckpt.empty() || cfg.out.empty()) {
    throw UsageError("plot needs --data, --ckpt and --out (prefix)");
  }
  nodf::NodfFile dsfile = nodf::read_nodf(cfg.data);
  train::Dataset ds = train::Dataset::from_nodf(dsfile);
  if (cfg.sample < 0 || cfg.sample >= ds.n_samples) {
    throw ContractError("plot: sample index out of range");
  }
  train::Checkpoint ck = train::load_checkpoint(cfg.ckpt, dsfile);
  models::Model model(ck.spec, ck.init_seed);
  train::restore_params(model, ck);

  std::vector<Tensor> inputs;
  for (size_t m = 0; m < ds.inputs.size(); ++m) {
    auto s = ds.inputs[m].sample(cfg.sample);
    Tensor t = Tensor::from_data({1, static_cast<int>(ds.inputs[m].numel)}, s);
    train::normalize_inplace(t.data(), ck.norm.inputs[m]);
    inputs.push_back(std::move(t));
  }
  Tensor pred = model.forward(inputs, 1);
  auto pd = pred.data();

  std::string csv = "field,index,target,prediction,abs_error\n";
  int64_t off = 0;
  for (size_t c = 0; c < ds.outputs.size(); ++c) {
    const auto& comp = ds.outputs[c];
    auto target = comp.sample(cfg.sample);
    std::vector<double> phys(pd.begin() + off, pd.begin() + off + comp.numel);
    train::denormalize_inplace(phys, ck.norm.outputs[c]);
    std::vector<double> abserr(comp.numel);
    for (int64_t i = 0; i < comp.numel; ++i) abserr[i] = std::abs(phys[i] - target[i]);

    // panel geometry: first semantic axis x rest
    const auto& shape = ck.spec.outputs[c].dims;
    int h = shape.size() >= 2 ? shape[0] : 1;
    int w = static_cast<int>(comp.numel) / std::max(1, h);
    std::string base = cfg.out + "_" + comp.name;
    write_pgm(base + "_target.pgm", target, h, w);
    write_pgm(base + "_pred.pgm", phys, h, w);
    write_pgm(base + "_abserr.pgm", abserr, h, w);
    for (int64_t i = 0; i < comp.numel; ++i) {
      csv += comp.name + "," + std::to_string(i) + "," + fmt(target[i]) + "," +
             fmt(phys[i]) + "," + fmt(abserr[i]) + "\n";
    }
    off += comp.numel;
  }
  write_text(cfg.out + ".csv", csv);
  std::cout << "plot written with prefix " << cfg.out << "\n";
  return 0;
}

int cmd_verify(const RunConfig& cfg) {
  if (cfg.data.empty()) throw UsageError("verify needs --data");
  nodf::NodfFile file = nodf::read_nodf(cfg.data);
  datagen::VerifyReport rep = datagen::verify_dataset(file, cfg.n_check);
  std::cout << "verify " << file.meta("benchmark") << ": checked=" << rep.n_checked
            << " max_residual=" << fmt(rep.max_residual) << " (" << rep.detail
            << ")\n";
  if (!rep.pass) {
    std::cout << "FAILED samples:";
    for (int i : rep.failing) std::cout << " " << i;
    std::cout << "\n";
    throw Error("dataset verification failed");
  }
  std::cout << "verification passed\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& argv) {
  CLI::App app{"operator-learning benchmark harness"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;
  bool dump = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value run configuration file");
    sub->add_flag("--dump-config", dump, "print the resolved configuration and exit");
    sub->add_option("--model", cfg.model);
    sub->add_option("--preset", cfg.preset);
    sub->add_option("--ablation", cfg.ablation);
    sub->add_option("--epochs", cfg.epochs);
    sub->add_option("--lr", cfg.lr);
    sub->add_option("--batch", cfg.batch);
    sub->add_option("--wd", cfg.wd);
    sub->add_option("--seed", cfg.seed);
    sub->add_option("--data", cfg.data);
    sub->add_option("--out", cfg.out);
    sub->add_option("--ckpt", cfg.ckpt);
    sub->add_option("--mesh", cfg.mesh);
    sub->add_option("--benchmark", cfg.benchmark);
    sub->add_option("--n", cfg.n);
    sub->add_option("--res", cfg.res);
    sub->add_option("--res-fine", cfg.res_fine);
    sub->add_option("--k", cfg.k);
    sub->add_option("--nu", cfg.nu);
    sub->add_option("--T", cfg.t_final);
    sub->add_option("--dt", cfg.dt);
    sub->add_option("--n-t", cfg.n_t);
    sub->add_option("--n-check", cfg.n_check);
    sub->add_option("--sample", cfg.sample);
    sub->add_option("--enc1d-channels", cfg.enc1d_channels);
    sub->add_option("--enc2d-channels", cfg.enc2d_channels);
    sub->add_option("--branch-width", cfg.branch_width);
    sub->add_option("--dec-channels", cfg.dec_channels);
    sub->add_option("--don-basis", cfg.don_basis);
    sub->add_option("--don-width", cfg.don_width);
    sub->add_option("--don-depth", cfg.don_depth);
  };

  CLI::App* gen = app.add_subcommand("gen", "generate a benchmark dataset");
  CLI::App* train_cmd = app.add_subcommand("train", "train a model on a dataset");
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  CLI::App* ablate = app.add_subcommand("ablate", "run the eight ablation variants");
  CLI::App* plot = app.add_subcommand("plot", "emit PGM/CSV panels for one sample");
  CLI::App* verify = app.add_subcommand("verify", "re-check dataset residuals");
  for (CLI::App* sub : {gen, train_cmd, eval_cmd, ablate, plot, verify}) {
    add_common(sub);
  }

  std::vector<std::string> args(argv.rbegin(), argv.rend());
  try {
    // config file first, then flags override: parse twice
    app.parse(args);
    if (!config_path.empty()) {
      RunConfig from_file;
      from_file.load_file(config_path);
      cfg = from_file;
      std::vector<std::string> again(argv.rbegin(), argv.rend());
      app.clear();
      app.parse(again);
    }
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help
    std::cerr << e.what() << "\nusage: lnfno {gen|train|eval|ablate|plot|verify} [options]\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (dump) {
      std::cout << cfg.dump();
      return 0;
    }
    if (gen->parsed()) return cmd_gen(cfg);
    if (train_cmd->parsed()) return cmd_train(cfg);
    if (eval_cmd->parsed()) return cmd_eval(cfg);
    if (ablate->parsed()) return cmd_ablate(cfg);
    if (plot->parsed()) return cmd_plot(cfg);
    if (verify->parsed()) return cmd_verify(cfg);
    std::cerr << "no subcommand given\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace lnf::cli
