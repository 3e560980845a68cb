#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lnf/cli.hpp"
#include "lnf/nodf.hpp"

using namespace lnf;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
  fs::path d = fs::temp_directory_path() / "lnf_cli_tests";
  fs::create_directories(d);
  return d;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("cli gen: published desk-scale dims and exit codes") {
  fs::path out = tmp_dir() / "laplace26.nodf";
  int rc = cli::run({"gen", "--benchmark", "laplace", "--n", "200", "--res", "26",
                     "--seed", "0", "--out", out.string()});
  CHECK(rc == 0);
  nodf::NodfFile f = nodf::read_nodf(out);
  CHECK(f.at("g").dims == std::vector<uint32_t>{200, 100});
  CHECK(f.at("u").dims == std::vector<uint32_t>{200, 676});

  CHECK(cli::run({"gen", "--benchmark", "laplace"}) == 2);       // missing --out
  CHECK(cli::run({"gen", "--no-such-flag", "x"}) == 2);          // unknown flag
  CHECK(cli::run({"frobnicate"}) == 2);                          // unknown subcommand
  CHECK(cli::run({"verify", "--data", "/no/such/file.nodf"}) == 1);
}

TEST_CASE("cli train/eval/verify/plot pipeline on a tiny dataset") {
  fs::path dir = tmp_dir();
  fs::path data = dir / "tiny.nodf";
  REQUIRE(cli::run({"gen", "--benchmark", "laplace", "--n", "20", "--res", "11",
                    "--seed", "1", "--out", data.string()}) == 0);
  REQUIRE(cli::run({"verify", "--data", data.string(), "--n-check", "5"}) == 0);

  fs::path prefix = dir / "run1";
  int rc = cli::run({"train", "--data", data.string(), "--out", prefix.string(),
                     "--epochs", "3", "--batch", "6", "--seed", "2",
                     "--enc1d-channels", "4", "--branch-width", "8",
                     "--dec-channels", "3"});
  CHECK(rc == 0);
  CHECK(fs::exists(prefix.string() + ".ckpt.nodf"));
  CHECK(fs::exists(prefix.string() + ".history.csv"));
  CHECK(fs::exists(prefix.string() + ".final.csv"));

  std::string hist = read_file(prefix.string() + ".history.csv");
  CHECK(hist.starts_with("epoch,train_loss\n"));
  CHECK(std::count(hist.begin(), hist.end(), '\n') == 4);  // header + 3 epochs

  fs::path eval_csv = dir / "run1.eval.csv";
  CHECK(cli::run({"eval", "--data", data.string(), "--ckpt",
                  prefix.string() + ".ckpt.nodf", "--out", eval_csv.string()}) == 0);
  std::string eval_line = read_file(eval_csv);
  CHECK(std::count(eval_line.begin(), eval_line.end(), ',') == 1);  // mean + 1 field

  fs::path plot_prefix = dir / "panel";
  CHECK(cli::run({"plot", "--data", data.string(), "--ckpt",
                  prefix.string() + ".ckpt.nodf", "--sample", "3", "--out",
                  plot_prefix.string()}) == 0);
  std::string pgm = read_file(plot_prefix.string() + "_u_pred.pgm");
  CHECK(pgm.starts_with("P5\n11 11\n255\n"));
  CHECK(pgm.size() == std::string("P5\n11 11\n255\n").size() + 121);
  CHECK(fs::exists(plot_prefix.string() + "_u_target.pgm"));
  CHECK(fs::exists(plot_prefix.string() + "_u_abserr.pgm"));
  CHECK(fs::exists(plot_prefix.string() + ".csv"));
}

namespace {

std::string capture_stdout(const std::vector<std::string>& args, int want_rc) {
  std::ostringstream oss;
  std::streambuf* old = std::cout.rdbuf(oss.rdbuf());
  int rc = cli::run(args);
  std::cout.rdbuf(old);
  REQUIRE(rc == want_rc);
  return oss.str();
}

}  // namespace

TEST_CASE("cli: --dump-config output is a parse/dump fixed point") {
  fs::path dir = tmp_dir();
  fs::path cfg1 = dir / "run.cfg";
  {
    std::ofstream out(cfg1);
    out << "benchmark=laplace\nepochs=7\nlr=0.002\nseed=9\n";
  }
  std::string dump1 = capture_stdout({"train", "--config", cfg1.string(),
                                      "--dump-config"}, 0);
  CHECK(dump1.find("epochs=7\n") != std::string::npos);
  CHECK(dump1.find("benchmark=laplace\n") != std::string::npos);

  fs::path cfg2 = dir / "run2.cfg";
  {
    std::ofstream out(cfg2);
    out << dump1;
  }
  std::string dump2 = capture_stdout({"train", "--config", cfg2.string(),
                                      "--dump-config"}, 0);
  CHECK(dump1 == dump2);
}

TEST_CASE("cli ablate: eight-variant table") {
  fs::path dir = tmp_dir();
  fs::path data = dir / "abl.nodf";
  REQUIRE(cli::run({"gen", "--benchmark", "laplace", "--n", "20", "--res", "11",
                    "--seed", "3", "--out", data.string()}) == 0);
  fs::path csv = dir / "ablation.csv";
  REQUIRE(cli::run({"ablate", "--data", data.string(), "--out", csv.string(),
                    "--epochs", "2", "--batch", "9", "--seed", "3",
                    "--enc1d-channels", "4", "--branch-width", "8",
                    "--dec-channels", "3"}) == 0);
  std::string table = read_file(csv);
  CHECK(table.starts_with("variant,params,epochs,seconds,test_rel_l2\n"));
  CHECK(std::count(table.begin(), table.end(), '\n') == 9);  // header + 8 rows
  for (const char* v : {"full", "only_nonlinear", "only_linear", "no_encoder",
                        "no_decoder", "no_enc_dec", "pure_nonlinear_mlp",
                        "pure_linear_mlp"}) {
    CHECK(table.find(std::string(v) + ",") != std::string::npos);
  }
}

TEST_CASE("cli: unknown config key is a usage error") {
  fs::path cfg = tmp_dir() / "bad.cfg";
  {
    std::ofstream out(cfg);
    out << "benchmark=laplace\nwhatisthis=1\n";
  }
  CHECK(cli::run({"train", "--config", cfg.string(), "--dump-config"}) == 2);

  fs::path bad_value = tmp_dir() / "badval.cfg";
  {
    std::ofstream out(bad_value);
    out << "epochs=abc\n";
  }
  CHECK(cli::run({"train", "--config", bad_value.string(), "--dump-config"}) == 2);

  CHECK(cli::run({"gen", "--benchmark", "pb_fem", "--out", "x.nodf"}) == 2);
}
