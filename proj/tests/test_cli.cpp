#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "adr/cli.hpp"

using namespace adr::cli;
namespace fs = std::filesystem;

namespace {

std::string tmp_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream os(path);
  os << body;
}

}  // namespace

TEST_CASE("config parsing applies sections and rejects unknown keys") {
  const auto dir = tmp_dir("adr_cfg");
  const auto path = dir + "/exp.ini";
  write_file(path,
             "# experiment\n"
             "[dataset]\n"
             "preset = overlapping-pairs\n"
             "classes = 6\n"
             "gap = 0.8\n"
             "[model]\n"
             "hidden = 32,16\n"
             "[loss]\n"
             "kind = ce+adr\n"
             "gamma = 0.07\n"
             "tau = 2\n"
             "[optim]\n"
             "lr = 0.02\n"
             "[run]\n"
             "epochs = 4\n"
             "seeds = 3,4\n");
  const auto cfg = load_config(path);
  CHECK(cfg.dataset.classes == 6);
  CHECK(cfg.dataset.gap == 0.8);
  CHECK(cfg.hidden == std::vector<int>{32, 16});
  CHECK(cfg.loss.kind == adr::losses::LossKind::CeAdr);
  CHECK(cfg.loss.adr.gamma == 0.07);
  CHECK(cfg.loss.adr.tau == 2);
  CHECK(cfg.schedule.alpha0 == 0.02);
  CHECK(cfg.epochs == 4);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 4});

  write_file(path, "[dataset]\nnonsense = 1\n");
  CHECK_THROWS_AS(load_config(path), std::invalid_argument);
  write_file(path, "[weird]\nkey = 1\n");
  CHECK_THROWS_AS(load_config(path), std::invalid_argument);
  write_file(path, "[loss]\nkind = focal\n");
  CHECK_THROWS_AS(load_config(path), std::invalid_argument);
}

TEST_CASE("validation fails before compute on a missing dataset path") {
  ExperimentConfig cfg;
  cfg.dataset.preset = "idx";
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg.dataset.preset = "no-such-preset";
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

TEST_CASE("snapshot is deterministic json") {
  ExperimentConfig cfg;
  CHECK(snapshot(cfg) == snapshot(cfg));
  CHECK(snapshot(cfg).find("\"gamma\"") != std::string::npos);
}

TEST_CASE("train command: gamma 0 equals the ce loss choice byte for byte") {
  ExperimentConfig base;
  base.dataset.train_per_class = 25;
  base.dataset.val_per_class = 10;
  base.epochs = 4;
  base.seeds = {11};

  ExperimentConfig ce = base;
  ce.loss.kind = adr::losses::LossKind::Ce;
  ce.out = tmp_dir("adr_cli_ce");
  REQUIRE(cmd_train(ce) == 0);

  ExperimentConfig adr0 = base;
  adr0.loss.kind = adr::losses::LossKind::CeAdr;
  adr0.loss.adr.gamma = 0.0;
  adr0.out = tmp_dir("adr_cli_adr0");
  REQUIRE(cmd_train(adr0) == 0);

  // identical apart from the embedded config line
  const auto strip_config = [](const std::string& s) {
    return s.substr(s.find('\n') + 1);
  };
  CHECK(strip_config(slurp(ce.out + "/seed_11/metrics.csv")) ==
        strip_config(slurp(adr0.out + "/seed_11/metrics.csv")));
}

TEST_CASE("train command writes one record per seed plus a summary") {
  ExperimentConfig cfg;
  cfg.dataset.train_per_class = 20;
  cfg.dataset.val_per_class = 10;
  cfg.epochs = 3;
  cfg.seeds = {1, 2, 3, 4, 5};
  cfg.out = tmp_dir("adr_cli_seeds");
  REQUIRE(cmd_train(cfg) == 0);
  for (auto s : {1, 2, 3, 4, 5}) {
    const auto dir = cfg.out + "/seed_" + std::to_string(s);
    CHECK(fs::exists(dir + "/metrics.csv"));
    CHECK(fs::exists(dir + "/config.json"));
    CHECK(fs::exists(dir + "/checkpoint.bin"));
  }
  CHECK(fs::exists(cfg.out + "/config.json"));
}

TEST_CASE("commands re-run byte-identically") {
  // curves
  const auto cdir = tmp_dir("adr_curves_rep");
  REQUIRE(cmd_curves(10, 3, 50, cdir) == 0);
  const auto curves_first = slurp(cdir + "/curves.csv");
  REQUIRE(cmd_curves(10, 3, 50, cdir) == 0);
  CHECK(curves_first == slurp(cdir + "/curves.csv"));

  // train metrics: identical config (same out dir) twice
  ExperimentConfig cfg;
  cfg.dataset.train_per_class = 20;
  cfg.dataset.val_per_class = 10;
  cfg.epochs = 3;
  cfg.seeds = {5};
  cfg.out = tmp_dir("adr_rep");
  REQUIRE(cmd_train(cfg) == 0);
  const auto first = slurp(cfg.out + "/seed_5/metrics.csv");
  REQUIRE(cmd_train(cfg) == 0);
  CHECK(first == slurp(cfg.out + "/seed_5/metrics.csv"));
}

TEST_CASE("curves command emits six families on the default grid") {
  const auto dir = tmp_dir("adr_curves_full");
  REQUIRE(cmd_curves(10, 3, 200, dir) == 0);
  std::ifstream is(dir + "/curves.csv");
  std::string line;
  std::getline(is, line);
  CHECK(line.rfind("# config", 0) == 0);
  std::getline(is, line);
  CHECK(line == "family,c,tau,t,p,value,derivative");
  int rows = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 6 * 200);
}

TEST_CASE("sweep command covers the grid plus a baseline row") {
  ExperimentConfig cfg;
  cfg.dataset.train_per_class = 20;
  cfg.dataset.val_per_class = 10;
  cfg.epochs = 2;
  cfg.seeds = {1};
  cfg.out = tmp_dir("adr_sweep");
  REQUIRE(cmd_sweep(cfg, {0.01, 0.05, 0.1}, {2, 3, 5}) == 0);
  std::ifstream is(cfg.out + "/sweep.csv");
  std::string line;
  std::getline(is, line);  // config
  std::getline(is, line);
  CHECK(line == "loss,gamma,tau,mean_val_top1,std_val_top1");
  int rows = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 1 + 9);
}

TEST_CASE("a 1x1 sweep grid reproduces a train run") {
  ExperimentConfig cfg;
  cfg.dataset.train_per_class = 20;
  cfg.dataset.val_per_class = 10;
  cfg.epochs = 3;
  cfg.seeds = {2};
  cfg.out = tmp_dir("adr_sweep_1x1");
  REQUIRE(cmd_sweep(cfg, {0.05}, {3}) == 0);

  // the single ce+adr cell must equal a direct train run's final accuracy
  auto direct = cfg;
  direct.loss.kind = adr::losses::LossKind::CeAdr;
  direct.loss.adr = {0.05, 3};
  direct.out = tmp_dir("adr_sweep_direct");
  REQUIRE(cmd_train(direct) == 0);
  std::ifstream metrics(direct.out + "/seed_2/metrics.csv");
  std::string line, last;
  while (std::getline(metrics, line))
    if (!line.empty()) last = line;
  const auto acc_field = [](const std::string& row, int index) {
    std::stringstream ss(row);
    std::string tok;
    for (int i = 0; i <= index; ++i) std::getline(ss, tok, ',');
    return tok;
  };
  const std::string train_final_acc = acc_field(last, 6);  // val_acc_top1 column

  std::ifstream sweep(cfg.out + "/sweep.csv");
  std::string cell;
  while (std::getline(sweep, line))
    if (line.rfind("ce+adr,", 0) == 0) cell = line;
  REQUIRE(!cell.empty());
  CHECK(acc_field(cell, 3) == train_final_acc);  // mean over the single seed
}

TEST_CASE("gradcheck command exits zero and writes its report") {
  const auto dir = tmp_dir("adr_gradcheck_cli");
  REQUIRE(run({"gradcheck", "--samples", "3", "--seed", "5", "--out", dir}) == 0);
  const auto body = slurp(dir + "/gradcheck.txt");
  CHECK(body.find("exact vs factored backward") != std::string::npos);
  CHECK(body.find("micro-benchmark") != std::string::npos);
  CHECK(body.find("overall: PASS") != std::string::npos);
}

TEST_CASE("noise command logs corrupted counts and writes both tables") {
  ExperimentConfig cfg;
  cfg.dataset.train_per_class = 20;  // n = 200 -> 40 corrupted at rate 0.2
  cfg.dataset.val_per_class = 10;
  cfg.epochs = 2;
  cfg.seeds = {1};
  cfg.out = tmp_dir("adr_noise");
  REQUIRE(cmd_noise(cfg, {0.0, 0.2}) == 0);
  const auto body = slurp(cfg.out + "/noise.csv");
  CHECK(body.find("rate,loss,seed,epoch,train_acc,val_acc_top1") != std::string::npos);
  CHECK(body.find("rate,loss,mean_final_val_top1,std_final_val_top1") != std::string::npos);
  // curve rows: 2 rates x 2 losses x 1 seed x 2 epochs; summary: 2 x 2
  std::istringstream is(body);
  std::string line;
  int data_rows = 0;
  while (std::getline(is, line))
    if (!line.empty() && line[0] != '#' && line.rfind("rate,", 0) != 0) ++data_rows;
  CHECK(data_rows == 8 + 4);
}

TEST_CASE("noise at rate zero reproduces the train command result") {
  ExperimentConfig cfg;
  cfg.dataset.train_per_class = 25;
  cfg.dataset.val_per_class = 10;
  cfg.epochs = 4;
  cfg.seeds = {3};
  cfg.out = tmp_dir("adr_noise_zero_t");
  REQUIRE(cmd_train(cfg) == 0);
  std::ifstream metrics(cfg.out + "/seed_3/metrics.csv");
  std::string line, last;
  while (std::getline(metrics, line))
    if (!line.empty()) last = line;
  std::stringstream ss(last);
  std::string tok, final_acc;
  for (int i = 0; i <= 6; ++i) std::getline(ss, tok, ',');  // val_acc_top1
  final_acc = tok;

  cfg.out = tmp_dir("adr_noise_zero_n");
  REQUIRE(cmd_noise(cfg, {0.0}) == 0);
  const auto body = slurp(cfg.out + "/noise.csv");
  CHECK(body.find("\n0,ce," + std::to_string(3)) != std::string::npos);
  // summary row for the ce loss at rate 0 carries the same final accuracy
  CHECK(body.find("0,ce," + final_acc + ",") != std::string::npos);
}

TEST_CASE("long-tail wiring is deterministic and shapes the class profile") {
  ExperimentConfig cfg;
  cfg.dataset.train_per_class = 50;
  cfg.dataset.longtail = 10.0;
  const auto a = build_datasets(cfg, 7);
  const auto b = build_datasets(cfg, 7);
  CHECK(a.train.features.a == b.train.features.a);
  CHECK(a.train.labels == b.train.labels);
  std::vector<int> counts(10, 0);
  for (int l : a.train.labels) ++counts[l];
  CHECK(counts[0] == 50);
  CHECK(counts[9] == 5);  // ceil(50 / 10)
  for (int k = 1; k < 10; ++k) CHECK(counts[k] <= counts[k - 1]);
}

TEST_CASE("cli dispatcher parses argv and returns nonzero on bad input") {
  const auto dir = tmp_dir("adr_cli_disp");
  CHECK(run({"curves", "--c", "6", "--tau", "2", "--grid", "20", "--out", dir}) == 0);
  CHECK(fs::exists(dir + "/curves.csv"));
  CHECK(run({"train", "--config", "/nonexistent/path.ini"}) != 0);
  CHECK(run({"definitely-not-a-command"}) != 0);
}
