#include "adr/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "adr/audit.hpp"
#include "adr/csvio.hpp"
#include "adr/curves.hpp"
#include "adr/kernels.hpp"

namespace adr::cli {

namespace fs = std::filesystem;

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= xs.size();
  for (double x : xs) m.std += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(m.std / xs.size());
  return m;
}

struct SeedOutcome {
  trainer::RunRecord record;
  int corrupted = 0;
};

SeedOutcome run_one(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedData sd = build_datasets(cfg, seed);
  SeedOutcome out;
  out.corrupted = sd.corrupted;
  out.record = trainer::train(sd.train, sd.val, train_options(cfg, seed));
  return out;
}

void write_config_snapshot(const ExperimentConfig& cfg, const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream os(dir + "/config.json");
  os << snapshot(cfg) << '\n';
}

}  // namespace

int cmd_train(const ExperimentConfig& cfg) {
  validate(cfg);
  kernels::set_threads(cfg.threads);
  write_config_snapshot(cfg, cfg.out);
  std::vector<double> finals, eces, confs;
  bool diverged = false;
  for (std::uint64_t seed : cfg.seeds) {
    const SeedOutcome so = run_one(cfg, seed);
    trainer::persist(so.record, cfg.out + "/seed_" + std::to_string(seed));
    if (so.record.diverged) {
      std::cout << "seed " << seed << ": DIVERGED at epoch " << so.record.diverged_epoch << '\n';
      diverged = true;
      continue;
    }
    const auto& last = so.record.rows.back();
    finals.push_back(last.val_acc_top1);
    eces.push_back(last.ece);
    confs.push_back(so.record.final_train_confidence);
    std::cout << "seed " << seed << ": val_top1=" << io::fmt(last.val_acc_top1)
              << " val_topk=" << io::fmt(last.val_acc_topk) << " ece=" << io::fmt(last.ece)
              << " train_conf=" << io::fmt(so.record.final_train_confidence) << " ("
              << io::fmt(so.record.wall_seconds) << " s)\n";
  }
  if (!finals.empty()) {
    const MeanStd acc = mean_std(finals), ece = mean_std(eces), conf = mean_std(confs);
    std::cout << losses::loss_kind_name(cfg.loss.kind) << " summary over " << finals.size()
              << " seeds: val_top1 " << io::fmt(acc.mean) << " +/- " << io::fmt(acc.std)
              << ", ece " << io::fmt(ece.mean) << " +/- " << io::fmt(ece.std) << ", train_conf "
              << io::fmt(conf.mean) << " +/- " << io::fmt(conf.std) << '\n';
  }
  return diverged ? 1 : 0;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::vector<double>& gamma_grid,
              const std::vector<int>& tau_grid) {
  if (gamma_grid.empty() || tau_grid.empty()) {
    std::cerr << "sweep: gamma and tau grids must be non-empty\n";
    return 2;
  }
  validate(cfg);
  kernels::set_threads(cfg.threads);
  write_config_snapshot(cfg, cfg.out);

  const auto final_accs = [&](const ExperimentConfig& c) {
    std::vector<double> accs;
    for (std::uint64_t seed : c.seeds) {
      const SeedOutcome so = run_one(c, seed);
      if (so.record.diverged)
        throw std::runtime_error("sweep: run diverged at epoch " +
                                 std::to_string(so.record.diverged_epoch));
      accs.push_back(so.record.rows.back().val_acc_top1);
    }
    return accs;
  };

  ExperimentConfig base = cfg;
  base.loss.kind = losses::LossKind::Ce;
  const MeanStd ce = mean_std(final_accs(base));
  std::cout << "ce baseline: " << io::fmt(ce.mean) << " +/- " << io::fmt(ce.std) << '\n';

  std::ofstream os(cfg.out + "/sweep.csv");
  os << "# config " << snapshot(cfg) << '\n';
  os << "loss,gamma,tau,mean_val_top1,std_val_top1\n";
  os << "ce,0,0," << io::fmt(ce.mean) << ',' << io::fmt(ce.std) << '\n';
  for (double gamma : gamma_grid) {
    for (int tau : tau_grid) {
      ExperimentConfig c = cfg;
      c.loss.kind = losses::LossKind::CeAdr;
      c.loss.adr.gamma = gamma;
      c.loss.adr.tau = tau;
      const MeanStd m = mean_std(final_accs(c));
      os << "ce+adr," << io::fmt(gamma) << ',' << tau << ',' << io::fmt(m.mean) << ','
         << io::fmt(m.std) << '\n';
      std::cout << "gamma=" << io::fmt(gamma) << " tau=" << tau << ": " << io::fmt(m.mean)
                << " +/- " << io::fmt(m.std);
      if (gamma >= 0.01 && gamma <= 0.1 && m.mean < ce.mean - 0.005)
        std::cout << "  [below ce baseline - 0.5%]";
      std::cout << '\n';
    }
  }
  return 0;
}

int cmd_noise(const ExperimentConfig& cfg, const std::vector<double>& rates) {
  for (double r : rates)
    if (r < 0.0 || r > 1.0) {
      std::cerr << "noise: rates must lie in [0,1]\n";
      return 2;
    }
  validate(cfg);
  kernels::set_threads(cfg.threads);
  write_config_snapshot(cfg, cfg.out);

  const std::vector<losses::LossKind> kinds{losses::LossKind::Ce, losses::LossKind::CeAdr};
  std::ostringstream curves_rows, summary_rows;
  for (double rate : rates) {
    for (losses::LossKind kind : kinds) {
      ExperimentConfig c = cfg;
      c.dataset.noise_rate = rate;
      c.loss.kind = kind;
      std::vector<double> finals;
      for (std::uint64_t seed : c.seeds) {
        const SeedOutcome so = run_one(c, seed);
        std::cout << "rate " << io::fmt(rate) << " " << losses::loss_kind_name(kind) << " seed "
                  << seed << ": corrupted " << so.corrupted << " labels";
        if (so.record.diverged) {
          std::cout << " DIVERGED at epoch " << so.record.diverged_epoch << '\n';
          return 1;
        }
        const auto& last = so.record.rows.back();
        std::cout << ", final val_top1 " << io::fmt(last.val_acc_top1) << '\n';
        finals.push_back(last.val_acc_top1);
        for (const auto& row : so.record.rows) {
          curves_rows << io::fmt(rate) << ',' << losses::loss_kind_name(kind) << ',' << seed << ','
                      << row.epoch << ',' << io::fmt(row.train_acc) << ','
                      << io::fmt(row.val_acc_top1) << '\n';
        }
      }
      const MeanStd m = mean_std(finals);
      summary_rows << io::fmt(rate) << ',' << losses::loss_kind_name(kind) << ','
                   << io::fmt(m.mean) << ',' << io::fmt(m.std) << '\n';
    }
  }
  std::ofstream os(cfg.out + "/noise.csv");
  os << "# config " << snapshot(cfg) << '\n';
  os << "rate,loss,seed,epoch,train_acc,val_acc_top1\n";
  os << curves_rows.str();
  os << '\n';
  os << "rate,loss,mean_final_val_top1,std_final_val_top1\n";
  os << summary_rows.str();
  return 0;
}

int cmd_gradcheck(int samples, std::uint64_t seed, const std::string& out_dir) {
  audit::Options opt;
  opt.samples = samples;
  opt.seed = seed;
  const audit::Report rep = audit::run(opt);
  fs::create_directories(out_dir);
  std::ofstream os(out_dir + "/gradcheck.txt");
  os << rep.text();
  std::cout << rep.text();
  if (!rep.all_pass) {
    for (const auto& a : rep.audits)
      if (!a.pass)
        std::cerr << "worst failure: " << a.name << " c=" << a.c << " tau=" << a.tau
                  << " max_rel_err=" << a.max_rel_err << '\n';
    return 1;
  }
  return 0;
}

int cmd_curves(int c, int tau, int grid, const std::string& out_dir) {
  fs::create_directories(out_dir);
  nlohmann::json j{{"c", c}, {"tau", tau}, {"grid", grid}};
  std::ofstream os(out_dir + "/curves.csv");
  os << "# config " << j.dump() << '\n';
  os << "family,c,tau,t,p,value,derivative\n";
  for (curves::Family fam : curves::all_families()) {
    for (const auto& s : curves::slice_curve(fam, c, tau, grid)) {
      os << curves::family_name(fam) << ',' << s.c << ',' << s.tau << ',' << io::fmt(s.t) << ','
         << io::fmt(s.p) << ',' << io::fmt(s.value) << ',' << io::fmt(s.derivative) << '\n';
    }
  }
  return 0;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"discriminative-regularization loss library and experiment runner"};
  app.require_subcommand(1);

  std::string config_path, out_dir, seeds_csv, loss_name, phi_name;
  double gamma = std::nan(""), lambda = std::nan(""), lr = std::nan(""), eps_ls = std::nan("");
  double noise_rate = std::nan("");
  int tau = -1, epochs = -1, threads = -1, batch = -1;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "flat key = value config file");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seeds", seeds_csv, "comma-separated seed list");
    cmd->add_option("--loss", loss_name, "ce|ce+adr|ls|ls+adr|ce+entropy");
    cmd->add_option("--gamma", gamma, "ADR trade-off weight");
    cmd->add_option("--tau", tau, "similar-class count (0 = default)");
    cmd->add_option("--lambda", lambda, "entropy regularizer weight");
    cmd->add_option("--eps-ls", eps_ls, "label smoothing amount");
    cmd->add_option("--phi", phi_name, "entropy|variance");
    cmd->add_option("--lr", lr, "initial learning rate");
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--batch", batch, "batch size");
    cmd->add_option("--threads", threads, "OpenMP thread cap (0 = default)");
    cmd->add_option("--noise-rate", noise_rate, "training label noise rate");
  };

  auto* train_cmd = app.add_subcommand("train", "train one loss across seeds");
  add_common(train_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "gamma x tau grid");
  add_common(sweep_cmd);
  std::string gamma_grid_csv = "0.01,0.05,0.1", tau_grid_csv = "2,3,5";
  sweep_cmd->add_option("--gamma-grid", gamma_grid_csv, "comma-separated gammas");
  sweep_cmd->add_option("--tau-grid", tau_grid_csv, "comma-separated taus");

  auto* noise_cmd = app.add_subcommand("noise", "noisy-label tolerance runs");
  add_common(noise_cmd);
  std::string rates_csv = "0.2,0.4,0.6,0.8";
  noise_cmd->add_option("--rates", rates_csv, "comma-separated noise rates");

  auto* grad_cmd = app.add_subcommand("gradcheck", "audit analytic gradients");
  int samples = 100;
  std::uint64_t gc_seed = 7;
  grad_cmd->add_option("--samples", samples, "points per check");
  grad_cmd->add_option("--seed", gc_seed, "sampling seed");
  grad_cmd->add_option("--out", out_dir, "output directory");

  auto* curves_cmd = app.add_subcommand("curves", "emit the function-curve families");
  int cc = 10, ctau = 3, grid = 200;
  curves_cmd->add_option("--c", cc, "class count");
  curves_cmd->add_option("--tau", ctau, "similar-class count");
  curves_cmd->add_option("--grid", grid, "points per family");
  curves_cmd->add_option("--out", out_dir, "output directory");

  std::vector<const char*> argv;
  argv.push_back("adr");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (grad_cmd->parsed())
      return cmd_gradcheck(samples, gc_seed, out_dir.empty() ? "runs/gradcheck" : out_dir);
    if (curves_cmd->parsed())
      return cmd_curves(cc, ctau, grid, out_dir.empty() ? "runs/curves" : out_dir);

    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    // Command-line flags win over the config file.
    if (!out_dir.empty()) cfg.out = out_dir;
    if (!seeds_csv.empty()) {
      cfg.seeds.clear();
      std::stringstream ss(seeds_csv);
      std::string tok;
      while (std::getline(ss, tok, ',')) cfg.seeds.push_back(std::stoull(tok));
    }
    if (!loss_name.empty()) cfg.loss.kind = parse_loss_kind(loss_name);
    if (!std::isnan(gamma)) cfg.loss.adr.gamma = gamma;
    if (tau >= 0) cfg.loss.adr.tau = tau;
    if (!std::isnan(lambda)) cfg.loss.ent.lambda = lambda;
    if (!std::isnan(eps_ls)) cfg.loss.eps_ls = eps_ls;
    if (!phi_name.empty())
      cfg.loss.phi =
          phi_name == "variance" ? losses::PhiKind::Variance : losses::PhiKind::Entropy;
    if (!std::isnan(lr)) cfg.schedule.alpha0 = lr;
    if (epochs > 0) cfg.epochs = epochs;
    if (batch > 0) cfg.batch = batch;
    if (threads >= 0) cfg.threads = threads;
    if (!std::isnan(noise_rate)) cfg.dataset.noise_rate = noise_rate;

    const auto parse_doubles = [](const std::string& csv) {
      std::vector<double> out;
      std::stringstream ss(csv);
      std::string tok;
      while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
      return out;
    };
    const auto parse_ints = [](const std::string& csv) {
      std::vector<int> out;
      std::stringstream ss(csv);
      std::string tok;
      while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
      return out;
    };

    if (train_cmd->parsed()) return cmd_train(cfg);
    if (sweep_cmd->parsed())
      return cmd_sweep(cfg, parse_doubles(gamma_grid_csv), parse_ints(tau_grid_csv));
    if (noise_cmd->parsed()) return cmd_noise(cfg, parse_doubles(rates_csv));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace adr::cli
