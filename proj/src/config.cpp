#include "adr/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace adr::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  if (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (...) {
    throw std::invalid_argument("config: bad number for " + key + ": '" + v + "'");
  }
}

int to_int(const std::string& v, const std::string& key) {
  const double d = to_double(v, key);
  const int i = static_cast<int>(d);
  if (d != i) throw std::invalid_argument("config: expected integer for " + key);
  return i;
}

// Independent RNG streams per purpose, derived from the replicate seed.
std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace

losses::LossKind parse_loss_kind(const std::string& name) {
  using losses::LossKind;
  if (name == "ce") return LossKind::Ce;
  if (name == "ce+adr") return LossKind::CeAdr;
  if (name == "ls") return LossKind::Ls;
  if (name == "ls+adr") return LossKind::LsAdr;
  if (name == "ce+entropy") return LossKind::CeEntropy;
  throw std::invalid_argument("config: unknown loss kind '" + name + "'");
}

void apply_kv(ExperimentConfig& cfg, const std::string& section, const std::string& key,
              const std::string& value) {
  const std::string where = section.empty() ? key : section + "." + key;
  if (section == "dataset") {
    auto& d = cfg.dataset;
    if (key == "preset") d.preset = value;
    else if (key == "classes") d.classes = to_int(value, where);
    else if (key == "dim") d.dim = to_int(value, where);
    else if (key == "train_per_class") d.train_per_class = to_int(value, where);
    else if (key == "val_per_class") d.val_per_class = to_int(value, where);
    else if (key == "gap") d.gap = to_double(value, where);
    else if (key == "tight_std") d.tight_std = to_double(value, where);
    else if (key == "loose_std") d.loose_std = to_double(value, where);
    else if (key == "radius") d.radius = to_double(value, where);
    else if (key == "images") d.images = value;
    else if (key == "labels") d.labels = value;
    else if (key == "val_images") d.val_images = value;
    else if (key == "val_labels") d.val_labels = value;
    else if (key == "noise_rate") d.noise_rate = to_double(value, where);
    else if (key == "longtail") d.longtail = to_double(value, where);
    else throw std::invalid_argument("config: unknown key " + where);
  } else if (section == "model") {
    if (key == "hidden") {
      cfg.hidden.clear();
      for (const auto& tok : split(value, ','))
        if (!tok.empty()) cfg.hidden.push_back(to_int(tok, where));
    } else {
      throw std::invalid_argument("config: unknown key " + where);
    }
  } else if (section == "loss") {
    auto& l = cfg.loss;
    if (key == "kind") l.kind = parse_loss_kind(value);
    else if (key == "gamma") l.adr.gamma = to_double(value, where);
    else if (key == "tau") l.adr.tau = to_int(value, where);
    else if (key == "lambda") l.ent.lambda = to_double(value, where);
    else if (key == "eps_ls") l.eps_ls = to_double(value, where);
    else if (key == "phi") {
      if (value == "entropy") l.phi = losses::PhiKind::Entropy;
      else if (value == "variance") l.phi = losses::PhiKind::Variance;
      else throw std::invalid_argument("config: phi must be entropy or variance");
    } else {
      throw std::invalid_argument("config: unknown key " + where);
    }
  } else if (section == "optim") {
    if (key == "lr") cfg.schedule.alpha0 = to_double(value, where);
    else if (key == "drop_every") cfg.schedule.drop_every = to_int(value, where);
    else if (key == "drop_factor") cfg.schedule.factor = to_double(value, where);
    else if (key == "momentum") cfg.momentum = to_double(value, where);
    else if (key == "weight_decay") cfg.weight_decay = to_double(value, where);
    else throw std::invalid_argument("config: unknown key " + where);
  } else if (section == "run") {
    if (key == "epochs") cfg.epochs = to_int(value, where);
    else if (key == "batch") cfg.batch = to_int(value, where);
    else if (key == "topk") cfg.topk = to_int(value, where);
    else if (key == "out") cfg.out = value;
    else if (key == "threads") cfg.threads = to_int(value, where);
    else if (key == "seeds") {
      cfg.seeds.clear();
      for (const auto& tok : split(value, ','))
        cfg.seeds.push_back(static_cast<std::uint64_t>(to_int(tok, where)));
    } else {
      throw std::invalid_argument("config: unknown key " + where);
    }
  } else {
    throw std::invalid_argument("config: unknown section [" + section + "]");
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open " + path);
  ExperimentConfig cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw std::invalid_argument("config: malformed section at line " + std::to_string(lineno));
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value at line " + std::to_string(lineno));
    apply_kv(cfg, section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  const auto& d = cfg.dataset;
  if (d.preset == "idx") {
    if (d.images.empty() || d.labels.empty() || d.val_images.empty() || d.val_labels.empty())
      throw std::invalid_argument("config: idx preset requires images/labels/val_images/val_labels paths");
  } else if (d.preset == "overlapping-pairs") {
    if (d.classes < 2 || d.dim < 2)
      throw std::invalid_argument("config: overlapping-pairs needs classes >= 2, dim >= 2");
    if (d.train_per_class < 1 || d.val_per_class < 1)
      throw std::invalid_argument("config: per-class sample counts must be positive");
  } else if (d.preset != "two-separated") {
    throw std::invalid_argument("config: unknown dataset preset '" + d.preset + "'");
  }
  if (d.noise_rate < 0.0 || d.noise_rate > 1.0)
    throw std::invalid_argument("config: noise_rate must be in [0,1]");
  if (d.longtail < 1.0) throw std::invalid_argument("config: longtail must be >= 1");
  if (cfg.loss.adr.gamma < 0.0) throw std::invalid_argument("config: gamma must be non-negative");
  if (cfg.loss.ent.lambda < 0.0) throw std::invalid_argument("config: lambda must be non-negative");
  if (cfg.loss.eps_ls < 0.0 || cfg.loss.eps_ls >= 1.0)
    throw std::invalid_argument("config: eps_ls must be in [0,1)");
  if (cfg.epochs < 1 || cfg.batch < 1) throw std::invalid_argument("config: epochs/batch must be >= 1");
  if (cfg.seeds.empty()) throw std::invalid_argument("config: need at least one seed");
  for (int h : cfg.hidden)
    if (h < 1) throw std::invalid_argument("config: hidden sizes must be positive");
}

std::string snapshot(const ExperimentConfig& cfg) {
  nlohmann::json j;
  const auto& d = cfg.dataset;
  j["dataset"] = {{"preset", d.preset},
                  {"classes", d.classes},
                  {"dim", d.dim},
                  {"train_per_class", d.train_per_class},
                  {"val_per_class", d.val_per_class},
                  {"gap", d.gap},
                  {"tight_std", d.tight_std},
                  {"loose_std", d.loose_std},
                  {"radius", d.radius},
                  {"images", d.images},
                  {"labels", d.labels},
                  {"val_images", d.val_images},
                  {"val_labels", d.val_labels},
                  {"noise_rate", d.noise_rate},
                  {"longtail", d.longtail}};
  j["model"] = {{"hidden", cfg.hidden}};
  j["loss"] = {{"kind", losses::loss_kind_name(cfg.loss.kind)},
               {"gamma", cfg.loss.adr.gamma},
               {"tau", cfg.loss.adr.tau},
               {"lambda", cfg.loss.ent.lambda},
               {"eps_ls", cfg.loss.eps_ls},
               {"phi", cfg.loss.phi == losses::PhiKind::Entropy ? "entropy" : "variance"}};
  j["optim"] = {{"lr", cfg.schedule.alpha0},
                {"drop_every", cfg.schedule.drop_every},
                {"drop_factor", cfg.schedule.factor},
                {"momentum", cfg.momentum},
                {"weight_decay", cfg.weight_decay}};
  j["run"] = {{"epochs", cfg.epochs}, {"batch", cfg.batch},   {"topk", cfg.topk},
              {"seeds", cfg.seeds},   {"out", cfg.out},       {"threads", cfg.threads}};
  return j.dump();
}

SeedData build_datasets(const ExperimentConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  const auto& d = cfg.dataset;
  SeedData out;
  if (d.preset == "idx") {
    out.train = data::load_idx(d.images, d.labels);
    out.val = data::load_idx(d.val_images, d.val_labels);
    // class count is inferred per file; a split may miss the last classes
    out.train.classes = out.val.classes = std::max(out.train.classes, out.val.classes);
  } else if (d.preset == "two-separated") {
    out.train = data::two_separated_clusters(d.train_per_class, mix(seed, 1));
    out.val = data::two_separated_clusters(d.val_per_class, mix(seed, 2));
  } else {
    data::OverlapPreset p{d.classes, d.dim,    d.gap,          d.tight_std,
                          d.loose_std, d.radius, d.train_per_class};
    out.train = data::overlapping_pairs(p, mix(seed, 1));
    p.per_class = d.val_per_class;
    out.val = data::overlapping_pairs(p, mix(seed, 2));
  }
  out.train.split = "train";
  out.val.split = "validation";
  if (d.longtail > 1.0) out.train = data::longtail_resample(out.train, d.longtail, mix(seed, 3));
  if (d.noise_rate > 0.0) {
    auto noised = data::inject_label_noise(out.train, d.noise_rate, mix(seed, 4));
    out.corrupted = static_cast<int>(noised.corrupted.size());
    out.train = std::move(noised.ds);
  }
  return out;
}

trainer::TrainOptions train_options(const ExperimentConfig& cfg, std::uint64_t seed) {
  trainer::TrainOptions opt;
  opt.hidden = cfg.hidden;
  opt.loss = cfg.loss;
  opt.schedule = cfg.schedule;
  opt.momentum = cfg.momentum;
  opt.weight_decay = cfg.weight_decay;
  opt.batch_size = cfg.batch;
  opt.epochs = cfg.epochs;
  opt.topk = cfg.topk;
  opt.seed = seed;
  opt.config_snapshot = snapshot(cfg);
  return opt;
}

}  // namespace adr::cli
