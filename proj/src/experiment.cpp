#include "qadv/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "qadv/errors.hpp"
#include "qadv/estimate.hpp"
#include "qadv/parallel.hpp"
#include "qadv/plot.hpp"
#include "qadv/rademacher.hpp"
#include "qadv/random.hpp"
#include "qadv/serialize.hpp"
#include "qadv/train.hpp"

namespace qadv::experiment {

using nlohmann::json;

std::string to_string(PovmSource s) {
  switch (s) {
    case PovmSource::fixed_computational: return "fixed_computational";
    case PovmSource::trained: return "trained";
    case PovmSource::file: return "file";
  }
  return "fixed_computational";
}

namespace {

PovmSource parse_povm_source(const std::string& s) {
  if (s == "fixed_computational") return PovmSource::fixed_computational;
  if (s == "trained") return PovmSource::trained;
  if (s == "file") return PovmSource::file;
  throw ValidationError("povm.source must be fixed_computational, trained or file, got '" + s + "'");
}

void check_attack(const attack::AttackSpec& a, const char* which) {
  try {
    a.validate();
  } catch (const Error& e) {
    throw ValidationError(std::string("attack.") + which + ": " + e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  embedding.validate();
  data.validate();
  if (embedding.dim != 2) throw ValidationError("the experiment embedding is a single qubit (dim = 2)");
  if (T_grid.empty()) throw ValidationError("T_grid must not be empty");
  for (std::size_t i = 0; i < T_grid.size(); ++i) {
    if (T_grid[i] < 1) throw ValidationError("T_grid entries must be >= 1");
    if (i > 0 && T_grid[i] <= T_grid[i - 1]) throw ValidationError("T_grid must be strictly increasing");
  }
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)", delta);
  check_attack(train_attack, "train");
  check_attack(test_attack, "test");
  if (Delta_override && !(*Delta_override >= 0.0 && *Delta_override <= 1.0 / embedding.dim)) {
    throw ValidationError("Delta_override must lie in [0, 1/d]");
  }
  if (mc.num_datasets < 2 || mc.rademacher_datasets < 2) {
    throw ValidationError("Monte Carlo counts must be >= 2 so standard errors exist");
  }
  if (mc.rademacher_sigma < 1 || mc.random_starts < 0 || mc.screen_directions < 0 || mc.polish < 0) {
    throw ValidationError("Monte Carlo settings must be non-negative (rademacher_sigma >= 1)");
  }
  if (povm_source == PovmSource::file && povm_path.empty()) throw ValidationError("povm.path is required for file");
  if (povm_source == PovmSource::trained && training.train_T < 1) throw ValidationError("povm.train_T must be >= 1");
}

namespace {

// Typed accessors that reject unknown keys and wrong types.
class Table {
 public:
  Table(const toml::table* t, std::string name) : t_(t), name_(std::move(name)) {}

  void allow(std::initializer_list<std::string_view> keys) const {
    if (!t_) return;
    const std::set<std::string_view> ok(keys);
    for (const auto& [k, v] : *t_) {
      if (!ok.count(k.str())) throw ValidationError("unknown key '" + name_ + "." + std::string(k.str()) + "'");
    }
  }

  template <class T>
  void get(const char* key, T& out) const {
    if (!t_) return;
    const toml::node* n = t_->get(key);
    if (!n) return;
    if constexpr (std::is_same_v<T, double>) {
      auto v = n->value<double>();
      if (!v) throw type_error(key, "a number");
      out = *v;
    } else if constexpr (std::is_same_v<T, std::string>) {
      auto v = n->value<std::string>();
      if (!v) throw type_error(key, "a string");
      out = *v;
    } else {
      auto v = n->value<std::int64_t>();
      if (!v) throw type_error(key, "an integer");
      if (*v < 0 && std::is_unsigned_v<T>) throw ValidationError(name_ + "." + key + " must be non-negative");
      out = static_cast<T>(*v);
    }
  }

  std::optional<std::vector<double>> numbers(const char* key) const {
    if (!t_) return std::nullopt;
    const toml::node* n = t_->get(key);
    if (!n) return std::nullopt;
    const toml::array* arr = n->as_array();
    if (!arr) throw type_error(key, "an array of numbers");
    std::vector<double> out;
    for (const auto& e : *arr) {
      auto v = e.value<double>();
      if (!v) throw type_error(key, "an array of numbers");
      out.push_back(*v);
    }
    return out;
  }

  // p given as 1, 2, "inf", ...
  std::optional<qmat::SchattenOrder> order(const char* key) const {
    if (!t_) return std::nullopt;
    const toml::node* n = t_->get(key);
    if (!n) return std::nullopt;
    if (auto s = n->value<std::string>()) return qmat::SchattenOrder::parse(*s);
    if (auto v = n->value<double>()) return qmat::SchattenOrder(*v);
    throw type_error(key, "a number or \"inf\"");
  }

  bool has(const char* key) const { return t_ && t_->get(key); }

 private:
  ValidationError type_error(const char* key, const char* what) const {
    return ValidationError(name_ + "." + key + " must be " + what);
  }
  const toml::table* t_;
  std::string name_;
};

attack::AttackSpec parse_attack(const Table& t) {
  t.allow({"p", "epsilon", "solver"});
  attack::AttackSpec a;
  if (auto p = t.order("p")) a.p = *p;
  t.get("epsilon", a.epsilon);
  std::string solver = "auto";
  t.get("solver", solver);
  a.solver = attack::parse_solver(solver);
  return a;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config is not valid TOML: " << e.description() << " (line " << e.source().begin.line << ")";
    throw ValidationError(msg.str());
  }
  const Table top(&root, "");
  top.allow({"embedding", "data", "povm", "experiment", "attack", "mc", "outputs"});

  ExperimentConfig c;
  const Table emb(root["embedding"].as_table(), "embedding");
  emb.allow({"dim", "theta", "q"});
  emb.get("dim", c.embedding.dim);
  emb.get("q", c.embedding.q);
  if (auto th = emb.numbers("theta")) {
    if (th->size() != 3) throw ValidationError("embedding.theta needs three angles");
    c.embedding.theta = {(*th)[0], (*th)[1], (*th)[2]};
  }

  const Table dat(root["data"].as_table(), "data");
  dat.allow({"num_classes", "class_means", "class_std", "quant_lo", "quant_hi", "quant_step"});
  dat.get("num_classes", c.data.num_classes);
  if (auto m = dat.numbers("class_means")) {
    c.data.class_means = *m;
  } else {
    c.data.class_means.clear();
    for (int k = 0; k < c.data.num_classes; ++k) c.data.class_means.push_back(k % 2 == 0 ? 1.0 : -1.0);
  }
  dat.get("class_std", c.data.class_std);
  dat.get("quant_lo", c.data.quant_lo);
  dat.get("quant_hi", c.data.quant_hi);
  dat.get("quant_step", c.data.quant_step);

  const Table pv(root["povm"].as_table(), "povm");
  pv.allow({"source", "path", "train_T", "max_outer_iters", "step_size", "num_restarts"});
  std::string source = "fixed_computational";
  pv.get("source", source);
  c.povm_source = parse_povm_source(source);
  pv.get("path", c.povm_path);
  pv.get("train_T", c.training.train_T);
  pv.get("max_outer_iters", c.training.max_outer_iters);
  pv.get("step_size", c.training.step_size);
  pv.get("num_restarts", c.training.num_restarts);

  const Table ex(root["experiment"].as_table(), "experiment");
  ex.allow({"T_grid", "delta", "log_base", "Delta_override"});
  if (auto tg = ex.numbers("T_grid")) {
    c.T_grid.clear();
    for (double v : *tg) {
      if (v != std::floor(v)) throw ValidationError("experiment.T_grid entries must be integers");
      c.T_grid.push_back(static_cast<long>(v));
    }
  }
  ex.get("delta", c.delta);
  std::string base = "e";
  ex.get("log_base", base);
  c.log_base = bounds::parse_log_base(base);
  if (ex.has("Delta_override")) {
    double v = 0.0;
    ex.get("Delta_override", v);
    c.Delta_override = v;
  }

  if (const toml::table* at = root["attack"].as_table()) {
    const Table att(at, "attack");
    att.allow({"train", "test"});
    const bool has_train = at->get("train") != nullptr;
    const bool has_test = at->get("test") != nullptr;
    if (has_train) c.train_attack = parse_attack(Table(root["attack"]["train"].as_table(), "attack.train"));
    c.test_attack = has_test ? parse_attack(Table(root["attack"]["test"].as_table(), "attack.test")) : c.train_attack;
    if (!has_train && has_test) c.train_attack = c.test_attack;
  }

  const Table mc(root["mc"].as_table(), "mc");
  mc.allow({"num_datasets", "rademacher_datasets", "rademacher_sigma", "random_starts", "screen_directions", "polish",
            "seed"});
  mc.get("num_datasets", c.mc.num_datasets);
  mc.get("rademacher_datasets", c.mc.rademacher_datasets);
  mc.get("rademacher_sigma", c.mc.rademacher_sigma);
  mc.get("random_starts", c.mc.random_starts);
  mc.get("screen_directions", c.mc.screen_directions);
  mc.get("polish", c.mc.polish);
  if (mc.has("seed")) {
    std::uint64_t s = 0;
    mc.get("seed", s);
    c.mc.seed = s;
  }

  const Table out(root["outputs"].as_table(), "outputs");
  out.allow({"csv", "svg", "json"});
  out.get("csv", c.outputs.csv);
  out.get("svg", c.outputs.svg);
  out.get("json", c.outputs.json);

  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["embedding"] = {{"dim", c.embedding.dim},
                    {"theta", {c.embedding.theta[0], c.embedding.theta[1], c.embedding.theta[2]}},
                    {"q", c.embedding.q}};
  j["data"] = {{"num_classes", c.data.num_classes}, {"class_means", c.data.class_means},
               {"class_std", c.data.class_std},     {"quant_lo", c.data.quant_lo},
               {"quant_hi", c.data.quant_hi},       {"quant_step", c.data.quant_step}};
  j["povm"] = {{"source", to_string(c.povm_source)},
               {"path", c.povm_path},
               {"train_T", c.training.train_T},
               {"max_outer_iters", c.training.max_outer_iters},
               {"step_size", c.training.step_size},
               {"num_restarts", c.training.num_restarts}};
  j["experiment"] = {{"T_grid", c.T_grid}, {"delta", c.delta}, {"log_base", bounds::to_string(c.log_base)}};
  j["experiment"]["Delta_override"] = c.Delta_override ? json(*c.Delta_override) : json(nullptr);
  j["attack"] = {{"train", io::attack_spec_to_json(c.train_attack)}, {"test", io::attack_spec_to_json(c.test_attack)}};
  j["mc"] = {{"num_datasets", c.mc.num_datasets},
             {"rademacher_datasets", c.mc.rademacher_datasets},
             {"rademacher_sigma", c.mc.rademacher_sigma},
             {"random_starts", c.mc.random_starts},
             {"screen_directions", c.mc.screen_directions},
             {"polish", c.mc.polish}};
  j["mc"]["seed"] = c.mc.seed ? json(*c.mc.seed) : json(nullptr);
  j["outputs"] = {{"csv", c.outputs.csv}, {"svg", c.outputs.svg}, {"json", c.outputs.json}};
  return j;
}

namespace {

qmat::Povm make_povm(const ExperimentConfig& c, const embed::EmbeddedGrid& grid, std::uint64_t seed) {
  switch (c.povm_source) {
    case PovmSource::fixed_computational:
      if (c.data.num_classes != c.embedding.dim) {
        throw ValidationError("the computational-basis POVM needs num_classes = dim");
      }
      return qmat::Povm::computational(c.embedding.dim);
    case PovmSource::file: {
      std::ifstream in(c.povm_path);
      if (!in) throw ValidationError("cannot read POVM file '" + c.povm_path + "'");
      json j;
      try {
        in >> j;
      } catch (const json::exception& e) {
        throw ValidationError("POVM file is not valid JSON: " + std::string(e.what()));
      }
      return io::povm_from_json(j);
    }
    case PovmSource::trained: {
      const auto ds = embed::sample_dataset(c.data, c.training.train_T,
                                            rng::derive_seed(seed, rng::Stream::training_data, 0));
      train::TrainConfig tc;
      tc.attack = c.train_attack;
      tc.max_outer_iters = c.training.max_outer_iters;
      tc.step_size = c.training.step_size;
      tc.num_restarts = c.training.num_restarts;
      tc.seed = rng::derive_seed(seed, rng::Stream::restart, 0);
      return train::adversarial_train(ds, grid, tc).povm;
    }
  }
  throw ValidationError("unknown POVM source");
}

struct Stat {
  double mean = 0.0;
  double err = 0.0;
};

Stat stat(const std::vector<double>& xs) {
  Stat s;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) s.mean += x;
  s.mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.err = xs.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return s;
}

bool same_attack(const attack::AttackSpec& a, const attack::AttackSpec& b) {
  return a.p == b.p && a.epsilon == b.epsilon && a.solver == b.solver;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& c, std::optional<std::uint64_t> seed_override) {
  c.validate();
  const auto seed_opt = seed_override ? seed_override : c.mc.seed;
  if (!seed_opt) throw ValidationError("a seed is required (--seed or mc.seed)");
  const std::uint64_t seed = *seed_opt;

  ExperimentResult res;
  res.seed = seed;
  const embed::EmbeddedGrid grid(c.embedding, c.data);
  const auto prior = embed::quantized_prior(c.data);
  std::vector<qmat::DensityMatrix> states;
  states.reserve(grid.size());
  double floor = 1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    states.push_back(grid.state(i));
    floor = std::min(floor, qmat::min_eigenvalue(grid.state(i)));
  }
  res.I2 = bounds::renyi2_mi(prior.marginal, states);
  res.Delta_computed = floor;
  res.Delta_used = c.Delta_override.value_or(floor);

  const qmat::Povm povm = make_povm(c, grid, seed);
  res.povm = io::povm_to_json(povm);

  const estimate::LossTable clean(povm, grid, std::nullopt);
  const estimate::LossTable train_tab(povm, grid, c.train_attack);
  const std::optional<estimate::LossTable> test_own =
      same_attack(c.train_attack, c.test_attack) ? std::nullopt
                                                 : std::optional<estimate::LossTable>(std::in_place, povm, grid,
                                                                                      c.test_attack);
  const estimate::LossTable& test_tab = test_own ? *test_own : train_tab;
  res.population_clean = clean.population(prior);
  res.population_adv = test_tab.population(prior);

  for (const long T : c.T_grid) {
    ExperimentRow row;
    row.T = T;
    const std::size_t n = c.mc.num_datasets;
    std::vector<double> gc(n), ga(n), gc_abs(n), ga_abs(n);
    parallel_for(n, [&](std::size_t i) {
      const std::uint64_t index = (static_cast<std::uint64_t>(T) << 32) | i;
      const auto ds = embed::sample_dataset(c.data, static_cast<std::size_t>(T),
                                            rng::derive_seed(seed, rng::Stream::dataset, index));
      gc[i] = res.population_clean - clean.empirical(ds);
      ga[i] = res.population_adv - train_tab.empirical(ds);
      gc_abs[i] = std::abs(gc[i]);
      ga_abs[i] = std::abs(ga[i]);
    });
    const Stat sc = stat(gc_abs);
    const Stat sa = stat(ga_abs);
    row.g_clean = sc.mean;
    row.g_clean_stderr = sc.err;
    row.g_adv = sa.mean;
    row.g_adv_stderr = sa.err;
    row.mean_g_clean = stat(gc).mean;
    row.mean_g_adv = stat(ga).mean;

    estimate::RademacherOptions ro;
    ro.num_datasets = c.mc.rademacher_datasets;
    ro.num_sigma = c.mc.rademacher_sigma;
    ro.random_starts = c.mc.random_starts;
    ro.screen_directions = c.mc.screen_directions;
    ro.polish = c.mc.polish;
    ro.seed = rng::derive_seed(seed, rng::Stream::rademacher_dataset, static_cast<std::uint64_t>(T));
    const auto rad = estimate::rademacher_adversarial(grid, T, c.train_attack, ro);
    row.rademacher_clean = rad.clean.value;
    row.rademacher_clean_stderr = rad.clean.stderr_;
    row.rademacher_adv = rad.adversarial.value;
    row.rademacher_adv_stderr = rad.adversarial.stderr_;
    row.rademacher_gap = rad.gap;
    row.rademacher_gap_stderr = rad.gap_stderr;
    row.udb_clean = estimate::uniform_deviation_bound(rad.clean.value, T, c.delta, c.log_base);
    row.udb_adv = estimate::uniform_deviation_bound(rad.adversarial.value, T, c.delta, c.log_base);

    bounds::BoundInputs in;
    in.K = c.data.num_classes;
    in.T = T;
    in.delta = c.delta;
    in.d = c.embedding.dim;
    in.Delta = res.Delta_used;
    in.I2 = res.I2;
    in.log_base = c.log_base;
    row.bound_banchi = bounds::banchi_bound(in);
    const auto adv = bounds::adv_bound(in, c.test_attack.epsilon, c.test_attack.p);
    row.bound_adv = adv.total;
    row.valid_regime = adv.valid;
    row.bound_general = bounds::adv_bound_general(in, c.test_attack.epsilon, c.test_attack.p).total;
    row.I2 = res.I2;
    row.Delta = res.Delta_used;
    res.rows.push_back(row);
  }
  return res;
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string to_csv(const ExperimentResult& r) {
  std::string out = std::string(csv_header) + "\n";
  for (const auto& row : r.rows) {
    out += std::to_string(row.T) + "," + num(row.g_clean) + "," + num(row.g_clean_stderr) + "," + num(row.g_adv) +
           "," + num(row.g_adv_stderr) + "," + num(row.udb_clean) + "," + num(row.udb_adv) + "," +
           num(row.bound_banchi) + "," + num(row.bound_adv) + "," + num(row.bound_general) + "," + num(row.I2) + "," +
           num(row.Delta) + "," + (row.valid_regime ? "true" : "false") + "\n";
  }
  return out;
}

json to_json(const ExperimentConfig& c, const ExperimentResult& r) {
  json j;
  j["config"] = config_to_json(c);
  j["seed"] = r.seed;
  j["generalization_error_convention"] = {
      {"statistic", "mean_abs"},
      {"description", "g_clean and g_adv are Monte Carlo means of |G(Pi, T)| over dataset draws; the signed means "
                      "are reported as mean_g_clean and mean_g_adv"}};
  j["I2_bits"] = r.I2;
  j["Delta_computed"] = r.Delta_computed;
  j["Delta_used"] = r.Delta_used;
  j["population_risk_clean"] = r.population_clean;
  j["population_risk_adversarial"] = r.population_adv;
  j["povm"] = r.povm;
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"T", row.T},
                    {"g_clean", row.g_clean},
                    {"g_clean_stderr", row.g_clean_stderr},
                    {"g_adv", row.g_adv},
                    {"g_adv_stderr", row.g_adv_stderr},
                    {"mean_g_clean", row.mean_g_clean},
                    {"mean_g_adv", row.mean_g_adv},
                    {"rademacher_clean", row.rademacher_clean},
                    {"rademacher_clean_stderr", row.rademacher_clean_stderr},
                    {"rademacher_adv", row.rademacher_adv},
                    {"rademacher_adv_stderr", row.rademacher_adv_stderr},
                    {"rademacher_gap", row.rademacher_gap},
                    {"rademacher_gap_stderr", row.rademacher_gap_stderr},
                    {"udb_clean", row.udb_clean},
                    {"udb_adv", row.udb_adv},
                    {"bound_banchi", row.bound_banchi},
                    {"bound_adv", row.bound_adv},
                    {"bound_general", row.bound_general},
                    {"valid_regime", row.valid_regime}});
  }
  j["rows"] = rows;
  return j;
}

namespace {

void touch(const std::string& path) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("output path is not writable: '" + path + "'");
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("output path is not writable: '" + path + "'");
  out << text;
  if (!out) throw ValidationError("failed writing '" + path + "'");
}

}  // namespace

void check_outputs_writable(const OutputPaths& o) {
  touch(o.csv);
  touch(o.svg);
  touch(o.json);
}

void write_outputs(const ExperimentConfig& c, const ExperimentResult& r) {
  const std::string csv = to_csv(r);
  write_text(c.outputs.csv, csv);
  write_text(c.outputs.json, to_json(c, r).dump(2) + "\n");
  write_text(c.outputs.svg, plot::render_svg(csv));
}

}  // namespace qadv::experiment
