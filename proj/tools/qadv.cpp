// qadv: command-line front end.
//
// Exit codes: 0 success, 1 usage error, 2 invalid input, 3 non-convergence.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qadv/attack.hpp"
#include "qadv/bounds.hpp"
#include "qadv/embed.hpp"
#include "qadv/errors.hpp"
#include "qadv/experiment.hpp"
#include "qadv/plot.hpp"
#include "qadv/rademacher.hpp"
#include "qadv/random.hpp"
#include "qadv/serialize.hpp"
#include "qadv/train.hpp"

using namespace qadv;
using nlohmann::json;

namespace {

// Options shared by every subcommand.
struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;  // empty = stdout

  experiment::ExperimentConfig config() const {
    if (config_path.empty()) return {};
    return experiment::load_config(config_path);
  }
  std::uint64_t require_seed(const experiment::ExperimentConfig& c) const {
    if (seed) return *seed;
    if (c.mc.seed) return *c.mc.seed;
    throw ValidationError("--seed is required for this command (or set mc.seed in the config)");
  }
};

void add_common(CLI::App* sub, Common& c, bool stochastic) {
  sub->add_option("--config", c.config_path, "TOML config file");
  sub->add_option("--out,-o", c.out, "output file (default: stdout)");
  if (stochastic) sub->add_option("--seed", c.seed, "RNG seed (required unless mc.seed is set)");
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out, std::ios::binary | std::ios::trunc);
  if (!f) throw ValidationError("cannot write '" + c.out + "'");
  f << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

double mi_of(const experiment::ExperimentConfig& c) {
  const embed::EmbeddedGrid grid(c.embedding, c.data);
  const auto prior = embed::quantized_prior(c.data);
  std::vector<qmat::DensityMatrix> states;
  for (std::size_t i = 0; i < grid.size(); ++i) states.push_back(grid.state(i));
  return bounds::renyi2_mi(prior.marginal, states);
}

// Attack flags layered over the config's test attack.
struct AttackFlags {
  std::optional<double> epsilon;
  std::string p;
  std::string solver;

  void add(CLI::App* sub) {
    sub->add_option("--epsilon", epsilon, "perturbation budget");
    sub->add_option("--p", p, "Schatten order: 1 or inf");
    sub->add_option("--solver", solver, "closed_form | numerical | brute_force | qubit_exact | auto");
  }
  attack::AttackSpec apply(attack::AttackSpec a) const {
    if (epsilon) a.epsilon = *epsilon;
    if (!p.empty()) a.p = qmat::SchattenOrder::parse(p);
    if (!solver.empty()) a.solver = attack::parse_solver(solver);
    a.validate();
    return a;
  }
};

// ---- bound

struct BoundCmd {
  Common common;
  AttackFlags attack;
  std::optional<double> I2, delta, Delta;
  std::optional<int> K, d;
  long T = 0;
  std::string log_base;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("bound", "evaluate the generalization bounds");
    add_common(sub, common, false);
    attack.add(sub);
    sub->add_option("--I2", I2, "Renyi-2 mutual information in bits (default: computed from the config)");
    sub->add_option("--K", K, "number of classes");
    sub->add_option("--T", T, "training-set size")->required();
    sub->add_option("--delta", delta, "confidence parameter");
    sub->add_option("--d", d, "Hilbert-space dimension");
    sub->add_option("--Delta", Delta, "Assumption-1 eigenvalue floor");
    sub->add_option("--log-base", log_base, "e or 2");
    sub->callback([this] { run(); });
  }

  void run() const {
    const auto c = common.config();
    bounds::BoundInputs in;
    in.K = K.value_or(c.data.num_classes);
    in.d = d.value_or(c.embedding.dim);
    in.T = T;
    in.delta = delta.value_or(c.delta);
    in.log_base = log_base.empty() ? c.log_base : bounds::parse_log_base(log_base);
    if (Delta) {
      in.Delta = *Delta;
    } else if (!common.config_path.empty()) {
      in.Delta = c.Delta_override.value_or(embed::eigen_floor(c.embedding, c.data));
    }
    if (I2) {
      in.I2 = *I2;
    } else if (!common.config_path.empty()) {
      in.I2 = mi_of(c);
    } else {
      throw ValidationError("--I2 is required without --config");
    }
    auto spec = c.test_attack;
    if (common.config_path.empty() && !attack.epsilon) spec.epsilon = 0.0;
    spec = attack.apply(spec);
    in.validate();

    json j = io::bound_report_to_json(bounds::adv_bound(in, spec.epsilon, spec.p));
    j["general"] = io::bound_report_to_json(bounds::adv_bound_general(in, spec.epsilon, spec.p));
    j["inputs"] = {{"K", in.K}, {"T", in.T}, {"delta", in.delta}, {"d", in.d}, {"Delta", in.Delta},
                   {"I2", in.I2}, {"log_base", bounds::to_string(in.log_base)},
                   {"epsilon", spec.epsilon}, {"p", spec.p.to_string()}};
    emit(common, j.dump(2) + "\n");
  }
};

// ---- mi

struct MiCmd {
  Common common;
  std::optional<double> q;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("mi", "Renyi-2 mutual information of the embedded grid");
    add_common(sub, common, false);
    sub->add_option("--q", q, "depolarization strength");
    sub->callback([this] { run(); });
  }

  void run() const {
    auto c = common.config();
    if (q) c.embedding.q = *q;
    c.embedding.validate();
    json j;
    j["I2_bits"] = mi_of(c);
    j["Delta_computed"] = embed::eigen_floor(c.embedding, c.data);
    j["grid_size"] = c.data.grid_size();
    j["q"] = c.embedding.q;
    emit(common, j.dump(2) + "\n");
  }
};

// ---- attack

struct AttackCmd {
  Common common;
  AttackFlags attack;
  std::string state_path, povm_path;
  std::optional<double> x;
  std::vector<double> bloch;
  int label = 0;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("attack", "worst-case perturbation of one state");
    add_common(sub, common, false);
    attack.add(sub);
    auto* s = sub->add_option("--state", state_path, "density matrix JSON file");
    auto* b = sub->add_option("--bloch", bloch, "Bloch vector x y z")->expected(3);
    auto* xo = sub->add_option("--x", x, "feature value, embedded with the config's embedding");
    s->excludes(b)->excludes(xo);
    b->excludes(xo);
    sub->add_option("--povm", povm_path, "POVM JSON file (default: computational basis)");
    sub->add_option("--class,-c", label, "true class (0-based)");
    sub->callback([this] { run(); });
  }

  void run() const {
    const auto c = common.config();
    std::optional<qmat::DensityMatrix> rho;
    if (!state_path.empty()) {
      rho = io::density_from_json(read_json(state_path));
    } else if (!bloch.empty()) {
      rho = io::density_from_json(json{{"bloch", bloch}});
    } else if (x) {
      rho = embed::embed(c.embedding, *x);
    } else {
      throw ValidationError("one of --state, --bloch or --x is required");
    }
    const qmat::Povm povm =
        povm_path.empty() ? qmat::Povm::computational(rho->dim()) : io::povm_from_json(read_json(povm_path));
    const auto spec = attack.apply(c.test_attack);
    const auto r = attack::adversarial_loss(povm, *rho, label, spec);
    json j = io::attack_result_to_json(r);
    j["attack"] = io::attack_spec_to_json(spec);
    j["class"] = label;
    emit(common, j.dump(2) + "\n");
  }
};

// ---- rademacher

struct RademacherCmd {
  Common common;
  AttackFlags attack;
  std::vector<long> Ts;
  std::optional<std::size_t> datasets, sigma;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("rademacher", "clean and adversarial Rademacher complexities");
    add_common(sub, common, true);
    attack.add(sub);
    sub->add_option("--T", Ts, "training-set sizes (default: the config's T_grid)")->delimiter(',');
    sub->add_option("--datasets", datasets, "dataset draws per T");
    sub->add_option("--sigma", sigma, "sign vectors per dataset when T > 16");
    sub->callback([this] { run(); });
  }

  void run() const {
    const auto c = common.config();
    const std::uint64_t seed = common.require_seed(c);
    const auto spec = attack.apply(c.train_attack);
    const embed::EmbeddedGrid grid(c.embedding, c.data);
    estimate::RademacherOptions ro;
    ro.num_datasets = datasets.value_or(c.mc.rademacher_datasets);
    ro.num_sigma = sigma.value_or(c.mc.rademacher_sigma);
    ro.random_starts = c.mc.random_starts;
    ro.screen_directions = c.mc.screen_directions;
    ro.polish = c.mc.polish;
    if (ro.num_datasets < 1 || ro.num_sigma < 1) throw ValidationError("--datasets and --sigma must be >= 1");

    std::string out = "T,mode,value,stderr,num_sigma,num_datasets,epsilon,p\n";
    auto row = [&](const estimate::RademacherEstimate& e, double eps) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "%ld,%s,%.10g,%.10g,%zu,%zu,%.10g,%s\n", e.T, estimate::to_string(e.mode),
                    e.value, e.stderr_, e.num_sigma, e.num_datasets, eps, spec.p.to_string().c_str());
      out += buf;
    };
    for (const long T : Ts.empty() ? c.T_grid : Ts) {
      if (T < 1) throw ValidationError("--T values must be >= 1");
      ro.seed = rng::derive_seed(seed, rng::Stream::rademacher_dataset, static_cast<std::uint64_t>(T));
      const auto r = estimate::rademacher_adversarial(grid, T, spec, ro);
      row(r.clean, 0.0);
      row(r.adversarial, spec.epsilon);
    }
    emit(common, out);
  }
};

// ---- train

struct TrainCmd {
  Common common;
  AttackFlags attack;
  std::string data_path, curve_path;
  std::optional<std::size_t> T;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("train", "adversarial training of a POVM");
    add_common(sub, common, true);
    attack.add(sub);
    sub->add_option("--data", data_path, "dataset CSV with header x,c (default: sample from the config)");
    sub->add_option("--T", T, "size of the sampled training set when --data is absent");
    sub->add_option("--curve", curve_path, "training-curve CSV output");
    sub->callback([this] { run(); });
  }

  void run() const {
    const auto c = common.config();
    const std::uint64_t seed = common.require_seed(c);
    const embed::EmbeddedGrid grid(c.embedding, c.data);
    embed::Dataset ds;
    if (!data_path.empty()) {
      std::istringstream in(read_file(data_path));
      ds = embed::read_dataset_csv(in, c.data);
    } else {
      ds = embed::sample_dataset(c.data, T.value_or(c.training.train_T),
                                 rng::derive_seed(seed, rng::Stream::training_data, 0));
    }
    train::TrainConfig tc;
    tc.attack = attack.apply(c.train_attack);
    tc.max_outer_iters = c.training.max_outer_iters;
    tc.step_size = c.training.step_size;
    tc.num_restarts = c.training.num_restarts;
    tc.seed = rng::derive_seed(seed, rng::Stream::restart, 0);
    const auto r = train::adversarial_train(ds, grid, tc);

    json j;
    j["povm"] = io::povm_to_json(r.povm);
    j["risk"] = r.risk;
    j["best_restart"] = r.best_restart;
    j["restart_risks"] = r.restart_risks;
    j["attack"] = io::attack_spec_to_json(tc.attack);
    j["num_samples"] = ds.size();
    emit(common, j.dump(2) + "\n");
    if (!curve_path.empty()) {
      std::string csv = "restart,iteration,risk,step,accepted\n";
      for (const auto& p : r.curve) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%d,%d,%.10g,%.10g,%s\n", p.restart, p.iteration, p.risk, p.step,
                      p.accepted ? "true" : "false");
        csv += buf;
      }
      Common sink;
      sink.out = curve_path;
      emit(sink, csv);
    }
  }
};

// ---- experiment

struct ExperimentCmd {
  Common common;
  std::string csv, svg, json_path;
  std::vector<long> T_grid;
  std::optional<std::size_t> datasets;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("experiment", "generalization-error experiment (CSV, JSON and SVG)");
    sub->add_option("--config", common.config_path, "TOML config file")->required();
    sub->add_option("--seed", common.seed, "RNG seed (required unless mc.seed is set)");
    sub->add_option("--csv", csv, "CSV output path");
    sub->add_option("--svg", svg, "SVG output path");
    sub->add_option("--json", json_path, "JSON output path");
    sub->add_option("--T-grid", T_grid, "training sizes")->delimiter(',');
    sub->add_option("--datasets", datasets, "dataset draws per T for E|G|");
    sub->callback([this] { run(); });
  }

  void run() const {
    auto c = common.config();
    if (!csv.empty()) c.outputs.csv = csv;
    if (!svg.empty()) c.outputs.svg = svg;
    if (!json_path.empty()) c.outputs.json = json_path;
    if (!T_grid.empty()) c.T_grid = T_grid;
    if (datasets) c.mc.num_datasets = *datasets;
    c.validate();
    const std::uint64_t seed = common.require_seed(c);
    if (c.outputs.csv.empty() && c.outputs.json.empty() && c.outputs.svg.empty()) {
      throw ValidationError("no outputs configured (outputs.csv / --csv, ...)");
    }
    experiment::check_outputs_writable(c.outputs);
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = experiment::run_experiment(c, seed);
    experiment::write_outputs(c, result);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // Kept out of the JSON so reruns are byte-identical.
    std::fprintf(stderr, "experiment finished: %zu rows, wall time %.1f s\n", result.rows.size(), secs);
  }
};

// ---- sample

struct SampleCmd {
  Common common;
  std::size_t T = 0;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("sample", "draw a dataset (CSV x,c)");
    add_common(sub, common, true);
    sub->add_option("--T", T, "number of samples")->required();
    sub->callback([this] { run(); });
  }

  void run() const {
    const auto c = common.config();
    const std::uint64_t seed = common.require_seed(c);
    std::ostringstream out;
    embed::write_dataset_csv(out, embed::sample_dataset(c.data, T, rng::derive_seed(seed, rng::Stream::dataset, 0)));
    emit(common, out.str());
  }
};

// ---- plot

struct PlotCmd {
  Common common;
  std::string csv;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("plot", "render an experiment CSV as SVG");
    add_common(sub, common, false);
    sub->add_option("--csv", csv, "experiment CSV")->required();
    sub->callback([this] { emit(common, plot::render_svg(read_file(csv))); });
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qadv: adversarial robustness tools for quantum classifiers"};
  app.require_subcommand(1);
  BoundCmd bound;
  MiCmd mi;
  AttackCmd atk;
  RademacherCmd rad;
  TrainCmd trn;
  ExperimentCmd exp;
  SampleCmd smp;
  PlotCmd plt;
  bound.add(app);
  mi.add(app);
  atk.add(app);
  rad.add(app);
  trn.add(app);
  exp.add(app);
  smp.add(app);
  plt.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    // ValidationError, InfeasibleError, UnsupportedError, I/O and JSON errors
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
