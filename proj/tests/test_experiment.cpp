#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qadv/errors.hpp"
#include "qadv/experiment.hpp"
#include "qadv/plot.hpp"

using namespace qadv;
using namespace qadv::experiment;

namespace {

const char* small_config = R"(
[experiment]
T_grid = [100, 400]
delta = 0.8

[attack.train]
p = "1"
epsilon = 0.08

[mc]
num_datasets = 300
rademacher_datasets = 4
rademacher_sigma = 8
seed = 77
)";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("config defaults and overrides") {
  const auto c = parse_config("");
  CHECK(c.embedding.q == 0.05);
  CHECK(c.T_grid == std::vector<long>{25, 50, 100, 200, 400, 800});
  CHECK(c.delta == 0.8);
  CHECK_FALSE(c.mc.seed.has_value());
  CHECK(c.povm_source == PovmSource::fixed_computational);

  const auto s = parse_config(small_config);
  CHECK(s.T_grid == std::vector<long>{100, 400});
  CHECK(s.train_attack.epsilon == 0.08);
  // test attack defaults to the train attack
  CHECK(s.test_attack.epsilon == 0.08);
  CHECK(*s.mc.seed == 77);

  const auto o = parse_config("[experiment]\nDelta_override = 0.05\n[attack.test]\np = \"inf\"\nepsilon = 0.02\n");
  CHECK(*o.Delta_override == 0.05);
  CHECK(o.test_attack.p.is_infinite());
  CHECK(o.train_attack.p.is_infinite());
}

TEST_CASE("config rejects bad input") {
  CHECK_THROWS_AS(parse_config("[embedding]\nqq = 0.1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[nonsense]\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[experiment]\nT_grid = [100, 50]\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[experiment]\ndelta = 1.5\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[embedding]\nq = \"x\"\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[attack.train]\np = 2\nepsilon = 0.1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("this is = = not toml"), ValidationError);
  CHECK_THROWS_AS(load_config("/nonexistent/missing.toml"), ValidationError);
}

TEST_CASE("run_experiment needs a seed") {
  auto c = parse_config(small_config);
  c.mc.seed.reset();
  CHECK_THROWS_AS(run_experiment(c), ValidationError);
}

TEST_CASE("small experiment: schema, decay and determinism") {
  const auto c = parse_config(small_config);
  const auto a = run_experiment(c);
  const auto b = run_experiment(c);
  REQUIRE(a.rows.size() == 2);
  CHECK(to_csv(a) == to_csv(b));
  CHECK(to_json(c, a).dump() == to_json(c, b).dump());

  const auto csv = to_csv(a);
  CHECK(csv.substr(0, csv.find('\n')) == csv_header);
  // E|G| at 4x the data is about half.
  CHECK(a.rows[1].g_clean <= 0.7 * a.rows[0].g_clean);
  for (const auto& r : a.rows) {
    CHECK(r.g_adv + 3 * r.g_adv_stderr >= r.g_clean);
    CHECK(r.Delta == doctest::Approx(0.025).epsilon(1e-12));
    CHECK_FALSE(r.valid_regime);  // eps = 0.08 > 2 * 0.025
    CHECK(r.bound_general > 0.0);
  }
  CHECK(a.population_adv - a.population_clean == doctest::Approx(0.04).epsilon(1e-9));

  // Seed override changes the draws.
  const auto other = run_experiment(c, 78);
  CHECK(to_csv(other) != csv);
}

TEST_CASE("Delta override switches the validity regime") {
  auto c = parse_config(small_config);
  c.Delta_override = 0.05;
  c.T_grid = {50};
  const auto r = run_experiment(c);
  CHECK(r.Delta_computed == doctest::Approx(0.025).epsilon(1e-12));
  CHECK(r.Delta_used == 0.05);
  CHECK(r.rows[0].valid_regime);
}

TEST_CASE("svg is a pure function of the csv") {
  auto c = parse_config(small_config);
  const auto r = run_experiment(c);
  const auto csv = to_csv(r);
  const auto svg = plot::render_svg(csv);
  CHECK(svg == plot::render_svg(csv));
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("bound (general eps)") != std::string::npos);
  std::size_t lines = 0;
  for (std::size_t pos = 0; (pos = svg.find("<polyline", pos)) != std::string::npos; ++pos) ++lines;
  CHECK(lines == 6);
  CHECK_THROWS_AS(plot::render_svg("T,g_clean\n1,2\n"), ValidationError);
}

TEST_CASE("outputs") {
  const auto dir = std::filesystem::temp_directory_path() / "qadv_test_outputs";
  std::filesystem::create_directories(dir);
  auto c = parse_config(small_config);
  c.T_grid = {50};
  c.outputs = {(dir / "r.csv").string(), (dir / "r.svg").string(), (dir / "r.json").string()};
  check_outputs_writable(c.outputs);
  const auto r = run_experiment(c);
  write_outputs(c, r);
  CHECK(slurp(dir / "r.csv") == to_csv(r));
  CHECK(slurp(dir / "r.svg") == plot::render_svg(to_csv(r)));
  const auto j = nlohmann::json::parse(slurp(dir / "r.json"));
  CHECK(j["seed"] == 77);
  CHECK(j["generalization_error_convention"]["statistic"] == "mean_abs");
  CHECK(j["config"]["mc"]["seed"] == 77);
  CHECK_FALSE(j.contains("wall_time"));

  OutputPaths bad{"/nonexistent_dir/x.csv", "", ""};
  CHECK_THROWS_AS(check_outputs_writable(bad), ValidationError);
}
