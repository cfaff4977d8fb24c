#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "thinflow/lab.hpp"

using namespace thinflow;
using namespace thinflow::lab;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "thinflow_test_lab";
  std::filesystem::create_directories(dir);
  return dir / name;
}

ConvergenceReport sample_report() {
  ConvergenceReport r;
  r.config = {{"gamma", 1}, {"eps_list", {0.2, 0.1}}};
  r.tolerances = default_tolerances();
  Table t{{"eps", "distance"}, {}};
  t.add({0.2, 1.5e-2});
  t.add({0.1, nullptr});
  r.tables["runs"] = t;
  Criterion c;
  c.id = "C10";
  c.title = "distances decrease";
  c.verdict = Verdict::pass;
  c.measured = 0.25;
  c.tolerance = 1;
  c.detail = "d";
  c.seconds = 3.5;
  c.budget = 900;
  r.criteria.push_back(c);
  c.id = "C11";
  c.verdict = Verdict::unreliable;
  c.measured = NAN;
  r.criteria.push_back(c);
  return r;
}

std::vector<Snapshot<double>> ramp(std::size_t count, double h, double scale, std::size_t nodes) {
  std::vector<Snapshot<double>> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    out[k].t = k * h;
    out[k].velocity.assign(nodes, Complex<double>(scale * k * h, 0));
  }
  return out;
}

}  // namespace

TEST_CASE("power-law fit recovers exact exponents and flags noisy data") {
  std::vector<double> x, y;
  for (int k = 0; k < 8; ++k) {
    x.push_back(std::pow(2.0, k));
    y.push_back(3 * std::pow(x.back(), -1.7));
  }
  const auto f = fit_power_law(x, y);
  CHECK(f.slope == doctest::Approx(-1.7).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(3).epsilon(1e-12));
  CHECK(f.reliable);
  CHECK(f.residual < 1e-12);

  // Independent slope from the shared helper.
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < x.size(); ++k) {
    lx.push_back(std::log(x[k]));
    ly.push_back(std::log(y[k]));
  }
  CHECK(f.slope == doctest::Approx(testing::fit_slope(lx, ly)).epsilon(1e-12));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> jitter(0.3, 3.0);
  for (auto& v : y) v *= jitter(rng);
  CHECK_FALSE(fit_power_law(x, y).reliable);
}

TEST_CASE("fits reject degenerate input") {
  CHECK_THROWS_AS(fit_power_law({1}, {1}), DomainError);
  CHECK_THROWS_AS(fit_power_law({1, 2}, {1, 0}), DomainError);
  CHECK_THROWS_AS(fit_power_law({2, 2}, {1, 3}), DomainError);
  Sampler f = [](const Point& x) { return Point(1 / std::norm(x), 0); };
  CHECK_THROWS_AS(decay_fit(f, {50, 100}), DomainError);
  CHECK_THROWS_AS(endpoint_fit(f, {0.5}, 1), DomainError);
  CHECK_THROWS_AS(endpoint_fit(f, {0.01}, 0), DomainError);
  Sampler zero = [](const Point&) { return Point(0, 0); };
  CHECK_THROWS_AS(decay_fit(zero, {50, 800}), DomainError);
}

TEST_CASE("decay and endpoint fits on closed-form fields") {
  Sampler inv_sq = [](const Point& x) { return 1.0 / (x * x); };
  CHECK(decay_fit(inv_sq, {50, 100, 200, 400, 800}).slope == doctest::Approx(-2).epsilon(1e-10));
  Sampler root = [](const Point& x) { return 1.0 / std::sqrt(x * x - 1.0); };
  // |x^2 - 1|^{-1/2} ~ (2d)^{-1/2} with a correction of relative order d.
  const auto fit = endpoint_fit(root, {1e-6, 1e-5, 1e-4}, 1);
  CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-4));
  CHECK(endpoint_fit(root, {1e-6, 1e-5, 1e-4}, -1).slope == doctest::Approx(-0.5).epsilon(1e-4));
}

TEST_CASE("verdict strings round-trip") {
  for (auto v : {Verdict::pass, Verdict::fail, Verdict::unreliable}) CHECK(verdict_from_string(to_string(v)) == v);
  CHECK_THROWS_AS(verdict_from_string("maybe"), Error);
}

TEST_CASE("table rows must match the columns") {
  Table t{{"a", "b"}, {}};
  t.add({1, 2});
  CHECK_THROWS_AS(t.add({1}), Error);
}

TEST_CASE("report JSON round-trip is the identity, NaN included") {
  const auto r = sample_report();
  const auto back = ConvergenceReport::from_json(r.to_json());
  CHECK(back.tables == r.tables);
  CHECK(back.config == r.config);
  CHECK(back.tolerances == r.tolerances);
  REQUIRE(back.criteria.size() == 2);
  CHECK(back.criteria[0] == r.criteria[0]);
  CHECK(std::isnan(back.criteria[1].measured));
  CHECK(back.criteria[1].verdict == Verdict::unreliable);
  CHECK(back.to_json() == r.to_json());
}

TEST_CASE("config hash changes with a tolerance and not with timings") {
  auto r = sample_report();
  const auto h = r.config_hash();
  CHECK(h.size() == 16);
  auto timed = r;
  timed.criteria[0].seconds = 99;
  CHECK(timed.config_hash() == h);
  r.tolerances["slope_h"] = 0.06;
  CHECK(r.config_hash() != h);
}

TEST_CASE("emitted report and tables carry the config hash and reload") {
  const auto r = sample_report();
  const auto path = scratch("sample.json");
  report_emit(r, path);
  const auto back = report_load(path);
  CHECK(back.tables == r.tables);
  CHECK(back.criteria[0].seconds == 3.5);

  std::ifstream csv(scratch("sample_runs.csv"));
  std::string first, header, row1, row2;
  std::getline(csv, first);
  std::getline(csv, header);
  std::getline(csv, row1);
  std::getline(csv, row2);
  CHECK(first == "# config_hash=" + r.config_hash());
  CHECK(header == "eps,distance");
  CHECK(row2.substr(row2.find(',') + 1).empty());

  // The main JSON does not depend on wall-clock time.
  auto slower = r;
  for (auto& c : slower.criteria) c.seconds *= 7;
  const auto other = scratch("sample_slow.json");
  report_emit(slower, other);
  std::ifstream a(path), b(other);
  std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
}

TEST_CASE("merged reports keep every criterion and the incomplete flag") {
  auto a = sample_report();
  ConvergenceReport b;
  b.incomplete = true;
  b.tables["extra"] = Table{{"x"}, {{1}}};
  Criterion c;
  c.id = "C12";
  c.verdict = Verdict::fail;
  b.criteria.push_back(c);
  a.merge(b);
  CHECK(a.incomplete);
  CHECK(a.tables.count("extra") == 1);
  CHECK(a.find("C12") != nullptr);
  CHECK_FALSE(a.all_pass());
}

TEST_CASE("time-integrated distance matches the trapezoid rule for a linear ramp") {
  // |u_a - u_b|^2 = N A s^2 t^2 on N nodes of cell area A; the trapezoid
  // rule with step h over [0, 1] gives 1/3 + h^2/6 for t^2.
  ProbePatch<double> patch{0, 1, 0, 1, 0.1, 4};
  const std::size_t nodes = 16;
  const double area = patch.cell_area(), s = 2;
  const auto a = ramp(11, 0.1, 0, nodes);
  const auto b = ramp(11, 0.1, s, nodes);
  auto oracle = [&](double h) { return std::sqrt(nodes * area * s * s * (1.0 / 3 + h * h / 6)); };
  CHECK(time_integrated_distance(patch, a, b) == doctest::Approx(oracle(0.1)).epsilon(1e-12));
  CHECK(time_integrated_distance(patch, a, b, 2) == doctest::Approx(oracle(0.2)).epsilon(1e-12));
  CHECK(time_integrated_distance(patch, a, a) == 0);
  CHECK_THROWS_AS(time_integrated_distance(patch, a, b, 3), DomainError);
  CHECK_THROWS_AS(time_integrated_distance(patch, a, ramp(10, 0.1, s, nodes)), DomainError);
}

TEST_CASE("study config validation names the offending field") {
  auto c = reference_study();
  CHECK_NOTHROW(c.validate());
  auto bad = c;
  bad.eps_list = {0.1, 0.2, 0.05};
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("eps_list"), ConfigError);
  bad = c;
  bad.ladder = {{128, 256, 0}, {64, 128, 0}};
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("ladder"), ConfigError);
  bad = c;
  bad.lambda = 1.5;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("lambda"), ConfigError);
  bad = c;
  bad.test_fields[0].t_stop = 0.9;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("test_fields[0]"), ConfigError);
}

TEST_CASE("missing tolerances are reported by key") {
  auto tol = default_tolerances();
  tol.erase("circulation");
  CHECK_THROWS_WITH_AS(criterion_1(tol), doctest::Contains("circulation"), ConfigError);
}

TEST_CASE("Lp bound rejects exponents and radii outside its range") {
  const FlowData<double> flow;
  CHECK_THROWS_AS(lp_uniform_bound({0.2}, 4, 50, flow), ConfigError);
  CHECK_THROWS_AS(lp_uniform_bound({0.2}, 3, 1, flow), ConfigError);
}

TEST_CASE("a failed run is recorded rather than thrown") {
  auto c = reference_study();
  const auto r = sampled_run(c, 0.2, {64, 128, 0.003}, WallClosure::thom, 0.05);
  CHECK_FALSE(r.error.empty());
  CHECK(r.near.empty());
}

TEST_CASE("sampled run fills both patches at every snapshot") {
  auto c = reference_study();
  c.snapshot_dt = 0.01;
  c.patch.n = 32;
  c.far_patch.n = 16;
  const auto r = sampled_run(c, 0.2, {64, 128, 0}, WallClosure::thom, 0.05);
  REQUIRE(r.error.empty());
  CHECK(r.near.size() == 6);
  CHECK(r.far.size() == 6);
  CHECK(r.ladyzhenskaya.size() == 6);
  for (double v : r.ladyzhenskaya) CHECK(v > 0);
  CHECK(r.far.front().velocity.size() == c.far_patch.nodes().size());
}
