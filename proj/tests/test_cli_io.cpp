#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "sgwave/cli_io.hpp"

using namespace sgwave;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sgwave_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

std::string small_config(const std::string& kind, const fs::path& out, const std::string& extra = "") {
  return R"({"A": 0.5, "S": 4, "z0": 4, "grid_points": 96, "kind": ")" + kind + R"(", "out": ")" + out.string() +
         "\"" + extra + "}";
}

}  // namespace

TEST(ParseConfig, ReferenceDefaults) {
  const RunConfig c = parse_config(R"({"A": 0.5, "S": 4, "z0": 4})");
  EXPECT_DOUBLE_EQ(c.params.A, 0.5);
  EXPECT_DOUBLE_EQ(c.params.S, 4.0);
  EXPECT_DOUBLE_EQ(c.params.z0, 4.0);
  EXPECT_EQ(c.params.n_basis, 40);
  EXPECT_EQ(c.params.grid_points, 256);
  EXPECT_DOUBLE_EQ(c.params.grid_extent, 12.0);
  EXPECT_DOUBLE_EQ(c.params.dt, 1e-3);
  EXPECT_FALSE(c.params.textbook_mode);
  EXPECT_EQ(c.kind, RunKind::evolve);
  EXPECT_EQ(c.m0, SpinSelection::both);
  EXPECT_EQ(c.echo["grid_extent"], 12.0);
}

TEST(ParseConfig, MissingKeysAreListed) {
  try {
    parse_config("{}");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "missing required keys: A, S, z0");
  }
}

TEST(ParseConfig, Sweep) {
  const RunConfig c = parse_config(
      R"({"A": 0.5, "S": 4, "z0": 4, "kind": "sweep", "sweep": {"axis": "A", "values": [0.1, 0.25, 0.5, 1.0], "hold": "AS"}})");
  ASSERT_TRUE(c.sweep.has_value());
  EXPECT_EQ(c.sweep->values.size(), 4u);
  const SimParams q = detail::sweep_point(c.params, *c.sweep, 0.1);
  EXPECT_NEAR(q.S, 20.0, 1e-12);
  EXPECT_EQ(q.n_basis, 100);
  const SimParams r = detail::sweep_point(c.params, *c.sweep, 1.0);
  EXPECT_NEAR(r.S, 2.0, 1e-12);
  EXPECT_EQ(r.n_basis, 40);
}

TEST(ParseConfig, Rejections) {
  const char* bad[] = {
      R"([1, 2])",
      R"({"A": 0.5, "S": 4, "z0": 4, "colour": 1})",
      R"({"A": "half", "S": 4, "z0": 4})",
      R"({"A": 0.5, "S": 4, "z0": 4, "kind": "plot"})",
      R"({"A": 0.5, "S": 4, "z0": 4, "m0": 1.5})",
      R"({"A": 0.5, "S": 4, "z0": -1})",
      R"({"A": 0.5, "S": 4, "z0": 4, "kind": "sweep"})",
      R"({"A": 0.5, "S": 4, "z0": 4, "sweep": {"axis": "z0", "values": [3, 4], "hold": "AS"}})",
      R"({"A": 0.5, "S": 4, "z0": 4, "sweep": {"axis": "B", "values": [1]}})",
      R"({"A": 0.5, "S": 4, "z0": 4, "kind": "tomography"})",
      R"({"A": 0.5, "S": 4, "z0": 4, "tomography": {"p": [1, 1, 0]}})",
      R"({"A": 0.5, "S": 4, "z0": 4, "approximation": "wkb"})",
      R"({"A": 0.5, "S": 4, "z0": 4, "stride": 0})",
      R"({"A": 0.5, "S": 4, "z0": 4, "grid_extent": 5})",
      "not json",
  };
  for (const char* text : bad) EXPECT_THROW(parse_config(text), ValidationError) << text;
}

TEST(ParseConfig, SpinSelection) {
  EXPECT_EQ(parse_config(R"({"A": 0.5, "S": 4, "z0": 4, "m0": 0.5})").m0, SpinSelection::up);
  EXPECT_EQ(parse_config(R"({"A": 0.5, "S": 4, "z0": 4, "m0": "down"})").m0, SpinSelection::down);
}

TEST(MapCsv, RoundTripRecoversGeometry) {
  const fs::path dir = scratch("csv");
  fs::create_directories(dir);
  GridMap m{Grid{7.5, 33}, RMatrix::Random(33, 33)};
  write_map_csv(dir / "m.csv", m);
  const GridMap back = read_map_csv(dir / "m.csv");
  EXPECT_TRUE(back.grid == m.grid);
  EXPECT_LT((back.values - m.values).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_EQ(slurp(dir / "m.csv").substr(0, 10), "x,z,value\n");
}

TEST(Execute, EvolveWritesArtifacts) {
  const fs::path out = scratch("evolve");
  const RunConfig c = parse_config(small_config("evolve", out));
  const json s = execute(c);
  for (const char* f : {"summary.json", "trajectory.csv", "p0.csv", "ax.csv", "ay.csv", "az.csv", "flip_density.csv"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  const json file = read_json(out / "summary.json");
  EXPECT_EQ(file["config"]["A"], 0.5);
  EXPECT_DOUBLE_EQ(file["drift_time"].get<double>(), 3.5);
  EXPECT_EQ(file["runs"].size(), 2u);
  EXPECT_TRUE(file["warnings"].is_array());
  EXPECT_TRUE(file.contains("wall_time_s"));

  const GridMap p0 = read_map_csv(out / "p0.csv");
  EXPECT_DOUBLE_EQ(p0.grid.extent, file["grid"]["extent"].get<double>());
  EXPECT_EQ(p0.grid.points, file["grid"]["points"].get<int>());
  EXPECT_NEAR(p0.integral(), 1.0, 1e-4);
  EXPECT_NEAR(s["observables"]["flip_up_to_down"].get<double>(), 0.0166, 0.001);
}

TEST(Execute, TextbookModeHasNoFlips) {
  const fs::path out = scratch("textbook");
  const RunConfig c = parse_config(small_config("evolve", out, R"(, "textbook_mode": true, "m0": "up")"));
  const json s = execute(c);
  EXPECT_LT(s["runs"][0]["flip_probability"].get<double>(), 1e-10);
}

TEST(Execute, CompareOrdersApproximations) {
  const fs::path out = scratch("compare");
  const json s = execute(parse_config(small_config("compare", out)));
  const json& d = s["compare"]["overlap_deficits"];
  EXPECT_GT(d["adiabatic"].get<double>(), d["pseudo_adiabatic"].get<double>());
  EXPECT_GT(d["pseudo_adiabatic"].get<double>(), d["coherent_state"].get<double>());
  EXPECT_GT(d["coherent_state"].get<double>(), d["symmetrized"].get<double>());
}

TEST(Execute, SyntheticTomographyRecoversPolarization) {
  const fs::path out = scratch("tomo");
  const json s = execute(parse_config(small_config("tomography", out, R"(, "tomography": {"p": [0.6, 0, 0.8]})")));
  const json& p = s["tomography"]["p"];
  EXPECT_NEAR(p[0].get<double>(), 0.6, 1e-8);
  EXPECT_NEAR(p[1].get<double>(), 0.0, 1e-8);
  EXPECT_NEAR(p[2].get<double>(), 0.8, 1e-8);

  // the written map fits back to the same answer
  const fs::path again = scratch("tomo_again");
  const json t = execute(parse_config(
      small_config("tomography", again, R"(, "tomography": {"observed": ")" + (out / "observed.csv").string() + "\"}")));
  EXPECT_NEAR(t["tomography"]["p"][0].get<double>(), 0.6, 1e-8);
}

TEST(Execute, Deterministic) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const std::string extra = R"(, "tomography": {"p": [0.3, 0.1, -0.5], "noise": 0.01, "seed": 17})";
  execute(parse_config(small_config("tomography", a, extra)));
  execute(parse_config(small_config("tomography", b, extra)));
  for (const char* f : {"p0.csv", "ax.csv", "observed.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  EXPECT_EQ(read_json(a / "summary.json")["tomography"], read_json(b / "summary.json")["tomography"]);
}

TEST(Run, ExitCodes) {
  std::ostringstream err;
  RunConfig c = parse_config(small_config("evolve", scratch("fail")));
  c.params.dt = 0.5;
  EXPECT_EQ(run(c, err), 3);
  const json e = json::parse(err.str());
  EXPECT_EQ(e["error"]["type"], "numerical");

  std::ostringstream err2;
  RunConfig d = parse_config(small_config("approximate", scratch("fail2")));
  d.params.S = 0.0;
  d.params.A = 0.0;
  EXPECT_EQ(run(d, err2), 2);
  EXPECT_EQ(json::parse(err2.str())["error"]["type"], "validation");
}

TEST(Binary, ExitCodesAndOutput) {
  const fs::path out = scratch("binary");
  const std::string cli = SGWAVE_CLI_PATH;
  const fs::path err = out.string() + ".err";
  const std::string ok = cli + " --A 0.5 --S 4 --z0 4 --grid_points 96 --textbook_mode true --m0 up --out " +
                         out.string() + " > /dev/null 2> " + err.string();
  EXPECT_EQ(WEXITSTATUS(std::system(ok.c_str())), 0);
  EXPECT_TRUE(fs::exists(out / "summary.json"));

  const std::string bad = cli + " --A 0.5 --S 4 --out " + out.string() + " 2> " + err.string();
  EXPECT_EQ(WEXITSTATUS(std::system(bad.c_str())), 2);
  EXPECT_EQ(json::parse(slurp(err))["error"]["message"], "missing required keys: z0");

  const std::string numeric = cli + " --A 0.5 --S 4 --z0 4 --dt 0.5 --out " + out.string() + " 2> " + err.string();
  EXPECT_EQ(WEXITSTATUS(std::system(numeric.c_str())), 3);
}
