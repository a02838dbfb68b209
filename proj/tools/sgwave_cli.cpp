// Command-line front end. Flags mirror the JSON config keys and override the
// values read from --config.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "sgwave/cli_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spin-1/2 wave packets in an inhomogeneous magnetic field"};

  std::string config_path;
  std::optional<std::string> out, kind, m0, approximation;
  std::optional<double> A, S, z0, grid_extent, dt;
  std::optional<int> n_basis, grid_points, stride;
  std::optional<bool> drift, textbook_mode;

  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory");
  app.add_option("--kind", kind, "evolve | approximate | compare | asymmetry | tomography | sweep");
  app.add_option("--A", A, "adiabaticity parameter");
  app.add_option("--S", S, "separation parameter");
  app.add_option("--z0", z0, "distance to the field zero, in packet widths");
  app.add_option("--n_basis", n_basis, "oscillator levels per coordinate");
  app.add_option("--grid_extent", grid_extent, "grid half-width");
  app.add_option("--grid_points", grid_points, "samples per axis");
  app.add_option("--dt", dt, "RK4 step");
  app.add_option("--textbook_mode", textbook_mode, "drop the I_x x coupling (true/false)");
  app.add_option("--m0", m0, "up | down | both");
  app.add_option("--drift", drift, "apply the free drift after the magnet (true/false)");
  app.add_option("--stride", stride, "snapshot stride in RK4 steps");
  app.add_option("--approximation", approximation,
                 "adiabatic | pseudo_adiabatic | coherent_state | symmetrized");
  CLI11_PARSE(app, argc, argv);

  using sgwave::json;
  json cfg = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      cfg = json::parse(buf.str());
    } catch (const json::parse_error& e) {
      std::cerr << sgwave::error_json("validation", std::string("config: not valid JSON: ") + e.what()).dump()
                << "\n";
      return 2;
    }
  }
  auto put = [&](const char* key, const auto& v) {
    if (v) cfg[key] = *v;
  };
  put("out", out);
  put("kind", kind);
  put("A", A);
  put("S", S);
  put("z0", z0);
  put("n_basis", n_basis);
  put("grid_extent", grid_extent);
  put("grid_points", grid_points);
  put("dt", dt);
  put("textbook_mode", textbook_mode);
  put("m0", m0);
  put("drift", drift);
  put("stride", stride);
  put("approximation", approximation);

  sgwave::RunConfig config;
  try {
    config = sgwave::parse_config(cfg.dump());
  } catch (const sgwave::ValidationError& e) {
    std::cerr << sgwave::error_json("validation", e.what()).dump() << "\n";
    return 2;
  }
  const int code = sgwave::run(config, std::cerr);
  if (code == 0) std::cout << (std::filesystem::path(config.out_dir) / "summary.json").string() << "\n";
  return code;
}
