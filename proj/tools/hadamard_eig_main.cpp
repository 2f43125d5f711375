#include "hadamard_eig/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Shape derivatives of Laplacian eigenvalues on P1 meshes"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  hadamard_eig::Command command = hadamard_eig::Command::Report;

  auto add = [&](const char* name, const char* help, hadamard_eig::Command c) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "Run configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides output.dir)");
    sub->callback([&command, c] { command = c; });
  };
  add("report", "Eigenvalues with first and second unilateral derivatives at one t",
      hadamard_eig::Command::Report);
  add("sweep", "Sample a t-grid, rearrange branches through crossings", hadamard_eig::Command::Sweep);
  add("oracle", "Compare derivatives against finite differences", hadamard_eig::Command::Oracle);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  return hadamard_eig::run_command(command, config, out_dir, std::cout, std::cerr);
}
