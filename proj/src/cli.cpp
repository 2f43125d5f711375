#include "hadamard_eig/cli.hpp"

#include "hadamard_eig/assemble.hpp"
#include "hadamard_eig/deform.hpp"
#include "hadamard_eig/oracle.hpp"
#include "hadamard_eig/rearrange.hpp"
#include "hadamard_eig/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

namespace hadamard_eig {

namespace {

constexpr int kSchemaVersion = 1;

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw ConfigError(field + ": " + msg);
}

const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double get_number(const json& j, const char* key, const std::string& field, double fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_number()) fail(field, "expected a number");
  return v->get<double>();
}

int get_int(const json& j, const char* key, const std::string& field, int fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) fail(field, "expected an integer");
  return v->get<int>();
}

std::string get_string(const json& j, const char* key, const std::string& field,
                       const std::string& fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_string()) fail(field, "expected a string");
  return v->get<std::string>();
}

BoundaryTag parse_tag(const json& v, const std::string& field) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "D" || s == "dirichlet") return BoundaryTag::Dirichlet;
    if (s == "N" || s == "neumann") return BoundaryTag::Neumann;
  }
  fail(field, "expected \"D\"/\"dirichlet\" or \"N\"/\"neumann\"");
}

Command parse_command(const std::string& s) {
  if (s == "report") return Command::Report;
  if (s == "sweep") return Command::Sweep;
  if (s == "oracle") return Command::Oracle;
  fail("command", "unknown command \"" + s + "\"");
}

const char* command_name(Command c) {
  switch (c) {
    case Command::Report: return "report";
    case Command::Sweep: return "sweep";
    case Command::Oracle: return "oracle";
  }
  return "?";
}

MeshSpec parse_mesh(const json& j) {
  if (!j.is_object()) fail("mesh", "expected an object");
  MeshSpec spec;
  if (const json* f = find(j, "file")) {
    if (!f->is_string() || f->get<std::string>().empty()) fail("mesh.file", "expected a path");
    spec.file = f->get<std::string>();
    return spec;
  }
  const json* g = find(j, "generator");
  if (!g || !g->is_object()) fail("mesh", "needs \"file\" or \"generator\"");
  spec.nx = get_int(*g, "nx", "mesh.generator.nx", spec.nx);
  spec.ny = get_int(*g, "ny", "mesh.generator.ny", spec.ny);
  spec.width = get_number(*g, "width", "mesh.generator.width", spec.width);
  spec.height = get_number(*g, "height", "mesh.generator.height", spec.height);
  if (spec.nx < 1) fail("mesh.generator.nx", "must be >= 1");
  if (spec.ny < 1) fail("mesh.generator.ny", "must be >= 1");
  if (!(spec.width > 0.0)) fail("mesh.generator.width", "must be positive");
  if (!(spec.height > 0.0)) fail("mesh.generator.height", "must be positive");
  if (const json* b = find(*g, "boundary")) {
    if (b->is_string()) {
      spec.sides.fill(parse_tag(*b, "mesh.generator.boundary"));
    } else if (b->is_object()) {
      static const char* names[4] = {"bottom", "right", "top", "left"};
      for (int s = 0; s < 4; ++s)
        if (const json* v = find(*b, names[s]))
          spec.sides[s] = parse_tag(*v, std::string("mesh.generator.boundary.") + names[s]);
    } else {
      fail("mesh.generator.boundary", "expected a tag or a per-side object");
    }
  }
  return spec;
}

DeformSpec parse_deformation(const json& j) {
  if (!j.is_object()) fail("deformation", "expected an object");
  DeformSpec spec;
  spec.kind = get_string(j, "kind", "deformation.kind", "");
  if (spec.kind == "analytic") {
    spec.name = get_string(j, "name", "deformation.name", "");
    if (spec.name != "dilation" && spec.name != "stretch_x" && spec.name != "shear")
      fail("deformation.name", "expected dilation, stretch_x or shear");
    spec.scale = get_number(j, "scale", "deformation.scale", 1.0);
  } else if (spec.kind == "nodal") {
    const json* v = find(j, "values");
    if (!v || !v->is_array()) fail("deformation.values", "expected an array of [wx, wy]");
    for (const auto& w : *v) {
      if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number())
        fail("deformation.values", "expected an array of [wx, wy]");
      spec.values.emplace_back(w[0].get<double>(), w[1].get<double>());
    }
  } else if (spec.kind != "identity") {
    fail("deformation.kind", "expected analytic, nodal or identity");
  }
  return spec;
}

std::vector<double> parse_grid(const json& g) {
  std::vector<double> ts;
  if (g.is_array()) {
    for (const auto& v : g) {
      if (!v.is_number()) fail("t_grid", "expected numbers");
      ts.push_back(v.get<double>());
    }
  } else if (g.is_object()) {
    const double a = get_number(g, "start", "t_grid.start", NAN);
    const double b = get_number(g, "stop", "t_grid.stop", NAN);
    const int n = get_int(g, "nodes", "t_grid.nodes", 0);
    if (!std::isfinite(a) || !std::isfinite(b)) fail("t_grid", "needs start and stop");
    if (n < 2) fail("t_grid.nodes", "must be >= 2");
    for (int i = 0; i < n; ++i) ts.push_back(i == n - 1 ? b : a + (b - a) * i / (n - 1));
  } else {
    fail("t_grid", "expected an array or {start, stop, nodes}");
  }
  for (std::size_t i = 1; i < ts.size(); ++i)
    if (!(ts[i] > ts[i - 1])) fail("t_grid", "must be strictly increasing");
  return ts;
}

Mesh build_mesh(const MeshSpec& spec) {
  if (!spec.file.empty()) {
    try {
      return load_mesh_file(spec.file);
    } catch (const ParseError& e) {
      fail("mesh.file", spec.file + ": " + e.what());
    } catch (const ValidationError& e) {
      fail("mesh.file", spec.file + ": " + e.what());
    }
  }
  const double w = spec.width, h = spec.height;
  const auto sides = spec.sides;
  // Side of an edge: both endpoints on the same rectangle side (exact grid coordinates).
  EdgeTagger tagger = [w, h, sides](const Vec2& a, const Vec2& b) {
    if (a.y() == 0.0 && b.y() == 0.0) return sides[0];
    if (a.x() == w && b.x() == w) return sides[1];
    if (a.y() == h && b.y() == h) return sides[2];
    return sides[3];
  };
  return generate_rect_mesh(spec.nx, spec.ny, w, h, tagger);
}

struct Problem {
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const DeformationFamily> family;
};

Problem build_problem(const RunConfig& config) {
  Problem p;
  p.mesh = std::make_shared<const Mesh>(build_mesh(config.mesh));
  const DeformSpec& d = config.deformation;
  if (d.kind == "identity") {
    p.family = std::make_shared<const DeformationFamily>(identity_family());
  } else if (d.kind == "analytic") {
    p.family = std::make_shared<const DeformationFamily>(
        affine_family(analytic_field(d.name, d.scale), *p.mesh));
  } else {
    if (static_cast<int>(d.values.size()) != p.mesh->num_vertices())
      fail("deformation.values", "has " + std::to_string(d.values.size()) +
                                     " entries, mesh has " +
                                     std::to_string(p.mesh->num_vertices()) + " vertices");
    auto field = std::make_shared<const NodalField>(p.mesh, d.values);
    p.family = std::make_shared<const DeformationFamily>(affine_family(field, *p.mesh));
  }
  return p;
}

void check_time(const Problem& p, double t, const std::string& field) {
  if (!p.family->contains(t)) {
    std::ostringstream os;
    os << "t = " << t << " outside the deformation's admissible range (" << -p.family->eps0()
       << ", " << p.family->eps0() << ")";
    fail(field, os.str());
  }
}

std::string out_path(const RunConfig& c, const std::string& name) {
  return (std::filesystem::path(c.output.dir) / name).string();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

NodeSample to_sample(const SensitivityReport& r) {
  return {r.eigenvalues, r.right_first, r.left_first, r.right_second, r.left_second};
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  if (!j.is_object()) fail("config", "expected a JSON object");
  RunConfig c;
  const json* version = find(j, "schema_version");
  if (!version) fail("schema_version", "missing");
  if (!version->is_number_integer() || version->get<int>() != kSchemaVersion)
    fail("schema_version", "unsupported (expected " + std::to_string(kSchemaVersion) + ")");
  if (const json* cmd = find(j, "command")) {
    if (!cmd->is_string()) fail("command", "expected a string");
    c.command = parse_command(cmd->get<std::string>());
  }
  const json* mesh = find(j, "mesh");
  if (!mesh) fail("mesh", "missing");
  c.mesh = parse_mesh(*mesh);
  if (const json* d = find(j, "deformation")) c.deformation = parse_deformation(*d);
  c.t = get_number(j, "t", "t", 0.0);
  if (!std::isfinite(c.t)) fail("t", "must be finite");
  if (const json* g = find(j, "t_grid")) c.t_grid = parse_grid(*g);
  c.k_max = get_int(j, "k_max", "k_max", c.k_max);
  if (c.k_max < 1) fail("k_max", "must be >= 1");
  if (const json* tol = find(j, "tolerances")) {
    if (!tol->is_object()) fail("tolerances", "expected an object");
    c.tolerances.cluster = get_number(*tol, "cluster", "tolerances.cluster", c.tolerances.cluster);
    c.tolerances.derivative =
        get_number(*tol, "derivative", "tolerances.derivative", c.tolerances.derivative);
    c.tolerances.residual = get_number(*tol, "residual", "tolerances.residual", c.tolerances.residual);
    c.oracle.h0 = get_number(*tol, "fd_h0", "tolerances.fd_h0", c.oracle.h0);
    c.oracle.first_tol = get_number(*tol, "oracle_first", "tolerances.oracle_first", c.oracle.first_tol);
    c.oracle.second_tol =
        get_number(*tol, "oracle_second", "tolerances.oracle_second", c.oracle.second_tol);
    if (!(c.tolerances.cluster > 0.0)) fail("tolerances.cluster", "must be positive");
    if (!(c.tolerances.derivative > 0.0)) fail("tolerances.derivative", "must be positive");
    if (!(c.tolerances.residual > 0.0)) fail("tolerances.residual", "must be positive");
    if (!(c.oracle.h0 > 0.0)) fail("tolerances.fd_h0", "must be positive");
  }
  if (const json* o = find(j, "output")) {
    if (!o->is_object()) fail("output", "expected an object");
    c.output.dir = get_string(*o, "dir", "output.dir", c.output.dir);
    c.output.report = get_string(*o, "report", "output.report", c.output.report);
    c.output.curves = get_string(*o, "curves", "output.curves", c.output.curves);
    c.output.rearranged = get_string(*o, "rearranged", "output.rearranged", c.output.rearranged);
    c.output.events = get_string(*o, "events", "output.events", c.output.events);
    c.output.oracle = get_string(*o, "oracle", "output.oracle", c.output.oracle);
  }
  if (const json* r = find(j, "refine_crossings")) {
    if (!r->is_boolean()) fail("refine_crossings", "expected true or false");
    c.refine_crossings = r->get<bool>();
  }
  if (c.command == Command::Sweep && c.t_grid.size() < 2)
    fail("t_grid", "sweep needs at least two nodes");
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("config", "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail("config", std::string("invalid JSON: ") + e.what());
  }
  return parse_run_config(j);
}

int worker_threads() {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const char* env = std::getenv("HADAMARD_EIG_THREADS");
  if (!env || !*env) return static_cast<int>(hw);
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 0) fail("HADAMARD_EIG_THREADS", "expected a non-negative integer");
  return v == 0 ? static_cast<int>(hw) : static_cast<int>(v);
}

int run_report(const RunConfig& config, std::ostream& out) {
  const Problem p = build_problem(config);
  check_time(p, config.t, "t");
  const SensitivityReport report =
      full_report(*p.mesh, *p.family, config.t, config.k_max, config.tolerances);
  const std::string path = out_path(config, config.output.report);
  write_file_atomic(path, report_to_json(report).dump(2) + "\n");
  out << "report: " << report.size() << " eigenvalues in " << report.clusters.size()
      << " clusters -> " << path << "\n";
  return 0;
}

int run_sweep(const RunConfig& config, std::ostream& out) {
  if (config.t_grid.size() < 2) fail("t_grid", "sweep needs at least two nodes");
  const Problem p = build_problem(config);
  for (double t : config.t_grid) check_time(p, t, "t_grid");
  const Tolerances tol = config.tolerances;
  const int k_max = config.k_max;
  NodeEvaluator eval = [&p, tol, k_max](double t) {
    return to_sample(full_report(*p.mesh, *p.family, t, k_max, tol));
  };
  CurveGrid grid = sample_grid(config.t_grid, eval, k_max, worker_threads());
  if (config.refine_crossings) grid = refine_crossings(grid, eval, tol.cluster, tol.derivative);
  const RearrangementPlan plan = transversal_rearrange(grid, tol.cluster, tol.derivative);
  const CurveGrid rearranged = apply_plan(grid, plan);

  std::ostringstream sorted_csv, rearranged_csv;
  write_curves_csv(sorted_csv, grid);
  write_curves_csv(rearranged_csv, rearranged);
  write_file_atomic(out_path(config, config.output.curves), sorted_csv.str());
  write_file_atomic(out_path(config, config.output.rearranged), rearranged_csv.str());
  write_file_atomic(out_path(config, config.output.events),
                    plan_to_json(plan, grid.ts).dump(2) + "\n");
  out << "sweep: " << grid.nodes() << " nodes, " << plan.events.size() << " swap events\n";
  return 0;
}

int run_oracle(const RunConfig& config, std::ostream& out) {
  const Problem p = build_problem(config);
  check_time(p, config.t, "t");
  const SensitivityReport report =
      full_report(*p.mesh, *p.family, config.t, config.k_max, config.tolerances);
  const int count = report.size();
  GevpOptions gevp;
  gevp.tol = config.tolerances.residual;
  EigenCurve curve = [&p, count, gevp](double s) -> Eigen::VectorXd {
    if (!p.family->contains(s))
      throw ConfigError("tolerances.fd_h0: finite-difference step leaves the admissible range");
    return solve_gevp(assemble_forms(*p.mesh, *p.family, s), count, gevp).values;
  };

  std::ostringstream csv;
  csv << "index,side,order,analytic,fd,fd_error,abs_diff,rel_diff,pass\n";
  int rows = 0, passed = 0;
  for (int j = 1; j <= config.k_max; ++j) {
    for (Side side : {Side::Right, Side::Left}) {
      const bool right = side == Side::Right;
      const double d1 = right ? report.right_first[j - 1] : report.left_first[j - 1];
      const double d2 = right ? report.right_second[j - 1] : report.left_second[j - 1];
      const FdEstimate f1 = fd_first_derivative(curve, config.t, j, config.oracle.h0, side);
      const FdEstimate f2 = fd_second_derivative(curve, config.t, j, d1, config.oracle.h0, side);
      for (int order = 1; order <= 2; ++order) {
        const double a = order == 1 ? d1 : d2;
        const FdEstimate& f = order == 1 ? f1 : f2;
        const double abs_diff = std::abs(a - f.value);
        const double rel_diff = abs_diff / std::max(1.0, std::abs(a));
        const bool ok = order == 1 ? rel_diff <= config.oracle.first_tol
                                   : rel_diff <= config.oracle.second_tol;
        csv << j << ',' << (right ? '+' : '-') << ',' << order << ',' << fmt(a) << ','
            << fmt(f.value) << ',' << fmt(f.error) << ',' << fmt(abs_diff) << ','
            << fmt(rel_diff) << ',' << (ok ? 1 : 0) << '\n';
        ++rows;
        passed += ok ? 1 : 0;
      }
    }
  }
  const std::string path = out_path(config, config.output.oracle);
  write_file_atomic(path, csv.str());
  out << "oracle: " << passed << "/" << rows << " rows pass -> " << path << "\n";
  return 0;
}

int run_command(Command command, const std::string& config_path, const std::string& out_dir,
                std::ostream& out, std::ostream& err) {
  try {
    json raw;
    {
      std::ifstream in(config_path);
      if (!in) fail("config", "cannot open " + config_path);
      try {
        raw = json::parse(in);
      } catch (const json::parse_error& e) {
        fail("config", std::string("invalid JSON: ") + e.what());
      }
    }
    if (raw.is_object() && !raw.contains("command")) raw["command"] = command_name(command);
    RunConfig config = parse_run_config(raw);
    if (config.command != command)
      fail("command", std::string("config is for \"") + command_name(config.command) +
                          "\", invoked as \"" + command_name(command) + "\"");
    if (!out_dir.empty()) config.output.dir = out_dir;
    switch (command) {
      case Command::Report: return run_report(config, out);
      case Command::Sweep: return run_sweep(config, out);
      case Command::Oracle: return run_oracle(config, out);
    }
    return 1;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    err << "input error: " << e.what() << "\n";
    return 2;
  } catch (const GridTooCoarse& e) {
    err << "numerical error: " << e.what() << " (nodes " << e.first_node() << " and "
        << e.second_node() << ")\n";
    return 3;
  } catch (const SingularDeformation& e) {
    err << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const FactorizationError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const ConvergenceError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const RankDeficient& e) {
    err << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace hadamard_eig
