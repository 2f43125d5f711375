#include "hadamard_eig/report_io.hpp"

#include "hadamard_eig/errors.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace hadamard_eig {

namespace {

nlohmann::json vec(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

nlohmann::json mat(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec(m.row(i).transpose()));
  return rows;
}

Eigen::MatrixXd mat_from(const nlohmann::json& j, const char* name) {
  if (!j.is_array() || j.empty()) throw ValidationError(std::string("pencil: ") + name + " must be a non-empty array of rows");
  const auto n = j.size();
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!j[i].is_array() || j[i].size() != n)
      throw ValidationError(std::string("pencil: ") + name + " is not square");
    for (std::size_t c = 0; c < n; ++c) {
      if (!j[i][c].is_number()) throw ValidationError(std::string("pencil: ") + name + " has a non-numeric entry");
      m(i, c) = j[i][c].get<double>();
    }
  }
  return m;
}

}  // namespace

nlohmann::json report_to_json(const SensitivityReport& report) {
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto& c : report.clusters) {
    nlohmann::json subs = nlohmann::json::array();
    for (const auto& s : c.second)
      subs.push_back({{"l", s.l}, {"r", s.r}, {"lambda_prime", s.lambda_prime}, {"sigma", vec(s.sigma)}});
    clusters.push_back({{"k", c.first.cluster.k},
                        {"m", c.first.cluster.m},
                        {"lambda", c.first.cluster.lambda},
                        {"nu", vec(c.first.nu)},
                        {"subclusters", subs}});
  }
  return {{"t", report.t},
          {"eigenvalues", vec(report.eigenvalues)},
          {"clusters", clusters},
          {"tolerances",
           {{"cluster", report.tolerances.cluster},
            {"derivative", report.tolerances.derivative},
            {"residual", report.tolerances.residual}}}};
}

nlohmann::json plan_to_json(const RearrangementPlan& plan, const std::vector<double>& ts) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : plan.events) {
    nlohmann::json ev = {{"node", e.node}, {"k", e.k}, {"n", e.n}, {"p", e.p}};
    if (e.node >= 0 && e.node < static_cast<int>(ts.size())) ev["t"] = ts[e.node];
    events.push_back(ev);
  }
  return {{"branches", plan.branches}, {"events", events}, {"interval_perms", plan.interval_perms}};
}

nlohmann::json pencil_to_json(const PencilFamily& p) {
  nlohmann::json plan = nlohmann::json::array();
  for (const auto& pe : p.plan)
    plan.push_back({{"value", pe.value}, {"multiplicity", pe.multiplicity}, {"slopes", pe.slopes}});
  return {{"dimension", p.dim()},
          {"seed", p.seed},
          {"plan", plan},
          {"t_range", {p.t_min, p.t_max}},
          {"A0", mat(p.A0)}, {"A1", mat(p.A1)}, {"A2", mat(p.A2)},
          {"B0", mat(p.B0)}, {"B1", mat(p.B1)}, {"B2", mat(p.B2)}};
}

PencilFamily pencil_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("pencil: expected a JSON object");
  PencilFamily p;
  try {
    p.A0 = mat_from(j.at("A0"), "A0");
    p.A1 = mat_from(j.at("A1"), "A1");
    p.A2 = mat_from(j.at("A2"), "A2");
    p.B0 = mat_from(j.at("B0"), "B0");
    p.B1 = mat_from(j.at("B1"), "B1");
    p.B2 = mat_from(j.at("B2"), "B2");
    p.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("t_range")) {
      const auto& r = j.at("t_range");
      p.t_min = r.at(0).get<double>();
      p.t_max = r.at(1).get<double>();
    }
    if (j.contains("plan"))
      for (const auto& e : j.at("plan")) {
        PlantedEigenvalue pe;
        pe.value = e.at("value").get<double>();
        pe.multiplicity = e.at("multiplicity").get<int>();
        pe.slopes = e.value("slopes", std::vector<double>{});
        p.plan.push_back(pe);
      }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("pencil: ") + e.what());
  }
  validate_pencil(p);
  return p;
}

void write_file_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  fs::rename(tmp, target);
}

}  // namespace hadamard_eig
