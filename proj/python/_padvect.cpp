#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "padvect/balance.hpp"
#include "padvect/config.hpp"
#include "padvect/errors.hpp"
#include "padvect/experiment.hpp"
#include "padvect/field.hpp"
#include "padvect/metrics.hpp"
#include "padvect/topology.hpp"

namespace py = pybind11;

namespace {

padv::LoadVector load_vector(padv::Load local, std::vector<padv::Load> neighbors) {
  return padv::LoadVector{local, std::move(neighbors)};
}

py::tuple decision_tuple(const padv::BalanceDecision& d) { return py::make_tuple(d.outgoing, d.retained); }

py::dict summary_dict(const padv::RunSummary& s) {
  py::dict d;
  d["config_hash"] = s.config_hash;
  d["node_count"] = s.node_count;
  d["grid"] = py::make_tuple(s.grid.x, s.grid.y, s.grid.z);
  d["scheduler"] = s.scheduler;
  d["total_time_s"] = s.total_time_s;
  d["lockstep_work"] = s.lockstep_work;
  d["total_steps"] = s.total_steps;
  d["rounds"] = s.rounds;
  d["seeds"] = s.seeds;
  d["terminated"] = s.terminated;
  d["exited"] = s.exited;
  d["lif_load"] = s.lif_load;
  d["lif_steps"] = s.lif_steps;
  d["config"] = s.config;
  return d;
}

}  // namespace

PYBIND11_MODULE(_padvect, m) {
  m.doc() = "Distributed particle advection simulator with diffusive load balancing";

  py::register_exception<padv::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<padv::InvariantViolation>(m, "InvariantViolation", PyExc_RuntimeError);
  py::register_exception<padv::RoundCapExceeded>(m, "RoundCapExceeded", PyExc_RuntimeError);
  py::register_exception<padv::DomainError>(m, "DomainError", PyExc_ValueError);

  m.def(
      "evaluate_field",
      [](const std::string& kind, std::array<double, 3> p, std::map<std::string, double> params) {
        padv::AnalyticField f = padv::make_field(padv::parse_field_kind(kind));
        for (const auto& [k, v] : params) f.parameters[k] = v;
        const padv::Vec3 v = padv::evaluate_field(f, {p[0], p[1], p[2]});
        return std::array<double, 3>{v.x, v.y, v.z};
      },
      py::arg("kind"), py::arg("point"), py::arg("parameters") = std::map<std::string, double>{},
      "Evaluate an analytic stand-in field (abc, jets, toroidal) at a point of the unit cube.");

  m.def(
      "most_cubic_grid", [](std::int64_t n) {
        const auto g = padv::most_cubic_grid(n);
        return py::make_tuple(g.dims.x, g.dims.y, g.dims.z);
      },
      py::arg("nodes"));

  m.def(
      "balance_none", [](padv::Load local, std::vector<padv::Load> n) {
        return decision_tuple(padv::balance_none(load_vector(local, std::move(n))));
      },
      py::arg("local"), py::arg("neighbors"), "Returns (outgoing, retained).");
  m.def(
      "balance_constant",
      [](padv::Load local, std::vector<padv::Load> n, int dimensions) {
        return decision_tuple(padv::balance_constant(load_vector(local, std::move(n)), {dimensions, std::nullopt}));
      },
      py::arg("local"), py::arg("neighbors"), py::arg("dimensions") = 3);
  m.def(
      "balance_lma", [](padv::Load local, std::vector<padv::Load> n) {
        return decision_tuple(padv::balance_lma(load_vector(local, std::move(n))));
      },
      py::arg("local"), py::arg("neighbors"));
  m.def(
      "quota_offer", [](padv::Load local, std::vector<padv::Load> n) {
        return padv::quota_offer(load_vector(local, std::move(n)));
      },
      py::arg("local"), py::arg("neighbors"));
  m.def(
      "balance_gllma",
      [](padv::Load local, std::vector<padv::Load> n, std::vector<padv::Load> granted) {
        return decision_tuple(padv::balance_gllma(load_vector(local, std::move(n)), granted));
      },
      py::arg("local"), py::arg("neighbors"), py::arg("granted_quotas"));

  m.def(
      "lif", [](std::vector<double> loads) { return padv::lif(std::span<const double>(loads)); }, py::arg("loads"),
      "max/mean of the loads, None when all are zero.");
  m.def("speedup", &padv::speedup, py::arg("times"));

  m.def(
      "run",
      [](std::map<std::string, std::string> settings, bool write_files) {
        const padv::RunConfig config = padv::make_config(settings);
        padv::RunOutputs out;
        {
          py::gil_scoped_release release;
          out = padv::run_experiment(config, write_files);
        }
        return summary_dict(out.summary);
      },
      py::arg("settings") = std::map<std::string, std::string>{}, py::arg("write_files") = false,
      "Run one configuration given as key/value settings and return its summary.");

  m.def(
      "compare", [](const std::vector<std::string>& paths) {
        std::vector<padv::RunSummary> loaded;
        for (const auto& p : paths) loaded.push_back(padv::read_summary(p));
        return padv::compare_table(loaded);
      },
      py::arg("summary_paths"), "Speedup table (CSV text) for summary.json files.");
}
