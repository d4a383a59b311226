//------------------------------------------------------------------------------
//
//   Copyright 2026 The fedcdc-market Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "fedcdc/distillation.hpp"
#include "fedcdc/errors.hpp"
#include "fedcdc/maxclique.hpp"
#include "fedcdc/nn.hpp"
#include "fedcdc/simulator.hpp"

namespace py = pybind11;
using namespace fedcdc;

namespace {

sim::ScenarioConfig parse_config(std::string const &text)
{
  nlohmann::json j;
  try
  {
    j = nlohmann::json::parse(text);
  }
  catch (nlohmann::json::parse_error const &e)
  {
    throw ParseError(std::string("config is not valid JSON: ") + e.what(), e.byte);
  }
  return sim::config_from_json(j);
}

mwc::WeightedGraph make_graph(std::vector<mwc::Weight> weights,
                              std::vector<std::pair<std::size_t, std::size_t>> const &edges)
{
  mwc::WeightedGraph g(std::move(weights));
  for (auto const &[u, v] : edges)
  {
    g.add_edge(u, v);
  }
  return g;
}

std::vector<LabelMask> full_masks(std::vector<std::vector<double>> const &logits)
{
  std::vector<LabelMask> masks;
  for (auto const &z : logits)
  {
    masks.emplace_back(z.size(), true);
  }
  return masks;
}

}  // namespace

PYBIND11_MODULE(_fedcdc, m)
{
  m.doc() = "Federated data market simulator core";

  // ConfigError and ShapeError derive from ValueError on the Python side.
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  py::class_<sim::RoundRecord>(m, "RoundRecord")
      .def_readonly("round", &sim::RoundRecord::round)
      .def_readonly("dc", &sim::RoundRecord::dc)
      .def_readonly("val_acc", &sim::RoundRecord::val_acc)
      .def_readonly("test_acc", &sim::RoundRecord::test_acc)
      .def_readonly("best_test_acc", &sim::RoundRecord::best_test_acc)
      .def_readonly("best_round", &sim::RoundRecord::best_round)
      .def_readonly("recruited", &sim::RoundRecord::recruited);

  py::class_<sim::AllianceRecord>(m, "AllianceRecord")
      .def_readonly("round", &sim::AllianceRecord::round)
      .def_readonly("uid", &sim::AllianceRecord::uid)
      .def_readonly("synthetic_id", &sim::AllianceRecord::synthetic_id)
      .def_readonly("participants", &sim::AllianceRecord::participants)
      .def_readonly("shared_labels", &sim::AllianceRecord::shared_labels)
      .def_readonly("model_labels", &sim::AllianceRecord::model_labels)
      .def_readonly("contested", &sim::AllianceRecord::contested)
      .def_readonly("value", &sim::AllianceRecord::value)
      .def_readonly("payments", &sim::AllianceRecord::payments)
      .def_readonly("budget", &sim::AllianceRecord::budget)
      .def_readonly("final_val_acc", &sim::AllianceRecord::final_val_acc);

  py::class_<sim::Event>(m, "Event")
      .def_readonly("round", &sim::Event::round)
      .def_readonly("kind", &sim::Event::kind)
      .def_readonly("detail", &sim::Event::detail);

  py::class_<sim::MetricsTrace>(m, "MetricsTrace")
      .def_property_readonly("scenario",
                             [](sim::MetricsTrace const &t) { return sim::to_string(t.scenario); })
      .def_readonly("seed", &sim::MetricsTrace::seed)
      .def_readonly("rounds", &sim::MetricsTrace::rounds)
      .def_readonly("consumers", &sim::MetricsTrace::consumers)
      .def_readonly("rows", &sim::MetricsTrace::rows)
      .def_readonly("alliances", &sim::MetricsTrace::alliances)
      .def_readonly("events", &sim::MetricsTrace::events)
      .def("mean_accuracy", &sim::MetricsTrace::mean_accuracy, py::arg("round"))
      .def("final_mean_accuracy", &sim::MetricsTrace::final_mean_accuracy)
      .def(
          "emit", [](sim::MetricsTrace const &t, std::filesystem::path const &out) {
            sim::emit_metrics(t, out);
          },
          py::arg("out_dir"), "Write accuracy.csv, alliances.json and summary.json.");

  m.def(
      "default_config_json", [] { return nlohmann::json(sim::default_config()).dump(); },
      "Default scenario configuration as a JSON string.");
  m.def(
      "normalize_config", [](std::string const &text) {
        return nlohmann::json(parse_config(text)).dump();
      },
      py::arg("config_json"), "Fill defaults and validate key names; returns JSON.");
  m.def(
      "run_scenario",
      [](std::string const &text) {
        auto const cfg = parse_config(text);
        py::gil_scoped_release release;
        return sim::run_scenario(cfg);
      },
      py::arg("config_json"));
  m.def(
      "compare_scenarios",
      [](std::string const &text) {
        auto const cfg = parse_config(text);
        sim::CompareReport report;
        {
          py::gil_scoped_release release;
          report = sim::compare_scenarios(cfg);
        }
        py::dict acc;
        for (auto const &[s, a] : report.final_accuracy)
        {
          acc[py::str(sim::to_string(s))] = a;
        }
        py::dict out;
        out["seed"]           = report.seed;
        out["final_accuracy"] = acc;
        out["recovered_gap"]  = report.gap_ratio;
        out["table"]          = report.table();
        return out;
      },
      py::arg("config_json"));
  m.def("recovered_gap", &sim::recovered_gap, py::arg("fedcdc"), py::arg("restricted"),
        py::arg("unrestricted"));

  m.def(
      "max_weight_clique",
      [](std::vector<mwc::Weight> weights,
         std::vector<std::pair<std::size_t, std::size_t>> const &edges, bool exhaustive) {
        auto const g = make_graph(std::move(weights), edges);
        auto const c = exhaustive ? mwc::brute_force(g) : mwc::solve(g);
        return py::make_tuple(c.nodes, c.weight);
      },
      py::arg("weights"), py::arg("edges"), py::arg("exhaustive") = false,
      "Returns (nodes, weight) of a maximum-weight clique.");
  m.def(
      "read_dimacs",
      [](std::string const &text) {
        std::istringstream in(text);
        auto const         g = mwc::read_dimacs(in);
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        for (std::size_t u = 0; u < g.size(); ++u)
        {
          for (std::size_t v = u + 1; v < g.size(); ++v)
          {
            if (g.adjacent(u, v))
            {
              edges.emplace_back(u, v);
            }
          }
        }
        return py::make_tuple(g.weights(), edges);
      },
      py::arg("text"), "Parses a weighted DIMACS graph into (weights, edges), 0-based.");

  m.def(
      "teacher_weights",
      [](std::vector<std::vector<double>> const &logits,
         std::optional<std::vector<LabelMask>> masks) {
        auto const m_ = masks ? *masks : full_masks(logits);
        return distill::teacher_weights(logits, m_);
      },
      py::arg("logits"), py::arg("masks") = py::none());
  m.def(
      "distill_loss",
      [](std::vector<double> const &student, std::vector<std::vector<double>> const &teachers,
         double alpha) {
        LabelMask const mask(student.size(), true);
        auto const      t = distill::distill_loss(student, mask, teachers, full_masks(teachers), alpha);
        return py::make_tuple(t.soft, t.hard, t.total);
      },
      py::arg("student_logits"), py::arg("teacher_logits"), py::arg("alpha"),
      "Returns (soft, hard, total) for one sample with every class active.");
  m.def(
      "kl_div",
      [](std::vector<double> const &p, std::vector<double> const &q) { return nn::kl_div(p, q); },
      py::arg("p"), py::arg("q"));
}
