#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>

#include "simlab/classifiers.hpp"
#include "simlab/datagen.hpp"
#include "simlab/errors.hpp"
#include "simlab/eval.hpp"
#include "simlab/harness.hpp"
#include "simlab/io.hpp"

namespace py = pybind11;
using namespace simlab;

namespace {

LabeledDataset dataset(const Matrix& x, const std::vector<int>& y) { return LabeledDataset(x, y); }

py::dict table_dict(const Table& t) {
  py::dict d;
  d["header"] = t.header;
  d["rows"] = t.rows;
  return d;
}

}  // namespace

PYBIND11_MODULE(_simlab, m) {
  m.doc() = "Sparse linear discriminant rules for imbalanced two-class data";

  static py::exception<Error> error(m, "SimlabError");
  static py::exception<ValidationError> validation(m, "ValidationError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      py::set_error(validation, e.what());
    } catch (const ParseError& e) {
      py::set_error(validation, e.what());
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::class_<GaussianModel>(m, "GaussianModel")
      .def_property_readonly("p", &GaussianModel::p)
      .def_property_readonly("mu1", &GaussianModel::mu1)
      .def_property_readonly("mu2", &GaussianModel::mu2)
      .def_property_readonly("beta", &GaussianModel::beta)
      .def_property_readonly("active_set",
                             [](const GaussianModel& g) { return g.active_set().indices(); })
      .def("covariance", [](const GaussianModel& g) { return build_cov(g.cov(), g.p()).matrix(); })
      .def("delta_squared", [](const GaussianModel& g) { return delta_p_squared(g); })
      .def("optimal_mcr", [](const GaussianModel& g) { return optimal_mcr(g); })
      .def(
          "sample",
          [](const GaussianModel& g, Index n1, Index n2, std::uint64_t seed) {
            Rng rng(seed);
            const LabeledDataset d = sample_dataset(g, n1, n2, rng);
            return py::make_tuple(d.x(), d.y());
          },
          py::arg("n1"), py::arg("n2"), py::arg("seed"),
          "n1 class-1 rows followed by n2 class-2 rows, as (X, y).");

  m.def(
      "make_setting",
      [](const std::string& id, Index p, bool literal) {
        SettingOptions o;
        o.literal_setting_ii = literal;
        return make_setting(parse_setting_id(id), p, o);
      },
      py::arg("setting"), py::arg("p"), py::arg("literal_setting_ii") = false);

  py::class_<LinearRule>(m, "LinearRule")
      .def(py::init([](const Vector& w, double b) { return LinearRule(w, b, RuleKind::zero); }),
           py::arg("weights"), py::arg("intercept"))
      .def_property_readonly("weights", &LinearRule::weights)
      .def_property_readonly("intercept", &LinearRule::intercept)
      .def_property_readonly("support", [](const LinearRule& r) { return r.support().indices(); })
      .def_property_readonly("method", [](const LinearRule& r) { return std::string(to_string(r.kind())); })
      .def("decision_function", &LinearRule::discriminants, py::arg("X"))
      .def(
          "predict",
          [](const LinearRule& r, const Matrix& x) {
            const Vector s = r.discriminants(x);
            std::vector<int> out(static_cast<std::size_t>(s.size()));
            for (Index i = 0; i < s.size(); ++i) out[static_cast<std::size_t>(i)] = s(i) < 0.0 ? 1 : 2;
            return out;
          },
          py::arg("X"))
      .def("__repr__", [](const LinearRule& r) {
        return "<LinearRule " + std::string(to_string(r.kind())) + ", " +
               std::to_string(r.support().size()) + " of " + std::to_string(r.dim()) + " features>";
      });

  m.def("bayes_rule", &bayes_rule, py::arg("model"));
  m.def("fit_lda", [](const Matrix& x, const std::vector<int>& y) { return fit_lda(dataset(x, y)); },
        py::arg("X"), py::arg("y"));
  m.def(
      "fit_hr", [](const Matrix& x, const std::vector<int>& y, double tau) { return fit_hr(dataset(x, y), tau); },
      py::arg("X"), py::arg("y"), py::arg("tau"));
  m.def(
      "fit_msplit_hr_diag",
      [](const Matrix& x, const std::vector<int>& y, double tau, int splits, bool correct,
         std::uint64_t seed) {
        MsplitOptions o;
        o.splits = splits;
        o.bias_correction = correct;
        o.keep_pieces = false;
        Rng rng(seed);
        return fit_msplit_hr_diag(dataset(x, y), tau, o, rng).rule;
      },
      py::arg("X"), py::arg("y"), py::arg("tau"), py::arg("splits") = 30,
      py::arg("bias_correction") = true, py::arg("seed") = 0);
  m.def(
      "fit_msplit_hr_general",
      [](const Matrix& x, const std::vector<int>& y, double tau, int splits, bool correct,
         std::uint64_t seed) {
        MsplitOptions o;
        o.splits = splits;
        o.bias_correction = correct;
        o.keep_pieces = false;
        Rng rng(seed);
        return fit_msplit_hr_general(dataset(x, y), tau, o, rng).rule;
      },
      py::arg("X"), py::arg("y"), py::arg("tau"), py::arg("splits") = 30,
      py::arg("bias_correction") = true, py::arg("seed") = 0);

  m.def(
      "fit",
      [](const Matrix& x, const std::vector<int>& y, const std::string& method,
         std::optional<double> tau, int splits, int cv_splits, std::uint64_t seed) {
        nlohmann::json spec = {{"name", method}, {"splits", splits}, {"cv_splits", cv_splits}};
        if (tau) spec["tau"] = *tau;
        const nlohmann::json cfg = {
            {"experiment", "custom-fit"}, {"seed", seed}, {"data", "-"}, {"methods", {spec}}};
        const FitOutcome f = fit_method(parse_config(cfg).methods.front(), dataset(x, y), seed);
        return py::make_tuple(f.rule, std::isnan(f.tau) ? py::object(py::none()) : py::float_(f.tau));
      },
      py::arg("X"), py::arg("y"), py::arg("method"), py::arg("tau") = py::none(),
      py::arg("splits") = 30, py::arg("cv_splits") = 10, py::arg("seed") = 0,
      "Tune (when tau is None) and fit; returns (rule, tau).");

  m.def(
      "theoretical_mcr",
      [](const LinearRule& r, const GaussianModel& g) {
        const ClassRates c = theoretical_mcr(r, g);
        return py::make_tuple(c.mcr1, c.mcr2);
      },
      py::arg("rule"), py::arg("model"));
  m.def(
      "empirical_mcr",
      [](const LinearRule& r, const Matrix& x, const std::vector<int>& y) {
        const ClassRates c = empirical_mcr(r, dataset(x, y));
        return py::make_tuple(c.mcr1, c.mcr2);
      },
      py::arg("rule"), py::arg("X"), py::arg("y"));
  m.def("normal_cdf", &normal_cdf, py::arg("x"));

  m.def(
      "run_experiment",
      [](const std::string& config_json, bool write) {
        const ExperimentConfig cfg = parse_config(nlohmann::json::parse(config_json));
        ExperimentResult res;
        {
          py::gil_scoped_release release;
          res = run_experiment(cfg);
          if (write) write_outputs(cfg, res);
        }
        py::dict out;
        for (const auto& t : res.tables) out[py::str(t.name)] = table_dict(t);
        return out;
      },
      py::arg("config_json"), py::arg("write_outputs") = false,
      "Run a JSON experiment config; returns {table name: {header, rows}}.");

  m.def(
      "model_to_json",
      [](const LinearRule& r, std::uint64_t seed) {
        ModelFile f;
        f.rule = r;
        f.seed = seed;
        f.provenance = "python";
        return model_to_json(f).dump();
      },
      py::arg("rule"), py::arg("seed") = 0);
  m.def(
      "model_from_json", [](const std::string& s) { return model_from_json(nlohmann::json::parse(s)).rule; },
      py::arg("text"));
}
