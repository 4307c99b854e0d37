#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "weakfactor/errors.hpp"
#include "weakfactor/hypothesis.hpp"
#include "weakfactor/inference.hpp"
#include "weakfactor/noise_cov.hpp"
#include "weakfactor/pca.hpp"
#include "weakfactor/sim.hpp"
#include "weakfactor/table.hpp"

namespace py = pybind11;
using namespace wf;

namespace {

py::list table_to_list(const Table& t) {
    py::list out;
    for (const auto& row : t.rows) {
        py::dict d;
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            std::visit([&](const auto& v) { d[py::str(t.columns[c])] = v; }, row[c]);
        }
        out.append(std::move(d));
    }
    return out;
}

ThresholdRule make_rule(const std::string& kind, double c, double eps_nt, double scad_a) {
    ThresholdRule rule;
    rule.kind = parse_threshold_kind(kind);
    rule.c = c;
    rule.eps_nt = eps_nt;
    rule.scad_a = scad_a;
    return rule;
}

Matrix sigma_for(const FactorFit& fit, const ThresholdRule& rule) {
    return thresholded_sigma(rule)(fit);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "PCA estimation and inference for weak latent factor models";

    static py::exception<DegenerateError> degenerate(m, "DegenerateError", PyExc_ArithmeticError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const DegenerateError& e) {
            py::set_error(degenerate, e.what());
        } catch (const ValidationError& e) {
            py::set_error(PyExc_ValueError, e.what());
        }
    });

    py::class_<ThresholdRule>(m, "ThresholdRule")
        .def(py::init(&make_rule), py::arg("kind") = "hard", py::arg("c") = 2.0, py::arg("eps_nt") = 0.0,
             py::arg("scad_a") = 3.7)
        .def_static("defaults", &ThresholdRule::defaults, py::arg("n_units"), py::arg("n_periods"))
        .def_property("kind", [](const ThresholdRule& r) { return to_string(r.kind); },
                      [](ThresholdRule& r, const std::string& k) { r.kind = parse_threshold_kind(k); })
        .def_readwrite("c", &ThresholdRule::c)
        .def_readwrite("eps_nt", &ThresholdRule::eps_nt)
        .def_readwrite("scad_a", &ThresholdRule::scad_a);

    py::class_<FactorFit>(m, "FactorFit")
        .def_readonly("f_hat", &FactorFit::f_hat)
        .def_readonly("b_hat", &FactorFit::b_hat)
        .def_readonly("residual", &FactorFit::residual)
        .def_property_readonly("singular_values", [](const FactorFit& f) { return f.svd.sigma; })
        .def_property_readonly("u_hat", [](const FactorFit& f) { return f.svd.u; })
        .def_property_readonly("v_hat", [](const FactorFit& f) { return f.svd.v; })
        .def_readonly("n_units", &FactorFit::n_units)
        .def_readonly("n_periods", &FactorFit::n_periods)
        .def_readonly("rank", &FactorFit::rank);

    m.def("fit_pca", py::overload_cast<const Matrix&, Index>(&fit_pca), py::arg("x"), py::arg("r"),
          "Rank-r PCA fit of an N x T panel.");
    m.def("default_eps_nt", &default_eps_nt, py::arg("n_units"), py::arg("n_periods"));
    m.def("pilot_cov", &pilot_cov, py::arg("residual"));
    m.def("adaptive_threshold", &adaptive_threshold, py::arg("pilot"), py::arg("rule"));
    m.def("noise_cov", &sigma_for, py::arg("fit"), py::arg("rule") = ThresholdRule{},
          "Thresholded residual covariance; eps_nt <= 0 selects the defaults.");

    py::class_<Interval>(m, "Interval")
        .def_readonly("lo", &Interval::lo)
        .def_readonly("hi", &Interval::hi)
        .def("contains", &Interval::contains);
    m.def("factor_cov", &factor_cov, py::arg("fit"), py::arg("sigma_tau"));
    m.def("loading_cov", &loading_cov, py::arg("fit"), py::arg("sigma_tau"), py::arg("i"));
    m.def("systemic_risk_ci", &systemic_risk_ci, py::arg("fit"), py::arg("sigma_tau"), py::arg("i"),
          py::arg("alpha") = 0.05);

    py::class_<TestReport>(m, "TestReport")
        .def_readonly("statistic", &TestReport::statistic)
        .def_readonly("df", &TestReport::df)
        .def_readonly("alpha", &TestReport::alpha)
        .def_readonly("critical", &TestReport::critical)
        .def_readonly("p_value", &TestReport::p_value)
        .def_readonly("reject", &TestReport::reject)
        .def_readonly("meta", &TestReport::meta)
        .def("__repr__", [](const TestReport& r) {
            return "TestReport(statistic=" + std::to_string(r.statistic) + ", df=" + std::to_string(r.df) +
                   ", p_value=" + std::to_string(r.p_value) + ", reject=" + (r.reject ? "True" : "False") + ")";
        });

    m.def(
        "factor_spec_test",
        [](const FactorFit& fit, const Matrix& sigma_tau, std::vector<Index> subset, const Vector& v,
           double alpha) {
            SubsetSpec s;
            s.indices = std::move(subset);
            return factor_spec_test(fit, sigma_tau, s, v, alpha);
        },
        py::arg("fit"), py::arg("sigma_tau"), py::arg("subset"), py::arg("v"), py::arg("alpha") = 0.05);
    m.def(
        "structural_break_test",
        [](const Matrix& x1, const Matrix& x2, Index r, Index i, double alpha, const ThresholdRule& rule) {
            return structural_break_test(x1, x2, r, thresholded_sigma(rule), i, alpha);
        },
        py::arg("x1"), py::arg("x2"), py::arg("r"), py::arg("i"), py::arg("alpha") = 0.05,
        py::arg("rule") = ThresholdRule{});
    m.def("two_sample_test", &two_sample_test, py::arg("fit"), py::arg("sigma_tau"), py::arg("i"), py::arg("j"),
          py::arg("alpha") = 0.05);

    py::class_<SimScenario>(m, "SimScenario")
        .def(py::init<>())
        .def_readwrite("n_units", &SimScenario::n_units)
        .def_readwrite("n_periods", &SimScenario::n_periods)
        .def_readwrite("r", &SimScenario::r)
        .def_readwrite("n_blocks", &SimScenario::n_blocks)
        .def_readwrite("block_size", &SimScenario::block_size)
        .def_readwrite("rho_lo", &SimScenario::rho_lo)
        .def_readwrite("rho_hi", &SimScenario::rho_hi)
        .def_readwrite("theta_target", &SimScenario::theta_target)
        .def_readwrite("trials", &SimScenario::trials)
        .def_readwrite("seed", &SimScenario::seed)
        .def_readwrite("duplicate_b2", &SimScenario::duplicate_b2)
        .def_readwrite("rule", &SimScenario::rule)
        .def("validate", &SimScenario::validate);
    m.def("perturbation_scenario", &perturbation_scenario);

    m.def(
        "run_coverage",
        [](const SimScenario& s, double alpha, unsigned workers) { return table_to_list(run_coverage(s, alpha, workers).to_table()); },
        py::arg("scenario"), py::arg("alpha") = 0.05, py::arg("workers") = 1);
    m.def(
        "run_factor_power",
        [](const SimScenario& s, double alpha, const std::vector<double>& deltas, unsigned workers) {
            return table_to_list(run_factor_power(s, alpha, deltas, workers).to_table());
        },
        py::arg("scenario"), py::arg("alpha") = 0.05, py::arg("deltas") = std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0},
        py::arg("workers") = 1);
    m.def(
        "run_break_power",
        [](const SimScenario& s, double alpha, const std::vector<double>& deltas, unsigned workers) {
            return table_to_list(run_break_power(s, alpha, deltas, workers).to_table());
        },
        py::arg("scenario"), py::arg("alpha") = 0.05, py::arg("deltas") = std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0},
        py::arg("workers") = 1);
    m.def(
        "run_twosample",
        [](const SimScenario& s, double alpha, const std::vector<std::pair<Index, Index>>& pairs, unsigned workers) {
            return table_to_list(run_twosample(s, alpha, pairs, workers).to_table());
        },
        py::arg("scenario"), py::arg("alpha") = 0.05, py::arg("pairs"), py::arg("workers") = 1);
    m.def(
        "run_perturbation",
        [](const SimScenario& s, const std::vector<double>& grid, unsigned workers) {
            return table_to_list(run_perturbation(s, grid, workers).to_table());
        },
        py::arg("scenario"), py::arg("theta_grid"), py::arg("workers") = 1);
}
