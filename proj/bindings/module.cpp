#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sgvar/energy.hpp"
#include "sgvar/expr.hpp"
#include "sgvar/gasket.hpp"
#include "sgvar/io.hpp"
#include "sgvar/measure.hpp"
#include "sgvar/problem.hpp"
#include "sgvar/solver.hpp"
#include "sgvar/spectrum.hpp"
#include "sgvar/verify.hpp"

namespace py = pybind11;
using namespace sgvar;

namespace {

Expr parse_expr(const std::string& text, int max_x_var, bool allow_u) {
  return Expr::parse(text, max_x_var, allow_u);
}

double eval_expr(const Expr& e, const py::dict& bindings) {
  std::vector<double> x;
  std::optional<double> u;
  for (auto item : bindings) {
    const std::string key = py::cast<std::string>(item.first);
    const double value = py::cast<double>(item.second);
    if (key == "u") {
      u = value;
    } else if (key.size() >= 2 && key[0] == 'x') {
      const int idx = std::stoi(key.substr(1));
      if (static_cast<int>(x.size()) < idx) x.resize(idx, 0.0);
      x[idx - 1] = value;
    } else {
      throw ConfigError("unknown binding '" + key + "'");
    }
  }
  return e.eval({x, u});
}

LipschitzFn lipschitz_from_python(py::function fn, double constant, const std::string& name) {
  return LipschitzFn{[fn](double t) { return py::cast<double>(fn(t)); }, constant, name};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "graded Sierpinski gasket approximations, renormalized energy forms, and the "
            "restricted variational solver";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<ResourceLimitError>(m, "ResourceLimitError");
  py::register_exception<DomainError>(m, "ExprDomainError");
  py::register_exception<NumericalError>(m, "NumericalError");

  py::class_<Cell>(m, "Cell")
      .def_property_readonly("word",
                             [](const Cell& c) {
                               std::vector<int> w(c.word.begin(), c.word.end());
                               return w;
                             })
      .def_readonly("members", &Cell::members);

  py::class_<LevelGraph>(m, "LevelGraph")
      .def_property_readonly("N", &LevelGraph::ambient)
      .def_property_readonly("m", &LevelGraph::level)
      .def_property_readonly("vertex_count", &LevelGraph::vertex_count)
      .def_property_readonly("edge_count", &LevelGraph::edge_count)
      .def_property_readonly("cell_count", &LevelGraph::cell_count)
      .def("bary",
           [](const LevelGraph& g, VertexId v) {
             auto b = g.bary(v);
             return std::vector<std::int64_t>(b.begin(), b.end());
           })
      .def("euclidean", &LevelGraph::euclidean)
      .def("distance", &LevelGraph::distance)
      .def_property_readonly("edges",
                             [](const LevelGraph& g) {
                               std::vector<std::pair<int, int>> out;
                               for (const Edge& e : g.edges()) out.emplace_back(e.a, e.b);
                               return out;
                             })
      .def_property_readonly("boundary",
                             [](const LevelGraph& g) { return g.boundary(); })
      .def_property_readonly("cells", [](const LevelGraph& g) { return g.cells(); })
      .def("neighbors",
           [](const LevelGraph& g, VertexId v) {
             auto n = g.neighbors(v);
             return std::vector<VertexId>(n.begin(), n.end());
           })
      .def("is_boundary", &LevelGraph::is_boundary)
      .def("to_json", &graph_to_json);

  m.def("build_gasket", &build_gasket, py::arg("N"), py::arg("m"),
        py::arg("max_vertices") = kDefaultVertexCap);

  py::class_<Refinement>(m, "Refinement")
      .def_readonly("graph", &Refinement::graph)
      .def_readonly("old_to_new", &Refinement::old_to_new);
  m.def("refine", &refine, py::arg("graph"), py::arg("max_vertices") = kDefaultVertexCap);
  m.def("cell_members", [](const LevelGraph& g, const std::vector<int>& word) {
    std::vector<std::uint8_t> w(word.begin(), word.end());
    return cell_members(g, w);
  });
  m.def("simplex_corners", &simplex_corners);

  py::class_<QuadratureWeights>(m, "QuadratureWeights")
      .def_property_readonly("weights", [](const QuadratureWeights& q) { return q.w; })
      .def_readonly("denominator", &QuadratureWeights::denom);
  m.def("vertex_weights", &vertex_weights);

  py::class_<Field>(m, "Field")
      .def(py::init([](Eigen::VectorXd values, bool dirichlet) {
             return Field{std::move(values), dirichlet};
           }),
           py::arg("values"), py::arg("dirichlet") = false)
      .def_readwrite("values", &Field::values)
      .def_readwrite("dirichlet", &Field::dirichlet)
      .def("sup_norm", &Field::sup_norm);
  m.def("zero_field", &zero_field, py::arg("graph"), py::arg("dirichlet") = true);

  m.def("integrate", &integrate);

  py::class_<EnergyForm>(m, "EnergyForm")
      .def_readonly("factor", &EnergyForm::factor)
      .def_property_readonly("stiffness", [](const EnergyForm& e) { return e.stiffness; });
  m.def("make_energy_form", &make_energy_form, py::arg("graph"),
        py::arg("corrupt_base") = 1.0, py::keep_alive<0, 1>());

  m.def("energy", &energy);
  m.def("energy_inner", &energy_inner);
  m.def("graph_laplacian", &graph_laplacian);
  m.def("standard_laplacian", &standard_laplacian);
  m.def("harmonic_extension", &harmonic_extension);
  m.def("holder_exponent", &holder_exponent);

  py::class_<HolderReport>(m, "HolderReport")
      .def_readonly("quotient", &HolderReport::quotient)
      .def_readonly("bound", &HolderReport::bound)
      .def_readonly("ok", &HolderReport::ok)
      .def_readonly("sup_norm", &HolderReport::sup_norm)
      .def_readonly("sup_bound", &HolderReport::sup_bound)
      .def_readonly("sup_ok", &HolderReport::sup_ok);
  m.def("holder_check", &holder_check);

  py::class_<LipschitzFn>(m, "LipschitzFn")
      .def(py::init(&lipschitz_from_python), py::arg("fn"), py::arg("constant"),
           py::arg("name") = "custom")
      .def_readonly("constant", &LipschitzFn::constant)
      .def_readonly("name", &LipschitzFn::name);
  m.def("lipschitz_identity", &lipschitz_identity);
  m.def("lipschitz_unit_truncation", &lipschitz_unit_truncation);
  m.def("lipschitz_scale", &lipschitz_scale);
  m.def("lipschitz_clamp", &lipschitz_clamp);
  m.def("truncate",
        static_cast<Field (*)(const Field&, const LipschitzFn&)>(&sgvar::truncate));
  m.def("starred_norm", &starred_norm, py::arg("form"), py::arg("weights"), py::arg("u"),
        py::arg("a"), py::arg("require_nonpositive") = true);

  py::class_<Expr>(m, "Expr")
      .def_static("parse", &parse_expr, py::arg("text"), py::arg("max_x_var") = -1,
                  py::arg("allow_u") = true)
      .def("eval", &eval_expr)
      .def("__call__", [](const Expr& e, double u) { return e(u); })
      .def("__str__", &Expr::str)
      .def("depends_on_u", &Expr::depends_on_u)
      .def("constant_value", &Expr::constant_value)
      .def("is_exp_of_u", &Expr::is_exp_of_u);
  m.def("antiderivative", &antiderivative, py::arg("f"), py::arg("xi"),
        py::arg("tol") = 1e-12);
  m.def("sample_on_vertices", &sample_on_vertices);

  py::class_<ProblemSpec>(m, "ProblemSpec")
      .def_readonly("lambda_", &ProblemSpec::lambda)
      .def_readonly("N", &ProblemSpec::ambient)
      .def_readonly("m", &ProblemSpec::level);
  m.def("parse_problem", &parse_problem, py::arg("N"), py::arg("m"), py::arg("a"),
        py::arg("g"), py::arg("f"), py::arg("F") = std::nullopt,
        py::arg("fprime") = std::nullopt, py::arg("lambda_") = 0.0);

  py::class_<BoundProblem>(m, "BoundProblem")
      .def(py::init<ProblemSpec, const LevelGraph&, const QuadratureWeights&>(),
           py::keep_alive<1, 3>(), py::keep_alive<1, 4>())
      .def_property_readonly("a_values", &BoundProblem::a_values)
      .def_property_readonly("g_values", &BoundProblem::g_values)
      .def_property_readonly("integral_g", &BoundProblem::integral_g)
      .def_property_readonly("f_at_zero", &BoundProblem::f_at_zero)
      .def("f", &BoundProblem::f)
      .def("f_prime", &BoundProblem::f_prime)
      .def("F", &BoundProblem::F)
      .def_property_readonly("embedding_constant", &BoundProblem::embedding_constant);

  m.def("phi", &phi);
  m.def("psi", &psi);
  m.def("i_lambda", &i_lambda);
  m.def("gradient", &gradient);
  m.def("strong_residual", &strong_residual);

  py::class_<GammaRow>(m, "GammaRow")
      .def_readonly("gamma", &GammaRow::gamma)
      .def_readonly("f_max", &GammaRow::f_max)
      .def_readonly("lambda_star", &GammaRow::lambda_star);
  py::class_<LambdaStarResult>(m, "LambdaStarResult")
      .def_readonly("table", &LambdaStarResult::table)
      .def_readonly("lambda_star", &LambdaStarResult::lambda_star)
      .def_readonly("gamma_star", &LambdaStarResult::gamma_star)
      .def_readonly("finite", &LambdaStarResult::finite)
      .def_readonly("status", &LambdaStarResult::status)
      .def_readonly("integral_g", &LambdaStarResult::integral_g)
      .def_readonly("exp_envelope", &LambdaStarResult::exp_envelope);
  m.def("lambda_star", &lambda_star, py::arg("problem"), py::arg("form"), py::arg("weights"),
        py::arg("gamma_grid"), py::arg("f_samples") = 10000);
  m.def("default_gamma_grid", &default_gamma_grid, py::arg("gamma_max") = 8.0,
        py::arg("steps") = 256);

  py::class_<SolveOptions>(m, "SolveOptions")
      .def(py::init<>())
      .def_readwrite("grad_tol", &SolveOptions::grad_tol)
      .def_readwrite("newton_tol", &SolveOptions::newton_tol)
      .def_readwrite("max_iters", &SolveOptions::max_iters)
      .def_readwrite("newton_polish", &SolveOptions::newton_polish)
      .def_readwrite("keep_trace", &SolveOptions::keep_trace);
  py::class_<SolveResult>(m, "SolveResult")
      .def_readonly("u", &SolveResult::u)
      .def_readonly("lambda_", &SolveResult::lambda)
      .def_readonly("phi", &SolveResult::phi_value)
      .def_readonly("psi", &SolveResult::psi_value)
      .def_readonly("i_lambda", &SolveResult::i_value)
      .def_readonly("grad_norm", &SolveResult::grad_norm)
      .def_readonly("iterations", &SolveResult::iterations)
      .def_readonly("converged", &SolveResult::converged)
      .def_readonly("strong_residual", &SolveResult::residual)
      .def_readonly("norm_u", &SolveResult::norm_u)
      .def_readonly("sup_u", &SolveResult::sup_u)
      .def_readonly("r", &SolveResult::r)
      .def_readonly("phi_max_iterate", &SolveResult::phi_max_iterate)
      .def_readonly("note", &SolveResult::note);
  m.def("minimize_restricted", &minimize_restricted, py::arg("problem"), py::arg("form"),
        py::arg("weights"), py::arg("r"), py::arg("lambda_"),
        py::arg("options") = SolveOptions{});
  m.def("newton_refine", &newton_refine, py::arg("problem"), py::arg("form"),
        py::arg("weights"), py::arg("u0"), py::arg("lambda_"),
        py::arg("r") = std::numeric_limits<double>::infinity(),
        py::arg("options") = SolveOptions{});

  py::class_<SweepRow>(m, "SweepRow")
      .def_readonly("lambda_", &SweepRow::lambda)
      .def_readonly("norm_u", &SweepRow::norm_u)
      .def_readonly("i_lambda", &SweepRow::i_value)
      .def_readonly("nontrivial", &SweepRow::nontrivial)
      .def_readonly("grad_norm", &SweepRow::grad_norm)
      .def_readonly("residual", &SweepRow::residual)
      .def_readonly("converged", &SweepRow::converged);
  py::class_<SweepResult>(m, "SweepResult")
      .def_readonly("rows", &SweepResult::rows)
      .def_readonly("r", &SweepResult::r)
      .def_readonly("gamma_bar", &SweepResult::gamma_bar);
  m.def("sweep", &sweep, py::arg("problem"), py::arg("form"), py::arg("weights"),
        py::arg("lambdas"), py::arg("r"), py::arg("gamma_bar"),
        py::arg("options") = SolveOptions{}, py::arg("warm_start") = true);

  py::class_<SpectrumResult>(m, "SpectrumResult")
      .def_readonly("eigenvalues", &SpectrumResult::eigenvalues)
      .def_readonly("eigenfields", &SpectrumResult::eigenfields)
      .def_readonly("residuals", &SpectrumResult::residuals)
      .def_readonly("level", &SpectrumResult::level)
      .def_readonly("normalization", &SpectrumResult::normalization);
  m.def("weighted_spectrum", &weighted_spectrum, py::arg("form"), py::arg("weights"),
        py::arg("a"), py::arg("k"), py::arg("dense_threshold") = 2000);
  m.def("raw_dirichlet_spectrum", &raw_dirichlet_spectrum);

  py::class_<DecimationReport>(m, "DecimationReport")
      .def_readonly("match_fraction", &DecimationReport::match_fraction)
      .def_readonly("considered", &DecimationReport::considered)
      .def_readonly("matched", &DecimationReport::matched)
      .def_readonly("excluded", &DecimationReport::excluded)
      .def_readonly("max_mismatch", &DecimationReport::max_mismatch);
  m.def("decimation_check", &decimation_check, py::arg("coarse"), py::arg("fine"),
        py::arg("match_tol") = 1e-9, py::arg("forbidden_tol") = 1e-8);

  py::class_<CheckResult>(m, "CheckResult")
      .def_readonly("name", &CheckResult::name)
      .def_readonly("pass_", &CheckResult::pass)
      .def_readonly("observed", &CheckResult::observed)
      .def_readonly("limit", &CheckResult::limit);
  py::class_<VerifyReport>(m, "VerifyReport")
      .def_readonly("sigma", &VerifyReport::sigma)
      .def_readonly("checks", &VerifyReport::checks)
      .def_readonly("all_pass", &VerifyReport::all_pass);
  m.def(
      "run_verify",
      [](int N, int m, std::uint64_t seed, int trials, double corrupt) {
        return run_verify({N, m, seed, trials, corrupt});
      },
      py::arg("N") = 3, py::arg("m") = 4, py::arg("seed") = 42, py::arg("trials") = 200,
      py::arg("corrupt_energy_factor") = 1.0);
}
