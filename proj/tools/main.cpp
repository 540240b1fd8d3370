// sgvar: build gasket approximations, verify the form identities, compute the
// solvability threshold, minimize the energy functional, sweep the coupling,
// and solve the attached eigenproblems.  Emits JSON/CSV for plotting.
//
// Exit codes: 0 success, 1 failed checks or non-convergence, 2 configuration
// error, 3 resource cap.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sgvar/energy.hpp"
#include "sgvar/errors.hpp"
#include "sgvar/gasket.hpp"
#include "sgvar/io.hpp"
#include "sgvar/measure.hpp"
#include "sgvar/problem.hpp"
#include "sgvar/solver.hpp"
#include "sgvar/spectrum.hpp"
#include "sgvar/verify.hpp"

namespace {

using nlohmann::json;

struct Options {
  std::optional<int> N, m, eigen_count, gamma_steps, trials;
  std::optional<std::string> a, g, f, F, fprime, out, lambda_grid;
  std::optional<std::string> weights_out, stiffness_out;
  std::optional<double> lambda, gamma_max, gamma_bar, tol, corrupt;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> max_vertices;
  std::optional<long> max_iters;
  bool allow_nonconverged = false;
  bool raw = false;
  bool decimation = false;
  bool no_warm_start = false;
  bool no_newton = false;
  std::string config_path;
};

// Command-line flags win over config-file entries, which win over defaults.
template <typename T>
T pick(const std::optional<T>& flag, const json& cfg, const char* key, T fallback) {
  if (flag) return *flag;
  if (cfg.contains(key)) return cfg.at(key).get<T>();
  return fallback;
}

template <typename T>
std::optional<T> pick_opt(const std::optional<T>& flag, const json& cfg, const char* key) {
  if (flag) return flag;
  if (cfg.contains(key)) return cfg.at(key).get<T>();
  return std::nullopt;
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw sgvar::ConfigError("cannot read config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw sgvar::ConfigError("config file '" + path + "': " + e.what());
  }
}

std::vector<double> parse_lambda_grid(const std::string& text) {
  std::vector<double> grid;
  const auto colon1 = text.find(':');
  if (colon1 != std::string::npos && text.find(':', colon1 + 1) != std::string::npos) {
    // "start:stop:count" inclusive linear grid
    const auto colon2 = text.find(':', colon1 + 1);
    const double start = std::stod(text.substr(0, colon1));
    const double stop = std::stod(text.substr(colon1 + 1, colon2 - colon1 - 1));
    const int count = std::stoi(text.substr(colon2 + 1));
    if (count < 1) throw sgvar::ConfigError("lambda grid count must be >= 1");
    for (int i = 0; i < count; ++i)
      grid.push_back(count == 1 ? start : start + (stop - start) * i / (count - 1));
    return grid;
  }
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto comma = text.find(',', pos);
    const std::string item =
        text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!item.empty()) grid.push_back(std::stod(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (grid.empty()) throw sgvar::ConfigError("empty lambda grid");
  return grid;
}

struct Resolved {
  int N = 3, m = 4;
  std::string a = "-1", g = "-1", f = "exp(u)";
  std::optional<std::string> F, fprime;
  double lambda = 1e-3;
  double gamma_max = 8.0;
  int gamma_steps = 256;
  std::optional<double> gamma_bar;
  double tol = 1e-9;
  long max_iters = 50000;
  std::uint64_t seed = 42;
  int trials = 200;
  std::int64_t max_vertices = sgvar::kDefaultVertexCap;
  std::string out;
  double corrupt = 1.0;
};

Resolved resolve(const Options& o, const json& cfg) {
  Resolved r;
  r.N = pick(o.N, cfg, "N", 3);
  r.m = pick(o.m, cfg, "m", 4);
  r.a = pick(o.a, cfg, "a", std::string("-1"));
  r.g = pick(o.g, cfg, "g", std::string("-1"));
  r.f = pick(o.f, cfg, "f", std::string("exp(u)"));
  r.F = pick_opt(o.F, cfg, "F");
  r.fprime = pick_opt(o.fprime, cfg, "fprime");
  r.lambda = pick(o.lambda, cfg, "lambda", 1e-3);
  r.gamma_max = pick(o.gamma_max, cfg, "gamma-max", 8.0);
  r.gamma_steps = pick(o.gamma_steps, cfg, "gamma-steps", 256);
  if (auto gb = pick_opt(o.gamma_bar, cfg, "gamma-bar")) r.gamma_bar = gb;
  r.tol = pick(o.tol, cfg, "tol", 1e-9);
  r.max_iters = pick(o.max_iters, cfg, "max-iters", 50000L);
  r.seed = pick(o.seed, cfg, "seed", std::uint64_t{42});
  r.trials = pick(o.trials, cfg, "trials", 200);
  r.max_vertices = pick(o.max_vertices, cfg, "max-vertices", sgvar::kDefaultVertexCap);
  r.out = pick(o.out, cfg, "out", std::string());
  r.corrupt = pick(o.corrupt, cfg, "corrupt-energy-factor", 1.0);
  if (r.N < 2) throw sgvar::ConfigError("--N must be >= 2");
  if (r.m < 0) throw sgvar::ConfigError("--m must be >= 0");
  if (r.lambda < 0) throw sgvar::ConfigError("--lambda must be >= 0");
  return r;
}

void emit(const std::string& path, const std::string& content) {
  if (!path.empty()) sgvar::write_text_file(path, content);
}

// Defaults chosen so `sgvar lambda-star|solve|sweep` with no coefficient
// flags runs the exponential model problem a=-1, g=-1, f=exp(u).
struct Instance {
  sgvar::LevelGraph graph;
  sgvar::QuadratureWeights weights;
  sgvar::EnergyForm form;
};

Instance make_instance(const Resolved& r) {
  Instance inst{sgvar::build_gasket(r.N, r.m, r.max_vertices), {}, {}};
  inst.weights = sgvar::vertex_weights(inst.graph);
  inst.form = sgvar::make_energy_form(inst.graph, r.corrupt);
  return inst;
}

// gamma_bar defaults to the argmax of the lambda_star table: the most
// permissive certified sublevel set.
double choose_gamma_bar(const Resolved& r, const sgvar::BoundProblem& p,
                        const Instance& inst, sgvar::LambdaStarResult* table_out) {
  sgvar::LambdaStarResult ls = sgvar::lambda_star(
      p, inst.form, inst.weights, sgvar::default_gamma_grid(r.gamma_max, r.gamma_steps));
  if (table_out) *table_out = ls;
  if (r.gamma_bar) return *r.gamma_bar;
  return ls.gamma_star;
}

int cmd_build(const Resolved& r, const json& cfg, const Options& o) {
  Instance inst = make_instance(r);
  std::printf("vertices=%lld edges=%lld cells=%lld\n",
              static_cast<long long>(inst.graph.vertex_count()),
              static_cast<long long>(inst.graph.edge_count()),
              static_cast<long long>(inst.graph.cell_count()));
  emit(r.out, sgvar::graph_to_json(inst.graph));
  if (auto wpath = pick_opt(o.weights_out, cfg, "weights-out"))
    emit(*wpath, sgvar::weights_to_json(inst.weights));
  if (auto spath = pick_opt(o.stiffness_out, cfg, "stiffness-out"))
    emit(*spath, sgvar::stiffness_to_triplets(inst.form));
  return 0;
}

int cmd_verify(const Resolved& r) {
  sgvar::VerifyConfig vc;
  vc.ambient = r.N;
  vc.level = r.m;
  vc.seed = r.seed;
  vc.trials = r.trials;
  vc.corrupt_energy_factor = r.corrupt;
  const sgvar::VerifyReport rep = sgvar::run_verify(vc);
  std::printf("sigma=%s\n", sgvar::fmt17(rep.sigma).c_str());
  for (const sgvar::CheckResult& c : rep.checks)
    std::printf("%-24s %s\n", c.name.c_str(), c.pass ? "pass" : "FAIL");
  emit(r.out, sgvar::verify_to_json(rep));
  std::printf("%s\n", rep.all_pass ? "all checks passed" : "some checks FAILED");
  return rep.all_pass ? 0 : 1;
}

int cmd_lambda_star(const Resolved& r) {
  Instance inst = make_instance(r);
  sgvar::ProblemSpec spec =
      sgvar::parse_problem(r.N, r.m, r.a, r.g, r.f, r.F, r.fprime, std::max(r.lambda, 0.0));
  sgvar::BoundProblem p(spec, inst.graph, inst.weights);
  const sgvar::LambdaStarResult ls = sgvar::lambda_star(
      p, inst.form, inst.weights, sgvar::default_gamma_grid(r.gamma_max, r.gamma_steps));
  if (ls.finite)
    std::printf("lambda_star=%s at gamma=%s\n", sgvar::fmt17(ls.lambda_star).c_str(),
                sgvar::fmt17(ls.gamma_star).c_str());
  else
    std::printf("lambda_star=+inf (%s)\n", ls.status.c_str());
  if (ls.exp_envelope)
    std::printf("exp_envelope_bound=%s at gamma=2 (uses F(xi) <= e^xi)\n",
                sgvar::fmt17(*ls.exp_envelope).c_str());
  emit(r.out, sgvar::lambda_star_to_json(ls, r.N, r.m));
  return 0;
}

int solve_common(const Resolved& r, const Options& o, bool sweep_mode) {
  Instance inst = make_instance(r);
  sgvar::ProblemSpec spec =
      sgvar::parse_problem(r.N, r.m, r.a, r.g, r.f, r.F, r.fprime, r.lambda);
  sgvar::BoundProblem p(spec, inst.graph, inst.weights);

  sgvar::LambdaStarResult table;
  const double gamma_bar = choose_gamma_bar(r, p, inst, &table);
  const double c = p.embedding_constant();
  const double rr = gamma_bar * gamma_bar / (2.0 * c * c);
  double lambda_at_gamma_bar = std::numeric_limits<double>::infinity();
  for (const sgvar::GammaRow& row : table.table)
    if (std::abs(row.gamma - gamma_bar) < 1e-12) lambda_at_gamma_bar = row.lambda_star;

  sgvar::SolveOptions opts;
  opts.grad_tol = r.tol;
  opts.max_iters = r.max_iters;
  opts.newton_polish = !o.no_newton;

  if (!sweep_mode) {
    if (std::isfinite(lambda_at_gamma_bar) && r.lambda >= lambda_at_gamma_bar)
      std::fprintf(stderr,
                   "warning: lambda=%s is not below the certified threshold %s for "
                   "gamma_bar=%s\n",
                   sgvar::fmt17(r.lambda).c_str(), sgvar::fmt17(lambda_at_gamma_bar).c_str(),
                   sgvar::fmt17(gamma_bar).c_str());
    sgvar::SolveResult res =
        sgvar::minimize_restricted(p, inst.form, inst.weights, rr, r.lambda, opts);
    res.gamma_bar = gamma_bar;
    std::printf("lambda=%s norm_u=%s I_lambda=%s residual=%s converged=%s\n",
                sgvar::fmt17(res.lambda).c_str(), sgvar::fmt17(res.norm_u).c_str(),
                sgvar::fmt17(res.i_value).c_str(), sgvar::fmt17(res.residual).c_str(),
                res.converged ? "yes" : "no");
    emit(r.out, sgvar::solve_to_json(res, r.N, r.m));
    if (!res.converged && !o.allow_nonconverged) return 1;
    return 0;
  }

  if (!o.lambda_grid) throw sgvar::ConfigError("sweep needs --lambda-grid");
  const std::vector<double> grid = parse_lambda_grid(*o.lambda_grid);
  if (std::isfinite(lambda_at_gamma_bar))
    for (double lam : grid)
      if (lam >= lambda_at_gamma_bar)
        std::fprintf(stderr,
                     "warning: sweep point %s is not below the certified threshold %s\n",
                     sgvar::fmt17(lam).c_str(), sgvar::fmt17(lambda_at_gamma_bar).c_str());
  const sgvar::SweepResult sw = sgvar::sweep(p, inst.form, inst.weights, grid, rr, gamma_bar,
                                             opts, !o.no_warm_start);
  bool all_ok = true;
  for (const sgvar::SweepRow& row : sw.rows) {
    all_ok = all_ok && row.converged;
    std::printf("lambda=%s norm_u=%s I_lambda=%s residual=%s converged=%s\n",
                sgvar::fmt17(row.lambda).c_str(), sgvar::fmt17(row.norm_u).c_str(),
                sgvar::fmt17(row.i_value).c_str(), sgvar::fmt17(row.residual).c_str(),
                row.converged ? "yes" : "no");
  }
  if (!r.out.empty()) {
    sgvar::write_text_file(r.out + ".json", sgvar::sweep_to_json(sw, r.N, r.m));
    sgvar::write_text_file(r.out + ".csv", sgvar::sweep_to_csv(sw));
  }
  if (!all_ok && !o.allow_nonconverged) return 1;
  return 0;
}

int cmd_eigen(const Resolved& r, const Options& o) {
  Instance inst = make_instance(r);
  if (o.decimation) {
    const sgvar::LevelGraph fine = sgvar::build_gasket(r.N, r.m + 1, r.max_vertices);
    const sgvar::DecimationReport rep = sgvar::decimation_check(inst.graph, fine);
    std::printf("decimation match_fraction=%s considered=%d excluded=%d max_mismatch=%s\n",
                sgvar::fmt17(rep.match_fraction).c_str(), rep.considered, rep.excluded,
                sgvar::fmt17(rep.max_mismatch).c_str());
    emit(r.out, sgvar::decimation_to_json(rep));
    return rep.match_fraction == 1.0 ? 0 : 1;
  }
  if (o.raw) {
    const std::vector<double> vals = sgvar::raw_dirichlet_spectrum(inst.graph);
    sgvar::SpectrumResult res;
    res.level = r.m;
    res.normalization = "raw";
    const int k = std::min<int>(o.eigen_count.value_or(6), static_cast<int>(vals.size()));
    res.eigenvalues.assign(vals.begin(), vals.begin() + k);
    res.residuals.assign(k, 0.0);
    if (!vals.empty())
      std::printf("lambda_1=%s count=%d normalization=raw\n", sgvar::fmt17(vals[0]).c_str(), k);
    emit(r.out, sgvar::spectrum_to_json(res, false));
    return 0;
  }
  sgvar::Expr a_expr = sgvar::Expr::parse(r.a, r.N - 1, false);
  sgvar::Field a{sgvar::sample_on_vertices(a_expr, inst.graph), false};
  const sgvar::SpectrumResult res =
      sgvar::weighted_spectrum(inst.form, inst.weights, a, o.eigen_count.value_or(6));
  std::printf("lambda_1=%s count=%zu normalization=variational\n",
              sgvar::fmt17(res.eigenvalues.empty() ? 0.0 : res.eigenvalues[0]).c_str(),
              res.eigenvalues.size());
  emit(r.out, sgvar::spectrum_to_json(res));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variational toolkit for graded Sierpinski gasket approximations"};
  app.require_subcommand(1);

  Options o;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--N", o.N, "number of simplex corners (>= 2)");
    cmd->add_option("--m", o.m, "approximation level (>= 0)");
    cmd->add_option("--a", o.a, "coefficient a(x), nonpositive under (h1)");
    cmd->add_option("--g", o.g, "coefficient g(x), nonpositive under (h2)");
    cmd->add_option("--f", o.f, "nonlinearity f(u)");
    cmd->add_option("--F", o.F, "closed-form antiderivative of f, F(0) = 0");
    cmd->add_option("--fprime", o.fprime, "derivative of f (else central differences)");
    cmd->add_option("--lambda", o.lambda, "coupling parameter");
    cmd->add_option("--lambda-grid", o.lambda_grid, "sweep grid: 'a:b:n' or comma list");
    cmd->add_option("--gamma-max", o.gamma_max, "largest gamma in the threshold table");
    cmd->add_option("--gamma-steps", o.gamma_steps, "gamma table resolution");
    cmd->add_option("--gamma-bar", o.gamma_bar, "override the certified box size");
    cmd->add_option("--seed", o.seed, "seed for randomized checks");
    cmd->add_option("--tol", o.tol, "solver gradient tolerance");
    cmd->add_option("--max-iters", o.max_iters, "iteration cap for the minimizer");
    cmd->add_option("--max-vertices", o.max_vertices, "resource cap on vertex count");
    cmd->add_option("--out", o.out, "output path (sweep writes <out>.json and <out>.csv)");
    cmd->add_option("--config", o.config_path, "JSON config merged under the flags");
    return cmd;
  };

  CLI::App* build = add_common(app.add_subcommand("build", "construct a level graph"));
  build->add_option("--weights-out", o.weights_out, "write quadrature weights (JSON array)");
  build->add_option("--stiffness-out", o.stiffness_out,
                    "write the stiffness matrix as 'row col value' triplets");
  CLI::App* verify = add_common(app.add_subcommand("verify", "run the invariant suites"));
  verify->add_option("--trials", o.trials, "random fields per suite");
  verify->add_option("--corrupt-energy-factor", o.corrupt,
                     "fault injection: scale the renormalization base");
  CLI::App* lstar =
      add_common(app.add_subcommand("lambda-star", "solvability threshold table"));
  CLI::App* solve = add_common(app.add_subcommand("solve", "restricted minimization"));
  solve->add_flag("--allow-nonconverged", o.allow_nonconverged,
                  "exit 0 even when not converged");
  solve->add_flag("--no-newton", o.no_newton, "skip the Newton polish");
  CLI::App* sweep_cmd = add_common(app.add_subcommand("sweep", "solve across a lambda grid"));
  sweep_cmd->add_flag("--allow-nonconverged", o.allow_nonconverged,
                      "exit 0 even when some points fail");
  sweep_cmd->add_flag("--no-warm-start", o.no_warm_start, "independent solves per point");
  sweep_cmd->add_flag("--no-newton", o.no_newton, "skip the Newton polish");
  CLI::App* eigen = add_common(app.add_subcommand("eigen", "weighted eigenproblem"));
  eigen->add_option("-k,--count", o.eigen_count, "number of eigenvalues");
  eigen->add_flag("--raw", o.raw, "raw graph-Laplacian normalization");
  eigen->add_flag("--decimation-check", o.decimation,
                  "compare raw spectra at levels m and m+1 (N = 3)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    const json cfg = load_config(o.config_path);
    const Resolved r = resolve(o, cfg);
    if (build->parsed()) return cmd_build(r, cfg, o);
    if (verify->parsed()) return cmd_verify(r);
    if (lstar->parsed()) return cmd_lambda_star(r);
    if (solve->parsed()) return solve_common(r, o, false);
    if (sweep_cmd->parsed()) return solve_common(r, o, true);
    if (eigen->parsed()) return cmd_eigen(r, o);
    std::fprintf(stderr, "no subcommand selected\n");
    return 2;
  } catch (const sgvar::ResourceLimitError& e) {
    std::fprintf(stderr, "resource cap: %s\n", e.what());
    return 3;
  } catch (const sgvar::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const sgvar::DomainError& e) {
    std::fprintf(stderr, "expression domain error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
