#include "sgvar/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace sgvar {

std::string fmt17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

JsonWriter& JsonWriter::begin_object() {
  comma();
  out_ += '{';
  first_.push_back(true);
  return *this;
}

JsonWriter& JsonWriter::end_object() {
  out_ += '}';
  first_.pop_back();
  return *this;
}

JsonWriter& JsonWriter::begin_array() {
  comma();
  out_ += '[';
  first_.push_back(true);
  return *this;
}

JsonWriter& JsonWriter::end_array() {
  out_ += ']';
  first_.pop_back();
  return *this;
}

void JsonWriter::comma() {
  if (pending_key_) {
    pending_key_ = false;
    return;
  }
  if (first_.empty()) return;
  if (first_.back())
    first_.back() = false;
  else
    out_ += ',';
}

JsonWriter& JsonWriter::key(const std::string& k) {
  comma();
  out_ += '"';
  out_ += k;
  out_ += "\":";
  pending_key_ = true;
  return *this;
}

JsonWriter& JsonWriter::value(double v) {
  comma();
  if (std::isfinite(v))
    out_ += fmt17(v);
  else if (std::isnan(v))
    out_ += "\"nan\"";
  else
    out_ += v > 0 ? "\"inf\"" : "\"-inf\"";
  return *this;
}

JsonWriter& JsonWriter::value(std::int64_t v) {
  comma();
  out_ += std::to_string(v);
  return *this;
}

JsonWriter& JsonWriter::value(bool v) {
  comma();
  out_ += v ? "true" : "false";
  return *this;
}

JsonWriter& JsonWriter::value(const std::string& s) {
  comma();
  out_ += '"';
  for (char c : s) {
    switch (c) {
      case '"': out_ += "\\\""; break;
      case '\\': out_ += "\\\\"; break;
      case '\n': out_ += "\\n"; break;
      case '\t': out_ += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out_ += buf;
        } else {
          out_ += c;
        }
    }
  }
  out_ += '"';
  return *this;
}

std::string JsonWriter::take() {
  out_ += '\n';
  return std::move(out_);
}

std::string graph_to_json(const LevelGraph& g) {
  JsonWriter j;
  j.begin_object();
  j.key("schema").value("gasket-graph/1");
  j.key("N").value(g.ambient());
  j.key("m").value(g.level());
  j.key("vertices").begin_array();
  for (std::int64_t v = 0; v < g.vertex_count(); ++v) {
    j.begin_array();
    for (std::int64_t b : g.bary(static_cast<VertexId>(v))) j.value(b);
    j.end_array();
  }
  j.end_array();
  j.key("euclidean").begin_array();
  for (std::int64_t v = 0; v < g.vertex_count(); ++v) {
    j.begin_array();
    const Eigen::VectorXd x = g.euclidean(static_cast<VertexId>(v));
    for (Eigen::Index k = 0; k < x.size(); ++k) j.value(x[k]);
    j.end_array();
  }
  j.end_array();
  j.key("edges").begin_array();
  for (const Edge& e : g.edges()) {
    j.begin_array();
    j.value(static_cast<std::int64_t>(e.a));
    j.value(static_cast<std::int64_t>(e.b));
    j.end_array();
  }
  j.end_array();
  j.key("boundary").begin_array();
  for (VertexId v : g.boundary()) j.value(static_cast<std::int64_t>(v));
  j.end_array();
  j.key("cells").begin_array();
  for (const Cell& c : g.cells()) {
    j.begin_object();
    j.key("word").begin_array();
    for (std::uint8_t w : c.word) j.value(static_cast<std::int64_t>(w));
    j.end_array();
    j.key("members").begin_array();
    for (VertexId v : c.members) j.value(static_cast<std::int64_t>(v));
    j.end_array();
    j.end_object();
  }
  j.end_array();
  j.end_object();
  return j.take();
}

std::string weights_to_json(const QuadratureWeights& w) {
  JsonWriter j;
  j.begin_array();
  for (Eigen::Index i = 0; i < w.w.size(); ++i) j.value(w.w[i]);
  j.end_array();
  return j.take();
}

std::string stiffness_to_triplets(const EnergyForm& e) {
  std::string out;
  for (int col = 0; col < e.stiffness.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(e.stiffness, col); it; ++it) {
      out += std::to_string(it.row());
      out += ' ';
      out += std::to_string(it.col());
      out += ' ';
      out += fmt17(it.value());
      out += '\n';
    }
  return out;
}

std::string field_to_json(const Field& u) {
  JsonWriter j;
  j.begin_object();
  j.key("dirichlet").value(u.dirichlet);
  j.key("values").begin_array();
  for (Eigen::Index i = 0; i < u.values.size(); ++i) j.value(u.values[i]);
  j.end_array();
  j.end_object();
  return j.take();
}

namespace {

void emit_solve_body(JsonWriter& j, const SolveResult& r) {
  j.key("lambda").value(r.lambda);
  j.key("phi").value(r.phi_value);
  j.key("psi").value(r.psi_value);
  j.key("i_lambda").value(r.i_value);
  j.key("grad_norm").value(r.grad_norm);
  j.key("iterations").value(static_cast<std::int64_t>(r.iterations));
  j.key("converged").value(r.converged);
  j.key("strong_residual").value(r.residual);
  j.key("norm_u").value(r.norm_u);
  j.key("sup_u").value(r.sup_u);
  j.key("r").value(r.r);
  j.key("gamma_bar").value(r.gamma_bar);
  j.key("phi_max_iterate").value(r.phi_max_iterate);
  if (!r.note.empty()) j.key("note").value(r.note);
}

}  // namespace

std::string solve_to_json(const SolveResult& r, int N, int m) {
  JsonWriter j;
  j.begin_object();
  j.key("schema").value("solve/1");
  j.key("N").value(N);
  j.key("m").value(m);
  emit_solve_body(j, r);
  j.key("trace").begin_array();
  for (const auto& t : r.trace) {
    j.begin_array();
    j.value(t[0]);
    j.value(t[1]);
    j.end_array();
  }
  j.end_array();
  j.key("u").begin_array();
  for (Eigen::Index i = 0; i < r.u.values.size(); ++i) j.value(r.u.values[i]);
  j.end_array();
  j.end_object();
  return j.take();
}

std::string sweep_to_json(const SweepResult& r, int N, int m) {
  JsonWriter j;
  j.begin_object();
  j.key("schema").value("sweep/1");
  j.key("N").value(N);
  j.key("m").value(m);
  j.key("r").value(r.r);
  j.key("gamma_bar").value(r.gamma_bar);
  j.key("rows").begin_array();
  for (const SweepRow& row : r.rows) {
    j.begin_object();
    j.key("lambda").value(row.lambda);
    j.key("norm_u").value(row.norm_u);
    j.key("i_lambda").value(row.i_value);
    j.key("nontrivial").value(row.nontrivial);
    j.key("grad_norm").value(row.grad_norm);
    j.key("residual").value(row.residual);
    j.key("converged").value(row.converged);
    if (!row.error.empty()) j.key("error").value(row.error);
    j.end_object();
  }
  j.end_array();
  j.end_object();
  return j.take();
}

std::string sweep_to_csv(const SweepResult& r) {
  std::string out = "lambda,norm_u,I_lambda,nontrivial,grad_norm,residual\n";
  for (const SweepRow& row : r.rows) {
    out += fmt17(row.lambda);
    out += ',';
    out += fmt17(row.norm_u);
    out += ',';
    out += fmt17(row.i_value);
    out += ',';
    out += row.nontrivial ? '1' : '0';
    out += ',';
    out += fmt17(row.grad_norm);
    out += ',';
    out += fmt17(row.residual);
    out += '\n';
  }
  return out;
}

std::string lambda_star_to_json(const LambdaStarResult& r, int N, int m) {
  JsonWriter j;
  j.begin_object();
  j.key("schema").value("lambda-star/1");
  j.key("N").value(N);
  j.key("m").value(m);
  j.key("integral_g").value(r.integral_g);
  j.key("lambda_star").value(r.lambda_star);
  j.key("gamma_star").value(r.gamma_star);
  j.key("finite").value(r.finite);
  j.key("status").value(r.status);
  if (r.exp_envelope) {
    j.key("exp_envelope_bound").value(*r.exp_envelope);
    j.key("exp_envelope_gamma").value(2.0);
  }
  j.key("table").begin_array();
  for (const GammaRow& row : r.table) {
    j.begin_object();
    j.key("gamma").value(row.gamma);
    j.key("f_max").value(row.f_max);
    j.key("lambda_star").value(row.lambda_star);
    j.end_object();
  }
  j.end_array();
  j.end_object();
  return j.take();
}

std::string spectrum_to_json(const SpectrumResult& r, bool include_fields) {
  JsonWriter j;
  j.begin_object();
  j.key("schema").value("spectrum/1");
  j.key("m").value(r.level);
  j.key("normalization").value(r.normalization);
  j.key("eigenvalues").begin_array();
  for (double v : r.eigenvalues) j.value(v);
  j.end_array();
  j.key("residuals").begin_array();
  for (double v : r.residuals) j.value(v);
  j.end_array();
  if (include_fields) {
    j.key("eigenfields").begin_array();
    for (const Field& f : r.eigenfields) {
      j.begin_array();
      for (Eigen::Index i = 0; i < f.values.size(); ++i) j.value(f.values[i]);
      j.end_array();
    }
    j.end_array();
  }
  j.end_object();
  return j.take();
}

std::string decimation_to_json(const DecimationReport& r) {
  JsonWriter j;
  j.begin_object();
  j.key("schema").value("decimation/1");
  j.key("level_coarse").value(r.level_coarse);
  j.key("level_fine").value(r.level_fine);
  j.key("considered").value(r.considered);
  j.key("matched").value(r.matched);
  j.key("excluded").value(r.excluded);
  j.key("match_fraction").value(r.match_fraction);
  j.key("max_mismatch").value(r.max_mismatch);
  j.key("rows").begin_array();
  for (const DecimationMatch& row : r.rows) {
    j.begin_object();
    j.key("fine_value").value(row.fine_value);
    j.key("mapped_value").value(row.mapped_value);
    j.key("forbidden").value(row.forbidden);
    j.key("mismatch").value(row.mismatch);
    j.end_object();
  }
  j.end_array();
  j.end_object();
  return j.take();
}

std::string verify_to_json(const VerifyReport& r) {
  JsonWriter j;
  j.begin_object();
  j.key("schema").value("verify/1");
  j.key("N").value(r.config.ambient);
  j.key("m").value(r.config.level);
  j.key("seed").value(static_cast<std::int64_t>(r.config.seed));
  j.key("trials").value(r.config.trials);
  j.key("corrupt_energy_factor").value(r.config.corrupt_energy_factor);
  j.key("sigma").value(r.sigma);
  j.key("checks").begin_array();
  for (const CheckResult& c : r.checks) {
    j.begin_object();
    j.key("name").value(c.name);
    j.key("pass").value(c.pass);
    j.key("observed").value(c.observed);
    j.key("limit").value(c.limit);
    j.key("detail").value(c.detail);
    j.end_object();
  }
  j.end_array();
  j.key("all_pass").value(r.all_pass);
  j.end_object();
  return j.take();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

}  // namespace sgvar
