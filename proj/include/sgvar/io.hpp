#pragma once

#include <string>
#include <vector>

#include "sgvar/gasket.hpp"
#include "sgvar/measure.hpp"
#include "sgvar/solver.hpp"
#include "sgvar/spectrum.hpp"
#include "sgvar/verify.hpp"

namespace sgvar {

// Deterministic JSON writer: insertion-ordered keys, floats printed with 17
// significant digits, '\n'-terminated documents.  Identical inputs give
// byte-identical output.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(const std::string& k);
  JsonWriter& value(double v);            // non-finite values become strings
  JsonWriter& value(std::int64_t v);
  JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
  JsonWriter& value(bool v);
  JsonWriter& value(const std::string& s);
  JsonWriter& value(const char* s) { return value(std::string(s)); }

  std::string take();

 private:
  void comma();
  std::string out_;
  std::vector<bool> first_;  // per nesting level
  bool pending_key_ = false;
};

std::string fmt17(double v);

std::string graph_to_json(const LevelGraph& g);
std::string weights_to_json(const QuadratureWeights& w);
std::string stiffness_to_triplets(const EnergyForm& e);  // "row col value" lines
std::string field_to_json(const Field& u);
std::string solve_to_json(const SolveResult& r, int N, int m);
std::string sweep_to_json(const SweepResult& r, int N, int m);
std::string sweep_to_csv(const SweepResult& r);
std::string lambda_star_to_json(const LambdaStarResult& r, int N, int m);
std::string spectrum_to_json(const SpectrumResult& r, bool include_fields = true);
std::string decimation_to_json(const DecimationReport& r);
std::string verify_to_json(const VerifyReport& r);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace sgvar
