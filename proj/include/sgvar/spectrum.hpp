#pragma once

#include <string>
#include <vector>

#include "sgvar/energy.hpp"
#include "sgvar/field.hpp"
#include "sgvar/measure.hpp"

namespace sgvar {

struct SpectrumResult {
  std::vector<double> eigenvalues;  // ascending, > 0
  std::vector<Field> eigenfields;   // orthonormal in the mass inner product
  std::vector<double> residuals;    // ||K u - lambda M u|| per pair
  int level = 0;
  std::string normalization;        // "variational" or "raw"
};

// k smallest eigenvalues of K u = lambda M u on interior unknowns with
// M = diag(w_x * (-a(x))): the discrete form of the weighted eigenproblem
// attached to the operator.  Requires a < 0 at every interior vertex.
// Dense solve below `dense_threshold` unknowns, shift-inverted iteration with
// deflation above.
SpectrumResult weighted_spectrum(const EnergyForm& e, const QuadratureWeights& w,
                                 const Field& a, int k, int dense_threshold = 2000);

// Full Dirichlet spectrum of the raw graph Laplacian D - A on interior
// vertices (no renormalization, no measure).
std::vector<double> raw_dirichlet_spectrum(const LevelGraph& g);

struct DecimationMatch {
  double fine_value = 0;     // eigenvalue at level m+1
  double mapped_value = 0;   // fine * (5 - fine)
  double mismatch = 0;       // distance to the closest coarse eigenvalue
  bool forbidden = false;
};

struct DecimationReport {
  int level_coarse = 0, level_fine = 0;
  std::vector<DecimationMatch> rows;
  int considered = 0, matched = 0, excluded = 0;
  double match_fraction = 0;
  double max_mismatch = 0;  // over non-forbidden rows
};

// For consecutive levels of the three-corner gasket, each raw eigenvalue nu
// at the finer level away from {2, 5, 6} must satisfy nu (5 - nu) being a
// coarse-level eigenvalue.
DecimationReport decimation_check(const LevelGraph& coarse, const LevelGraph& fine,
                                  double match_tol = 1e-9, double forbidden_tol = 1e-8);

}  // namespace sgvar
