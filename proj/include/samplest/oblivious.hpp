#pragma once

#include "samplest/core.hpp"

namespace samplest {

enum class FunctionTag { Max, Or, Min, Range };
enum class OrKind { Ht, L, U };

/// Coefficients of the uniform-p max estimator that prioritizes dense
/// vectors: alpha_i applied to the sorted determining vector, with
/// prefix sums A_h = sum_{i<=h} alpha_i.
struct CoefficientVector {
    std::vector<double> alpha;
    std::vector<double> prefix;
    double p = 0.0;
};

/// Inverse-probability estimate: f(v)/prod(p) when every entry is
/// sampled, 0 otherwise.
double est_ht(const Outcome& outcome, const std::vector<double>& p, FunctionTag f);

/// Dense-first max estimator, r=2, general probabilities.
double est_max_L_r2(const Outcome& outcome, double p1, double p2);

/// Coefficients for the dense-first max estimator with uniform p,
/// any r. O(r^2).
CoefficientVector coeff_max_L_uniform(int r, double p);

/// Apply the uniform-p dense-first max estimator to an outcome.
double est_max_L_uniform(const Outcome& outcome, const CoefficientVector& coeffs);

/// Prefix sums A_h of the dense-first estimator for general
/// probabilities, h in {r, r-1, r-2}. The permutation is the order of
/// the entries of p as passed.
double prefix_sum_general(const std::vector<double>& p, int h);

/// Dense-first max estimator for general p, r <= 3 (uniform p covers
/// any r via coeff_max_L_uniform).
double est_max_L_general(const Outcome& outcome, const std::vector<double>& p);

enum class MaxUVariant { Symmetric, Asymmetric };

/// Sparse-first max estimator, r=2.
double est_max_U_r2(const Outcome& outcome, double p1, double p2, MaxUVariant variant);

/// OR estimators over binary values. Kind L: r=2 general p closed form,
/// or any r with uniform p; kind U: r=2.
double est_or(const Outcome& outcome, const std::vector<double>& p, OrKind kind);

/// Determining vector of an oblivious outcome for the dense-first
/// order: unsampled entries filled with the maximum sampled value.
DataVector determining_vector_dense(const Outcome& outcome);

enum class VarEstimator { Ht, OrL, OrU, MaxLr2, MaxUr2 };

struct VarianceResult {
    double variance = 0.0;
    bool closed_form = true;  // false when obtained by enumeration
};

/// Variance of the named estimator on data v. Closed form where the
/// derivation gives one, exact 2^r enumeration otherwise.
VarianceResult var_closed_form(const DataVector& v, const std::vector<double>& p,
                               VarEstimator estimator);

}  // namespace samplest
