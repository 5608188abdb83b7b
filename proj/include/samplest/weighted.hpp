#pragma once

#include "samplest/core.hpp"
#include "samplest/oblivious.hpp"

namespace samplest {

/// Maps a weighted known-seed outcome on binary data to the equivalent
/// weight-oblivious outcome S': sampled entries carry value 1, entries
/// proven absent (u_i <= p_i) carry value 0, the rest stay unresolved.
/// Preserves the outcome probability and consistent set.
Outcome map_binary_outcome(const Outcome& outcome, const std::vector<double>& p);

/// OR estimators under weighted known-seed sampling of binary data,
/// evaluated through the outcome mapping.
double est_or_ws(const Outcome& outcome, const std::vector<double>& p, OrKind kind);

/// Same estimators from the explicit r=2 outcome tables; an independent
/// second path that must agree with est_or_ws.
double est_or_ws_table(const Outcome& outcome, double p1, double p2, OrKind kind);

/// Inverse-probability max estimator under weighted PPS sampling with
/// known seeds: positive exactly when the unsampled upper bounds cannot
/// exceed the maximum sampled value.
double est_max_ht_ws(const Outcome& outcome, const std::vector<double>& tau_star);

/// Determining vector of an r=2 weighted known-seed outcome for the
/// dense-first order.
DataVector phi_max_L_ws(const Outcome& outcome, const std::vector<double>& tau_star);

/// Dense-first max estimator under r=2 weighted PPS sampling with known
/// seeds (piecewise logarithmic in the determining vector).
double est_max_L_ws_r2(const Outcome& outcome, const std::vector<double>& tau_star);

/// Evaluate the r=2 weighted dense-first estimator directly on a
/// determining vector (entry order as in phi_max_L_ws).
double est_max_L_ws_from_phi(const DataVector& phi, const std::vector<double>& tau_star);

enum class WeightedMaxEstimator { Ht, L };

/// Variance of the weighted max estimators on data v. HT in closed
/// form; L by seed-square quadrature (flagged as numeric).
VarianceResult var_max_ws(const DataVector& v, const std::vector<double>& tau_star,
                          WeightedMaxEstimator estimator);

}  // namespace samplest
