#pragma once

#include <cstdint>
#include <functional>

#include "samplest/core.hpp"

namespace samplest {

using EstimatorFn = std::function<double(const Outcome&)>;

struct MomentReport {
    enum class Method { Exact, Quadrature, MonteCarlo };
    double mean = 0.0;
    double variance = 0.0;
    Method method = Method::Exact;
    double tolerance = 0.0;   // quadrature
    long trials = 0;          // Monte Carlo
    double stderr_mean = 0.0; // Monte Carlo
};

/// Exact mean/variance by full enumeration. Oblivious: all 2^r
/// inclusion patterns. Weighted PPS on binary data: the 2^r seed cells
/// u_i <= p_i / u_i > p_i (the estimator must be constant per cell;
/// all discrete-scheme estimators here are). Continuous-valued
/// weighted data is rejected ("use quadrature").
MomentReport exact_moments(const EstimatorFn& estimator, const SamplingSpec& spec,
                           const DataVector& v);

/// Mean/variance of an estimator under r=2 weighted PPS sampling with
/// known seeds, by region-split adaptive Gauss-Legendre quadrature over
/// the seed square.
MomentReport quad_moments(const EstimatorFn& estimator, const std::vector<double>& tau_star,
                          const DataVector& v, double tol);

/// Monte Carlo moments with hash-derived seeds; reproducible per salt.
MomentReport mc_moments(const EstimatorFn& estimator, const SamplingSpec& spec,
                        const DataVector& v, long trials, std::uint64_t salt);

struct DominanceReport {
    /// Grid indices where VAR[A] > VAR[B] + tol.
    std::vector<std::size_t> violations;
    bool dominated() const { return violations.empty(); }
};

/// Checks VAR[A] <= VAR[B] + tol pointwise over the grid (exact
/// enumeration per point).
DominanceReport check_dominance(const EstimatorFn& est_a, const EstimatorFn& est_b,
                                const SamplingSpec& spec, const std::vector<DataVector>& grid,
                                double tol = 1e-12);

struct MonotoneViolation {
    Outcome more_informative;
    Outcome less_informative;
    double est_more = 0.0;
    double est_less = 0.0;
};

struct MonotoneReport {
    std::vector<MonotoneViolation> violations;
    bool monotone() const { return violations.empty(); }
};

/// Enumerates outcome pairs consistent with v under an oblivious scheme
/// and flags est(S) < est(S') - tol whenever V*(S) is contained in
/// V*(S').
MonotoneReport check_monotone(const EstimatorFn& estimator, const SamplingSpec& spec,
                              const DataVector& v, double tol = 1e-12);

}  // namespace samplest
