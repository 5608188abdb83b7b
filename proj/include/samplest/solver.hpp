#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "samplest/core.hpp"

namespace samplest {

/// Maximal set of raw outcomes indistinguishable to an estimator:
/// a sampled index set together with the observed values. Weighted
/// binary known-seed schemes are represented by their mapped classes.
struct OutcomeClass {
    std::vector<int> sampled;  // sorted
    DataVector values;         // parallel to sampled

    bool operator==(const OutcomeClass& other) const;
    bool operator<(const OutcomeClass& other) const;
    std::string label() const;  // 1-based, e.g. "S={1,2};v=(1,0)"
};

/// Estimation problem over an explicit finite domain.
struct FiniteProblem {
    std::vector<DataVector> domain;
    std::vector<double> f;  // target value per domain vector
    SamplingSpec scheme;

    void validate() const;
    /// Per-instance inclusion probabilities (for weighted binary
    /// schemes these are min{1, 1/tau_i*}).
    std::vector<double> effective_p() const;
};

struct ClassEnumeration {
    std::vector<OutcomeClass> classes;
    std::vector<double> prob;  // row-major [class][vector]

    double at(std::size_t c, std::size_t j) const { return prob[c * n_vectors + j]; }
    std::size_t n_vectors = 0;
};

ClassEnumeration enumerate_outcome_classes(const FiniteProblem& problem);

/// Processing order over the domain: explicit ranking, a score
/// function (smaller first, ties allowed), or an ordered partition
/// into batches of domain indices.
struct OrderSpec {
    enum class Kind { Total, Keyed, Partition };
    Kind kind = Kind::Total;
    std::vector<std::size_t> ranking;
    std::function<double(const DataVector&)> score;
    std::vector<std::vector<std::size_t>> batches;

    static OrderSpec total(std::vector<std::size_t> ranking);
    static OrderSpec keyed(std::function<double(const DataVector&)> score);
    static OrderSpec partition(std::vector<std::vector<std::size_t>> batches);
};

struct EstimatorTable {
    enum class Status { Ok, Failure, NegativityViolated };
    Status status = Status::Ok;
    std::vector<OutcomeClass> classes;
    std::vector<double> estimates;  // parallel to classes

    // Diagnostics: the vector (domain index) and class at fault, and
    // the offending value for NegativityViolated.
    std::ptrdiff_t offending_vector = -1;
    std::ptrdiff_t offending_class = -1;
    double offending_value = 0.0;
    double max_residual = 0.0;  // unbiasedness residual over the domain

    double estimate_of(const OutcomeClass& cls) const;
};

/// Sequential unbiased construction along the order: each vector's
/// newly determined classes share the value (f(v) - f_0)/PR[new | v].
/// Failure when PR[new | v] = 0 with f(v) != f_0; NegativityViolated
/// when the construction succeeds but assigns a negative estimate.
EstimatorTable solve_order(const FiniteProblem& problem, const OrderSpec& order);

/// Variance-minimal nonnegative variant: per vector, a small QP over
/// the newly determined classes subject to unbiasedness, nonnegative
/// estimates, and expectation caps for every succeeding vector.
EstimatorTable solve_order_nonneg(const FiniteProblem& problem, const OrderSpec& order);

/// Batch construction over an ordered partition: per batch, minimizes
/// the summed variance subject to per-vector unbiasedness, estimate
/// nonnegativity, and expectation caps for later batches. symmetric
/// additionally ties estimates across coordinate-permutation orbits.
EstimatorTable solve_partition(const FiniteProblem& problem, const OrderSpec& partition,
                               bool symmetric);

}  // namespace samplest
