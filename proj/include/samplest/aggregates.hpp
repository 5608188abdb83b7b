#pragma once

#include <functional>
#include <map>
#include <string>

#include "samplest/oracle.hpp"
#include "samplest/sampling.hpp"
#include "samplest/weighted.hpp"

namespace samplest {

/// Category of a key sampled in at least one of two binary instances.
/// F1q / Fq1: present in one sample, the other unresolved. F11: in
/// both. F10 / F01: present in one, provably absent from the other.
enum class KeyCategory { F1q, Fq1, F11, F10, F01 };

enum class AggKind { Ht, L };

using Selection = std::function<bool(const std::string&)>;

struct AggregateReport {
    double estimate = 0.0;
    double predicted_variance = 0.0;
    AggKind kind = AggKind::Ht;
    std::string selection;
    std::map<KeyCategory, long> key_counts;
};

/// Classify keys sampled in either instance. Seeds for the absent side
/// are recomputed from (instance salt, key); absence with u < p proves
/// the value is 0.
std::map<std::string, KeyCategory> classify_keys(const KeyedSample& s1, const KeyedSample& s2,
                                                 double p1, double p2);

/// Distinct count (union size) over the selected keys from the
/// category counts. Predicted variance uses plug-in estimates of the
/// union size and Jaccard coefficient.
AggregateReport est_distinct(const std::map<std::string, KeyCategory>& categories,
                             const Selection& selection, double p1, double p2, AggKind kind);

/// Variance of the distinct-count estimate for true union size D and
/// Jaccard coefficient J.
double predict_distinct_variance(double D, double J, double p1, double p2, AggKind kind);

/// Smallest uniform p = p1 = p2 whose predicted coefficient of
/// variation for a union of size N meets cv_target. Bisection to 1e-9.
double required_p(double N, double J, double cv_target, AggKind kind);

/// Sum of per-key estimates over the selected keys appearing in either
/// sample (unsampled keys contribute 0). Compensated summation; the
/// result does not depend on key order.
AggregateReport sum_aggregate(const EstimatorFn& per_key, const KeyedSample& s1,
                              const KeyedSample& s2, const Selection& selection);

/// Max-dominance aggregate over two weighted PPS samples. with_variance
/// additionally sums per-key variances evaluated at the observed
/// values (a plug-in estimate).
AggregateReport est_max_dominance(const KeyedSample& s1, const KeyedSample& s2,
                                  const std::vector<double>& tau_star,
                                  const Selection& selection, AggKind kind,
                                  bool with_variance = false);

}  // namespace samplest
