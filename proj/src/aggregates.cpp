#include "samplest/aggregates.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "samplest/oblivious.hpp"

namespace samplest {

namespace {

struct KahanSum {
    double sum = 0.0, carry = 0.0;
    void add(double x) {
        double y = x - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

double seed_of(const KeyedSample& s, const std::string& key) {
    auto it = s.sampled.find(key);
    if (it != s.sampled.end()) return it->second.seed;
    return hash_seed(s.instance_salt, key);
}

std::set<std::string> key_union(const KeyedSample& s1, const KeyedSample& s2) {
    std::set<std::string> keys;
    for (const auto& [k, e] : s1.sampled) keys.insert(k);
    for (const auto& [k, e] : s2.sampled) keys.insert(k);
    return keys;
}

Outcome pair_outcome(const KeyedSample& s1, const KeyedSample& s2, const std::string& key) {
    Outcome o;
    o.r = 2;
    auto i1 = s1.sampled.find(key), i2 = s2.sampled.find(key);
    if (i1 != s1.sampled.end()) {
        o.sampled.push_back(0);
        o.values.push_back(i1->second.value);
    }
    if (i2 != s2.sampled.end()) {
        o.sampled.push_back(1);
        o.values.push_back(i2->second.value);
    }
    o.seeds = SeedVector{{seed_of(s1, key), seed_of(s2, key)}};
    return o;
}

}  // namespace

std::map<std::string, KeyCategory> classify_keys(const KeyedSample& s1, const KeyedSample& s2,
                                                 double p1, double p2) {
    if (!(p1 > 0.0 && p1 <= 1.0 && p2 > 0.0 && p2 <= 1.0))
        throw std::invalid_argument("probability outside (0,1]");
    std::map<std::string, KeyCategory> out;
    for (const std::string& key : key_union(s1, s2)) {
        bool in1 = s1.sampled.count(key) > 0, in2 = s2.sampled.count(key) > 0;
        if (in1 && in2) {
            out[key] = KeyCategory::F11;
        } else if (in1) {
            out[key] = seed_of(s2, key) < p2 ? KeyCategory::F10 : KeyCategory::F1q;
        } else {
            out[key] = seed_of(s1, key) < p1 ? KeyCategory::F01 : KeyCategory::Fq1;
        }
    }
    return out;
}

AggregateReport est_distinct(const std::map<std::string, KeyCategory>& categories,
                             const Selection& selection, double p1, double p2, AggKind kind) {
    AggregateReport report;
    report.kind = kind;
    for (const auto& [key, cat] : categories) {
        if (selection && !selection(key)) continue;
        ++report.key_counts[cat];
    }
    auto count = [&](KeyCategory c) {
        auto it = report.key_counts.find(c);
        return it == report.key_counts.end() ? 0L : it->second;
    };
    const double denom1 = p1 + p2 - p1 * p2;
    if (kind == AggKind::Ht) {
        report.estimate = static_cast<double>(count(KeyCategory::F11) + count(KeyCategory::F10) +
                                              count(KeyCategory::F01)) /
                          (p1 * p2);
    } else {
        report.estimate =
            static_cast<double>(count(KeyCategory::F1q) + count(KeyCategory::Fq1) +
                                count(KeyCategory::F11)) /
                denom1 +
            static_cast<double>(count(KeyCategory::F10)) / (p1 * denom1) +
            static_cast<double>(count(KeyCategory::F01)) / (p2 * denom1);
    }
    // Plug-in variance prediction: union size from the estimate itself,
    // Jaccard from the inverse-probability intersection estimate.
    double inter = static_cast<double>(count(KeyCategory::F11)) / (p1 * p2);
    double j = report.estimate > 0.0 ? std::clamp(inter / report.estimate, 0.0, 1.0) : 0.0;
    report.predicted_variance = predict_distinct_variance(report.estimate, j, p1, p2, kind);
    return report;
}

double predict_distinct_variance(double D, double J, double p1, double p2, AggKind kind) {
    if (!(J >= 0.0 && J <= 1.0)) throw std::invalid_argument("Jaccard outside [0,1]");
    if (kind == AggKind::Ht) return D * (1.0 / (p1 * p2) - 1.0);
    double var_11 = var_closed_form({1.0, 1.0}, {p1, p2}, VarEstimator::OrL).variance;
    double var_10 = var_closed_form({1.0, 0.0}, {p1, p2}, VarEstimator::OrL).variance;
    return D * J * var_11 + D * (1.0 - J) * var_10;
}

double required_p(double N, double J, double cv_target, AggKind kind) {
    if (!(cv_target > 0.0)) throw std::invalid_argument("cv target must be positive");
    if (!(N > 0.0)) throw std::invalid_argument("N must be positive");
    auto cv = [&](double p) { return std::sqrt(predict_distinct_variance(N, J, p, p, kind)) / N; };
    if (cv(1.0) > cv_target) throw std::runtime_error("cv target infeasible at p = 1");
    double lo = 0.0, hi = 1.0;
    while (hi - lo > 1e-9) {
        double mid = 0.5 * (lo + hi);
        (cv(mid) <= cv_target ? hi : lo) = mid;
    }
    return hi;
}

AggregateReport sum_aggregate(const EstimatorFn& per_key, const KeyedSample& s1,
                              const KeyedSample& s2, const Selection& selection) {
    AggregateReport report;
    KahanSum sum;
    for (const std::string& key : key_union(s1, s2)) {
        if (selection && !selection(key)) continue;
        sum.add(per_key(pair_outcome(s1, s2, key)));
    }
    report.estimate = sum.sum;
    return report;
}

AggregateReport est_max_dominance(const KeyedSample& s1, const KeyedSample& s2,
                                  const std::vector<double>& tau_star,
                                  const Selection& selection, AggKind kind,
                                  bool with_variance) {
    EstimatorFn per_key = kind == AggKind::Ht
                              ? EstimatorFn([&tau_star](const Outcome& o) {
                                    return est_max_ht_ws(o, tau_star);
                                })
                              : EstimatorFn([&tau_star](const Outcome& o) {
                                    return est_max_L_ws_r2(o, tau_star);
                                });
    AggregateReport report = sum_aggregate(per_key, s1, s2, selection);
    report.kind = kind;
    if (with_variance) {
        KahanSum var;
        auto est = kind == AggKind::Ht ? WeightedMaxEstimator::Ht : WeightedMaxEstimator::L;
        for (const std::string& key : key_union(s1, s2)) {
            if (selection && !selection(key)) continue;
            auto i1 = s1.sampled.find(key), i2 = s2.sampled.find(key);
            DataVector v{i1 == s1.sampled.end() ? 0.0 : i1->second.value,
                         i2 == s2.sampled.end() ? 0.0 : i2->second.value};
            var.add(var_max_ws(v, tau_star, est).variance);
        }
        report.predicted_variance = var.sum;
    }
    return report;
}

}  // namespace samplest
