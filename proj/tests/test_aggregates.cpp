#include "doctest.h"

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "samplest/aggregates.hpp"
#include "samplest/oblivious.hpp"

using namespace samplest;

namespace {

KeyedSample make_sample(std::uint64_t salt,
                        std::map<std::string, KeyedSample::Entry> entries) {
    KeyedSample s;
    s.instance_salt = salt;
    s.sampled = std::move(entries);
    return s;
}

// Binary universe with |A| = |B| = per_set, intersecting in `both` keys.
// Union size is 2 * per_set - both.
struct BinaryPair {
    InstanceTable a, b;
    std::vector<std::string> universe;
};

BinaryPair binary_universe(int per_set, int both) {
    BinaryPair out;
    int only = per_set - both;
    for (int i = 0; i < both + 2 * only; ++i) {
        std::string key = "k" + std::to_string(i);
        if (i < both + only) out.a.entries[key] = 1.0;
        if (i < both || i >= both + only) out.b.entries[key] = 1.0;
        out.universe.push_back(std::move(key));
    }
    return out;
}

struct Moments {
    double mean = 0.0, var = 0.0, stderr_mean = 0.0;
};

Moments moments(const std::vector<double>& xs) {
    Moments m;
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(xs.size());
    for (double x : xs) m.var += (x - m.mean) * (x - m.mean);
    m.var /= static_cast<double>(xs.size() - 1);
    m.stderr_mean = std::sqrt(m.var / static_cast<double>(xs.size()));
    return m;
}

}  // namespace

TEST_CASE("classify_keys categories") {
    const std::uint64_t salt1 = 11, salt2 = 22;
    auto s1 = make_sample(salt1, {{"a", {1.0, 0.1}}, {"b", {1.0, 0.2}}});
    auto s2 = make_sample(salt2, {{"a", {1.0, 0.3}}});

    // Key "b" is absent from s2, so its seed there comes back from the
    // salt. Pick p2 on either side of that seed to force each branch.
    double u2 = hash_seed(salt2, "b");
    REQUIRE(u2 > 0.0);
    REQUIRE(u2 < 1.0);

    auto low = classify_keys(s1, s2, 0.5, u2 * 0.5);
    CHECK(low.at("a") == KeyCategory::F11);
    CHECK(low.at("b") == KeyCategory::F1q);  // u2 > p2, absence proves nothing

    auto high = classify_keys(s1, s2, 0.5, 0.5 * (u2 + 1.0));
    CHECK(high.at("b") == KeyCategory::F10);  // u2 < p2, v must be 0

    // Mirror case for a key only in s2.
    auto s2b = make_sample(salt2, {{"c", {1.0, 0.4}}});
    double u1 = hash_seed(salt1, "c");
    auto only2 = classify_keys(make_sample(salt1, {}), s2b, u1 * 0.5, 0.5);
    CHECK(only2.at("c") == KeyCategory::Fq1);
    auto only2h = classify_keys(make_sample(salt1, {}), s2b, 0.5 * (u1 + 1.0), 0.5);
    CHECK(only2h.at("c") == KeyCategory::F01);

    CHECK_THROWS(classify_keys(s1, s2, 0.0, 0.5));
    CHECK_THROWS(classify_keys(s1, s2, 0.5, 1.5));
}

TEST_CASE("est_distinct from category counts") {
    std::map<std::string, KeyCategory> cats{
        {"a", KeyCategory::F11},
        {"b", KeyCategory::F1q},
        {"c", KeyCategory::Fq1},
        {"d", KeyCategory::F10},
    };
    auto l = est_distinct(cats, nullptr, 0.5, 0.5, AggKind::L);
    CHECK(l.estimate == doctest::Approx(20.0 / 3.0));  // 3/0.75 + 1/0.375
    CHECK(l.key_counts.at(KeyCategory::F10) == 1);
    CHECK(l.kind == AggKind::L);

    std::map<std::string, KeyCategory> resolved{
        {"a", KeyCategory::F11}, {"b", KeyCategory::F11}, {"c", KeyCategory::F10},
        {"d", KeyCategory::F10}, {"e", KeyCategory::F01},
    };
    auto ht = est_distinct(resolved, nullptr, 0.5, 0.5, AggKind::Ht);
    CHECK(ht.estimate == doctest::Approx(20.0));  // 5 / 0.25

    auto empty = est_distinct({}, nullptr, 0.5, 0.5, AggKind::L);
    CHECK(empty.estimate == 0.0);
    CHECK(empty.predicted_variance == 0.0);

    // Selection filters keys before counting.
    Selection not_d = [](const std::string& k) { return k != "d"; };
    auto filtered = est_distinct(cats, not_d, 0.5, 0.5, AggKind::L);
    CHECK(filtered.estimate == doctest::Approx(4.0));  // 3/0.75
    CHECK(filtered.key_counts.count(KeyCategory::F10) == 0);
}

TEST_CASE("predict_distinct_variance") {
    CHECK(predict_distinct_variance(100.0, 0.3, 0.5, 0.5, AggKind::Ht) ==
          doctest::Approx(300.0));
    CHECK(predict_distinct_variance(100.0, 1.0, 0.5, 0.5, AggKind::L) ==
          doctest::Approx(100.0 / 3.0));

    // Small p, disjoint sets: about a quarter of the HT variance D/p^2.
    double p = 0.01, d = 1000.0;
    double vl = predict_distinct_variance(d, 0.0, p, p, AggKind::L);
    CHECK(vl == doctest::Approx(d / (4.0 * p * p)).epsilon(0.02));
    double vht = predict_distinct_variance(d, 0.0, p, p, AggKind::Ht);
    CHECK(vl / vht == doctest::Approx(0.25).epsilon(0.02));

    // Consistency with the per-key OR variances it is built from.
    double v11 = var_closed_form({1.0, 1.0}, {0.3, 0.6}, VarEstimator::OrL).variance;
    double v10 = var_closed_form({1.0, 0.0}, {0.3, 0.6}, VarEstimator::OrL).variance;
    CHECK(predict_distinct_variance(50.0, 0.4, 0.3, 0.6, AggKind::L) ==
          doctest::Approx(50.0 * (0.4 * v11 + 0.6 * v10)));

    CHECK_THROWS(predict_distinct_variance(100.0, -0.1, 0.5, 0.5, AggKind::L));
    CHECK_THROWS(predict_distinct_variance(100.0, 1.1, 0.5, 0.5, AggKind::Ht));
}

TEST_CASE("required_p") {
    // Disjoint sets, small p: the L estimator needs about half the
    // sampling rate of HT for the same cv.
    double n = 1e6, cv = 0.1;
    double p_ht = required_p(n, 0.0, cv, AggKind::Ht);
    double p_l = required_p(n, 0.0, cv, AggKind::L);
    CHECK(std::sqrt(predict_distinct_variance(n, 0.0, p_ht, p_ht, AggKind::Ht)) / n <=
          cv + 1e-9);
    CHECK(p_l / p_ht == doctest::Approx(0.5).epsilon(0.02));

    // Huge cv target: bisection collapses to the lower bound.
    CHECK(required_p(100.0, 0.5, 1e6, AggKind::L) < 1e-6);

    // Identical sets, large N: O(1) expected sampled keys per unit
    // cv^-2 (p * cv^2 * N tends to a constant).
    double big = 1e8;
    double pj = required_p(big, 1.0, 0.01, AggKind::L);
    CHECK(pj * 0.01 * 0.01 * big == doctest::Approx(0.5).epsilon(0.01));

    CHECK_THROWS(required_p(100.0, 0.5, 0.0, AggKind::L));
    CHECK_THROWS(required_p(0.0, 0.5, 0.1, AggKind::L));
}

TEST_CASE("sum_aggregate basics") {
    auto s1 = make_sample(1, {{"x", {1.0, 0.1}}, {"y", {1.0, 0.2}}});
    auto s2 = make_sample(2, {{"x", {1.0, 0.3}}});
    EstimatorFn count_sampled = [](const Outcome& o) {
        return static_cast<double>(o.sampled.size());
    };

    Selection none = [](const std::string&) { return false; };
    CHECK(sum_aggregate(count_sampled, s1, s2, none).estimate == 0.0);

    Selection only_x = [](const std::string& k) { return k == "x"; };
    CHECK(sum_aggregate(count_sampled, s1, s2, only_x).estimate == doctest::Approx(2.0));
    CHECK(sum_aggregate(count_sampled, s1, s2, nullptr).estimate == doctest::Approx(3.0));
}

TEST_CASE("sum_aggregate: independent keys add their variances") {
    // Two binary keys, x present in both instances and y only in the
    // first. The per-key OR-L estimates are independent across keys, so
    // the aggregate variance is the sum of the per-key closed forms.
    const double p = 0.4;
    std::vector<double> probs{p, p};
    EstimatorFn per_key = [&probs](const Outcome& o) { return est_or(o, probs, OrKind::L); };

    InstanceTable a, b;
    a.entries = {{"x", 1.0}, {"y", 1.0}};
    b.entries = {{"x", 1.0}};

    // Oblivious sampling: the per-key OR estimators expect zero-valued
    // keys to show up too when their seed is below p.
    const std::vector<std::string> universe{"x", "y"};
    const int trials = 6000;
    std::vector<double> estimates;
    estimates.reserve(trials);
    for (int t = 0; t < trials; ++t) {
        auto s1 = sample_poisson_keys(a, universe, p, 9000 + 2 * t, true);
        auto s2 = sample_poisson_keys(b, universe, p, 9001 + 2 * t, true);
        estimates.push_back(sum_aggregate(per_key, s1, s2, nullptr).estimate);
    }
    Moments m = moments(estimates);
    double expected_var = var_closed_form({1.0, 1.0}, probs, VarEstimator::OrL).variance +
                          var_closed_form({1.0, 0.0}, probs, VarEstimator::OrL).variance;
    CHECK(std::abs(m.mean - 2.0) <= 3.0 * m.stderr_mean);
    CHECK(m.var == doctest::Approx(expected_var).epsilon(0.10));
}

TEST_CASE("est_max_dominance point values") {
    std::vector<double> tau{10.0, 10.0};
    auto s1 = make_sample(1, {{"flow", {8.0, 0.3}}});
    auto s2 = make_sample(2, {{"flow", {2.0, 0.1}}});

    auto ht = est_max_dominance(s1, s2, tau, nullptr, AggKind::Ht, true);
    CHECK(ht.estimate == doctest::Approx(12.5));  // 8 / (0.8 * 0.8)
    CHECK(ht.predicted_variance == doctest::Approx(64.0 * (1.0 / 0.64 - 1.0)));

    auto empty = est_max_dominance(make_sample(1, {}), make_sample(2, {}), tau, nullptr,
                                   AggKind::Ht);
    CHECK(empty.estimate == 0.0);

    Selection none = [](const std::string&) { return false; };
    CHECK(est_max_dominance(s1, s2, tau, none, AggKind::L).estimate == 0.0);
}

TEST_CASE("est_max_dominance: L beats HT on comparable positive values") {
    // Synthetic pairs with both entries well above zero and below the
    // thresholds; per key the L/HT variance ratio bound of 2 applies,
    // and independence across keys carries it to the aggregate.
    const std::vector<double> tau{25.0, 25.0};
    const int n_keys = 50;
    std::vector<std::string> keys;
    std::vector<double> v1(n_keys), v2(n_keys);
    double truth = 0.0, ht_bound = 0.0;
    for (int i = 0; i < n_keys; ++i) {
        keys.push_back("f" + std::to_string(i));
        v1[i] = 10.0 + 10.0 * hash_seed(777, keys.back());
        v2[i] = v1[i] * (0.7 + 0.3 * hash_seed(778, keys.back()));
        double m = std::max(v1[i], v2[i]);
        truth += m;
        ht_bound = std::max(ht_bound, m / ((m / tau[0]) * (m / tau[1])));
    }

    const int trials = 600;
    std::vector<double> ht_runs, l_runs;
    double max_per_key_l = 0.0;
    for (int t = 0; t < trials; ++t) {
        std::uint64_t salt1 = 40000 + 2 * t, salt2 = 40001 + 2 * t;
        KeyedSample s1 = {salt1, {}, 0.0}, s2 = {salt2, {}, 0.0};
        for (int i = 0; i < n_keys; ++i) {
            double u1 = hash_seed(salt1, keys[i]), u2 = hash_seed(salt2, keys[i]);
            if (v1[i] >= u1 * tau[0]) s1.sampled.emplace(keys[i], KeyedSample::Entry{v1[i], u1});
            if (v2[i] >= u2 * tau[1]) s2.sampled.emplace(keys[i], KeyedSample::Entry{v2[i], u2});
        }
        ht_runs.push_back(est_max_dominance(s1, s2, tau, nullptr, AggKind::Ht).estimate);
        l_runs.push_back(est_max_dominance(s1, s2, tau, nullptr, AggKind::L).estimate);
        for (int i = 0; i < n_keys; ++i) {
            Selection one = [&](const std::string& k) { return k == keys[i]; };
            double pk = est_max_dominance(s1, s2, tau, one, AggKind::L).estimate;
            max_per_key_l = std::max(max_per_key_l, pk);
        }
    }
    Moments ht = moments(ht_runs), l = moments(l_runs);
    CHECK(std::abs(ht.mean - truth) <= 3.0 * ht.stderr_mean);
    CHECK(std::abs(l.mean - truth) <= 3.0 * l.stderr_mean);
    CHECK(ht.var / l.var >= 2.0);
    // No per-key L estimate exceeds the HT worst-case per-key bound.
    CHECK(max_per_key_l <= ht_bound + 1e-9);
}

TEST_CASE("distinct count end to end: unbiased, variance as predicted") {
    // |A| = |B| = 10^4 with Jaccard 1/2: 6667 shared keys, union 13333.
    BinaryPair data = binary_universe(10000, 6667);
    const double d_true = 13333.0, j_true = 6667.0 / 13333.0;
    const double p = 0.1;

    const int trials = 1000;
    std::vector<double> ht_runs, l_runs;
    ht_runs.reserve(trials);
    l_runs.reserve(trials);
    for (int t = 0; t < trials; ++t) {
        auto s1 = sample_poisson_keys(data.a, {}, p, 100000 + 2 * t, false);
        auto s2 = sample_poisson_keys(data.b, {}, p, 100001 + 2 * t, false);
        auto cats = classify_keys(s1, s2, p, p);
        ht_runs.push_back(est_distinct(cats, nullptr, p, p, AggKind::Ht).estimate);
        l_runs.push_back(est_distinct(cats, nullptr, p, p, AggKind::L).estimate);
    }
    Moments ht = moments(ht_runs), l = moments(l_runs);
    CHECK(std::abs(ht.mean - d_true) <= 3.0 * ht.stderr_mean);
    CHECK(std::abs(l.mean - d_true) <= 3.0 * l.stderr_mean);
    CHECK(ht.var ==
          doctest::Approx(predict_distinct_variance(d_true, j_true, p, p, AggKind::Ht))
              .epsilon(0.10));
    CHECK(l.var ==
          doctest::Approx(predict_distinct_variance(d_true, j_true, p, p, AggKind::L))
              .epsilon(0.10));
    CHECK(l.var < ht.var);
}

TEST_CASE("bottom-k plug-in distinct count stays unbiased") {
    BinaryPair data = binary_universe(10000, 6667);
    const double d_true = 13333.0;

    for (int k : {100, 1000}) {
        const int trials = k == 100 ? 400 : 250;
        std::vector<double> ht_runs, l_runs;
        for (int t = 0; t < trials; ++t) {
            auto s1 = sample_bottomk(data.a, k, RankFamily::Pps, 500000 + 2 * t);
            auto s2 = sample_bottomk(data.b, k, RankFamily::Pps, 500001 + 2 * t);
            // Binary data: one effective probability per instance.
            double p1 = effective_probability(s1, RankFamily::Pps, 1.0);
            double p2 = effective_probability(s2, RankFamily::Pps, 1.0);
            auto cats = classify_keys(s1, s2, p1, p2);
            ht_runs.push_back(est_distinct(cats, nullptr, p1, p2, AggKind::Ht).estimate);
            l_runs.push_back(est_distinct(cats, nullptr, p1, p2, AggKind::L).estimate);
        }
        Moments ht = moments(ht_runs), l = moments(l_runs);
        INFO("k = " << k);
        CHECK(std::abs(ht.mean - d_true) <= 3.0 * ht.stderr_mean);
        CHECK(std::abs(l.mean - d_true) <= 3.0 * l.stderr_mean);
    }
}
