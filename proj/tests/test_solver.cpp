#include "doctest.h"

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "samplest/oblivious.hpp"
#include "samplest/solver.hpp"

using namespace samplest;

namespace {

std::vector<DataVector> grid2(int top) {
    std::vector<DataVector> domain;
    for (int a = 0; a <= top; ++a)
        for (int b = 0; b <= top; ++b) domain.push_back({double(a), double(b)});
    return domain;
}

FiniteProblem max_problem(std::vector<DataVector> domain, SamplingSpec scheme) {
    FiniteProblem p;
    p.domain = std::move(domain);
    for (const DataVector& v : p.domain) p.f.push_back(max_value(v));
    p.scheme = std::move(scheme);
    return p;
}

Outcome outcome_of(const OutcomeClass& cls, int r) {
    Outcome o;
    o.r = r;
    o.sampled = cls.sampled;
    o.values = cls.values;
    return o;
}

// Dense-first score: the zero vector strictly first, then
// lexicographic on the sorted multiset of gaps max(v) - v_i.
// Gaps here never exceed 9.
double dense_score(const DataVector& v) {
    double m = max_value(v);
    if (m == 0.0) return -1.0;
    DataVector gaps;
    for (double x : v) gaps.push_back(m - x);
    std::sort(gaps.begin(), gaps.end());
    double s = 0.0;
    for (double g : gaps) s = 10.0 * s + g;
    return s;
}

}  // namespace

TEST_CASE("outcome class ordering and label") {
    OutcomeClass cls{{0, 1}, {1, 0}};
    CHECK(cls.label() == "S={1,2};v=(1,0)");
    CHECK(OutcomeClass{{}, {}}.label() == "S={};v=()");
    CHECK(OutcomeClass{{0}, {1}} < cls);
}

TEST_CASE("enumerate_outcome_classes: oblivious r=2 binary domain") {
    FiniteProblem prob = max_problem(grid2(1), SamplingSpec{ObliviousPoisson{{0.5, 0.5}}});
    ClassEnumeration enu = enumerate_outcome_classes(prob);
    CHECK(enu.classes.size() == 9);
    CHECK(enu.n_vectors == 4);
    for (size_t j = 0; j < 4; ++j) {
        double total = 0.0;
        for (size_t c = 0; c < enu.classes.size(); ++c) total += enu.at(c, j);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    }
    // PR[empty | (1,1)] = 0.25.
    for (size_t c = 0; c < enu.classes.size(); ++c)
        if (enu.classes[c].sampled.empty()) CHECK(enu.at(c, 3) == doctest::Approx(0.25));
}

TEST_CASE("enumerate_outcome_classes: known seeds match the oblivious classes") {
    FiniteProblem obl = max_problem(grid2(1), SamplingSpec{ObliviousPoisson{{0.5, 0.5}}});
    FiniteProblem ws = max_problem(grid2(1), SamplingSpec{WeightedPps{{2.0, 2.0}}, true});
    ClassEnumeration a = enumerate_outcome_classes(obl);
    ClassEnumeration b = enumerate_outcome_classes(ws);
    REQUIRE(a.classes.size() == b.classes.size());
    CHECK(a.classes == b.classes);
    CHECK(a.prob == b.prob);
}

TEST_CASE("enumerate_outcome_classes: unknown seeds collapse to 4 classes") {
    FiniteProblem prob = max_problem(grid2(1), SamplingSpec{WeightedPps{{2.0, 2.0}}, false});
    ClassEnumeration enu = enumerate_outcome_classes(prob);
    CHECK(enu.classes.size() == 4);
    for (const OutcomeClass& cls : enu.classes)
        for (double v : cls.values) CHECK(v == 1.0);
    // Zero entries are never sampled: PR[empty | (0,0)] = 1.
    for (size_t c = 0; c < enu.classes.size(); ++c)
        if (enu.classes[c].sampled.empty()) CHECK(enu.at(c, 0) == doctest::Approx(1.0));
}

TEST_CASE("enumerate_outcome_classes rejects unsupported problems") {
    FiniteProblem nonbinary = max_problem(grid2(2), SamplingSpec{WeightedPps{{2.0, 2.0}}, true});
    CHECK_THROWS(static_cast<void>(enumerate_outcome_classes(nonbinary)));
    FiniteProblem bk = max_problem(grid2(1), SamplingSpec{BottomK{2, RankFamily::Exp}});
    CHECK_THROWS(static_cast<void>(enumerate_outcome_classes(bk)));
}

TEST_CASE("solve_order reproduces OR^L on the binary square") {
    FiniteProblem prob;
    prob.domain = grid2(1);
    for (const DataVector& v : prob.domain) prob.f.push_back(v[0] > 0 || v[1] > 0 ? 1.0 : 0.0);
    prob.scheme = SamplingSpec{ObliviousPoisson{{0.5, 0.5}}};

    EstimatorTable table = solve_order(prob, OrderSpec::keyed(dense_score));
    REQUIRE(table.status == EstimatorTable::Status::Ok);
    CHECK(table.max_residual <= 1e-10);
    CHECK(table.estimate_of({{0}, {1}}) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(table.estimate_of({{0, 1}, {1, 0}}) == doctest::Approx(8.0 / 3.0).epsilon(1e-12));
    for (size_t c = 0; c < table.classes.size(); ++c) {
        Outcome o = outcome_of(table.classes[c], 2);
        CHECK(table.estimates[c] ==
              doctest::Approx(est_or(o, {0.5, 0.5}, OrKind::L)).epsilon(1e-12));
    }
}

TEST_CASE("solve_order matches est_max_L_r2 class by class") {
    for (auto [p1, p2] : {std::pair{0.5, 0.5}, {0.3, 0.7}}) {
        FiniteProblem prob = max_problem(grid2(2), SamplingSpec{ObliviousPoisson{{p1, p2}}});
        EstimatorTable table = solve_order(prob, OrderSpec::keyed(dense_score));
        REQUIRE(table.status == EstimatorTable::Status::Ok);
        CHECK(table.max_residual <= 1e-10);
        for (size_t c = 0; c < table.classes.size(); ++c) {
            Outcome o = outcome_of(table.classes[c], 2);
            CHECK(table.estimates[c] == doctest::Approx(est_max_L_r2(o, p1, p2)).epsilon(1e-9));
        }
    }
}

TEST_CASE("solve_order matches est_max_L_uniform on the r=3 grid") {
    std::vector<DataVector> domain;
    for (int a = 0; a <= 2; ++a)
        for (int b = 0; b <= 2; ++b)
            for (int c = 0; c <= 2; ++c) domain.push_back({double(a), double(b), double(c)});
    FiniteProblem prob = max_problem(domain, SamplingSpec{ObliviousPoisson{{0.5, 0.5, 0.5}}});

    EstimatorTable table = solve_order(prob, OrderSpec::keyed(dense_score));
    REQUIRE(table.status == EstimatorTable::Status::Ok);
    CHECK(table.max_residual <= 1e-10);
    CoefficientVector coeffs = coeff_max_L_uniform(3, 0.5);
    for (size_t c = 0; c < table.classes.size(); ++c) {
        Outcome o = outcome_of(table.classes[c], 3);
        CHECK(table.estimates[c] ==
              doctest::Approx(est_max_L_uniform(o, coeffs)).epsilon(1e-9));
        CHECK(table.estimates[c] ==
              doctest::Approx(est_max_L_general(o, {0.5, 0.5, 0.5})).epsilon(1e-9));
    }
}

TEST_CASE("linearizations of the same keyed order give identical tables") {
    FiniteProblem prob = max_problem(grid2(2), SamplingSpec{ObliviousPoisson{{0.5, 0.5}}});
    std::vector<size_t> idx(prob.domain.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> s;
    for (const DataVector& v : prob.domain) s.push_back(dense_score(v));

    std::vector<size_t> forward = idx, backward = idx;
    std::stable_sort(forward.begin(), forward.end(),
                     [&](size_t a, size_t b) { return s[a] < s[b]; });
    // Same order, but ties broken in reverse.
    std::stable_sort(backward.begin(), backward.end(), [&](size_t a, size_t b) {
        return s[a] != s[b] ? s[a] < s[b] : a > b;
    });

    EstimatorTable ta = solve_order(prob, OrderSpec::total(forward));
    EstimatorTable tb = solve_order(prob, OrderSpec::total(backward));
    REQUIRE(ta.status == EstimatorTable::Status::Ok);
    REQUIRE(ta.classes == tb.classes);
    for (size_t c = 0; c < ta.classes.size(); ++c)
        CHECK(ta.estimates[c] == doctest::Approx(tb.estimates[c]).epsilon(1e-12));
}

TEST_CASE("ambiguous keyed order is rejected") {
    FiniteProblem prob = max_problem({{1, 0}, {0, 1}}, SamplingSpec{ObliviousPoisson{{0.5, 0.5}}});
    OrderSpec flat = OrderSpec::keyed([](const DataVector&) { return 0.0; });
    CHECK_THROWS_WITH(static_cast<void>(solve_order(prob, flat)),
                      "order does not determine phi");
}

TEST_CASE("binary OR with unknown seeds: -40/9 and NegativityViolated") {
    FiniteProblem prob;
    prob.domain = grid2(1);
    for (const DataVector& v : prob.domain) prob.f.push_back(v[0] > 0 || v[1] > 0 ? 1.0 : 0.0);
    prob.scheme = SamplingSpec{WeightedPps{{10.0 / 3.0, 10.0 / 3.0}}, false};

    OrderSpec sparse_first = OrderSpec::keyed([](const DataVector& v) {
        return double(std::count_if(v.begin(), v.end(), [](double x) { return x > 0; }));
    });
    EstimatorTable table = solve_order(prob, sparse_first);
    CHECK(table.status == EstimatorTable::Status::NegativityViolated);
    CHECK(table.estimate_of({{0}, {1}}) == doctest::Approx(10.0 / 3.0).epsilon(1e-12));
    CHECK(table.estimate_of({{0, 1}, {1, 1}}) == doctest::Approx(-40.0 / 9.0).epsilon(1e-12));
    CHECK(table.offending_value == doctest::Approx(-40.0 / 9.0).epsilon(1e-12));
    REQUIRE(table.offending_class >= 0);
    CHECK(table.classes[size_t(table.offending_class)].label() == "S={1,2};v=(1,1)");
    // Still unbiased, just signed.
    CHECK(table.max_residual <= 1e-10);

    // The nonnegative variant has no feasible table at all.
    CHECK(solve_order_nonneg(prob, sparse_first).status == EstimatorTable::Status::Failure);
}

TEST_CASE("solve_order_nonneg reproduces the asymmetric sparse-first max table") {
    for (auto [p1, p2] : {std::pair{0.5, 0.5}, {0.3, 0.6}}) {
        FiniteProblem prob = max_problem(grid2(1), SamplingSpec{ObliviousPoisson{{p1, p2}}});
        // (v1, 0) strictly before (0, v2), then two-positive.
        EstimatorTable table = solve_order_nonneg(prob, OrderSpec::total({0, 2, 1, 3}));
        REQUIRE(table.status == EstimatorTable::Status::Ok);
        CHECK(table.max_residual <= 1e-10);
        for (size_t c = 0; c < table.classes.size(); ++c) {
            Outcome o = outcome_of(table.classes[c], 2);
            CHECK(table.estimates[c] ==
                  doctest::Approx(est_max_U_r2(o, p1, p2, MaxUVariant::Asymmetric))
                      .epsilon(1e-9));
        }
    }
    // Pinned rows for p=(0.3,0.6): the later-vector cap is active on
    // the {2} class, pushing the full-outcome (0,1) estimate up.
    FiniteProblem prob = max_problem(grid2(1), SamplingSpec{ObliviousPoisson{{0.3, 0.6}}});
    EstimatorTable table = solve_order_nonneg(prob, OrderSpec::total({0, 2, 1, 3}));
    CHECK(table.estimate_of({{0}, {1}}) == doctest::Approx(10.0 / 3.0).epsilon(1e-9));
    CHECK(table.estimate_of({{1}, {1}}) == doctest::Approx(10.0 / 7.0).epsilon(1e-9));
    CHECK(table.estimate_of({{0, 1}, {0, 1}}) == doctest::Approx(20.0 / 9.0).epsilon(1e-9));
    CHECK(table.estimate_of({{0, 1}, {1, 1}}) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("solve_order_nonneg equals solve_order when already nonnegative") {
    FiniteProblem prob = max_problem(grid2(2), SamplingSpec{ObliviousPoisson{{0.5, 0.5}}});
    OrderSpec order = OrderSpec::keyed(dense_score);
    EstimatorTable plain = solve_order(prob, order);
    EstimatorTable nn = solve_order_nonneg(prob, order);
    REQUIRE(plain.status == EstimatorTable::Status::Ok);
    REQUIRE(nn.status == EstimatorTable::Status::Ok);
    REQUIRE(plain.classes == nn.classes);
    for (size_t c = 0; c < plain.classes.size(); ++c)
        CHECK(plain.estimates[c] == doctest::Approx(nn.estimates[c]).epsilon(1e-10));
}

TEST_CASE("solve_partition reproduces the symmetric sparse-first tables") {
    OrderSpec batches = OrderSpec::partition({{0}, {1, 2}, {3}});
    for (double p : {0.5, 0.3}) {
        FiniteProblem prob = max_problem(grid2(1), SamplingSpec{ObliviousPoisson{{p, p}}});
        EstimatorTable table = solve_partition(prob, batches, /*symmetric=*/true);
        REQUIRE(table.status == EstimatorTable::Status::Ok);
        CHECK(table.max_residual <= 1e-10);
        for (size_t c = 0; c < table.classes.size(); ++c) {
            Outcome o = outcome_of(table.classes[c], 2);
            CHECK(table.estimates[c] ==
                  doctest::Approx(est_max_U_r2(o, p, p, MaxUVariant::Symmetric)).epsilon(1e-9));
            // On the binary square, max and OR coincide.
            CHECK(table.estimates[c] ==
                  doctest::Approx(est_or(o, {p, p}, OrKind::U)).epsilon(1e-9));
        }
    }
    // p=0.3 exercises an active nonnegativity-of-expectation cap:
    // 1/(p(1+max{0,1-2p})) and the raised full-outcome value.
    FiniteProblem prob = max_problem(grid2(1), SamplingSpec{ObliviousPoisson{{0.3, 0.3}}});
    EstimatorTable table = solve_partition(prob, batches, true);
    CHECK(table.estimate_of({{0}, {1}}) == doctest::Approx(1.0 / 0.42).epsilon(1e-9));
    CHECK(table.estimate_of({{0, 1}, {1, 0}}) == doctest::Approx(50.0 / 9.0).epsilon(1e-9));
}

TEST_CASE("solve_partition single batch with p=1 returns f") {
    FiniteProblem prob = max_problem(grid2(2), SamplingSpec{ObliviousPoisson{{1.0, 1.0}}});
    std::vector<size_t> all(prob.domain.size());
    std::iota(all.begin(), all.end(), 0);
    EstimatorTable table = solve_partition(prob, OrderSpec::partition({all}), false);
    REQUIRE(table.status == EstimatorTable::Status::Ok);
    for (size_t j = 0; j < prob.domain.size(); ++j) {
        OutcomeClass full{{0, 1}, prob.domain[j]};
        CHECK(table.estimate_of(full) == doctest::Approx(prob.f[j]).epsilon(1e-12));
    }
}

TEST_CASE("order spec misuse is rejected") {
    FiniteProblem prob = max_problem(grid2(1), SamplingSpec{ObliviousPoisson{{0.5, 0.5}}});
    CHECK_THROWS(static_cast<void>(solve_order(prob, OrderSpec::partition({{0, 1, 2, 3}}))));
    CHECK_THROWS(static_cast<void>(solve_partition(prob, OrderSpec::total({0, 1, 2, 3}), false)));
    CHECK_THROWS_WITH(static_cast<void>(solve_order(prob, OrderSpec::total({0, 1, 2}))),
                      "ranking is not a permutation");
    CHECK_THROWS_WITH(static_cast<void>(solve_partition(prob, OrderSpec::partition({{0, 1}}), false)),
                      "batches must partition the domain");
}

TEST_CASE("Pareto check: unbiased perturbations hurt somewhere") {
    FiniteProblem prob;
    prob.domain = grid2(1);
    for (const DataVector& v : prob.domain) prob.f.push_back(v[0] > 0 || v[1] > 0 ? 1.0 : 0.0);
    prob.scheme = SamplingSpec{ObliviousPoisson{{0.5, 0.5}}};

    ClassEnumeration enu = enumerate_outcome_classes(prob);
    EstimatorTable table = solve_order_nonneg(prob, OrderSpec::keyed(dense_score));
    REQUIRE(table.status == EstimatorTable::Status::Ok);
    REQUIRE(table.classes == enu.classes);

    const size_t nc = enu.classes.size(), nv = prob.domain.size();
    Eigen::MatrixXd P(nv, nc);
    for (size_t j = 0; j < nv; ++j)
        for (size_t c = 0; c < nc; ++c) P(Eigen::Index(j), Eigen::Index(c)) = enu.at(c, j);
    Eigen::MatrixXd null_basis = Eigen::FullPivLU<Eigen::MatrixXd>(P).kernel();
    REQUIRE(null_basis.cols() > 0);

    auto variance = [&](const std::vector<double>& est, size_t j) {
        double var = 0.0;
        for (size_t c = 0; c < nc; ++c) {
            double d = est[c] - prob.f[j];
            var += enu.at(c, j) * d * d;
        }
        return var;
    };
    std::vector<double> base_var(nv);
    for (size_t j = 0; j < nv; ++j) base_var[j] = variance(table.estimates, j);

    std::mt19937 rng(20240817);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        Eigen::VectorXd z(null_basis.cols());
        for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = gauss(rng);
        Eigen::VectorXd delta = null_basis * z;
        if (delta.lpNorm<Eigen::Infinity>() < 1e-12) continue;

        std::vector<double> perturbed = table.estimates;
        double min_est = 0.0;
        for (size_t c = 0; c < nc; ++c) {
            perturbed[c] += delta(Eigen::Index(c));
            min_est = std::min(min_est, perturbed[c]);
        }
        bool worse_somewhere = false;
        for (size_t j = 0; j < nv && !worse_somewhere; ++j)
            worse_somewhere = variance(perturbed, j) > base_var[j] + 1e-12;
        CHECK((min_est < -1e-12 || worse_somewhere));
    }
}
