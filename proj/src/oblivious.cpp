#include "samplest/oblivious.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "samplest/oracle.hpp"

namespace samplest {

namespace {

void require_r(const Outcome& outcome, size_t r, const char* what) {
    if (static_cast<size_t>(outcome.r) != r) throw std::invalid_argument(what);
}

double product(const std::vector<double>& xs) {
    return std::accumulate(xs.begin(), xs.end(), 1.0, std::multiplies<>());
}

void check_probs(const std::vector<double>& p) {
    for (double x : p)
        if (!(x > 0.0 && x <= 1.0)) throw std::invalid_argument("probability outside (0,1]");
}

double eval_function(FunctionTag f, const DataVector& v) {
    switch (f) {
        case FunctionTag::Max: return max_value(v);
        case FunctionTag::Or: return or_value(v);
        case FunctionTag::Min: return min_value(v);
        case FunctionTag::Range: return max_value(v) - min_value(v);
    }
    throw std::logic_error("unknown function tag");
}

}  // namespace

double est_ht(const Outcome& outcome, const std::vector<double>& p, FunctionTag f) {
    check_probs(p);
    require_r(outcome, p.size(), "dimension mismatch");
    if (outcome.sampled.size() != p.size()) return 0.0;
    return eval_function(f, outcome.values) / product(p);
}

DataVector determining_vector_dense(const Outcome& outcome) {
    DataVector phi(static_cast<size_t>(outcome.r), 0.0);
    if (outcome.sampled.empty()) return phi;
    double m = outcome.max_sampled();
    phi.assign(static_cast<size_t>(outcome.r), m);
    for (size_t j = 0; j < outcome.sampled.size(); ++j)
        phi[static_cast<size_t>(outcome.sampled[j])] = outcome.values[j];
    return phi;
}

double est_max_L_r2(const Outcome& outcome, double p1, double p2) {
    check_probs({p1, p2});
    require_r(outcome, 2, "estimator requires r=2");
    double denom1 = p1 + p2 - p1 * p2;  // probability of a nonempty sample
    switch (outcome.sampled.size()) {
        case 0:
            return 0.0;
        case 1:
            return outcome.values[0] / denom1;
        default: {
            double v1 = outcome.value_of(0), v2 = outcome.value_of(1);
            return std::max(v1, v2) / (p1 * p2) -
                   ((1.0 / p2 - 1.0) * v1 + (1.0 / p1 - 1.0) * v2) / denom1;
        }
    }
}

CoefficientVector coeff_max_L_uniform(int r, double p) {
    if (r < 1) throw std::invalid_argument("r must be >= 1");
    check_probs({p});
    const double q = 1.0 - p;
    std::vector<double> prefix(static_cast<size_t>(r) + 1, 0.0);  // 1-based
    prefix[static_cast<size_t>(r)] = 1.0 / (1.0 - std::pow(q, r));
    const double ratio = q / p;
    for (int k = 0; k <= r - 2; ++k) {
        double c = 1.0 - std::pow(q, r - k - 1);
        // Binomial-weighted correction, terms updated by ratio
        // recurrence to avoid explicit binomials.
        double t = 0.0;
        double w = 1.0;
        for (int l = 1; l <= k; ++l) {
            w *= ratio * static_cast<double>(k - l + 1) / static_cast<double>(l);
            size_t h = static_cast<size_t>(r - k + l);
            t += w * (prefix[h] - c * prefix[h - 1]);
        }
        prefix[static_cast<size_t>(r - k - 1)] = (prefix[static_cast<size_t>(r - k)] + t) / c;
    }
    CoefficientVector cv;
    cv.p = p;
    cv.prefix.assign(prefix.begin() + 1, prefix.end());
    cv.alpha.resize(static_cast<size_t>(r));
    cv.alpha[0] = cv.prefix[0];
    for (size_t h = 1; h < cv.alpha.size(); ++h) cv.alpha[h] = cv.prefix[h] - cv.prefix[h - 1];
    return cv;
}

double est_max_L_uniform(const Outcome& outcome, const CoefficientVector& coeffs) {
    const size_t r = coeffs.alpha.size();
    require_r(outcome, r, "dimension mismatch");
    if (outcome.sampled.empty()) return 0.0;
    // Sorted determining vector: unsampled slots hold the maximum
    // sampled value, so it is the sorted sampled values padded in front.
    std::vector<double> z(outcome.values);
    std::sort(z.begin(), z.end(), std::greater<>());
    double est = 0.0;
    size_t pad = r - z.size();
    for (size_t i = 0; i < r; ++i) est += coeffs.alpha[i] * (i < pad ? z[0] : z[i - pad]);
    return est;
}

double prefix_sum_general(const std::vector<double>& p, int h) {
    check_probs(p);
    const int r = static_cast<int>(p.size());
    if (h > r || h < r - 2 || h < 1)
        throw std::invalid_argument("prefix sums available for h in {r, r-1, r-2}");
    auto miss_product = [&](const std::vector<double>& probs, int upto) {
        double q = 1.0;
        for (int i = 0; i < upto; ++i) q *= 1.0 - probs[static_cast<size_t>(i)];
        return q;
    };
    double a_r = 1.0 / (1.0 - miss_product(p, r));
    if (h == r) return a_r;
    double a_r1 = a_r / (1.0 - miss_product(p, r - 1));
    if (h == r - 1) return a_r1;
    std::vector<double> swapped(p);
    std::swap(swapped[static_cast<size_t>(r - 1)], swapped[static_cast<size_t>(r - 2)]);
    double a_r1_swapped = a_r / (1.0 - miss_product(swapped, r - 1));
    return (a_r1 + a_r1_swapped - a_r) / (1.0 - miss_product(p, r - 2));
}

double est_max_L_general(const Outcome& outcome, const std::vector<double>& p) {
    check_probs(p);
    require_r(outcome, p.size(), "dimension mismatch");
    const int r = static_cast<int>(p.size());
    if (r > 3)
        throw std::invalid_argument("general probabilities supported for r <= 3 only");
    if (outcome.sampled.empty()) return 0.0;

    DataVector phi = determining_vector_dense(outcome);
    std::vector<int> order(static_cast<size_t>(r));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return phi[static_cast<size_t>(a)] > phi[static_cast<size_t>(b)];
    });
    std::vector<double> perm_p(static_cast<size_t>(r)), sorted(static_cast<size_t>(r));
    for (int i = 0; i < r; ++i) {
        perm_p[static_cast<size_t>(i)] = p[static_cast<size_t>(order[static_cast<size_t>(i)])];
        sorted[static_cast<size_t>(i)] = phi[static_cast<size_t>(order[static_cast<size_t>(i)])];
    }
    int k = count_below_max(phi);
    std::vector<double> prefix(static_cast<size_t>(r) + 1, 0.0);
    for (int h = r - k; h <= r; ++h)
        prefix[static_cast<size_t>(h)] = prefix_sum_general(perm_p, h);
    double est = sorted[0] * prefix[static_cast<size_t>(r - k)];
    for (int i = r - k + 1; i <= r; ++i)
        est += (prefix[static_cast<size_t>(i)] - prefix[static_cast<size_t>(i - 1)]) *
               sorted[static_cast<size_t>(i - 1)];
    return est;
}

double est_max_U_r2(const Outcome& outcome, double p1, double p2, MaxUVariant variant) {
    check_probs({p1, p2});
    require_r(outcome, 2, "estimator requires r=2");
    if (outcome.sampled.empty()) return 0.0;
    if (variant == MaxUVariant::Symmetric) {
        double slack = 1.0 + std::max(0.0, 1.0 - p1 - p2);
        if (outcome.sampled.size() == 1) {
            double pi = outcome.sampled[0] == 0 ? p1 : p2;
            return outcome.values[0] / (pi * slack);
        }
        double v1 = outcome.value_of(0), v2 = outcome.value_of(1);
        // Provably >= 0; the subtraction cancels exactly at tied values,
        // so clip the roundoff.
        return std::max(
            0.0, (std::max(v1, v2) - (v1 * (1.0 - p2) + v2 * (1.0 - p1)) / slack) / (p1 * p2));
    }
    // Asymmetric: entry 1 is prioritized.
    double d2 = std::max(1.0 - p1, p2);
    if (outcome.sampled.size() == 1) {
        if (outcome.sampled[0] == 0) return outcome.values[0] / p1;
        return outcome.values[0] / d2;
    }
    double v1 = outcome.value_of(0), v2 = outcome.value_of(1);
    return std::max(
        0.0, (std::max(v1, v2) - p2 * (1.0 - p1) / d2 * v2 - (1.0 - p2) * v1) / (p1 * p2));
}

double est_or(const Outcome& outcome, const std::vector<double>& p, OrKind kind) {
    check_probs(p);
    require_r(outcome, p.size(), "dimension mismatch");
    for (double x : outcome.values)
        if (x != 0.0 && x != 1.0) throw std::invalid_argument("non-binary value");

    switch (kind) {
        case OrKind::Ht:
            if (outcome.sampled.size() != p.size()) return 0.0;
            return or_value(outcome.values) / product(p);
        case OrKind::L: {
            if (p.size() == 2) {
                DataVector phi = determining_vector_dense(outcome);
                double denom1 = p[0] + p[1] - p[0] * p[1];
                return or_value(phi) / (p[0] * p[1]) -
                       ((1.0 / p[1] - 1.0) * phi[0] + (1.0 / p[0] - 1.0) * phi[1]) / denom1;
            }
            if (std::adjacent_find(p.begin(), p.end(), std::not_equal_to<>()) != p.end())
                throw std::invalid_argument("OR^L for r > 2 requires uniform p");
            return est_max_L_uniform(outcome,
                                     coeff_max_L_uniform(static_cast<int>(p.size()), p[0]));
        }
        case OrKind::U:
            if (p.size() != 2) throw std::invalid_argument("OR^U requires r=2");
            return est_max_U_r2(outcome, p[0], p[1], MaxUVariant::Symmetric);
    }
    throw std::logic_error("unknown OR kind");
}

VarianceResult var_closed_form(const DataVector& v, const std::vector<double>& p,
                               VarEstimator estimator) {
    check_probs(p);
    if (v.size() != p.size()) throw std::invalid_argument("dimension mismatch");

    switch (estimator) {
        case VarEstimator::Ht: {
            double f = max_value(v);
            return {f * f * (1.0 / product(p) - 1.0), true};
        }
        case VarEstimator::OrL: {
            if (v.size() == 2) {
                double denom1 = p[0] + p[1] - p[0] * p[1];
                if (v[0] == 1.0 && v[1] == 1.0) return {1.0 / denom1 - 1.0, true};
                if (v[0] + v[1] == 1.0) {
                    double pa = v[0] == 1.0 ? p[0] : p[1];
                    double pb = v[0] == 1.0 ? p[1] : p[0];
                    double e1 = 1.0 / denom1;
                    double e2 = 1.0 / (pa * denom1);
                    double var = (1.0 - pa) + pa * (1.0 - pb) * (e1 - 1.0) * (e1 - 1.0) +
                                 pa * pb * (e2 - 1.0) * (e2 - 1.0);
                    return {var, true};
                }
                if (v[0] == 0.0 && v[1] == 0.0) return {0.0, true};
            }
            break;
        }
        default:
            break;
    }

    // No published closed form: fall back to exact enumeration.
    SamplingSpec spec{ObliviousPoisson{p}};
    EstimatorFn fn;
    switch (estimator) {
        case VarEstimator::Ht:
            fn = [&p](const Outcome& o) { return est_ht(o, p, FunctionTag::Max); };
            break;
        case VarEstimator::OrL:
            fn = [&p](const Outcome& o) { return est_or(o, p, OrKind::L); };
            break;
        case VarEstimator::OrU:
            fn = [&p](const Outcome& o) { return est_or(o, p, OrKind::U); };
            break;
        case VarEstimator::MaxLr2:
            fn = [&p](const Outcome& o) { return est_max_L_r2(o, p[0], p[1]); };
            break;
        case VarEstimator::MaxUr2:
            fn = [&p](const Outcome& o) {
                return est_max_U_r2(o, p[0], p[1], MaxUVariant::Symmetric);
            };
            break;
    }
    return {exact_moments(fn, spec, v).variance, false};
}

}  // namespace samplest
