#include "samplest/weighted.hpp"

#include <algorithm>
#include <cmath>

#include "samplest/oracle.hpp"

namespace samplest {

namespace {

const SeedVector& require_seeds(const Outcome& outcome) {
    if (!outcome.seeds) throw std::invalid_argument("seeds unavailable");
    if (outcome.seeds->u.size() != static_cast<size_t>(outcome.r))
        throw std::invalid_argument("seed dimension mismatch");
    return *outcome.seeds;
}

void check_thresholds(const std::vector<double>& tau_star) {
    for (double t : tau_star)
        if (!(t > 0.0)) throw std::invalid_argument("threshold must be positive");
}

}  // namespace

Outcome map_binary_outcome(const Outcome& outcome, const std::vector<double>& p) {
    if (outcome.r != static_cast<int>(p.size())) throw std::invalid_argument("dimension mismatch");
    const SeedVector& seeds = require_seeds(outcome);
    for (double v : outcome.values)
        if (v != 1.0) throw std::invalid_argument("sampled values must be 1 on binary data");
    Outcome mapped;
    mapped.r = outcome.r;
    for (int i = 0; i < outcome.r; ++i) {
        if (outcome.contains(i)) {
            mapped.sampled.push_back(i);
            mapped.values.push_back(1.0);
        } else if (seeds.u[static_cast<size_t>(i)] <= p[static_cast<size_t>(i)]) {
            // Sampling would have picked a 1 here, so the value must be 0.
            mapped.sampled.push_back(i);
            mapped.values.push_back(0.0);
        }
    }
    return mapped;
}

double est_or_ws(const Outcome& outcome, const std::vector<double>& p, OrKind kind) {
    return est_or(map_binary_outcome(outcome, p), p, kind);
}

double est_or_ws_table(const Outcome& outcome, double p1, double p2, OrKind kind) {
    if (outcome.r != 2) throw std::invalid_argument("table requires r=2");
    const SeedVector& seeds = require_seeds(outcome);
    const double u1 = seeds.u[0], u2 = seeds.u[1];
    const bool s1 = outcome.contains(0), s2 = outcome.contains(1);
    const bool empty = !s1 && !s2;

    switch (kind) {
        case OrKind::Ht:
            return (!empty && u1 <= p1 && u2 <= p2) ? 1.0 / (p1 * p2) : 0.0;
        case OrKind::L: {
            double denom1 = p1 + p2 - p1 * p2;
            if (empty) return 0.0;
            if (s1 && s2) return 1.0 / denom1;
            if (s1) return u2 <= p2 ? 1.0 / (p1 * denom1) : 1.0 / denom1;
            return u1 <= p1 ? 1.0 / (p2 * denom1) : 1.0 / denom1;
        }
        case OrKind::U: {
            double slack = 1.0 + std::max(0.0, 1.0 - p1 - p2);
            if (empty) return 0.0;
            if (s1 && !s2 && u2 > p2) return 1.0 / (p1 * slack);
            if (s2 && !s1 && u1 > p1) return 1.0 / (p2 * slack);
            double b1 = s1 ? 1.0 : 0.0, b2 = s2 ? 1.0 : 0.0;
            return (1.0 - (b1 * (1.0 - p2) + b2 * (1.0 - p1)) / slack) / (p1 * p2);
        }
    }
    throw std::logic_error("unknown OR kind");
}

double est_max_ht_ws(const Outcome& outcome, const std::vector<double>& tau_star) {
    check_thresholds(tau_star);
    if (outcome.r != static_cast<int>(tau_star.size()))
        throw std::invalid_argument("dimension mismatch");
    if (outcome.sampled.empty()) return 0.0;
    const SeedVector& seeds = require_seeds(outcome);
    const double m = outcome.max_sampled();
    double pr = 1.0;
    for (int i = 0; i < outcome.r; ++i) {
        if (!outcome.contains(i) &&
            seeds.u[static_cast<size_t>(i)] * tau_star[static_cast<size_t>(i)] > m)
            return 0.0;  // an unsampled entry could still exceed m
        pr *= std::min(1.0, m / tau_star[static_cast<size_t>(i)]);
    }
    return m / pr;
}

DataVector phi_max_L_ws(const Outcome& outcome, const std::vector<double>& tau_star) {
    check_thresholds(tau_star);
    if (outcome.r != 2 || tau_star.size() != 2)
        throw std::invalid_argument("estimator requires r=2");
    switch (outcome.sampled.size()) {
        case 0:
            return {0.0, 0.0};
        case 1: {
            const SeedVector& seeds = require_seeds(outcome);
            int i = outcome.sampled[0], j = 1 - i;
            double v = outcome.values[0];
            DataVector phi(2, v);
            phi[static_cast<size_t>(j)] =
                std::min(seeds.u[static_cast<size_t>(j)] * tau_star[static_cast<size_t>(j)], v);
            return phi;
        }
        default:
            return {outcome.value_of(0), outcome.value_of(1)};
    }
}

double est_max_L_ws_from_phi(const DataVector& phi, const std::vector<double>& tau_star) {
    check_thresholds(tau_star);
    if (phi.size() != 2 || tau_star.size() != 2)
        throw std::invalid_argument("estimator requires r=2");
    if (phi[0] < 0.0 || phi[1] < 0.0) throw std::invalid_argument("negative entry");

    // Order so a >= b; ta, tb are the matching thresholds.
    size_t ia = phi[0] >= phi[1] ? 0 : 1;
    const double a = phi[ia], b = phi[1 - ia];
    const double ta = tau_star[ia], tb = tau_star[1 - ia];
    if (a == 0.0) return 0.0;

    if (b >= tb) return b + (a - b) / std::min(1.0, a / ta);
    if (a >= ta) return a;

    const double s = ta + tb;
    // The log regimes need b > 0; when S is nonempty every entry of the
    // determining vector is positive, so b = 0 cannot be reached.
    if (b <= 0.0) throw std::invalid_argument("interior determining vector needs b > 0");
    if (a <= tb) {
        // Both entries below their thresholds.
        return ta * tb / (s - a) +
               ta * tb * (ta - a) / (a * s) * std::log((s - b) * a / (b * (s - a))) +
               (a - b) * ta * tb * (ta - a) / (a * (s - b) * (s - a));
    }
    // b < tb < a < ta. The log argument is fixed by the antiderivative
    // evaluated at the lower limit b = tb (where the integral vanishes).
    return s - ta * tb / a +
           ta * tb * (ta - a) / (a * s) * std::log((s - b) * tb / (b * ta)) +
           tb * (ta - a) * (tb - b) / ((s - b) * a);
}

double est_max_L_ws_r2(const Outcome& outcome, const std::vector<double>& tau_star) {
    return est_max_L_ws_from_phi(phi_max_L_ws(outcome, tau_star), tau_star);
}

VarianceResult var_max_ws(const DataVector& v, const std::vector<double>& tau_star,
                          WeightedMaxEstimator estimator) {
    check_thresholds(tau_star);
    if (v.size() != tau_star.size()) throw std::invalid_argument("dimension mismatch");

    if (estimator == WeightedMaxEstimator::Ht) {
        double m = max_value(v);
        if (m == 0.0) return {0.0, true};
        double pr = 1.0;
        for (double t : tau_star) pr *= std::min(1.0, m / t);
        return {m * m * (1.0 / pr - 1.0), true};
    }
    if (v.size() != 2) throw std::invalid_argument("variance quadrature requires r=2");
    auto fn = [&tau_star](const Outcome& o) { return est_max_L_ws_r2(o, tau_star); };
    MomentReport report = quad_moments(fn, tau_star, v, 1e-9);
    return {report.variance, false};
}

}  // namespace samplest
