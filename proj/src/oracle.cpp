#include "samplest/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "samplest/sampling.hpp"

namespace samplest {

namespace {

// Compensated (Kahan) accumulator so results do not depend on
// evaluation order.
struct Kahan {
    double sum = 0.0;
    double carry = 0.0;
    void add(double x) {
        double y = x - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

Outcome outcome_from_mask(const DataVector& v, unsigned mask,
                          const std::optional<SeedVector>& seeds) {
    Outcome out;
    out.r = static_cast<int>(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        if (mask & (1u << i)) {
            out.sampled.push_back(static_cast<int>(i));
            out.values.push_back(v[i]);
        }
    }
    out.seeds = seeds;
    return out;
}

MomentReport moments_from(const std::vector<std::pair<double, double>>& prob_est) {
    Kahan total, mean, second;
    for (auto [pr, est] : prob_est) {
        total.add(pr);
        mean.add(pr * est);
        second.add(pr * est * est);
    }
    if (std::abs(total.sum - 1.0) > 1e-12)
        throw std::logic_error("outcome probabilities do not sum to 1");
    MomentReport rep;
    rep.mean = mean.sum;
    rep.variance = std::max(0.0, second.sum - mean.sum * mean.sum);
    rep.method = MomentReport::Method::Exact;
    return rep;
}

}  // namespace

MomentReport exact_moments(const EstimatorFn& estimator, const SamplingSpec& spec,
                           const DataVector& v) {
    spec.validate();
    const int r = spec.dimension();
    if (r == 0 || static_cast<size_t>(r) != v.size())
        throw std::invalid_argument("dimension mismatch");

    std::vector<std::pair<double, double>> prob_est;
    if (spec.is_oblivious()) {
        const auto& p = spec.probabilities();
        for (unsigned mask = 0; mask < (1u << r); ++mask) {
            double pr = 1.0;
            for (int i = 0; i < r; ++i)
                pr *= (mask & (1u << i)) ? p[static_cast<size_t>(i)] : 1.0 - p[static_cast<size_t>(i)];
            prob_est.emplace_back(pr, estimator(outcome_from_mask(v, mask, std::nullopt)));
        }
        return moments_from(prob_est);
    }
    if (spec.is_weighted()) {
        for (double x : v)
            if (x != 0.0 && x != 1.0)
                throw std::invalid_argument("use quadrature");
        const auto& tau = spec.thresholds();
        std::vector<double> p(tau.size());
        for (size_t i = 0; i < tau.size(); ++i) p[i] = std::min(1.0, 1.0 / tau[i]);
        // Enumerate the seed cells u_i <= p_i vs u_i > p_i with an
        // in-cell representative seed.
        for (unsigned cell = 0; cell < (1u << r); ++cell) {
            double pr = 1.0;
            SeedVector seeds;
            seeds.u.resize(static_cast<size_t>(r));
            unsigned sample_mask = 0;
            for (int i = 0; i < r; ++i) {
                size_t si = static_cast<size_t>(i);
                bool low = (cell & (1u << i)) != 0;
                pr *= low ? p[si] : 1.0 - p[si];
                seeds.u[si] = low ? p[si] * 0.5 : p[si] + (1.0 - p[si]) * 0.5;
                if (v[si] == 1.0 && low) sample_mask |= 1u << i;
            }
            if (pr == 0.0) continue;
            Outcome out = outcome_from_mask(
                v, sample_mask,
                spec.seeds_visible ? std::optional<SeedVector>(seeds) : std::nullopt);
            prob_est.emplace_back(pr, estimator(out));
        }
        return moments_from(prob_est);
    }
    throw std::invalid_argument("unsupported scheme for exact enumeration");
}

namespace {

// 7- and 15-point Gauss-Legendre nodes/weights on [-1,1].
constexpr std::array<double, 7> kGl7X = {
    -0.9491079123427585, -0.7415311855993945, -0.4058451513773972, 0.0,
    0.4058451513773972, 0.7415311855993945, 0.9491079123427585};
constexpr std::array<double, 7> kGl7W = {
    0.1294849661688697, 0.2797053914892766, 0.3818300505051189, 0.4179591836734694,
    0.3818300505051189, 0.2797053914892766, 0.1294849661688697};
constexpr std::array<double, 15> kGl15X = {
    -0.9879925180204854, -0.9372733924007060, -0.8482065834104272, -0.7244177313601701,
    -0.5709721726085388, -0.3941513470775634, -0.2011940939974345, 0.0,
    0.2011940939974345, 0.3941513470775634, 0.5709721726085388, 0.7244177313601701,
    0.8482065834104272, 0.9372733924007060, 0.9879925180204854};
constexpr std::array<double, 15> kGl15W = {
    0.0307532419961173, 0.0703660474881081, 0.1071592204671719, 0.1395706779261543,
    0.1662692058169939, 0.1861610000155622, 0.1984314853271116, 0.2025782419255613,
    0.1984314853271116, 0.1861610000155622, 0.1662692058169939, 0.1395706779261543,
    0.1071592204671719, 0.0703660474881081, 0.0307532419961173};

struct Moment2 {
    double first = 0.0;
    double second = 0.0;
};

// Probability-space weight of a node in graded coordinates. The weight
// multiplies the quadrature weight so both moments see the same measure.
template <size_t N>
Moment2 tensor_rule(const std::function<double(double, double)>& f,
                    const std::function<double(double, double)>& density, double x0, double x1,
                    double y0, double y1, const std::array<double, N>& nodes,
                    const std::array<double, N>& weights) {
    double hx = 0.5 * (x1 - x0), cx = 0.5 * (x0 + x1);
    double hy = 0.5 * (y1 - y0), cy = 0.5 * (y0 + y1);
    Kahan first, second;
    for (size_t i = 0; i < N; ++i) {
        for (size_t j = 0; j < N; ++j) {
            double x = cx + hx * nodes[i], y = cy + hy * nodes[j];
            double val = f(x, y);
            double w = weights[i] * weights[j] * hx * hy * density(x, y);
            first.add(w * val);
            second.add(w * val * val);
        }
    }
    return {first.sum, second.sum};
}

struct QuadState {
    const std::function<double(double, double)>* f = nullptr;
    const std::function<double(double, double)>* density = nullptr;
    double tol_per_area = 0.0;
    long evals = 0;
    long budget = 0;
};

Moment2 integrate_cell(QuadState& st, double x0, double x1, double y0, double y1, int depth) {
    Moment2 coarse = tensor_rule(*st.f, *st.density, x0, x1, y0, y1, kGl7X, kGl7W);
    Moment2 fine = tensor_rule(*st.f, *st.density, x0, x1, y0, y1, kGl15X, kGl15W);
    st.evals += 7 * 7 + 15 * 15;
    if (st.evals > st.budget) throw std::runtime_error("quadrature budget exhausted");
    double area = (x1 - x0) * (y1 - y0);
    double err = std::max(std::abs(fine.first - coarse.first),
                          std::abs(fine.second - coarse.second));
    if (err <= st.tol_per_area * area || depth >= 24) return fine;
    double xm = 0.5 * (x0 + x1), ym = 0.5 * (y0 + y1);
    Moment2 acc;
    for (auto [a, b, c, d] : {std::array<double, 4>{x0, xm, y0, ym},
                              std::array<double, 4>{xm, x1, y0, ym},
                              std::array<double, 4>{x0, xm, ym, y1},
                              std::array<double, 4>{xm, x1, ym, y1}}) {
        Moment2 part = integrate_cell(st, a, b, c, d, depth + 1);
        acc.first += part.first;
        acc.second += part.second;
    }
    return acc;
}

}  // namespace

MomentReport quad_moments(const EstimatorFn& estimator, const std::vector<double>& tau_star,
                          const DataVector& v, double tol) {
    if (v.size() != 2 || tau_star.size() != 2)
        throw std::invalid_argument("quadrature supports r=2 only");
    for (double t : tau_star)
        if (!(t > 0.0)) throw std::invalid_argument("threshold must be positive");

    // Integrate in graded coordinates u_i = t_i^5. Some estimators grow
    // like log(1/u_i) near u_i = 0; the t^4 Jacobian absorbs that
    // singularity so the cells touching the edge still converge.
    auto f = std::function<double(double, double)>([&](double t1, double t2) {
        double u1 = t1 * t1 * t1 * t1 * t1;
        double u2 = t2 * t2 * t2 * t2 * t2;
        SeedVector seeds{{u1, u2}};
        return estimator(sample_pps(v, tau_star, seeds, /*seeds_visible=*/true));
    });
    auto density = std::function<double(double, double)>([](double t1, double t2) {
        return 25.0 * (t1 * t1 * t1 * t1) * (t2 * t2 * t2 * t2);
    });

    // Split at the sampling boundaries u_i = v_i/tau_i* and the
    // determining-vector kinks u_i = v_j/tau_i*; the integrand is
    // smooth within the resulting cells.
    auto cuts = [&](size_t i) {
        std::vector<double> c = {0.0, 1.0};
        for (double val : v) {
            double b = val / tau_star[i];
            if (b > 0.0 && b < 1.0) c.push_back(std::pow(b, 0.2));
        }
        std::sort(c.begin(), c.end());
        c.erase(std::unique(c.begin(), c.end()), c.end());
        return c;
    };
    std::vector<double> xs = cuts(0), ys = cuts(1);

    QuadState st;
    st.f = &f;
    st.density = &density;
    st.tol_per_area = 0.25 * tol;
    st.budget = 4'000'000;
    Kahan first, second;
    for (size_t i = 0; i + 1 < xs.size(); ++i) {
        for (size_t j = 0; j + 1 < ys.size(); ++j) {
            Moment2 m = integrate_cell(st, xs[i], xs[i + 1], ys[j], ys[j + 1], 0);
            first.add(m.first);
            second.add(m.second);
        }
    }
    MomentReport rep;
    rep.mean = first.sum;
    rep.variance = std::max(0.0, second.sum - first.sum * first.sum);
    rep.method = MomentReport::Method::Quadrature;
    rep.tolerance = tol;
    return rep;
}

MomentReport mc_moments(const EstimatorFn& estimator, const SamplingSpec& spec,
                        const DataVector& v, long trials, std::uint64_t salt) {
    if (trials < 2) throw std::invalid_argument("trials must be >= 2");
    spec.validate();
    const int r = spec.dimension();
    if (r == 0 || static_cast<size_t>(r) != v.size())
        throw std::invalid_argument("dimension mismatch");

    Kahan mean_acc, second_acc;
    for (long t = 0; t < trials; ++t) {
        SeedVector seeds;
        seeds.u.resize(static_cast<size_t>(r));
        for (int i = 0; i < r; ++i)
            seeds.u[static_cast<size_t>(i)] =
                hash_seed(salt + static_cast<std::uint64_t>(t), std::to_string(i));
        if (spec.coordination == Coordination::SharedSeed)
            std::fill(seeds.u.begin(), seeds.u.end(), seeds.u[0]);
        Outcome out = spec.is_oblivious()
                          ? sample_oblivious(v, spec.probabilities(), seeds, spec.seeds_visible)
                          : sample_pps(v, spec.thresholds(), seeds, spec.seeds_visible);
        double est = estimator(out);
        mean_acc.add(est);
        second_acc.add(est * est);
    }
    double n = static_cast<double>(trials);
    MomentReport rep;
    rep.mean = mean_acc.sum / n;
    rep.variance = std::max(0.0, (second_acc.sum - mean_acc.sum * mean_acc.sum / n) / (n - 1.0));
    rep.method = MomentReport::Method::MonteCarlo;
    rep.trials = trials;
    rep.stderr_mean = std::sqrt(rep.variance / n);
    return rep;
}

DominanceReport check_dominance(const EstimatorFn& est_a, const EstimatorFn& est_b,
                                const SamplingSpec& spec, const std::vector<DataVector>& grid,
                                double tol) {
    DominanceReport rep;
    for (size_t i = 0; i < grid.size(); ++i) {
        double va = exact_moments(est_a, spec, grid[i]).variance;
        double vb = exact_moments(est_b, spec, grid[i]).variance;
        if (va > vb + tol) rep.violations.push_back(i);
    }
    return rep;
}

MonotoneReport check_monotone(const EstimatorFn& estimator, const SamplingSpec& spec,
                              const DataVector& v, double tol) {
    if (!spec.is_oblivious())
        throw std::invalid_argument("monotonicity check supports oblivious schemes only");
    const int r = spec.dimension();
    std::vector<Outcome> outcomes;
    std::vector<ConsistentSet> sets;
    for (unsigned mask = 0; mask < (1u << r); ++mask) {
        outcomes.push_back(outcome_from_mask(v, mask, std::nullopt));
        sets.push_back(consistent_set(outcomes.back(), spec));
    }
    MonotoneReport rep;
    for (size_t a = 0; a < outcomes.size(); ++a) {
        for (size_t b = 0; b < outcomes.size(); ++b) {
            if (a == b || !sets[a].subset_of(sets[b])) continue;
            double ea = estimator(outcomes[a]);
            double eb = estimator(outcomes[b]);
            if (ea < eb - tol) rep.violations.push_back({outcomes[a], outcomes[b], ea, eb});
        }
    }
    return rep;
}

}  // namespace samplest
