#include "samplest/solver.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

namespace samplest {

namespace {

constexpr double kAssignTol = 1e-9;
constexpr double kResidualTol = 1e-10;

bool is_binary(const DataVector& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0 || x == 1.0; });
}

}  // namespace

bool OutcomeClass::operator==(const OutcomeClass& other) const {
    return sampled == other.sampled && values == other.values;
}

bool OutcomeClass::operator<(const OutcomeClass& other) const {
    if (sampled != other.sampled) return sampled < other.sampled;
    return values < other.values;
}

std::string OutcomeClass::label() const {
    std::ostringstream out;
    out << "S={";
    for (size_t i = 0; i < sampled.size(); ++i) out << (i ? "," : "") << sampled[i] + 1;
    out << "};v=(";
    for (size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i];
    out << ")";
    return out.str();
}

void FiniteProblem::validate() const {
    scheme.validate();
    if (domain.empty()) throw std::invalid_argument("empty domain");
    if (f.size() != domain.size()) throw std::invalid_argument("f/domain size mismatch");
    const size_t r = domain.front().size();
    for (const DataVector& v : domain) {
        if (v.size() != r) throw std::invalid_argument("ragged domain");
        for (double x : v)
            if (!(x >= 0.0)) throw std::invalid_argument("negative domain value");
    }
    for (double x : f)
        if (!(x >= 0.0)) throw std::invalid_argument("negative target value");
    if (scheme.is_weighted()) {
        for (const DataVector& v : domain)
            if (!is_binary(v))
                throw std::invalid_argument("weighted schemes supported on binary domains only");
    }
    if (!scheme.is_weighted() && !scheme.is_oblivious())
        throw std::invalid_argument("bottom-k schemes have no finite outcome-class enumeration");
}

std::vector<double> FiniteProblem::effective_p() const {
    if (scheme.is_oblivious()) return scheme.probabilities();
    std::vector<double> p;
    for (double t : scheme.thresholds()) p.push_back(std::min(1.0, 1.0 / t));
    return p;
}

ClassEnumeration enumerate_outcome_classes(const FiniteProblem& problem) {
    problem.validate();
    const std::vector<double> p = problem.effective_p();
    const int r = static_cast<int>(problem.domain.front().size());
    if (static_cast<size_t>(r) != p.size()) throw std::invalid_argument("dimension mismatch");
    const size_t nv = problem.domain.size();
    // Known seeds map classes bijectively onto the oblivious ones.
    const bool seed_cells = problem.scheme.is_oblivious() || problem.scheme.seeds_visible;

    std::map<OutcomeClass, size_t> index;
    std::vector<std::vector<double>> rows;  // per class, per vector
    auto add = [&](OutcomeClass cls, size_t j, double pr) {
        auto [it, fresh] = index.emplace(std::move(cls), rows.size());
        if (fresh) rows.emplace_back(nv, 0.0);
        rows[it->second][j] += pr;
    };

    for (size_t j = 0; j < nv; ++j) {
        const DataVector& v = problem.domain[j];
        for (unsigned mask = 0; mask < (1u << r); ++mask) {
            OutcomeClass cls;
            double pr = 1.0;
            bool possible = true;
            for (int i = 0; i < r; ++i) {
                const bool in = mask & (1u << i);
                if (seed_cells) {
                    pr *= in ? p[static_cast<size_t>(i)] : 1.0 - p[static_cast<size_t>(i)];
                    if (in) {
                        cls.sampled.push_back(i);
                        cls.values.push_back(v[static_cast<size_t>(i)]);
                    }
                } else {
                    // Unknown seeds: only positive entries can be seen,
                    // and the sample carries no further information.
                    if (in && v[static_cast<size_t>(i)] == 0.0) {
                        possible = false;
                        break;
                    }
                    if (v[static_cast<size_t>(i)] > 0.0)
                        pr *= in ? p[static_cast<size_t>(i)] : 1.0 - p[static_cast<size_t>(i)];
                    if (in) {
                        cls.sampled.push_back(i);
                        cls.values.push_back(v[static_cast<size_t>(i)]);
                    }
                }
            }
            if (possible && pr > 0.0) add(std::move(cls), j, pr);
        }
    }

    ClassEnumeration out;
    out.n_vectors = nv;
    out.classes.resize(rows.size());
    for (const auto& [cls, c] : index) out.classes[c] = cls;
    out.prob.reserve(rows.size() * nv);
    for (const auto& row : rows) out.prob.insert(out.prob.end(), row.begin(), row.end());
    return out;
}

OrderSpec OrderSpec::total(std::vector<std::size_t> ranking) {
    OrderSpec o;
    o.kind = Kind::Total;
    o.ranking = std::move(ranking);
    return o;
}

OrderSpec OrderSpec::keyed(std::function<double(const DataVector&)> score) {
    OrderSpec o;
    o.kind = Kind::Keyed;
    o.score = std::move(score);
    return o;
}

OrderSpec OrderSpec::partition(std::vector<std::vector<std::size_t>> batches) {
    OrderSpec o;
    o.kind = Kind::Partition;
    o.batches = std::move(batches);
    return o;
}

double EstimatorTable::estimate_of(const OutcomeClass& cls) const {
    for (size_t c = 0; c < classes.size(); ++c)
        if (classes[c] == cls) return estimates[c];
    throw std::invalid_argument("unknown outcome class");
}

namespace {

std::vector<std::vector<size_t>> order_groups(const FiniteProblem& problem,
                                              const OrderSpec& order) {
    const size_t n = problem.domain.size();
    std::vector<std::vector<size_t>> groups;
    switch (order.kind) {
        case OrderSpec::Kind::Total: {
            std::vector<bool> seen(n, false);
            for (size_t j : order.ranking) {
                if (j >= n || seen[j]) throw std::invalid_argument("ranking is not a permutation");
                seen[j] = true;
                groups.push_back({j});
            }
            if (order.ranking.size() != n)
                throw std::invalid_argument("ranking is not a permutation");
            return groups;
        }
        case OrderSpec::Kind::Keyed: {
            std::vector<size_t> idx(n);
            std::iota(idx.begin(), idx.end(), 0);
            std::vector<double> s(n);
            for (size_t j = 0; j < n; ++j) s[j] = order.score(problem.domain[j]);
            std::stable_sort(idx.begin(), idx.end(),
                             [&](size_t a, size_t b) { return s[a] < s[b]; });
            for (size_t j : idx) {
                if (!groups.empty() && s[groups.back().front()] == s[j])
                    groups.back().push_back(j);
                else
                    groups.push_back({j});
            }
            return groups;
        }
        case OrderSpec::Kind::Partition: {
            std::vector<bool> seen(n, false);
            for (const auto& batch : order.batches) {
                for (size_t j : batch) {
                    if (j >= n || seen[j])
                        throw std::invalid_argument("batches must partition the domain");
                    seen[j] = true;
                }
                groups.push_back(batch);
            }
            if (std::find(seen.begin(), seen.end(), false) != seen.end())
                throw std::invalid_argument("batches must partition the domain");
            return groups;
        }
    }
    throw std::logic_error("unknown order kind");
}

void finish_table(EstimatorTable& table, const ClassEnumeration& enu,
                  const FiniteProblem& problem) {
    double worst = 0.0;
    for (size_t j = 0; j < problem.domain.size(); ++j) {
        double mean = 0.0;
        for (size_t c = 0; c < enu.classes.size(); ++c) mean += enu.at(c, j) * table.estimates[c];
        worst = std::max(worst, std::abs(mean - problem.f[j]));
    }
    table.max_residual = worst;
}

/// min x^T diag(w) x  subject to  E x = e,  A x <= b  (w > 0).
/// Dense active-set on the KKT system; tiny problems only.
struct QpResult {
    bool ok = false;
    std::vector<double> x;
    double kkt_residual = 0.0;
};

QpResult solve_qp(const std::vector<double>& w, const Eigen::MatrixXd& E,
                  const Eigen::VectorXd& e, const Eigen::MatrixXd& A,
                  const Eigen::VectorXd& b) {
    const Eigen::Index n = static_cast<Eigen::Index>(w.size());
    const Eigen::Index me = E.rows(), mi = A.rows();
    std::vector<bool> active(static_cast<size_t>(mi), false);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n), lambda = Eigen::VectorXd::Zero(mi);
    QpResult result;
    for (int iter = 0; iter < 500; ++iter) {
        std::vector<Eigen::Index> act;
        for (Eigen::Index k = 0; k < mi; ++k)
            if (active[static_cast<size_t>(k)]) act.push_back(k);
        const Eigen::Index ma = static_cast<Eigen::Index>(act.size());
        const Eigen::Index dim = n + me + ma;
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim, dim);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
        for (Eigen::Index i = 0; i < n; ++i) kkt(i, i) = 2.0 * w[static_cast<size_t>(i)];
        kkt.block(n, 0, me, n) = E;
        kkt.block(0, n, n, me) = E.transpose();
        rhs.segment(n, me) = e;
        for (Eigen::Index k = 0; k < ma; ++k) {
            kkt.block(n + me + k, 0, 1, n) = A.row(act[static_cast<size_t>(k)]);
            kkt.block(0, n + me + k, n, 1) = A.row(act[static_cast<size_t>(k)]).transpose();
            rhs(n + me + k) = b(act[static_cast<size_t>(k)]);
        }

        Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
        Eigen::VectorXd sol;
        if (lu.isInvertible()) {
            sol = lu.solve(rhs);
        } else {
            sol = kkt.completeOrthogonalDecomposition().solve(rhs);
            // Rank-deficient constraint rows: inconsistent means the
            // active constraints (with the equalities) are infeasible.
            if ((kkt * sol - rhs).lpNorm<Eigen::Infinity>() > 1e-8) return result;
        }
        x = sol.head(n);
        lambda.setZero();
        for (Eigen::Index k = 0; k < ma; ++k) lambda(act[static_cast<size_t>(k)]) = sol(n + me + k);

        // Drop an active constraint pulling the wrong way.
        Eigen::Index drop = -1;
        double most_negative = -1e-10;
        for (Eigen::Index k : act)
            if (lambda(k) < most_negative) {
                most_negative = lambda(k);
                drop = k;
            }
        if (drop >= 0) {
            active[static_cast<size_t>(drop)] = false;
            continue;
        }
        // Add the most violated inactive constraint.
        Eigen::Index add = -1;
        double worst = 1e-10;
        for (Eigen::Index k = 0; k < mi; ++k) {
            if (active[static_cast<size_t>(k)]) continue;
            double viol = A.row(k).dot(x) - b(k);
            if (viol > worst) {
                worst = viol;
                add = k;
            }
        }
        if (add >= 0) {
            active[static_cast<size_t>(add)] = true;
            continue;
        }

        double res = 0.0;
        Eigen::VectorXd grad = 2.0 * x.cwiseProduct(Eigen::Map<const Eigen::VectorXd>(
                                         w.data(), n)) +
                               E.transpose() * sol.segment(n, me) + A.transpose() * lambda;
        res = std::max(res, grad.lpNorm<Eigen::Infinity>());
        if (me > 0) res = std::max(res, (E * x - e).lpNorm<Eigen::Infinity>());
        for (Eigen::Index k = 0; k < mi; ++k) {
            res = std::max(res, std::max(0.0, A.row(k).dot(x) - b(k)));
            res = std::max(res, std::abs(lambda(k) * (A.row(k).dot(x) - b(k))));
        }
        if (res > 1e-7) return result;
        result.ok = true;
        result.kkt_residual = res;
        result.x.assign(x.data(), x.data() + n);
        return result;
    }
    return result;  // cycling guard tripped
}

struct SolveState {
    ClassEnumeration enu;
    std::vector<double> est;
    std::vector<bool> assigned;

    double assigned_mean(size_t j) const {
        double m = 0.0;
        for (size_t c = 0; c < enu.classes.size(); ++c)
            if (assigned[c]) m += enu.at(c, j) * est[c];
        return m;
    }
};

EstimatorTable make_table(const SolveState& state) {
    EstimatorTable table;
    table.classes = state.enu.classes;
    table.estimates = state.est;
    return table;
}

void check_keyed_group(const SolveState& state, const std::vector<size_t>& group) {
    if (group.size() < 2) return;
    for (size_t c = 0; c < state.enu.classes.size(); ++c) {
        if (state.assigned[c]) continue;
        int hits = 0;
        for (size_t j : group)
            if (state.enu.at(c, j) > 0.0) ++hits;
        if (hits > 1) throw std::invalid_argument("order does not determine phi");
    }
}

}  // namespace

EstimatorTable solve_order(const FiniteProblem& problem, const OrderSpec& order) {
    if (order.kind == OrderSpec::Kind::Partition)
        throw std::invalid_argument("solve_order takes a total or keyed order");
    SolveState state{enumerate_outcome_classes(problem), {}, {}};
    const size_t nc = state.enu.classes.size();
    state.est.assign(nc, 0.0);
    state.assigned.assign(nc, false);

    EstimatorTable table;
    bool negative = false;
    for (const auto& group : order_groups(problem, order)) {
        if (order.kind == OrderSpec::Kind::Keyed) check_keyed_group(state, group);
        for (size_t j : group) {
            double f0 = state.assigned_mean(j);
            double pr = 0.0;
            for (size_t c = 0; c < nc; ++c)
                if (!state.assigned[c]) pr += state.enu.at(c, j);
            if (pr == 0.0) {
                if (std::abs(problem.f[j] - f0) > kAssignTol) {
                    table = make_table(state);
                    table.status = EstimatorTable::Status::Failure;
                    table.offending_vector = static_cast<std::ptrdiff_t>(j);
                    return table;
                }
                continue;
            }
            double x = (problem.f[j] - f0) / pr;
            for (size_t c = 0; c < nc; ++c) {
                if (state.assigned[c] || state.enu.at(c, j) == 0.0) continue;
                state.est[c] = x;
                state.assigned[c] = true;
                if (x < -kAssignTol && !negative) {
                    negative = true;
                    table.offending_vector = static_cast<std::ptrdiff_t>(j);
                    table.offending_class = static_cast<std::ptrdiff_t>(c);
                    table.offending_value = x;
                }
            }
        }
    }
    auto diag = table;  // negativity bookkeeping collected above
    table = make_table(state);
    table.offending_vector = diag.offending_vector;
    table.offending_class = diag.offending_class;
    table.offending_value = diag.offending_value;
    table.status =
        negative ? EstimatorTable::Status::NegativityViolated : EstimatorTable::Status::Ok;
    finish_table(table, state.enu, problem);
    return table;
}

namespace {

/// Shared batch step for the nonnegative variants: assign the classes
/// newly determined by `batch`, constrained by the vectors in `later`.
/// Returns false on an infeasible system.
bool solve_batch(SolveState& state, const FiniteProblem& problem,
                 const std::vector<size_t>& batch, const std::vector<size_t>& later,
                 bool symmetric) {
    const size_t nc = state.enu.classes.size();
    std::vector<size_t> fresh;
    for (size_t c = 0; c < nc; ++c) {
        if (state.assigned[c]) continue;
        for (size_t j : batch)
            if (state.enu.at(c, j) > 0.0) {
                fresh.push_back(c);
                break;
            }
    }
    if (fresh.empty()) {
        for (size_t j : batch)
            if (std::abs(problem.f[j] - state.assigned_mean(j)) > kAssignTol) return false;
        return true;
    }
    const Eigen::Index n = static_cast<Eigen::Index>(fresh.size());

    std::vector<double> w(fresh.size(), 0.0);
    for (size_t k = 0; k < fresh.size(); ++k)
        for (size_t j : batch) w[k] += state.enu.at(fresh[k], j);

    std::vector<Eigen::RowVectorXd> eq_rows;
    std::vector<double> eq_rhs;
    for (size_t j : batch) {
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
        for (size_t k = 0; k < fresh.size(); ++k) row(static_cast<Eigen::Index>(k)) =
            state.enu.at(fresh[k], j);
        eq_rows.push_back(row);
        eq_rhs.push_back(problem.f[j] - state.assigned_mean(j));
    }
    if (symmetric) {
        // Tie classes in the same coordinate-permutation orbit.
        const size_t r = problem.domain.front().size();
        std::vector<int> perm(r);
        std::iota(perm.begin(), perm.end(), 0);
        std::map<OutcomeClass, size_t> pos;
        for (size_t k = 0; k < fresh.size(); ++k) pos[state.enu.classes[fresh[k]]] = k;
        do {
            for (size_t k = 0; k < fresh.size(); ++k) {
                const OutcomeClass& cls = state.enu.classes[fresh[k]];
                std::vector<std::pair<int, double>> mapped;
                for (size_t t = 0; t < cls.sampled.size(); ++t)
                    mapped.emplace_back(perm[static_cast<size_t>(cls.sampled[t])], cls.values[t]);
                std::sort(mapped.begin(), mapped.end());
                OutcomeClass image;
                for (auto& [i, v] : mapped) {
                    image.sampled.push_back(i);
                    image.values.push_back(v);
                }
                auto it = pos.find(image);
                if (it == pos.end() || it->second <= k) continue;
                Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
                row(static_cast<Eigen::Index>(k)) = 1.0;
                row(static_cast<Eigen::Index>(it->second)) = -1.0;
                eq_rows.push_back(row);
                eq_rhs.push_back(0.0);
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    }

    std::vector<Eigen::RowVectorXd> in_rows;
    std::vector<double> in_rhs;
    for (size_t j : later) {
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
        bool any = false;
        for (size_t k = 0; k < fresh.size(); ++k) {
            double pr = state.enu.at(fresh[k], j);
            row(static_cast<Eigen::Index>(k)) = pr;
            any = any || pr > 0.0;
        }
        double cap = problem.f[j] - state.assigned_mean(j);
        if (!any) {
            if (cap < -kAssignTol) return false;  // already over budget with nothing left
            continue;
        }
        in_rows.push_back(row);
        in_rhs.push_back(cap);
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
        row(k) = -1.0;
        in_rows.push_back(row);
        in_rhs.push_back(0.0);
    }

    Eigen::MatrixXd E(static_cast<Eigen::Index>(eq_rows.size()), n);
    Eigen::VectorXd e(static_cast<Eigen::Index>(eq_rows.size()));
    for (size_t k = 0; k < eq_rows.size(); ++k) {
        E.row(static_cast<Eigen::Index>(k)) = eq_rows[k];
        e(static_cast<Eigen::Index>(k)) = eq_rhs[k];
    }
    Eigen::MatrixXd A(static_cast<Eigen::Index>(in_rows.size()), n);
    Eigen::VectorXd b(static_cast<Eigen::Index>(in_rows.size()));
    for (size_t k = 0; k < in_rows.size(); ++k) {
        A.row(static_cast<Eigen::Index>(k)) = in_rows[k];
        b(static_cast<Eigen::Index>(k)) = in_rhs[k];
    }

    QpResult qp = solve_qp(w, E, e, A, b);
    if (!qp.ok) return false;
    for (size_t k = 0; k < fresh.size(); ++k) {
        state.est[fresh[k]] = std::max(0.0, qp.x[k]);
        state.assigned[fresh[k]] = true;
    }
    return true;
}

EstimatorTable solve_nonneg_impl(const FiniteProblem& problem, const OrderSpec& order,
                                 bool per_vector, bool symmetric) {
    SolveState state{enumerate_outcome_classes(problem), {}, {}};
    const size_t nc = state.enu.classes.size();
    state.est.assign(nc, 0.0);
    state.assigned.assign(nc, false);

    auto groups = order_groups(problem, order);
    std::vector<size_t> flat;
    for (const auto& g : groups) flat.insert(flat.end(), g.begin(), g.end());

    size_t done = 0;
    for (const auto& group : groups) {
        if (per_vector && order.kind == OrderSpec::Kind::Keyed) check_keyed_group(state, group);
        if (per_vector) {
            for (size_t j : group) {
                ++done;
                std::vector<size_t> later(flat.begin() + static_cast<std::ptrdiff_t>(done),
                                          flat.end());
                if (!solve_batch(state, problem, {j}, later, false)) {
                    EstimatorTable table = make_table(state);
                    table.status = EstimatorTable::Status::Failure;
                    table.offending_vector = static_cast<std::ptrdiff_t>(j);
                    return table;
                }
            }
        } else {
            done += group.size();
            std::vector<size_t> later(flat.begin() + static_cast<std::ptrdiff_t>(done),
                                      flat.end());
            if (!solve_batch(state, problem, group, later, symmetric)) {
                EstimatorTable table = make_table(state);
                table.status = EstimatorTable::Status::Failure;
                table.offending_vector = static_cast<std::ptrdiff_t>(group.front());
                return table;
            }
        }
    }
    EstimatorTable table = make_table(state);
    table.status = EstimatorTable::Status::Ok;
    finish_table(table, state.enu, problem);
    if (table.max_residual > 100 * kResidualTol) table.status = EstimatorTable::Status::Failure;
    return table;
}

}  // namespace

EstimatorTable solve_order_nonneg(const FiniteProblem& problem, const OrderSpec& order) {
    if (order.kind == OrderSpec::Kind::Partition)
        throw std::invalid_argument("solve_order_nonneg takes a total or keyed order");
    return solve_nonneg_impl(problem, order, true, false);
}

EstimatorTable solve_partition(const FiniteProblem& problem, const OrderSpec& partition,
                               bool symmetric) {
    if (partition.kind != OrderSpec::Kind::Partition)
        throw std::invalid_argument("solve_partition takes a partition order");
    return solve_nonneg_impl(problem, partition, false, symmetric);
}

}  // namespace samplest
