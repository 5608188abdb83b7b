// Command-line front end: samplers, per-key estimates, distinct-count
// and max-dominance reports, the finite-domain solver, and the CSV
// datasets behind the experiment figures. Outputs are deterministic
// given (inputs, salt); re-runs are byte-identical.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "samplest/aggregates.hpp"
#include "samplest/oblivious.hpp"
#include "samplest/oracle.hpp"
#include "samplest/sampling.hpp"
#include "samplest/solver.hpp"
#include "samplest/weighted.hpp"

using namespace samplest;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitSolver = 4;

struct ParseFail : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Infeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

InstanceTable read_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseFail(path + ": cannot open");
    InstanceTable table;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (lineno == 1 && line == "key,value") continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ParseFail(path + ":" + std::to_string(lineno) + ": expected key,value");
        std::string key = line.substr(0, comma);
        double value = 0.0;
        try {
            size_t used = 0;
            value = std::stod(line.substr(comma + 1), &used);
            if (comma + 1 + used != line.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ParseFail(path + ":" + std::to_string(lineno) + ": bad value");
        }
        if (value < 0.0)
            throw ParseFail(path + ":" + std::to_string(lineno) + ": negative value");
        table.entries[key] = value;
    }
    return table;
}

void require_binary(const InstanceTable& t, const std::string& path) {
    for (const auto& [key, value] : t.entries)
        if (value != 1.0 && value != 0.0)
            throw ParseFail(path + ": instance must be binary (key " + key + ")");
}

// Key filter: plain string = prefix match, "re:<pattern>" = std::regex.
Selection make_selection(const std::string& sel) {
    if (sel.empty()) return nullptr;
    if (sel.rfind("re:", 0) == 0) {
        auto re = std::make_shared<std::regex>(sel.substr(3));
        return [re](const std::string& key) { return std::regex_search(key, *re); };
    }
    return [sel](const std::string& key) { return key.rfind(sel, 0) == 0; };
}

struct Output {
    std::ostringstream buf;
    std::string path;  // empty = stdout

    void config(const std::string& line) { buf << "# config: " << line << "\n"; }
    void row(const std::string& line) { buf << line << "\n"; }
    void flush() {
        if (path.empty()) {
            std::cout << buf.str();
        } else {
            std::ofstream out(path, std::ios::binary);
            if (!out) throw ParseFail(path + ": cannot write");
            out << buf.str();
        }
    }
};

KeyedSample sample_weighted_keys(const InstanceTable& instance, double tau,
                                 std::uint64_t salt) {
    KeyedSample s;
    s.instance_salt = salt;
    s.threshold = tau;
    for (const auto& [key, value] : instance.entries) {
        double u = hash_seed(salt, key);
        if (value > 0.0 && value >= u * tau)
            s.sampled.emplace(key, KeyedSample::Entry{value, u});
    }
    return s;
}

// ---- sample ----------------------------------------------------------

int cmd_sample(const std::string& instance_path, const std::string& scheme, double p,
               double tau, int k, const std::string& rank, std::uint64_t salt,
               const std::string& out_path) {
    InstanceTable instance = read_instance(instance_path);
    Output out;
    out.path = out_path;

    KeyedSample s;
    std::string extra;
    if (scheme == "poisson") {
        if (!(p > 0.0 && p <= 1.0)) throw ParseFail("--p must be in (0,1] for poisson");
        s = sample_poisson_keys(instance, {}, p, salt, false);
        extra = "p=" + fmt(p);
    } else if (scheme == "pps") {
        if (!(tau > 0.0)) throw ParseFail("--tau must be positive for pps");
        s = sample_weighted_keys(instance, tau, salt);
        extra = "tau=" + fmt(tau);
    } else if (scheme == "bottomk") {
        if (k < 1) throw ParseFail("--k must be >= 1 for bottomk");
        RankFamily family = rank == "exp" ? RankFamily::Exp : RankFamily::Pps;
        s = sample_bottomk(instance, k, family, salt);
        extra = "k=" + std::to_string(k) + " rank=" + rank +
                " threshold=" + fmt(s.threshold);
    } else {
        throw ParseFail("unknown scheme: " + scheme);
    }

    out.config("cmd=sample scheme=" + scheme + " " + extra + " salt=" + std::to_string(salt) +
               " input=" + instance_path);
    out.row("key,value,seed");
    for (const auto& [key, e] : s.sampled)
        out.row(key + "," + fmt(e.value) + "," + fmt(e.seed));
    out.flush();
    return kExitOk;
}

// ---- estimate --------------------------------------------------------

int cmd_estimate(const std::string& path1, const std::string& path2,
                 const std::vector<double>& p, const std::vector<double>& tau,
                 std::uint64_t salt, const std::string& selection_str,
                 const std::string& out_path) {
    if (p.empty() == tau.empty())
        throw ParseFail("give exactly one of --p p1,p2 or --tau t1,t2");
    if (!p.empty() && p.size() != 2) throw ParseFail("--p needs 2 values");
    if (!tau.empty() && tau.size() != 2) throw ParseFail("--tau needs 2 values");
    InstanceTable a = read_instance(path1), b = read_instance(path2);
    Selection selection = make_selection(selection_str);
    std::uint64_t salt1 = salt, salt2 = salt + 1;

    std::map<std::string, bool> keys;
    for (const auto& [key, v] : a.entries) keys[key] = true;
    for (const auto& [key, v] : b.entries) keys[key] = true;

    Output out;
    out.path = out_path;
    std::string mode = tau.empty() ? "p=" + fmt(p[0]) + "," + fmt(p[1])
                                   : "tau=" + fmt(tau[0]) + "," + fmt(tau[1]);
    out.config("cmd=estimate " + mode + " salt=" + std::to_string(salt) + " inputs=" +
               path1 + "," + path2 +
               (selection_str.empty() ? "" : " selection=" + selection_str));
    out.row("key,est_ht,est_l");

    for (const auto& [key, ignored] : keys) {
        if (selection && !selection(key)) continue;
        auto it_a = a.entries.find(key), it_b = b.entries.find(key);
        double v1 = it_a == a.entries.end() ? 0.0 : it_a->second;
        double v2 = it_b == b.entries.end() ? 0.0 : it_b->second;
        double u1 = hash_seed(salt1, key), u2 = hash_seed(salt2, key);

        Outcome o;
        double ht = 0.0, l = 0.0;
        if (tau.empty()) {
            o = sample_oblivious({v1, v2}, p, SeedVector{{u1, u2}}, false);
            ht = est_ht(o, p, FunctionTag::Max);
            l = est_max_L_r2(o, p[0], p[1]);
        } else {
            if (tau.size() != 2) throw ParseFail("--tau needs 2 values");
            o = sample_pps({v1, v2}, tau, SeedVector{{u1, u2}}, true);
            if (o.sampled.empty()) continue;
            ht = est_max_ht_ws(o, tau);
            l = est_max_L_ws_r2(o, tau);
        }
        if (o.sampled.empty()) continue;
        out.row(key + "," + fmt(ht) + "," + fmt(l));
    }
    out.flush();
    return kExitOk;
}

// ---- distinct --------------------------------------------------------

int cmd_distinct(const std::string& path1, const std::string& path2,
                 const std::string& scheme, double p, int k, const std::string& rank,
                 std::uint64_t salt, int trials, const std::string& selection_str,
                 const std::string& out_path) {
    InstanceTable a = read_instance(path1), b = read_instance(path2);
    require_binary(a, path1);
    require_binary(b, path2);
    Selection selection = make_selection(selection_str);

    bool bottomk = scheme == "bottomk";
    if (!bottomk && scheme != "poisson") throw ParseFail("unknown scheme: " + scheme);
    if (!bottomk && !(p > 0.0 && p <= 1.0)) throw ParseFail("--p must be in (0,1]");
    if (bottomk && k < 1) throw ParseFail("--k must be >= 1 for bottomk");
    RankFamily family = rank == "exp" ? RankFamily::Exp : RankFamily::Pps;
    if (trials < 1) throw ParseFail("--trials must be >= 1");

    Output out;
    out.path = out_path;
    out.config("cmd=distinct scheme=" + scheme +
               (bottomk ? " k=" + std::to_string(k) + " rank=" + rank : " p=" + fmt(p)) +
               " salt=" + std::to_string(salt) + " trials=" + std::to_string(trials) +
               " inputs=" + path1 + "," + path2 +
               (selection_str.empty() ? "" : " selection=" + selection_str));
    out.row("trial,kind,estimate,predicted_variance");

    for (int t = 0; t < trials; ++t) {
        std::uint64_t salt1 = salt + 2 * std::uint64_t(t), salt2 = salt1 + 1;
        KeyedSample s1, s2;
        double p1 = p, p2 = p;
        if (bottomk) {
            s1 = sample_bottomk(a, k, family, salt1);
            s2 = sample_bottomk(b, k, family, salt2);
            p1 = effective_probability(s1, family, 1.0);
            p2 = effective_probability(s2, family, 1.0);
        } else {
            s1 = sample_poisson_keys(a, {}, p, salt1, false);
            s2 = sample_poisson_keys(b, {}, p, salt2, false);
        }
        auto cats = classify_keys(s1, s2, p1, p2);
        for (AggKind kind : {AggKind::Ht, AggKind::L}) {
            AggregateReport rep = est_distinct(cats, selection, p1, p2, kind);
            out.row(std::to_string(t) + "," + (kind == AggKind::Ht ? "ht" : "l") + "," +
                    fmt(rep.estimate) + "," + fmt(rep.predicted_variance));
        }
    }
    out.flush();
    return kExitOk;
}

// ---- maxdom ----------------------------------------------------------

int cmd_maxdom(const std::string& path1, const std::string& path2,
               const std::vector<double>& tau, std::uint64_t salt, int trials,
               const std::string& selection_str, const std::string& out_path) {
    if (tau.size() != 2) throw ParseFail("--tau needs 2 values");
    if (trials < 1) throw ParseFail("--trials must be >= 1");
    InstanceTable a = read_instance(path1), b = read_instance(path2);
    Selection selection = make_selection(selection_str);

    Output out;
    out.path = out_path;
    out.config("cmd=maxdom tau=" + fmt(tau[0]) + "," + fmt(tau[1]) + " salt=" +
               std::to_string(salt) + " trials=" + std::to_string(trials) + " inputs=" +
               path1 + "," + path2 +
               (selection_str.empty() ? "" : " selection=" + selection_str));
    out.row("trial,kind,estimate,predicted_variance");

    for (int t = 0; t < trials; ++t) {
        std::uint64_t salt1 = salt + 2 * std::uint64_t(t), salt2 = salt1 + 1;
        KeyedSample s1 = sample_weighted_keys(a, tau[0], salt1);
        KeyedSample s2 = sample_weighted_keys(b, tau[1], salt2);
        for (AggKind kind : {AggKind::Ht, AggKind::L}) {
            AggregateReport rep = est_max_dominance(s1, s2, tau, selection, kind, true);
            out.row(std::to_string(t) + "," + (kind == AggKind::Ht ? "ht" : "l") + "," +
                    fmt(rep.estimate) + "," + fmt(rep.predicted_variance));
        }
    }
    out.flush();
    return kExitOk;
}

// ---- solve -----------------------------------------------------------

int cmd_solve(const std::string& problem_path, const std::string& out_path) {
    std::ifstream in(problem_path);
    if (!in) throw ParseFail(problem_path + ": cannot open");
    json spec;
    try {
        in >> spec;
    } catch (const json::exception& e) {
        throw ParseFail(problem_path + ": " + e.what());
    }

    FiniteProblem prob;
    EstimatorTable table;
    std::string method, order_kind;
    try {
        for (const auto& v : spec.at("domain"))
            prob.domain.push_back(v.get<DataVector>());
        if (spec.contains("f")) {
            prob.f = spec.at("f").get<std::vector<double>>();
        } else {
            std::string target = spec.value("target", "max");
            for (const DataVector& v : prob.domain)
                prob.f.push_back(target == "or" ? or_value(v) : max_value(v));
        }
        const json& scheme = spec.at("scheme");
        std::string type = scheme.at("type").get<std::string>();
        bool seeds_visible = scheme.value("seeds_visible", type == "pps");
        if (type == "poisson") {
            prob.scheme = SamplingSpec{ObliviousPoisson{scheme.at("p").get<std::vector<double>>()},
                                       seeds_visible};
        } else if (type == "pps") {
            prob.scheme = SamplingSpec{WeightedPps{scheme.at("tau").get<std::vector<double>>()},
                                       seeds_visible};
        } else {
            throw ParseFail("scheme type must be poisson or pps");
        }

        const json& order = spec.at("order");
        order_kind = order.at("kind").get<std::string>();
        OrderSpec os;
        if (order_kind == "dense") {
            // Zero vector first, then lexicographic on the sorted gaps
            // max(v) - v_i (assumes gaps < 10 on the given domain).
            os = OrderSpec::keyed([](const DataVector& v) {
                double m = max_value(v);
                if (m == 0.0) return -1.0;
                DataVector gaps;
                for (double x : v) gaps.push_back(m - x);
                std::sort(gaps.begin(), gaps.end());
                double s = 0.0;
                for (double g : gaps) s = 10.0 * s + g;
                return s;
            });
        } else if (order_kind == "sparse") {
            os = OrderSpec::keyed(
                [](const DataVector& v) { return double(count_positive(v)); });
        } else if (order_kind == "total") {
            os = OrderSpec::total(order.at("ranking").get<std::vector<std::size_t>>());
        } else if (order_kind == "partition") {
            os = OrderSpec::partition(
                order.at("batches").get<std::vector<std::vector<std::size_t>>>());
        } else {
            throw ParseFail("order kind must be dense, sparse, total, or partition");
        }

        method = spec.value("method", order_kind == "partition" ? "partition" : "order");
        if (method == "order") {
            table = solve_order(prob, os);
        } else if (method == "nonneg") {
            table = solve_order_nonneg(prob, os);
        } else if (method == "partition") {
            table = solve_partition(prob, os, spec.value("symmetric", false));
        } else {
            throw ParseFail("method must be order, nonneg, or partition");
        }
    } catch (const json::exception& e) {
        throw ParseFail(problem_path + ": " + e.what());
    }

    const char* status = table.status == EstimatorTable::Status::Ok ? "Ok"
                         : table.status == EstimatorTable::Status::NegativityViolated
                             ? "NegativityViolated"
                             : "Failure";
    Output out;
    out.path = out_path;
    out.config("cmd=solve input=" + problem_path + " method=" + method + " order=" +
               order_kind + " status=" + status +
               " max_residual=" + fmt(table.max_residual));
    out.row("outcome_class,estimate");
    if (table.status != EstimatorTable::Status::Failure)
        for (size_t c = 0; c < table.classes.size(); ++c)
            out.row("\"" + table.classes[c].label() + "\"," + fmt(table.estimates[c]));
    out.flush();

    if (table.status == EstimatorTable::Status::NegativityViolated) return kExitInfeasible;
    if (table.status == EstimatorTable::Status::Failure) return kExitSolver;
    return kExitOk;
}

// ---- experiments -----------------------------------------------------

int cmd_fig1(std::uint64_t salt, const std::string& out_path) {
    Output out;
    out.path = out_path;
    out.config("cmd=experiment fig=fig1 p=0.5,0.5 salt=" + std::to_string(salt));
    out.row("ratio,var_max_l_over_ht,var_max_u_over_ht");
    std::vector<double> p{0.5, 0.5};
    for (int i = 0; i <= 20; ++i) {
        double ratio = i / 20.0;
        DataVector v{1.0, ratio};
        double ht = var_closed_form(v, p, VarEstimator::Ht).variance;
        double l = var_closed_form(v, p, VarEstimator::MaxLr2).variance;
        double u = var_closed_form(v, p, VarEstimator::MaxUr2).variance;
        out.row(fmt(ratio) + "," + fmt(l / ht) + "," + fmt(u / ht));
    }
    out.flush();
    return kExitOk;
}

int cmd_fig2(std::uint64_t salt, const std::string& out_path) {
    Output out;
    out.path = out_path;
    out.config("cmd=experiment fig=fig2 salt=" + std::to_string(salt));
    out.row("p,var_or_ht,var_or_l_11,var_or_l_10,var_or_u_11,var_or_u_10");
    for (int i = 1; i <= 19; ++i) {
        double p = 0.05 * i;
        std::vector<double> pv{p, p};
        out.row(fmt(p) + "," + fmt(var_closed_form({1, 1}, pv, VarEstimator::Ht).variance) +
                "," + fmt(var_closed_form({1, 1}, pv, VarEstimator::OrL).variance) + "," +
                fmt(var_closed_form({1, 0}, pv, VarEstimator::OrL).variance) + "," +
                fmt(var_closed_form({1, 1}, pv, VarEstimator::OrU).variance) + "," +
                fmt(var_closed_form({1, 0}, pv, VarEstimator::OrU).variance));
    }
    out.flush();
    return kExitOk;
}

int cmd_fig4(std::uint64_t salt, const std::string& out_path) {
    Output out;
    out.path = out_path;
    out.config("cmd=experiment fig=fig4 tau=1,1 salt=" + std::to_string(salt));
    out.row("rho,min_over_max,var_l,var_ht,ratio");
    const std::vector<double> tau{1.0, 1.0};
    for (double rho : {0.1, 0.3, 0.5, 0.7, 0.9})
        for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            DataVector v{rho, rho * frac};
            double l = var_max_ws(v, tau, WeightedMaxEstimator::L).variance;
            double ht = var_max_ws(v, tau, WeightedMaxEstimator::Ht).variance;
            out.row(fmt(rho) + "," + fmt(frac) + "," + fmt(l) + "," + fmt(ht) + "," +
                    fmt(ht / l));
        }
    out.flush();
    return kExitOk;
}

int cmd_fig6(double cv, double jaccard, std::uint64_t salt, const std::string& out_path) {
    if (!(cv > 0.0)) throw ParseFail("--cv must be positive");
    if (!(jaccard >= 0.0 && jaccard <= 1.0)) throw ParseFail("--jaccard must be in [0,1]");
    Output out;
    out.path = out_path;
    out.config("cmd=experiment fig=fig6 cv=" + fmt(cv) + " jaccard=" + fmt(jaccard) +
               " salt=" + std::to_string(salt));
    out.row("n,p_ht,p_l,s_ht,s_l,ratio");
    for (double n : {1e3, 1e4, 1e5, 1e6, 1e7, 1e8}) {
        double p_ht = 0.0, p_l = 0.0;
        try {
            p_ht = required_p(n, jaccard, cv, AggKind::Ht);
            p_l = required_p(n, jaccard, cv, AggKind::L);
        } catch (const std::runtime_error& e) {
            throw Infeasible(e.what());
        }
        out.row(fmt(n) + "," + fmt(p_ht) + "," + fmt(p_l) + "," + fmt(p_ht * n) + "," +
                fmt(p_l * n) + "," + fmt(p_l / p_ht));
    }
    out.flush();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sampling estimators for multiple instances"};
    app.require_subcommand(1);

    std::string instance1, instance2, out_path, scheme = "poisson", rank = "pps";
    std::string selection, problem_path, fig;
    std::vector<double> p_vec, tau_vec;
    double p_scalar = 0.0, tau_scalar = 0.0, cv = 0.1, jaccard = 0.0;
    int k = 1, trials = 1;
    std::uint64_t salt = 0;

    auto* sample = app.add_subcommand("sample", "Sample one instance");
    sample->add_option("instance", instance1)->required();
    sample->add_option("--scheme", scheme, "poisson | pps | bottomk");
    sample->add_option("--p", p_scalar);
    sample->add_option("--tau", tau_scalar);
    sample->add_option("--k", k);
    sample->add_option("--rank", rank)->check(CLI::IsMember({"exp", "pps"}));
    sample->add_option("--salt", salt);
    sample->add_option("--out", out_path);

    auto* estimate = app.add_subcommand("estimate", "Per-key max estimates for a pair");
    estimate->add_option("instance1", instance1)->required();
    estimate->add_option("instance2", instance2)->required();
    estimate->add_option("--p", p_vec)->delimiter(',');
    estimate->add_option("--tau", tau_vec)->delimiter(',');
    estimate->add_option("--salt", salt);
    estimate->add_option("--selection", selection);
    estimate->add_option("--out", out_path);

    auto* distinct = app.add_subcommand("distinct", "Distinct count over two binary instances");
    distinct->add_option("instance1", instance1)->required();
    distinct->add_option("instance2", instance2)->required();
    distinct->add_option("--scheme", scheme, "poisson | bottomk");
    distinct->add_option("--p", p_scalar);
    distinct->add_option("--k", k);
    distinct->add_option("--rank", rank)->check(CLI::IsMember({"exp", "pps"}));
    distinct->add_option("--salt", salt);
    distinct->add_option("--trials", trials);
    distinct->add_option("--selection", selection);
    distinct->add_option("--out", out_path);

    auto* maxdom = app.add_subcommand("maxdom", "Max dominance over two weighted instances");
    maxdom->add_option("instance1", instance1)->required();
    maxdom->add_option("instance2", instance2)->required();
    maxdom->add_option("--tau", tau_vec)->delimiter(',');
    maxdom->add_option("--salt", salt);
    maxdom->add_option("--trials", trials);
    maxdom->add_option("--selection", selection);
    maxdom->add_option("--out", out_path);

    auto* solve = app.add_subcommand("solve", "Solve a finite estimation problem (JSON)");
    solve->add_option("problem", problem_path)->required();
    solve->add_option("--out", out_path);

    auto* experiment = app.add_subcommand("experiment", "Emit a figure dataset");
    experiment->add_option("figure", fig)->required()->check(
        CLI::IsMember({"fig1", "fig2", "fig4", "fig6"}));
    experiment->add_option("--cv", cv);
    experiment->add_option("--jaccard", jaccard);
    experiment->add_option("--salt", salt);
    experiment->add_option("--out", out_path);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitParse;
    }

    try {
        if (sample->parsed())
            return cmd_sample(instance1, scheme, p_scalar, tau_scalar, k, rank, salt, out_path);
        if (estimate->parsed())
            return cmd_estimate(instance1, instance2, p_vec, tau_vec, salt, selection,
                                out_path);
        if (distinct->parsed())
            return cmd_distinct(instance1, instance2, scheme, p_scalar, k, rank, salt, trials,
                                selection, out_path);
        if (maxdom->parsed())
            return cmd_maxdom(instance1, instance2, tau_vec, salt, trials, selection, out_path);
        if (solve->parsed()) return cmd_solve(problem_path, out_path);
        if (experiment->parsed()) {
            if (fig == "fig1") return cmd_fig1(salt, out_path);
            if (fig == "fig2") return cmd_fig2(salt, out_path);
            if (fig == "fig4") return cmd_fig4(salt, out_path);
            return cmd_fig6(cv, jaccard, salt, out_path);
        }
    } catch (const ParseFail& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const Infeasible& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
    return kExitParse;
}
