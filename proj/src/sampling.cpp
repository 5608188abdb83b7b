#include "samplest/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace samplest {

namespace {

Outcome make_outcome(int r, std::vector<int> sampled, std::vector<double> values,
                     const SeedVector& seeds, bool seeds_visible) {
    Outcome out;
    out.r = r;
    out.sampled = std::move(sampled);
    out.values = std::move(values);
    if (seeds_visible) out.seeds = seeds;
    return out;
}

}  // namespace

Outcome sample_oblivious(const DataVector& v, const std::vector<double>& p,
                         const SeedVector& seeds, bool seeds_visible) {
    if (v.size() != p.size() || v.size() != seeds.u.size())
        throw std::invalid_argument("length mismatch");
    std::vector<int> sampled;
    std::vector<double> values;
    for (size_t i = 0; i < v.size(); ++i) {
        if (seeds.u[i] < p[i]) {
            sampled.push_back(static_cast<int>(i));
            values.push_back(v[i]);
        }
    }
    return make_outcome(static_cast<int>(v.size()), std::move(sampled), std::move(values),
                        seeds, seeds_visible);
}

Outcome sample_pps(const DataVector& v, const std::vector<double>& tau_star,
                   const SeedVector& seeds, bool seeds_visible) {
    if (v.size() != tau_star.size() || v.size() != seeds.u.size())
        throw std::invalid_argument("length mismatch");
    std::vector<int> sampled;
    std::vector<double> values;
    for (size_t i = 0; i < v.size(); ++i) {
        if (!(tau_star[i] > 0.0)) throw std::invalid_argument("threshold must be positive");
        // Ties v_i == u_i tau_i* count as sampled; zero values never are.
        if (v[i] > 0.0 && v[i] >= seeds.u[i] * tau_star[i]) {
            sampled.push_back(static_cast<int>(i));
            values.push_back(v[i]);
        }
    }
    return make_outcome(static_cast<int>(v.size()), std::move(sampled), std::move(values),
                        seeds, seeds_visible);
}

double rank_value(RankFamily family, double w, double u) {
    if (!(w > 0.0)) throw std::invalid_argument("weight must be positive");
    if (family == RankFamily::Exp) return -std::log1p(-u) / w;
    return u / w;
}

KeyedSample sample_bottomk(const InstanceTable& instance, int k, RankFamily family,
                           std::uint64_t salt) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    struct Ranked {
        double rank;
        const std::string* key;
        double value;
        double seed;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(instance.entries.size());
    for (const auto& [key, value] : instance.entries) {
        if (value <= 0.0) continue;
        double u = hash_seed(salt, key);
        ranked.push_back({rank_value(family, value, u), &key, value, u});
    }
    // Rank ties break by key bytes so enumeration is reproducible.
    auto less = [](const Ranked& a, const Ranked& b) {
        if (a.rank != b.rank) return a.rank < b.rank;
        return *a.key < *b.key;
    };
    std::sort(ranked.begin(), ranked.end(), less);

    KeyedSample s;
    s.instance_salt = salt;
    size_t take = std::min<size_t>(static_cast<size_t>(k), ranked.size());
    for (size_t i = 0; i < take; ++i)
        s.sampled.emplace(*ranked[i].key, KeyedSample::Entry{ranked[i].value, ranked[i].seed});
    s.threshold = ranked.size() > static_cast<size_t>(k)
                      ? ranked[static_cast<size_t>(k)].rank
                      : std::numeric_limits<double>::infinity();
    return s;
}

double effective_probability(const KeyedSample& s, RankFamily family, double value) {
    if (!(value > 0.0)) throw std::invalid_argument("value must be positive");
    if (std::isinf(s.threshold)) return 1.0;
    if (family == RankFamily::Exp) return -std::expm1(-value * s.threshold);
    return std::min(1.0, value * s.threshold);
}

KeyedSample sample_poisson_keys(const InstanceTable& instance,
                                const std::vector<std::string>& universe, double p,
                                std::uint64_t salt, bool oblivious) {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside (0,1]");
    KeyedSample s;
    s.instance_salt = salt;
    s.threshold = p;
    auto consider = [&](const std::string& key, double value) {
        double u = hash_seed(salt, key);
        bool in = oblivious ? (u < p) : (value > 0.0 && u < p);
        if (in) s.sampled.emplace(key, KeyedSample::Entry{value, u});
    };
    if (oblivious) {
        for (const auto& key : universe) {
            auto it = instance.entries.find(key);
            consider(key, it == instance.entries.end() ? 0.0 : it->second);
        }
    } else {
        for (const auto& [key, value] : instance.entries) consider(key, value);
    }
    return s;
}

}  // namespace samplest
