#include "samplest/core.hpp"

#include <algorithm>
#include <cmath>

namespace samplest {

double max_value(const DataVector& v) {
    if (v.empty()) throw std::invalid_argument("empty data vector");
    return *std::max_element(v.begin(), v.end());
}

double min_value(const DataVector& v) {
    if (v.empty()) throw std::invalid_argument("empty data vector");
    return *std::min_element(v.begin(), v.end());
}

double or_value(const DataVector& v) {
    for (double x : v) {
        if (x != 0.0 && x != 1.0) throw std::invalid_argument("non-binary value");
    }
    return std::any_of(v.begin(), v.end(), [](double x) { return x == 1.0; }) ? 1.0 : 0.0;
}

int count_below_max(const DataVector& v) {
    double m = max_value(v);
    return static_cast<int>(std::count_if(v.begin(), v.end(), [m](double x) { return x < m; }));
}

int count_positive(const DataVector& v) {
    return static_cast<int>(std::count_if(v.begin(), v.end(), [](double x) { return x > 0.0; }));
}

int SamplingSpec::dimension() const {
    if (auto* ob = std::get_if<ObliviousPoisson>(&scheme)) return static_cast<int>(ob->p.size());
    if (auto* w = std::get_if<WeightedPps>(&scheme)) return static_cast<int>(w->tau_star.size());
    return 0;
}

void SamplingSpec::validate() const {
    if (auto* ob = std::get_if<ObliviousPoisson>(&scheme)) {
        for (double p : ob->p)
            if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside (0,1]");
    } else if (auto* w = std::get_if<WeightedPps>(&scheme)) {
        for (double t : w->tau_star)
            if (!(t > 0.0)) throw std::invalid_argument("threshold must be positive");
    } else {
        if (std::get<BottomK>(scheme).k < 1) throw std::invalid_argument("k must be >= 1");
    }
}

bool Outcome::contains(int i) const {
    return std::binary_search(sampled.begin(), sampled.end(), i);
}

double Outcome::value_of(int i) const {
    auto it = std::lower_bound(sampled.begin(), sampled.end(), i);
    if (it == sampled.end() || *it != i) throw std::out_of_range("index not sampled");
    return values[static_cast<size_t>(it - sampled.begin())];
}

double Outcome::max_sampled() const {
    return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

bool ConsistentSet::contains(const DataVector& v) const {
    if (v.size() != entries.size()) return false;
    for (size_t i = 0; i < v.size(); ++i) {
        switch (entries[i].kind) {
            case Constraint::Kind::Exact:
                if (v[i] != entries[i].bound) return false;
                break;
            case Constraint::Kind::UpperBound:
                if (!(v[i] < entries[i].bound)) return false;
                break;
            case Constraint::Kind::Unconstrained:
                break;
        }
    }
    return true;
}

bool ConsistentSet::subset_of(const ConsistentSet& other) const {
    if (entries.size() != other.entries.size()) return false;
    for (size_t i = 0; i < entries.size(); ++i) {
        const Constraint& a = entries[i];
        const Constraint& b = other.entries[i];
        switch (b.kind) {
            case Constraint::Kind::Unconstrained:
                break;
            case Constraint::Kind::UpperBound:
                if (a.kind == Constraint::Kind::Exact) {
                    if (!(a.bound < b.bound)) return false;
                } else if (a.kind == Constraint::Kind::UpperBound) {
                    if (!(a.bound <= b.bound)) return false;
                } else {
                    return false;
                }
                break;
            case Constraint::Kind::Exact:
                if (a.kind != Constraint::Kind::Exact || a.bound != b.bound) return false;
                break;
        }
    }
    return true;
}

std::uint64_t hash_bits(std::uint64_t instance_salt, std::string_view key) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a offset basis
    for (unsigned char c : key) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::uint64_t z = h ^ instance_salt;
    // SplitMix64 finalizer
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z = z ^ (z >> 31);
    return z;
}

double hash_seed(std::uint64_t instance_salt, std::string_view key) {
    return static_cast<double>(hash_bits(instance_salt, key)) * 0x1p-64;
}

ConsistentSet consistent_set(const Outcome& outcome, const SamplingSpec& spec) {
    spec.validate();
    ConsistentSet cs;
    cs.entries.resize(static_cast<size_t>(outcome.r), Constraint::free());
    for (size_t j = 0; j < outcome.sampled.size(); ++j)
        cs.entries[static_cast<size_t>(outcome.sampled[j])] = Constraint::exact(outcome.values[j]);

    if (spec.is_weighted() && spec.seeds_visible) {
        if (!outcome.seeds) throw std::invalid_argument("seeds unavailable");
        const auto& tau = spec.thresholds();
        for (int i = 0; i < outcome.r; ++i) {
            if (!outcome.contains(i))
                cs.entries[static_cast<size_t>(i)] =
                    Constraint::upper(outcome.seeds->u[static_cast<size_t>(i)] * tau[static_cast<size_t>(i)]);
        }
    }
    return cs;
}

}  // namespace samplest
