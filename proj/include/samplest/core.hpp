#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

namespace samplest {

/// Per-key cross-instance value vector: the r values one key assumes
/// across r instances. All entries are nonnegative.
using DataVector = std::vector<double>;

double max_value(const DataVector& v);
double min_value(const DataVector& v);
/// Boolean OR of a binary vector (throws on non-binary entries).
double or_value(const DataVector& v);
/// Number of entries strictly below the maximum.
int count_below_max(const DataVector& v);
/// Number of positive entries.
int count_positive(const DataVector& v);

enum class RankFamily { Exp, Pps };
enum class Coordination { Independent, SharedSeed };

struct ObliviousPoisson {
    std::vector<double> p;  // each in (0,1]
};

struct WeightedPps {
    std::vector<double> tau_star;  // each > 0
};

struct BottomK {
    int k = 1;
    RankFamily family = RankFamily::Pps;
};

/// Sampling scheme descriptor plus seed-visibility and coordination flags.
struct SamplingSpec {
    std::variant<ObliviousPoisson, WeightedPps, BottomK> scheme;
    bool seeds_visible = false;
    Coordination coordination = Coordination::Independent;

    /// Number of instances r (0 for BottomK, which is per-instance).
    int dimension() const;
    void validate() const;

    bool is_oblivious() const { return std::holds_alternative<ObliviousPoisson>(scheme); }
    bool is_weighted() const { return std::holds_alternative<WeightedPps>(scheme); }
    const std::vector<double>& probabilities() const { return std::get<ObliviousPoisson>(scheme).p; }
    const std::vector<double>& thresholds() const { return std::get<WeightedPps>(scheme).tau_star; }
};

/// Seed vector u in [0,1)^r driving the per-instance sampling decisions.
struct SeedVector {
    std::vector<double> u;
};

/// Sampled index set with values, optionally carrying the seed vector.
/// r is carried explicitly even when the sample is empty.
struct Outcome {
    int r = 0;
    std::vector<int> sampled;    // sorted, subset of [0, r)
    std::vector<double> values;  // parallel to sampled
    std::optional<SeedVector> seeds;

    bool contains(int i) const;
    /// Value of instance i; throws if i was not sampled.
    double value_of(int i) const;
    double max_sampled() const;  // 0 when empty
};

/// Per-index constraint describing the set V*(S) of data vectors
/// consistent with an outcome. Kept as a constraint record rather than
/// a materialized set.
struct Constraint {
    enum class Kind { Exact, UpperBound, Unconstrained };
    Kind kind = Kind::Unconstrained;
    double bound = 0.0;  // exact value or strict upper bound

    static Constraint exact(double v) { return {Kind::Exact, v}; }
    static Constraint upper(double b) { return {Kind::UpperBound, b}; }
    static Constraint free() { return {Kind::Unconstrained, 0.0}; }
};

struct ConsistentSet {
    std::vector<Constraint> entries;

    /// True when v could have produced the outcome.
    bool contains(const DataVector& v) const;
    /// True when every vector satisfying *this also satisfies other.
    bool subset_of(const ConsistentSet& other) const;
};

/// Deterministic unit-interval seed from (instance salt, key bytes).
/// FNV-1a over the key, salt XOR, SplitMix64 finalizer, u = z / 2^64.
double hash_seed(std::uint64_t instance_salt, std::string_view key);

/// 64-bit hash underlying hash_seed, exposed for derived salts.
std::uint64_t hash_bits(std::uint64_t instance_salt, std::string_view key);

ConsistentSet consistent_set(const Outcome& outcome, const SamplingSpec& spec);

}  // namespace samplest
