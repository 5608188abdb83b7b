#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "samplest/core.hpp"

namespace samplest {

/// One instance: assignment of nonnegative values to keys. Sparse,
/// zero-valued keys may be omitted.
struct InstanceTable {
    std::map<std::string, double> entries;
};

/// Per-key sample of one instance. For bottom-k, threshold holds the
/// (k+1)-st smallest rank (+inf when fewer than k+1 candidates).
struct KeyedSample {
    std::uint64_t instance_salt = 0;
    struct Entry {
        double value = 0.0;
        double seed = 0.0;
    };
    std::map<std::string, Entry> sampled;
    double threshold = 0.0;
};

/// Weight-oblivious Poisson: i in S iff u_i < p_i.
Outcome sample_oblivious(const DataVector& v, const std::vector<double>& p,
                         const SeedVector& seeds, bool seeds_visible = false);

/// Weighted PPS: i in S iff v_i > 0 and v_i >= u_i * tau_i*.
Outcome sample_pps(const DataVector& v, const std::vector<double>& tau_star,
                   const SeedVector& seeds, bool seeds_visible = true);

/// Rank from (family, weight, seed): EXP -ln(1-u)/w, PPS u/w.
double rank_value(RankFamily family, double w, double u);

/// Bottom-k sample of an instance: the k positive-value keys of
/// smallest rank, with the (k+1)-st smallest rank as threshold.
KeyedSample sample_bottomk(const InstanceTable& instance, int k, RankFamily family,
                           std::uint64_t salt);

/// Inclusion-probability surrogate for plugging a bottom-k sample into
/// fixed-probability estimators. PPS ranks: min{1, value * threshold};
/// EXP ranks: 1 - exp(-value * threshold).
double effective_probability(const KeyedSample& s, RankFamily family, double value);

/// Poisson sample of an instance over an explicit key universe
/// (oblivious needs to consider zero-valued keys too).
KeyedSample sample_poisson_keys(const InstanceTable& instance,
                                const std::vector<std::string>& universe, double p,
                                std::uint64_t salt, bool oblivious);

}  // namespace samplest
