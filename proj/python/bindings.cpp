#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "samplest/aggregates.hpp"
#include "samplest/oblivious.hpp"
#include "samplest/oracle.hpp"
#include "samplest/sampling.hpp"
#include "samplest/solver.hpp"
#include "samplest/weighted.hpp"

namespace py = pybind11;
using namespace samplest;

namespace {

SamplingSpec poisson_spec(std::vector<double> p, bool seeds_visible) {
    return SamplingSpec{ObliviousPoisson{std::move(p)}, seeds_visible};
}

SamplingSpec pps_spec(std::vector<double> tau, bool seeds_visible) {
    return SamplingSpec{WeightedPps{std::move(tau)}, seeds_visible};
}

InstanceTable to_instance(const std::map<std::string, double>& entries) {
    InstanceTable t;
    t.entries = entries;
    return t;
}

}  // namespace

PYBIND11_MODULE(_samplest, m) {
    m.doc() = "Sampling estimators for multiple instances";

    py::enum_<RankFamily>(m, "RankFamily")
        .value("EXP", RankFamily::Exp)
        .value("PPS", RankFamily::Pps);
    py::enum_<FunctionTag>(m, "FunctionTag")
        .value("MAX", FunctionTag::Max)
        .value("OR", FunctionTag::Or)
        .value("MIN", FunctionTag::Min)
        .value("RANGE", FunctionTag::Range);
    py::enum_<OrKind>(m, "OrKind")
        .value("HT", OrKind::Ht)
        .value("L", OrKind::L)
        .value("U", OrKind::U);
    py::enum_<MaxUVariant>(m, "MaxUVariant")
        .value("SYMMETRIC", MaxUVariant::Symmetric)
        .value("ASYMMETRIC", MaxUVariant::Asymmetric);
    py::enum_<VarEstimator>(m, "VarEstimator")
        .value("HT", VarEstimator::Ht)
        .value("OR_L", VarEstimator::OrL)
        .value("OR_U", VarEstimator::OrU)
        .value("MAX_L_R2", VarEstimator::MaxLr2)
        .value("MAX_U_R2", VarEstimator::MaxUr2);
    py::enum_<WeightedMaxEstimator>(m, "WeightedMaxEstimator")
        .value("HT", WeightedMaxEstimator::Ht)
        .value("L", WeightedMaxEstimator::L);
    py::enum_<AggKind>(m, "AggKind").value("HT", AggKind::Ht).value("L", AggKind::L);

    py::class_<SeedVector>(m, "SeedVector")
        .def(py::init([](std::vector<double> u) { return SeedVector{std::move(u)}; }))
        .def_readwrite("u", &SeedVector::u);

    py::class_<Outcome>(m, "Outcome")
        .def(py::init<>())
        .def(py::init([](int r, std::vector<int> sampled, std::vector<double> values,
                         std::optional<SeedVector> seeds) {
                 Outcome o;
                 o.r = r;
                 o.sampled = std::move(sampled);
                 o.values = std::move(values);
                 o.seeds = std::move(seeds);
                 return o;
             }),
             py::arg("r"), py::arg("sampled"), py::arg("values"), py::arg("seeds") = py::none())
        .def_readwrite("r", &Outcome::r)
        .def_readwrite("sampled", &Outcome::sampled)
        .def_readwrite("values", &Outcome::values)
        .def_readwrite("seeds", &Outcome::seeds)
        .def("contains", &Outcome::contains)
        .def("value_of", &Outcome::value_of)
        .def("max_sampled", &Outcome::max_sampled);

    py::class_<SamplingSpec>(m, "SamplingSpec");
    m.def("poisson_spec", &poisson_spec, py::arg("p"), py::arg("seeds_visible") = false);
    m.def("pps_spec", &pps_spec, py::arg("tau"), py::arg("seeds_visible") = true);

    py::class_<KeyedSample>(m, "KeyedSample")
        .def(py::init<>())
        .def_readwrite("instance_salt", &KeyedSample::instance_salt)
        .def_readwrite("threshold", &KeyedSample::threshold)
        .def_property(
            "sampled",
            [](const KeyedSample& s) {
                std::map<std::string, std::pair<double, double>> out;
                for (const auto& [key, e] : s.sampled) out[key] = {e.value, e.seed};
                return out;
            },
            [](KeyedSample& s, const std::map<std::string, std::pair<double, double>>& in) {
                s.sampled.clear();
                for (const auto& [key, vs] : in)
                    s.sampled.emplace(key, KeyedSample::Entry{vs.first, vs.second});
            });

    m.def("hash_seed", &hash_seed, py::arg("instance_salt"), py::arg("key"));
    m.def("sample_oblivious", &sample_oblivious, py::arg("v"), py::arg("p"), py::arg("seeds"),
          py::arg("seeds_visible") = false);
    m.def("sample_pps", &sample_pps, py::arg("v"), py::arg("tau_star"), py::arg("seeds"),
          py::arg("seeds_visible") = true);
    m.def("rank_value", &rank_value, py::arg("family"), py::arg("w"), py::arg("u"));
    m.def(
        "sample_bottomk",
        [](const std::map<std::string, double>& instance, int k, RankFamily family,
           std::uint64_t salt) { return sample_bottomk(to_instance(instance), k, family, salt); },
        py::arg("instance"), py::arg("k"), py::arg("family"), py::arg("salt"));
    m.def("effective_probability", &effective_probability, py::arg("sample"), py::arg("family"),
          py::arg("value"));
    m.def(
        "sample_poisson_keys",
        [](const std::map<std::string, double>& instance,
           const std::vector<std::string>& universe, double p, std::uint64_t salt,
           bool oblivious) {
            return sample_poisson_keys(to_instance(instance), universe, p, salt, oblivious);
        },
        py::arg("instance"), py::arg("universe"), py::arg("p"), py::arg("salt"),
        py::arg("oblivious") = false);

    m.def("est_ht", &est_ht, py::arg("outcome"), py::arg("p"), py::arg("f"));
    m.def("est_max_L_r2", &est_max_L_r2, py::arg("outcome"), py::arg("p1"), py::arg("p2"));
    m.def(
        "coeff_max_L_uniform",
        [](int r, double p) { return coeff_max_L_uniform(r, p).alpha; }, py::arg("r"),
        py::arg("p"));
    m.def(
        "est_max_L_uniform",
        [](const Outcome& o, int r, double p) {
            return est_max_L_uniform(o, coeff_max_L_uniform(r, p));
        },
        py::arg("outcome"), py::arg("r"), py::arg("p"));
    m.def("est_max_L_general", &est_max_L_general, py::arg("outcome"), py::arg("p"));
    m.def("est_max_U_r2", &est_max_U_r2, py::arg("outcome"), py::arg("p1"), py::arg("p2"),
          py::arg("variant"));
    m.def("est_or", &est_or, py::arg("outcome"), py::arg("p"), py::arg("kind"));
    m.def(
        "var_closed_form",
        [](const DataVector& v, const std::vector<double>& p, VarEstimator est) {
            return var_closed_form(v, p, est).variance;
        },
        py::arg("v"), py::arg("p"), py::arg("estimator"));

    m.def("est_or_ws", &est_or_ws, py::arg("outcome"), py::arg("p"), py::arg("kind"));
    m.def("est_max_ht_ws", &est_max_ht_ws, py::arg("outcome"), py::arg("tau_star"));
    m.def("est_max_L_ws_r2", &est_max_L_ws_r2, py::arg("outcome"), py::arg("tau_star"));
    m.def(
        "var_max_ws",
        [](const DataVector& v, const std::vector<double>& tau, WeightedMaxEstimator est) {
            return var_max_ws(v, tau, est).variance;
        },
        py::arg("v"), py::arg("tau_star"), py::arg("estimator"));

    py::class_<MomentReport>(m, "MomentReport")
        .def_readonly("mean", &MomentReport::mean)
        .def_readonly("variance", &MomentReport::variance);
    m.def("exact_moments", &exact_moments, py::arg("estimator"), py::arg("spec"), py::arg("v"));
    m.def("quad_moments", &quad_moments, py::arg("estimator"), py::arg("tau_star"),
          py::arg("v"), py::arg("tol") = 1e-9);
    m.def("mc_moments", &mc_moments, py::arg("estimator"), py::arg("spec"), py::arg("v"),
          py::arg("trials"), py::arg("salt"));

    py::enum_<KeyCategory>(m, "KeyCategory")
        .value("F1Q", KeyCategory::F1q)
        .value("FQ1", KeyCategory::Fq1)
        .value("F11", KeyCategory::F11)
        .value("F10", KeyCategory::F10)
        .value("F01", KeyCategory::F01);
    py::class_<AggregateReport>(m, "AggregateReport")
        .def_readonly("estimate", &AggregateReport::estimate)
        .def_readonly("predicted_variance", &AggregateReport::predicted_variance)
        .def_readonly("key_counts", &AggregateReport::key_counts);
    m.def("classify_keys", &classify_keys, py::arg("s1"), py::arg("s2"), py::arg("p1"),
          py::arg("p2"));
    m.def("est_distinct", &est_distinct, py::arg("categories"), py::arg("selection"),
          py::arg("p1"), py::arg("p2"), py::arg("kind"));
    m.def("predict_distinct_variance", &predict_distinct_variance, py::arg("D"), py::arg("J"),
          py::arg("p1"), py::arg("p2"), py::arg("kind"));
    m.def("required_p", &required_p, py::arg("N"), py::arg("J"), py::arg("cv_target"),
          py::arg("kind"));
    m.def("est_max_dominance", &est_max_dominance, py::arg("s1"), py::arg("s2"),
          py::arg("tau_star"), py::arg("selection"), py::arg("kind"),
          py::arg("with_variance") = false);

    py::class_<OutcomeClass>(m, "OutcomeClass")
        .def_readonly("sampled", &OutcomeClass::sampled)
        .def_readonly("values", &OutcomeClass::values)
        .def("label", &OutcomeClass::label);
    py::class_<FiniteProblem>(m, "FiniteProblem")
        .def(py::init([](std::vector<DataVector> domain, std::vector<double> f,
                         SamplingSpec scheme) {
                 FiniteProblem p;
                 p.domain = std::move(domain);
                 p.f = std::move(f);
                 p.scheme = std::move(scheme);
                 return p;
             }),
             py::arg("domain"), py::arg("f"), py::arg("scheme"));
    py::class_<OrderSpec>(m, "OrderSpec")
        .def_static("total", &OrderSpec::total)
        .def_static("keyed", &OrderSpec::keyed)
        .def_static("partition", &OrderSpec::partition);
    py::enum_<EstimatorTable::Status>(m, "SolveStatus")
        .value("OK", EstimatorTable::Status::Ok)
        .value("FAILURE", EstimatorTable::Status::Failure)
        .value("NEGATIVITY_VIOLATED", EstimatorTable::Status::NegativityViolated);
    py::class_<EstimatorTable>(m, "EstimatorTable")
        .def_readonly("status", &EstimatorTable::status)
        .def_readonly("classes", &EstimatorTable::classes)
        .def_readonly("estimates", &EstimatorTable::estimates)
        .def_readonly("max_residual", &EstimatorTable::max_residual)
        .def("estimate_of", &EstimatorTable::estimate_of);
    m.def("solve_order", &solve_order, py::arg("problem"), py::arg("order"));
    m.def("solve_order_nonneg", &solve_order_nonneg, py::arg("problem"), py::arg("order"));
    m.def("solve_partition", &solve_partition, py::arg("problem"), py::arg("partition"),
          py::arg("symmetric"));
}
