#include "adapt/bounds.hpp"

#include <cmath>

#include "adapt/discrepancy.hpp"
#include "adapt/rng.hpp"
#include "adapt/solvers.hpp"

namespace adapt::bounds {

double BoundReport::term(const std::string& name) const {
    for (const auto& [key, value] : terms)
        if (key == name) return value;
    throw InvalidParameterError("bound report has no term named " + name);
}

bool BoundReport::has_term(const std::string& name) const {
    for (const auto& [key, value] : terms)
        if (key == name) return true;
    return false;
}

namespace {

double source_mass(const WeightVector& q, const LabeledDataset& data) {
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data.domains[i] == Domain::Source) s += q.values[i];
    return s;
}

void finish(BoundReport& r) {
    double t = 0.0;
    for (const auto& [name, value] : r.terms) t += value;
    r.total = t;
}

} // namespace

RademacherEstimate rademacher_estimate(const LabeledDataset& data, const WeightVector& q,
                                       const HypothesisSpace& space,
                                       const RademacherSettings& settings) {
    if (q.size() != data.size())
        throw DimensionError("rademacher_estimate: weight length != example count");
    if (settings.num_sigma_samples < 1)
        throw InvalidParameterError("rademacher_estimate: need at least one sigma sample");
    space.validate();

    // q = 0 gives the zero functional exactly; skip the Monte-Carlo loop
    if (norm_inf(q.values) == 0.0) return RademacherEstimate{0.0, 0.0, settings.num_sigma_samples};

    Rng rng(settings.seed);
    discrepancy::EstimatorSettings est;
    est.restarts = settings.restarts;
    est.max_iters = settings.max_iters;

    double sum = 0.0, sum_sq = 0.0;
    WeightVector zeros = WeightVector::zeros(data.size());
    for (std::size_t s = 0; s < settings.num_sigma_samples; ++s) {
        Rng draw = rng.child(s);
        WeightVector signed_q = zeros;
        for (std::size_t i = 0; i < data.size(); ++i)
            signed_q.values[i] = draw.sign() * q.values[i];
        est.seed = draw.next_u64();
        // sup_h sum_i sigma_i q_i loss_i == dis(signed_q, 0) over indices
        auto sup =
            discrepancy::index_weight_discrepancy(signed_q, zeros, data, space, est);
        sum += sup.value;
        sum_sq += sup.value * sup.value;
    }
    const double k = static_cast<double>(settings.num_sigma_samples);
    RademacherEstimate out;
    out.sigma_samples = settings.num_sigma_samples;
    out.mean = sum / k;
    double var = std::max(0.0, sum_sq / k - out.mean * out.mean);
    out.std_error = settings.num_sigma_samples > 1 ? std::sqrt(var / (k - 1.0)) : 0.0;
    return out;
}

double rademacher_upper_bound(const LabeledDataset& data, const WeightVector& q,
                              const HypothesisSpace& space,
                              const RademacherSettings& settings) {
    WeightVector uniform = WeightVector::uniform(data.size());
    auto est = rademacher_estimate(data, uniform, space, settings);
    return q.linf() * static_cast<double>(data.size()) * est.mean;
}

BoundReport bound_theorem1(const LinearHypothesis& h, const WeightVector& q,
                           const LabeledDataset& data, double d_hat, double delta,
                           double rademacher, LossKind loss) {
    if (delta <= 0.0 || delta >= 1.0)
        throw InvalidParameterError("bound_theorem1: delta must lie in (0, 1)");
    if (q.size() != data.size()) throw DimensionError("bound_theorem1: weight length mismatch");

    BoundReport r;
    r.delta = delta;
    r.q_l1 = q.l1();
    r.q_l2 = q.l2();
    r.q_linf = q.linf();
    r.q_bar = source_mass(q, data);
    if (r.q_l1 == 0.0) r.degenerate_warning = true;

    double weighted_loss = weighted_empirical_loss(h, data, q, loss);
    r.terms.emplace_back("weighted_loss", weighted_loss);

    // dis([(1-||q||_1)+q_bar] P, q_bar Q): equals q_bar*d when q is a
    // distribution; otherwise surrogated by q_bar*d + |1-||q||_1|
    if (d_hat < 0.0) r.degenerate_warning = true; // negative one-sided estimate, clamped
    double disc = r.q_bar * std::max(0.0, d_hat);
    if (std::fabs(r.q_l1 - 1.0) > 1e-9) {
        disc += std::fabs(1.0 - r.q_l1);
        r.surrogate_terms.push_back("discrepancy_term");
    }
    r.terms.emplace_back("discrepancy_term", disc);
    r.terms.emplace_back("rademacher", 2.0 * rademacher);
    r.terms.emplace_back("confidence_term", r.q_l2 * std::sqrt(std::log(1.0 / delta) / 2.0));
    finish(r);
    return r;
}

BoundReport bound_corollary4(const LinearHypothesis& h, const WeightVector& q,
                             const WeightVector& p0, const LabeledDataset& data, double d_hat,
                             double delta, double rademacher, double index_discrepancy,
                             LossKind loss) {
    if (delta <= 0.0 || delta >= 1.0)
        throw InvalidParameterError("bound_corollary4: delta must lie in (0, 1)");
    if (q.size() != data.size() || p0.size() != data.size())
        throw DimensionError("bound_corollary4: weight length mismatch");

    BoundReport r;
    r.delta = delta;
    r.q_l1 = q.l1();
    r.q_l2 = q.l2();
    r.q_linf = q.linf();
    r.q_bar = source_mass(q, data);
    r.q_p0_l1 = l1_distance(q.values, p0.values);
    if (r.q_p0_l1 >= 1.0)
        throw OutOfDomainError("bound_corollary4: requires ||q - p0||_1 < 1");

    r.terms.emplace_back("weighted_loss", weighted_empirical_loss(h, data, q, loss));
    r.terms.emplace_back("discrepancy_term", r.q_bar * std::max(0.0, d_hat));
    if (index_discrepancy < 0.0) {
        // one-sided estimate came out negative; clamp and flag
        r.degenerate_warning = true;
        index_discrepancy = 0.0;
    }
    r.terms.emplace_back("index_discrepancy", index_discrepancy);
    r.terms.emplace_back("rademacher", 2.0 * rademacher);
    r.terms.emplace_back("l1_deviation", 6.0 * r.q_p0_l1);

    double loglog =
        r.q_p0_l1 == 0.0
            ? 0.0
            : std::sqrt(std::log(std::log2(2.0 / (1.0 - r.q_p0_l1))));
    double coeff = r.q_l2 + 2.0 * r.q_p0_l1;
    r.terms.emplace_back("loglog_term", coeff * loglog);
    r.terms.emplace_back("confidence_term", coeff * std::sqrt(std::log(2.0 / delta) / 2.0));
    finish(r);
    return r;
}

BoundReport bound_theorem5_da(const LinearHypothesis& h, const WeightVector& q,
                              const WeightVector& p, const WeightVector& q_prime,
                              const LabeledDataset& data_S, const DaSurrogates& surrogates,
                              double delta, double rademacher, LossKind loss) {
    if (delta <= 0.0 || delta >= 1.0)
        throw InvalidParameterError("bound_theorem5_da: delta must lie in (0, 1)");
    if (q.size() != data_S.size() || p.size() != data_S.size())
        throw DimensionError("bound_theorem5_da: source weight length mismatch");

    BoundReport r;
    r.delta = delta;
    r.q_l1 = q.l1();
    r.q_l2 = q.l2();
    r.q_linf = std::max(q.linf(), q_prime.linf());
    r.q_bar = q.l1();
    if (q.l1() == 0.0 && p.l1() == 0.0 && q_prime.l1() == 0.0) r.degenerate_warning = true;

    // sum_i (q_i + p_i) loss_i
    double loss_term = 0.0;
    for (std::size_t i = 0; i < data_S.size(); ++i)
        loss_term += (q.values[i] + p.values[i]) *
                     loss_value(loss, h.predict(data_S.features.row(i)), data_S.labels[i]);
    r.terms.emplace_back("weighted_loss", loss_term);

    // dis(q', p) <= unlabeled surrogate + label correction
    r.terms.emplace_back("discrepancy_term",
                         std::max(0.0, surrogates.dis_q_prime_p) + surrogates.label_correction);
    r.surrogate_terms.push_back("discrepancy_term");

    // dis([1 - ||q'||_1] P, ||q||_1 Q) <= ||q||_1 (d_bar + correction)
    //   + max(0, (1 - ||q'||_1) - ||q||_1) with losses in [0, 1]
    double dist_term = q.l1() * (std::max(0.0, surrogates.d_bar) + surrogates.label_correction) +
                       std::max(0.0, (1.0 - q_prime.l1()) - q.l1());
    r.terms.emplace_back("distribution_discrepancy", dist_term);
    r.surrogate_terms.push_back("distribution_discrepancy");

    r.terms.emplace_back("rademacher", 2.0 * rademacher);
    double conf = std::sqrt((norm2_sq(q.values) + norm2_sq(q_prime.values)) *
                            std::log(1.0 / delta) / 2.0);
    r.terms.emplace_back("confidence_term", conf);
    finish(r);
    return r;
}

} // namespace adapt::bounds
