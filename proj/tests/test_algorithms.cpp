#include <doctest.h>

#include <cmath>

#include "adapt/algorithms.hpp"
#include "adapt/datagen.hpp"
#include "adapt/rng.hpp"

using namespace adapt;
using namespace adapt::algorithms;

namespace {

LabeledDataset dataset_1d(std::initializer_list<double> xs, std::initializer_list<double> ys,
                          Domain tag) {
    Matrix m(xs.size(), 1);
    std::size_t i = 0;
    for (double x : xs) m(i++, 0) = x;
    return make_dataset(std::move(m), Vector(ys), tag);
}

LabeledDataset random_regression(std::size_t rows, std::size_t d, Rng& rng, Domain tag) {
    Matrix x(rows, d);
    Vector y(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < d; ++j) x(i, j) = rng.normal();
        y[i] = rng.normal();
    }
    return make_dataset(std::move(x), std::move(y), tag);
}

SbestHyperparams basic_params(const LabeledDataset& data) {
    SbestHyperparams hp;
    hp.p0 = WeightVector::zeros(data.size(), WeightConstraint::Simplex);
    std::size_t n = data.count(Domain::Target);
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data.domains[i] == Domain::Target) hp.p0.values[i] = 1.0 / static_cast<double>(n);
    return hp;
}

} // namespace

TEST_CASE("algorithms: weighted_erm squared loss") {
    // 1-d ridge: (x^2 + ridge) w = x y with x = 1, y = 1, ridge = 1 -> w = 1/2
    auto one = dataset_1d({1.0}, {1.0}, Domain::Target);
    WeightVector q{{1.0}, WeightConstraint::Box01};
    HypothesisSpace space{LossKind::Squared, 10.0, std::nullopt};
    auto h = weighted_erm(one, q, space, 1.0);
    CHECK(h.w[0] == doctest::Approx(0.5).epsilon(1e-12));

    // weight concentrated on one example fits it as ridge -> 0+
    Rng rng(3);
    auto data = random_regression(6, 2, rng, Domain::Target);
    WeightVector conc = WeightVector::zeros(6);
    conc.values[2] = 1.0;
    auto fit = weighted_erm(data, conc, space, 1e-10);
    double residual = fit.predict(data.features.row(2)) - data.labels[2];
    CHECK(std::fabs(residual) <= 1e-4);

    // ridge -> infinity shrinks w to zero
    auto shrunk = weighted_erm(data, WeightVector::uniform(6), space, 1e9);
    CHECK(norm2(shrunk.w) <= 1e-6);

    // rank-deficient system without ridge
    Matrix xd(3, 2);
    for (std::size_t i = 0; i < 3; ++i) xd(i, 0) = 1.0; // second column all zero
    auto degenerate = make_dataset(std::move(xd), {1.0, 1.0, 1.0}, Domain::Target);
    CHECK_THROWS_AS(weighted_erm(degenerate, WeightVector::uniform(3), space, 0.0),
                    RegularizationRequiredError);
}

TEST_CASE("algorithms: weighted_erm logistic fits separable data") {
    Rng rng(5);
    Matrix x(40, 2);
    Vector y(40);
    for (std::size_t i = 0; i < 40; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        y[i] = x(i, 0) + 0.5 * x(i, 1) >= 0 ? 1.0 : -1.0;
    }
    auto data = make_dataset(std::move(x), std::move(y), Domain::Target);
    HypothesisSpace space{LossKind::Logistic, 5.0, std::nullopt};
    auto h = weighted_erm(data, WeightVector::uniform(40), space, 1e-3);
    CHECK(evaluate_metrics(h, data).accuracy >= 0.95);
    CHECK(norm2(h.w) <= 5.0 + 1e-9);
}

TEST_CASE("algorithms: sbest objective") {
    // two source rows, q = (1/2, 1/2), losses (0.2, 0.4), d-hat = 0.1
    Matrix x(2, 1);
    x(0, 0) = 1.0;
    x(1, 0) = 1.0;
    auto data = make_dataset(std::move(x),
                             {1.0 - std::sqrt(0.2), 1.0 - std::sqrt(0.4)}, Domain::Source);
    LinearHypothesis h{{1.0}, 0.0, 2.0};
    HypothesisSpace space{LossKind::Squared, 2.0, std::nullopt};
    SbestHyperparams hp;
    hp.lambda_1 = 1.0;
    hp.d_hat = 0.1;
    hp.p0 = WeightVector::uniform(2);
    WeightVector q = WeightVector::uniform(2);
    CHECK(sbest_objective(h, q, data, hp, space) == doctest::Approx(0.4).epsilon(1e-9));

    // zero losses, q = p0, d-hat = 0 gives 0
    auto zero_data = dataset_1d({1.0, 2.0}, {0.5, 1.0}, Domain::Target);
    LinearHypothesis fitter{{0.5}, 0.0, 1.0};
    SbestHyperparams zero_hp;
    zero_hp.lambda_1 = 3.0;
    zero_hp.p0 = WeightVector::uniform(2);
    CHECK(sbest_objective(fitter, WeightVector::uniform(2), zero_data, zero_hp, space) ==
          doctest::Approx(0.0).epsilon(1e-12));

    // all lambdas and d-hat zero reduces to the weighted empirical loss
    Rng rng(7);
    auto rnd = random_regression(5, 2, rng, Domain::Source);
    LinearHypothesis hr{{0.3, -0.2}, 0.0, 1.0};
    SbestHyperparams plain;
    plain.p0 = WeightVector::uniform(5);
    WeightVector qr = WeightVector::uniform(5);
    CHECK(sbest_objective(hr, qr, rnd, plain, space) ==
          doctest::Approx(weighted_empirical_loss(hr, rnd, qr)).epsilon(1e-12));
}

TEST_CASE("algorithms: sbest_am stop rule and trace") {
    Rng rng(11);
    auto source = random_regression(12, 2, rng, Domain::Source);
    auto target = random_regression(6, 2, rng, Domain::Target);
    auto data = combine(source, target);
    HypothesisSpace space{LossKind::Squared, 2.0, std::nullopt};

    // T = 1 with huge tau returns after the first update pair
    auto hp = basic_params(data);
    hp.max_iters = 1;
    hp.tau = 1e100;
    hp.lambda_2 = 1.0;
    auto fit = sbest_am(data, hp, space);
    CHECK(fit.iterations == 1);
    CHECK(fit.converged);

    // longer run: monotone trace, converged consistent with tau
    hp.max_iters = 50;
    hp.tau = 1e-7;
    auto fit2 = sbest_am(data, hp, space);
    for (std::size_t i = 1; i < fit2.objective_trace.size(); ++i)
        CHECK(fit2.objective_trace[i] <= fit2.objective_trace[i - 1] + 1e-9);
    CHECK(fit2.weight("q").size() == data.size());
}

TEST_CASE("algorithms: sbest_dc convex reduction matches weighted_erm") {
    // lambda_inf = 0, squared loss, huge lambda_1 pins q at p0
    Rng rng(13);
    auto source = random_regression(6, 2, rng, Domain::Source);
    auto target = random_regression(6, 2, rng, Domain::Target);
    auto data = combine(source, target);
    HypothesisSpace space{LossKind::Squared, 5.0, std::nullopt};

    auto hp = basic_params(data);
    hp.p0 = WeightVector::uniform(12);
    hp.lambda_1 = 1e6;
    hp.max_iters = 60;
    hp.weight_step_iters = 2000;
    hp.weight_step_size = 0.5;
    hp.tau = 1e-12;
    auto fit = sbest_dc(data, hp, space);
    auto direct = weighted_erm(data, WeightVector::uniform(12), space, 0.0);
    for (std::size_t j = 0; j < 2; ++j)
        CHECK(fit.hypothesis.w[j] == doctest::Approx(direct.w[j]).epsilon(1e-6));
}

TEST_CASE("algorithms: sbest decomposition identity") {
    Rng rng(17);
    auto source = random_regression(5, 2, rng, Domain::Source);
    auto target = random_regression(4, 2, rng, Domain::Target);
    auto data = combine(source, target);
    HypothesisSpace space{LossKind::Squared, 2.0, std::nullopt};
    auto hp = basic_params(data);
    hp.lambda_inf = 0.3;
    hp.lambda_1 = 0.7;
    hp.lambda_2 = 2.0;
    hp.d_hat = 0.25;

    for (int trial = 0; trial < 30; ++trial) {
        Vector w = rng.normal_vector(2);
        w = linalg::project_ball(w, 2.0);
        Vector qv(9);
        for (auto& v : qv) v = rng.uniform();
        qv = linalg::project_simplex(qv);
        LinearHypothesis h{w, 0.0, 2.0};
        WeightVector q{qv, WeightConstraint::Simplex};
        auto [convex, concave] = sbest_dc_parts(h, q, data, hp, space);
        CHECK(convex - concave ==
              doctest::Approx(sbest_objective(h, q, data, hp, space)).epsilon(1e-10));
    }
}

TEST_CASE("algorithms: alpha weights") {
    auto q = alpha_weights(2, 2, 0.5);
    CHECK(q.values[0] == doctest::Approx(0.125));
    CHECK(q.values[1] == doctest::Approx(0.125));
    CHECK(q.values[2] == doctest::Approx(0.375));
    CHECK(q.values[3] == doctest::Approx(0.375));

    auto uniform = alpha_weights(3, 2, 1.0);
    for (double v : uniform.values) CHECK(v == doctest::Approx(0.2));

    auto target_only = alpha_weights(3, 2, 0.0);
    CHECK(target_only.values[0] == doctest::Approx(0.0));
    CHECK(target_only.values[3] == doctest::Approx(0.5));

    Rng rng(19);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t m = 1 + rng.uniform_index(30), n = 1 + rng.uniform_index(30);
        double alpha = rng.uniform();
        auto w = alpha_weights(m, n, alpha);
        CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(w.mass_on_prefix(m) ==
              doctest::Approx(alpha * static_cast<double>(m) / static_cast<double>(m + n))
                  .epsilon(1e-12));
    }
    CHECK_THROWS_AS(alpha_weights(2, 2, 1.5), InvalidParameterError);
    CHECK_THROWS_AS(alpha_weights(0, 2, 0.5), InvalidParameterError);
}

TEST_CASE("algorithms: alpha reweighting training") {
    Rng rng(23);
    datagen::BestEffortTaskConfig cfg;
    cfg.d = 5;
    cfg.m = 60;
    cfg.n = 20;
    cfg.test_size = 10;
    cfg.eta = 1.0; // source entirely noise
    cfg.epsilon = 0.01;
    cfg.seed = 23;
    auto task = datagen::gen_best_effort_task(cfg);
    auto data = combine(task.source, task.target);
    HypothesisSpace space{LossKind::Logistic, 5.0, std::nullopt};

    // singleton grid returns that alpha
    auto single = alpha_reweighting_train(data, {0.25}, task.target, space, 1e-3);
    CHECK(single.alpha == doctest::Approx(0.25));

    // grid {0} equals the target-only alpha weighting
    auto zero = alpha_reweighting_train(data, {0.0}, task.target, space, 1e-3);
    auto direct = weighted_erm(data, alpha_weights(60, 20, 0.0), space, 1e-3);
    for (std::size_t j = 0; j < 5; ++j)
        CHECK(zero.hypothesis.w[j] == doctest::Approx(direct.w[j]).epsilon(1e-9));

    // pure-noise source: alpha = 0 wins over alpha = 1 across seeds
    std::size_t zero_wins = 0;
    for (std::uint64_t s = 0; s < 5; ++s) {
        cfg.seed = 100 + s;
        auto t = datagen::gen_best_effort_task(cfg);
        auto d = combine(t.source, t.target);
        auto pick = alpha_reweighting_train(d, {0.0, 1.0}, t.target, space, 1e-3);
        if (pick.alpha == 0.0) ++zero_wins;
    }
    CHECK(zero_wins >= 4);

    LabeledDataset empty;
    CHECK_THROWS_AS(alpha_reweighting_train(data, {0.5}, empty, space, 1e-3), EmptyDataError);
}

TEST_CASE("algorithms: bestda objective") {
    Rng rng(29);
    auto src = random_regression(4, 2, rng, Domain::Source);
    LabeledDataset tgt = src;
    tgt.domains.assign(tgt.size(), Domain::Target);
    HypothesisSpace space{LossKind::Squared, 1.0, std::nullopt};

    BestDaHyperparams hp;
    hp.p0 = WeightVector::zeros(8, WeightConstraint::Box01);
    LinearHypothesis h{{0.2, -0.1}, 0.0, 1.0};

    // all weights zero, lambdas zero -> 0
    WeightVector zq = WeightVector::zeros(4), zp = WeightVector::zeros(4);
    CHECK(bestda_objective(h, zq, zp, zq, src, tgt, hp, space) ==
          doctest::Approx(0.0).epsilon(1e-12));

    // q = 0, p matched with q' on identical points, p0 = (q, q'):
    // both M terms vanish; only the p-weighted loss remains
    WeightVector p{{0.1, 0.2, 0.3, 0.15}, WeightConstraint::Box01};
    WeightVector q_prime = p;
    BestDaHyperparams hp2;
    hp2.p0 = WeightVector::zeros(8, WeightConstraint::Box01);
    for (std::size_t i = 0; i < 4; ++i) hp2.p0.values[4 + i] = q_prime.values[i];
    double expected = weighted_empirical_loss(h, src, p, LossKind::Squared);
    CHECK(bestda_objective(h, zq, p, q_prime, src, tgt, hp2, space) ==
          doctest::Approx(expected).epsilon(1e-10));

    // term-by-term oracle on a random instance
    auto src2 = random_regression(3, 2, rng, Domain::Source);
    auto tgt2 = random_regression(4, 2, rng, Domain::Target);
    WeightVector q{{0.2, 0.4, 0.1}, WeightConstraint::Box01};
    WeightVector p2{{0.3, 0.1, 0.5}, WeightConstraint::Box01};
    WeightVector qp2{{0.25, 0.2, 0.3, 0.15}, WeightConstraint::Box01};
    BestDaHyperparams hp3;
    hp3.lambda_inf = 0.2;
    hp3.lambda_1 = 0.4;
    hp3.lambda_2 = 0.6;
    hp3.d_bar = 0.37;
    hp3.p0 = WeightVector::uniform(7);

    double manual = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        manual += (q.values[i] + p2.values[i]) *
                  loss_value(LossKind::Squared, h.predict(src2.features.row(i)),
                             src2.labels[i]);
    manual += q.l1() * hp3.d_bar;
    manual += discrepancy::unlabeled_discrepancy(qp2.values, p2.values, tgt2.features,
                                                 src2.features, 1.0)
                  .value;
    Vector joint(7);
    for (std::size_t i = 0; i < 3; ++i) joint[i] = q.values[i];
    for (std::size_t i = 0; i < 4; ++i) joint[3 + i] = qp2.values[i];
    auto all = combine(src2, tgt2);
    manual += discrepancy::unlabeled_discrepancy(joint, hp3.p0.values, all.features,
                                                 all.features, 1.0)
                  .value;
    manual += hp3.lambda_inf * norm_inf(joint) * h.norm_sq();
    manual += hp3.lambda_1 * l1_distance(joint, hp3.p0.values);
    manual += hp3.lambda_2 * (norm2_sq(q.values) + norm2_sq(qp2.values));
    CHECK(bestda_objective(h, q, p2, qp2, src2, tgt2, hp3, space) ==
          doctest::Approx(manual).epsilon(1e-9));

    HypothesisSpace logistic{LossKind::Logistic, 1.0, std::nullopt};
    CHECK_THROWS_AS(bestda_objective(h, q, p2, qp2, src2, tgt2, hp3, logistic),
                    UnsupportedLossError);
}

TEST_CASE("algorithms: bestda_am on identical point sets") {
    Rng rng(31);
    auto src = random_regression(8, 2, rng, Domain::Source);
    LabeledDataset tgt = src;
    tgt.domains.assign(tgt.size(), Domain::Target);

    HypothesisSpace space{LossKind::Squared, 1.0, std::nullopt};
    BestDaHyperparams hp;
    hp.lambda_2 = 0.5;
    hp.p0 = WeightVector::zeros(16, WeightConstraint::Box01);
    for (std::size_t i = 0; i < 8; ++i) hp.p0.values[8 + i] = 1.0 / 8.0;
    hp.max_iters = 15;
    hp.weight_step_iters = 150;

    auto fit = bestda_am(src, tgt, hp, space);
    CHECK(fit.objective_trace.back() <= fit.objective_trace.front() + 1e-12);
    for (std::size_t i = 1; i < fit.objective_trace.size(); ++i)
        CHECK(fit.objective_trace[i] <= fit.objective_trace[i - 1] + 1e-9);
    CHECK(fit.weight("q").size() == 8);
    CHECK(fit.weight("p").size() == 8);
    CHECK(fit.weight("q_prime").size() == 8);
}

TEST_CASE("algorithms: bestda objective is permutation invariant in source rows") {
    Rng rng(47);
    auto src = random_regression(5, 2, rng, Domain::Source);
    auto tgt = random_regression(3, 2, rng, Domain::Target);
    HypothesisSpace space{LossKind::Squared, 1.0, std::nullopt};
    LinearHypothesis h{{0.3, -0.2}, 0.0, 1.0};
    WeightVector q{{0.1, 0.3, 0.0, 0.2, 0.4}, WeightConstraint::Box01};
    WeightVector p{{0.2, 0.1, 0.5, 0.3, 0.0}, WeightConstraint::Box01};
    WeightVector qp{{0.2, 0.3, 0.1}, WeightConstraint::Box01};
    BestDaHyperparams hp;
    hp.lambda_inf = 0.2;
    hp.lambda_1 = 0.3;
    hp.lambda_2 = 0.4;
    hp.d_bar = 0.5;
    hp.p0 = WeightVector::uniform(8);
    double base = bestda_objective(h, q, p, qp, src, tgt, hp, space);

    std::vector<std::size_t> perm{4, 2, 0, 3, 1};
    auto src2 = src.select(perm);
    WeightVector q2 = q, p2 = p;
    WeightVector p0_2 = hp.p0;
    for (std::size_t i = 0; i < 5; ++i) {
        q2.values[i] = q.values[perm[i]];
        p2.values[i] = p.values[perm[i]];
        p0_2.values[i] = hp.p0.values[perm[i]];
    }
    BestDaHyperparams hp2 = hp;
    hp2.p0 = p0_2;
    double permuted = bestda_objective(h, q2, p2, qp, src2, tgt, hp2, space);
    CHECK(base == doctest::Approx(permuted).epsilon(1e-10));
}

TEST_CASE("algorithms: dm baseline") {
    HypothesisSpace space{LossKind::Squared, 1.0, std::nullopt};

    // identical marginals: uniform weights already give zero discrepancy
    Rng rng(37);
    auto src = random_regression(6, 2, rng, Domain::Source);
    LabeledDataset tgt = src;
    tgt.domains.assign(tgt.size(), Domain::Target);
    auto dm = dm_baseline(src, tgt, 1.0, 1e-3, space);
    CHECK(dm.stage1_trace.back() <= 1e-9);
    for (std::size_t i = 1; i < dm.stage1_trace.size(); ++i)
        CHECK(dm.stage1_trace[i] <= dm.stage1_trace[i - 1] + 1e-12);

    // 1-d: source contains the target point; mass concentrates there
    auto s2 = dataset_1d({2.0, 0.1}, {1.0, 0.1}, Domain::Source);
    auto t2 = dataset_1d({2.0}, {0.0}, Domain::Target);
    auto dm2 = dm_baseline(s2, t2, 1.0, 1e-3, space, 2000);
    // brute-force grid over the 1-simplex
    double best = 1e300;
    for (int k = 0; k <= 1000; ++k) {
        double q1 = static_cast<double>(k) / 1000.0;
        double m = 4.0 - (q1 * 4.0 + (1.0 - q1) * 0.01);
        best = std::min(best, 4.0 * std::max(0.0, m));
    }
    CHECK(dm2.stage1_trace.back() == doctest::Approx(best).epsilon(1e-4));
    CHECK(dm2.stage1_weights.values[0] > 0.99);

    // stage-2 depends on the target only through the stage-1 weights
    auto direct = weighted_erm(s2, dm2.stage1_weights, space, 1e-3);
    CHECK(dm2.hypothesis.w[0] == doctest::Approx(direct.w[0]).epsilon(1e-12));
}

TEST_CASE("algorithms: baselines") {
    Rng rng(41);
    auto src = random_regression(5, 2, rng, Domain::Source);
    auto tgt = random_regression(4, 2, rng, Domain::Target);
    auto data = combine(src, tgt);
    HypothesisSpace space{LossKind::Squared, 2.0, std::nullopt};

    // pooled equals alpha = 1 training
    auto pooled = baseline_train(data, BaselineKind::PooledUniform, space, 1e-2);
    auto via_alpha = weighted_erm(data, alpha_weights(5, 4, 1.0), space, 1e-2);
    for (std::size_t j = 0; j < 2; ++j)
        CHECK(pooled.w[j] == doctest::Approx(via_alpha.w[j]).epsilon(1e-12));

    auto source_only = baseline_train(data, BaselineKind::SourceOnly, space, 1e-2);
    auto src_direct = weighted_erm(src, WeightVector::uniform(5), space, 1e-2);
    for (std::size_t j = 0; j < 2; ++j)
        CHECK(source_only.w[j] == doctest::Approx(src_direct.w[j]).epsilon(1e-12));

    LabeledDataset no_target = src;
    CHECK_THROWS_AS(baseline_train(no_target, BaselineKind::TargetOnly, space, 1e-2),
                    EmptyDataError);
}

TEST_CASE("algorithms: default h0 candidates include the zero hypothesis") {
    Rng rng(43);
    auto data = random_regression(8, 3, rng, Domain::Target);
    HypothesisSpace space{LossKind::Squared, 1.0, std::nullopt};
    auto cands = default_h0_candidates(data, space);
    CHECK(cands.size() == 6);
    CHECK(norm2(cands.front().w) == doctest::Approx(0.0));
}
