#include <doctest.h>

#include <cmath>

#include "adapt/discrepancy.hpp"
#include "adapt/rng.hpp"
#include "oracles.hpp"

using namespace adapt;
using namespace adapt::discrepancy;

namespace {

LabeledDataset dataset_1d(std::initializer_list<double> xs, std::initializer_list<double> ys,
                          Domain tag) {
    Matrix m(xs.size(), 1);
    std::size_t i = 0;
    for (double x : xs) m(i++, 0) = x;
    return make_dataset(std::move(m), Vector(ys), tag);
}

LabeledDataset random_dataset(std::size_t rows, std::size_t d, Rng& rng, Domain tag,
                              double label_scale = 1.0) {
    Matrix m(rows, d);
    Vector y(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < d; ++j) m(i, j) = rng.normal();
        y[i] = label_scale * rng.normal();
    }
    return make_dataset(std::move(m), std::move(y), tag);
}

} // namespace

TEST_CASE("discrepancy: identical samples give zero") {
    Rng rng(3);
    auto p = random_dataset(8, 3, rng, Domain::Target);
    auto q = p;
    q.domains.assign(q.size(), Domain::Source);
    HypothesisSpace space{LossKind::Squared, 1.0, std::nullopt};
    auto est = estimate_labeled_discrepancy(p, q, space);
    CHECK(std::fabs(est.value) <= 1e-8);
}

TEST_CASE("discrepancy: 1-d analytic case d-hat = 3 at w = -1") {
    auto p = dataset_1d({1.0}, {1.0}, Domain::Target);
    auto q = dataset_1d({1.0}, {0.0}, Domain::Source);
    HypothesisSpace space{LossKind::Squared, 1.0, std::nullopt};
    auto est = estimate_labeled_discrepancy(p, q, space);
    CHECK(est.value == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(est.maximizer.w[0] == doctest::Approx(-1.0).epsilon(1e-6));

    // matches a dense 1-d grid over w in [-1, 1]
    double grid = oracles::grid_max_1d(
        [&](double w) { return (w - 1.0) * (w - 1.0) - w * w; }, -1.0, 1.0);
    CHECK(est.value == doctest::Approx(grid).epsilon(1e-6));
}

TEST_CASE("discrepancy: local ball with radius zero is the singleton supremum") {
    Rng rng(5);
    auto p = random_dataset(6, 2, rng, Domain::Target);
    auto q = random_dataset(9, 2, rng, Domain::Source);
    LinearHypothesis center{{0.3, -0.4}, 0.0, 1.0};
    HypothesisSpace space{LossKind::Squared, 1.0, LocalBall{center, 0.0}};
    auto est = estimate_labeled_discrepancy(p, q, space);

    auto mean_loss = [&](const LabeledDataset& d) {
        double s = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i)
            s += loss_value(LossKind::Squared, center.predict(d.features.row(i)), d.labels[i]);
        return s / static_cast<double>(d.size());
    };
    CHECK(est.value == doctest::Approx(mean_loss(p) - mean_loss(q)).epsilon(1e-9));
}

TEST_CASE("discrepancy: estimate is monotone in the number of restarts") {
    Rng rng(7);
    auto p = random_dataset(10, 3, rng, Domain::Target, 2.0);
    auto q = random_dataset(12, 3, rng, Domain::Source, 0.5);
    HypothesisSpace space{LossKind::Squared, 2.0, std::nullopt};
    double prev = -1e300;
    for (std::size_t restarts : {1u, 4u, 8u, 16u}) {
        EstimatorSettings settings;
        settings.restarts = restarts;
        settings.seed = 99;
        auto est = estimate_labeled_discrepancy(p, q, space, settings);
        CHECK(est.value >= prev - 1e-12);
        prev = est.value;
    }
}

TEST_CASE("discrepancy: permutation invariance of the sample order") {
    Rng rng(9);
    auto p = random_dataset(7, 2, rng, Domain::Target);
    auto q = random_dataset(7, 2, rng, Domain::Source);
    HypothesisSpace space{LossKind::Squared, 1.0, std::nullopt};
    auto est = estimate_labeled_discrepancy(p, q, space);

    std::vector<std::size_t> perm{6, 0, 5, 1, 4, 2, 3};
    auto p2 = p.select(perm);
    auto q2 = q.select(perm);
    auto est2 = estimate_labeled_discrepancy(p2, q2, space);
    CHECK(est.value == doctest::Approx(est2.value).epsilon(1e-9));
}

TEST_CASE("discrepancy: index-weight discrepancy") {
    Rng rng(11);
    auto data = random_dataset(5, 2, rng, Domain::Source);
    HypothesisSpace space{LossKind::Squared, 1.0, std::nullopt};

    WeightVector q = WeightVector::uniform(5);
    auto zero = index_weight_discrepancy(q, q, data, space);
    CHECK(std::fabs(zero.value) <= 1e-12);

    // single example: sup_h loss(h(x), y) by 1-d grid
    auto one = dataset_1d({0.8}, {0.5}, Domain::Source);
    WeightVector q1{{1.0}, WeightConstraint::Box01};
    WeightVector p0{{0.0}, WeightConstraint::Box01};
    auto est = index_weight_discrepancy(q1, p0, one, space);
    double grid = oracles::grid_max_1d(
        [&](double w) { return (w * 0.8 - 0.5) * (w * 0.8 - 0.5); }, -1.0, 1.0);
    CHECK(est.value == doctest::Approx(grid).epsilon(1e-6));

    // Hoelder bound with bounded losses
    auto small = random_dataset(6, 2, rng, Domain::Source, 0.2);
    WeightVector qa = WeightVector::zeros(6), pb = WeightVector::zeros(6);
    for (auto& v : qa.values) v = rng.uniform();
    for (auto& v : pb.values) v = rng.uniform();
    auto bound_est = index_weight_discrepancy(qa, pb, small, space);
    double max_loss = 0.0;
    for (std::size_t i = 0; i < small.size(); ++i) {
        double worst = oracles::disc_grid_max_2d(
            [&](const Vector& w) {
                return loss_value(LossKind::Squared, dot(w, small.features.row(i)),
                                  small.labels[i]);
            },
            1.0);
        max_loss = std::max(max_loss, worst);
    }
    CHECK(bound_est.value <= l1_distance(qa.values, pb.values) * max_loss + 1e-9);

    WeightVector shorter = WeightVector::uniform(3);
    CHECK_THROWS_AS(index_weight_discrepancy(shorter, p0, data, space), DimensionError);
}

TEST_CASE("discrepancy: build_M") {
    Rng rng(13);
    Matrix pts(3, 2);
    for (auto& v : pts.data()) v = rng.normal();
    Vector w{0.2, 0.5, 0.3};
    auto zero = build_M(w, w, pts, pts);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(std::fabs(zero(i, j)) <= 1e-12);

    Matrix xt(1, 2), xs(1, 2);
    xt(0, 0) = 1.0;
    xt(0, 1) = 2.0;
    xs(0, 0) = -1.0;
    xs(0, 1) = 0.5;
    auto m = build_M({0.7}, {0.4}, xt, xs);
    CHECK(m(0, 0) == doctest::Approx(0.7 * 1.0 - 0.4 * 1.0));
    CHECK(m(0, 1) == doctest::Approx(0.7 * 2.0 - 0.4 * (-0.5)));
    CHECK(m(1, 1) == doctest::Approx(0.7 * 4.0 - 0.4 * 0.25));

    auto doubled = build_M({1.4}, {0.8}, xt, xs);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(doubled(i, j) == doctest::Approx(2.0 * m(i, j)).epsilon(1e-12));
}

TEST_CASE("discrepancy: unlabeled eigen route") {
    Matrix pts(2, 2);
    pts(0, 0) = 1.0;
    pts(1, 1) = 1.0;
    Vector w{0.5, 0.5};

    // identical sides: zero matrix, zero value and subgradient
    auto same = unlabeled_discrepancy(w, w, pts, pts, 1.0);
    CHECK(same.value == doctest::Approx(0.0));
    for (double g : same.grad_q_prime) CHECK(g == 0.0);

    // negative definite M (= -I): clamped to zero
    Matrix ortho(2, 2);
    ortho(0, 0) = 1.0;
    ortho(1, 1) = 1.0;
    auto neg = unlabeled_discrepancy({0.0, 0.0}, {1.0, 1.0}, ortho, ortho, 1.0);
    CHECK(neg.value == 0.0);
    CHECK(neg.raw_lambda_max < 0.0);

    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix xt(4, 2), xs(5, 2);
        for (auto& v : xt.data()) v = rng.normal();
        for (auto& v : xs.data()) v = rng.normal();
        Vector qp(4), p(5);
        for (auto& v : qp) v = rng.uniform();
        for (auto& v : p) v = rng.uniform();
        double lambda = 0.5 + rng.uniform();
        auto ud = unlabeled_discrepancy(qp, p, xt, xs, lambda);
        auto m = build_M(qp, p, xt, xs);
        double brute = 4.0 * lambda * lambda * oracles::sphere_grid_max_quadratic(m.matrix());
        CHECK(ud.value == doctest::Approx(brute).epsilon(1e-3));
    }
}

TEST_CASE("discrepancy: value is definitionally 4 Lambda^2 max(0, lambda_max(M))") {
    Rng rng(18);
    Matrix xt(4, 3), xs(5, 3);
    for (auto& v : xt.data()) v = rng.normal();
    for (auto& v : xs.data()) v = rng.normal();
    Vector qp(4), p(5);
    for (auto& v : qp) v = rng.uniform();
    for (auto& v : p) v = rng.uniform();
    double lambda = 1.7;
    auto ud = unlabeled_discrepancy(qp, p, xt, xs, lambda);
    auto m = build_M(qp, p, xt, xs);
    double top = linalg::sym_eigendecomposition(m).eigenvalues.front();
    CHECK(ud.value == 4.0 * lambda * lambda * std::max(0.0, top));
    CHECK(ud.raw_lambda_max == top);
}

TEST_CASE("discrepancy: eigen subgradient matches finite differences") {
    Rng rng(19);
    Matrix xt(3, 2), xs(3, 2);
    for (auto& v : xt.data()) v = rng.normal();
    for (auto& v : xs.data()) v = rng.normal();
    Vector qp{0.9, 0.7, 0.8}, p{0.1, 0.2, 0.1}; // strongly positive lambda_max
    auto ud = unlabeled_discrepancy(qp, p, xt, xs, 1.0);
    REQUIRE(ud.raw_lambda_max > 0.1);
    for (std::size_t j = 0; j < 3; ++j) {
        auto f = [&](double v) {
            Vector q2 = qp;
            q2[j] = v;
            return unlabeled_discrepancy(q2, p, xt, xs, 1.0).value;
        };
        double fd = oracles::central_difference(f, qp[j]);
        CHECK(ud.grad_q_prime[j] == doctest::Approx(fd).epsilon(1e-4));
    }
}

TEST_CASE("discrepancy: softmax value and sandwich") {
    Matrix xt(2, 2), xs(1, 2);
    xt(0, 0) = std::sqrt(2.0);
    xt(1, 1) = 1.0;
    xs(0, 0) = 1e-8; // M ~ diag(2, 1)
    auto sm = softmax_unlabeled_discrepancy({1.0, 1.0}, {0.0}, xt, xs, 10.0);
    CHECK(sm.value == doctest::Approx(2.0000045398899218).epsilon(1e-9));

    Rng rng(23);
    for (int trial = 0; trial < 30; ++trial) {
        Matrix a(3, 3), b(3, 3);
        for (auto& v : a.data()) v = rng.normal();
        for (auto& v : b.data()) v = rng.normal();
        Vector qp(3), p(3);
        for (auto& v : qp) v = rng.uniform();
        for (auto& v : p) v = rng.uniform();
        double mu = 0.5 + 20.0 * rng.uniform();
        auto s = softmax_unlabeled_discrepancy(qp, p, a, b, mu);
        auto m = build_M(qp, p, a, b);
        double lmax = linalg::sym_eigendecomposition(m).eigenvalues.front();
        CHECK(s.value >= lmax - 1e-10);
        CHECK(s.value <= lmax + std::log(3.0) / mu + 1e-10);

        // mu = log(k)/eps gives a uniform eps-approximation
        double eps = 0.01;
        auto tight = softmax_unlabeled_discrepancy(qp, p, a, b, std::log(3.0) / eps);
        CHECK(tight.value - lmax <= eps + 1e-12);
    }
    CHECK_THROWS_AS(softmax_unlabeled_discrepancy({1.0}, {1.0}, xs, xs, 0.0),
                    InvalidParameterError);
}

TEST_CASE("discrepancy: softmax gradient matches central differences") {
    Rng rng(29);
    Matrix xt(3, 2), xs(4, 2);
    for (auto& v : xt.data()) v = rng.normal();
    for (auto& v : xs.data()) v = rng.normal();
    Vector qp(3), p(4);
    for (auto& v : qp) v = rng.uniform();
    for (auto& v : p) v = rng.uniform();
    double mu = 3.0;
    auto sm = softmax_unlabeled_discrepancy(qp, p, xt, xs, mu);
    for (std::size_t j = 0; j < 3; ++j) {
        auto f = [&](double v) {
            Vector q2 = qp;
            q2[j] = v;
            return softmax_unlabeled_discrepancy(q2, p, xt, xs, mu).value;
        };
        CHECK(sm.grad_q_prime[j] ==
              doctest::Approx(oracles::central_difference(f, qp[j])).epsilon(1e-4));
    }
    for (std::size_t i = 0; i < 4; ++i) {
        auto f = [&](double v) {
            Vector p2 = p;
            p2[i] = v;
            return softmax_unlabeled_discrepancy(qp, p2, xt, xs, mu).value;
        };
        CHECK(sm.grad_p[i] ==
              doctest::Approx(oracles::central_difference(f, p[i])).epsilon(1e-4));
    }
}

TEST_CASE("discrepancy: empirical unlabeled discrepancy") {
    Rng rng(31);
    auto p = random_dataset(6, 3, rng, Domain::Target);
    auto q = p;
    CHECK(empirical_unlabeled_discrepancy(p, q, 1.0) == doctest::Approx(0.0).epsilon(1e-12));

    // one orthonormal point per side: 4 * lambda_max(x'x'^T - xx^T) = 4
    Matrix xt(1, 2), xs(1, 2);
    xt(0, 0) = 1.0;
    xs(0, 1) = 1.0;
    auto pt = make_dataset(std::move(xt), {0.0}, Domain::Target);
    auto qs = make_dataset(std::move(xs), {0.0}, Domain::Source);
    CHECK(empirical_unlabeled_discrepancy(pt, qs, 1.0) == doctest::Approx(4.0).epsilon(1e-9));

    auto big = random_dataset(9, 3, rng, Domain::Target);
    auto other = random_dataset(7, 3, rng, Domain::Source);
    double base = empirical_unlabeled_discrepancy(big, other, 1.5);
    std::vector<std::size_t> perm{8, 2, 4, 0, 6, 1, 7, 3, 5};
    double shuffled = empirical_unlabeled_discrepancy(big.select(perm), other, 1.5);
    CHECK(base == doctest::Approx(shuffled).epsilon(1e-10));
}

TEST_CASE("discrepancy: delta label discrepancy") {
    Rng rng(37);
    auto p = random_dataset(5, 2, rng, Domain::Target);
    auto q = p;
    LinearHypothesis h0{{0.2, -0.3}, 0.0, 1.0};
    CHECK(delta_label_discrepancy(p, q, h0, 1.0) == doctest::Approx(0.0).epsilon(1e-12));

    Matrix xp(1, 2), xq(1, 2);
    xp(0, 0) = 1.0;
    xq(0, 1) = 1.0;
    auto dp = make_dataset(std::move(xp), {1.0}, Domain::Target);
    auto dq = make_dataset(std::move(xq), {1.0}, Domain::Source);
    LinearHypothesis zero = LinearHypothesis::zero(2, 1.0);
    CHECK(delta_label_discrepancy(dp, dq, zero, 1.0) ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    // h0 interpolating every label on both sides
    Matrix xa(2, 1), xb(2, 1);
    xa(0, 0) = 1.0;
    xa(1, 0) = 2.0;
    xb(0, 0) = -1.0;
    xb(1, 0) = 3.0;
    auto ia = make_dataset(std::move(xa), {0.5, 1.0}, Domain::Target);
    auto ib = make_dataset(std::move(xb), {-0.5, 1.5}, Domain::Source);
    LinearHypothesis interp{{0.5}, 0.0, 1.0};
    CHECK(delta_label_discrepancy(ia, ib, interp, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("discrepancy: eta label discrepancy") {
    Matrix xa(1, 1), xb(1, 1);
    xa(0, 0) = 1.0;
    xb(0, 0) = 1.0;
    auto p = make_dataset(std::move(xa), {1.5}, Domain::Target);  // residual 0.5 at h0 = x
    auto q = make_dataset(std::move(xb), {0.75}, Domain::Source); // residual 0.25
    LinearHypothesis h0{{1.0}, 0.0, 2.0};
    CHECK(eta_label_discrepancy(p, q, h0) == doctest::Approx(0.75).epsilon(1e-12));

    // y = h0(x) everywhere
    Matrix xc(2, 1);
    xc(0, 0) = 1.0;
    xc(1, 0) = -2.0;
    auto exact = make_dataset(std::move(xc), {1.0, -2.0}, Domain::Target);
    CHECK(eta_label_discrepancy(exact, exact, h0) == doctest::Approx(0.0));

    // identical samples with nonzero residuals stay nonzero
    CHECK(eta_label_discrepancy(p, p, h0) > 0.0);
}

TEST_CASE("discrepancy: select_h0") {
    Rng rng(41);
    auto target = random_dataset(6, 2, rng, Domain::Target);
    auto source = random_dataset(6, 2, rng, Domain::Source);

    std::vector<LinearHypothesis> single{LinearHypothesis{{0.1, 0.1}, 0.0, 1.0}};
    auto chosen = select_h0(single, target, source, H0Mode::Delta, 1.0);
    CHECK(chosen.w == single[0].w);

    // candidate achieving delta = 0: identical samples make every candidate 0;
    // instead build one candidate interpolating both samples
    Matrix xi(1, 1);
    xi(0, 0) = 2.0;
    auto ip = make_dataset(std::move(xi), {1.0}, Domain::Target);
    Matrix xj(1, 1);
    xj(0, 0) = 4.0;
    auto iq = make_dataset(std::move(xj), {2.0}, Domain::Source);
    std::vector<LinearHypothesis> cands{LinearHypothesis{{-1.0}, 0.0, 2.0},
                                        LinearHypothesis{{0.5}, 0.0, 2.0}};
    auto best = select_h0(cands, ip, iq, H0Mode::Delta, 1.0);
    CHECK(best.w[0] == doctest::Approx(0.5));

    // pairwise comparison through the delta values themselves
    double d0 = delta_label_discrepancy(ip, iq, cands[0], 1.0);
    double d1 = delta_label_discrepancy(ip, iq, cands[1], 1.0);
    CHECK(d1 < d0);

    CHECK_THROWS_AS(select_h0({}, target, source, H0Mode::Eta, 1.0), EmptyDataError);
}

TEST_CASE("discrepancy: local-plus-delta upper bound on small instances") {
    // dis(P,Q) <= local-unlabeled(h0) + 2 delta(h0), squared loss, d = 2,
    // left side by dense grid. The bound is exercised in the regime it is
    // meant for: shared labeling function and an h0 with small residuals on
    // both samples.
    Rng rng(43);
    for (int trial = 0; trial < 5; ++trial) {
        Vector w_bar = scaled(rng.unit_vector(2), 0.6);
        auto gen = [&](std::size_t rows, Domain tag) {
            Matrix f(rows, 2);
            Vector yy(rows);
            for (std::size_t i = 0; i < rows; ++i) {
                f(i, 0) = rng.normal();
                f(i, 1) = rng.normal();
                yy[i] = dot(w_bar, f.row(i)) + 0.05 * rng.normal();
            }
            return make_dataset(std::move(f), std::move(yy), tag);
        };
        auto p = gen(30, Domain::Target);
        auto q = gen(40, Domain::Source);
        HypothesisSpace space{LossKind::Squared, 1.0, std::nullopt};
        // calibrate the label second moments so the samples agree on E[y^2];
        // with h0 = 0 the squared-loss decomposition then carries no
        // h-independent cross term and the bound applies pointwise
        auto second_moment = [](const LabeledDataset& d) {
            double s = 0.0;
            for (double v : d.labels) s += v * v;
            return s / static_cast<double>(d.size());
        };
        double scale_q = std::sqrt(second_moment(p) / second_moment(q));
        for (auto& v : q.labels) v *= scale_q;
        LinearHypothesis h0 = LinearHypothesis::zero(2, 1.0);

        auto mean_loss = [&](const LabeledDataset& d, const Vector& w) {
            double s = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i)
                s += loss_value(LossKind::Squared, dot(w, d.features.row(i)), d.labels[i]);
            return s / static_cast<double>(d.size());
        };
        double lhs = oracles::disc_grid_max_2d(
            [&](const Vector& w) { return mean_loss(p, w) - mean_loss(q, w); }, 1.0);

        EstimatorSettings settings;
        settings.restarts = 32;
        settings.absolute = true; // the bound goes through the absolute variant
        auto local = estimate_local_unlabeled_discrepancy(p, q, h0, space, settings);
        double delta = delta_label_discrepancy(p, q, h0, 1.0);
        CHECK(lhs <= local.value + 2.0 * delta + 1e-6);
    }
}
