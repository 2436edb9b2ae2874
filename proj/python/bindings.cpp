#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "adapt/algorithms.hpp"
#include "adapt/bounds.hpp"
#include "adapt/datagen.hpp"
#include "adapt/discrepancy.hpp"
#include "adapt/harness.hpp"
#include "adapt/linalg.hpp"

namespace py = pybind11;
using namespace adapt;

namespace {

Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return Matrix();
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols())
            throw DimensionError("ragged feature rows");
        std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    }
    return m;
}

std::vector<std::vector<double>> matrix_to_rows(const Matrix& m) {
    std::vector<std::vector<double>> out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        out[i] = std::vector<double>(m.row(i).begin(), m.row(i).end());
    return out;
}

LabeledDataset dataset_from(const std::vector<std::vector<double>>& features,
                            const Vector& labels, const std::vector<std::string>& domains) {
    LabeledDataset d;
    d.features = matrix_from_rows(features);
    d.labels = labels;
    d.domains.reserve(domains.size());
    for (const auto& s : domains) {
        if (s == "source")
            d.domains.push_back(Domain::Source);
        else if (s == "target")
            d.domains.push_back(Domain::Target);
        else
            throw InvalidParameterError("domain must be 'source' or 'target'");
    }
    d.validate();
    return d;
}

HypothesisSpace space_from(const std::string& loss, double radius) {
    HypothesisSpace s;
    if (loss == "squared")
        s.loss = LossKind::Squared;
    else if (loss == "logistic")
        s.loss = LossKind::Logistic;
    else
        throw InvalidParameterError("loss must be 'squared' or 'logistic'");
    s.radius = radius;
    return s;
}

py::dict fit_to_dict(const algorithms::FitResult& fit) {
    py::dict weights;
    for (const auto& [name, wv] : fit.weights) weights[name.c_str()] = wv.values;
    py::dict out;
    out["w"] = fit.hypothesis.w;
    out["bias"] = fit.hypothesis.bias;
    out["weights"] = weights;
    out["trace"] = fit.objective_trace;
    out["converged"] = fit.converged;
    out["iterations"] = fit.iterations;
    out["objective_final"] = fit.objective_final();
    return out;
}

} // namespace

PYBIND11_MODULE(adaptpy, m) {
    m.doc() = "Discrepancy-based sample reweighting: best-effort and domain adaptation";

    m.def(
        "loss_value",
        [](const std::string& loss, double prediction, double label) {
            return loss_value(loss == "logistic" ? LossKind::Logistic : LossKind::Squared,
                              prediction, label);
        },
        py::arg("loss"), py::arg("prediction"), py::arg("label"));

    m.def(
        "weighted_empirical_loss",
        [](const std::vector<std::vector<double>>& x, const Vector& y,
           const std::vector<std::string>& domains, const Vector& w, double bias,
           const Vector& q, const std::string& loss) {
            auto data = dataset_from(x, y, domains);
            LinearHypothesis h{w, bias, std::max(1.0, norm2(w))};
            WeightVector qv{q, WeightConstraint::Box01};
            return weighted_empirical_loss(h, data, qv,
                                           loss == "logistic" ? LossKind::Logistic
                                                              : LossKind::Squared);
        },
        py::arg("features"), py::arg("labels"), py::arg("domains"), py::arg("w"),
        py::arg("bias"), py::arg("q"), py::arg("loss") = "squared");

    m.def("project_simplex", &linalg::project_simplex, py::arg("v"));
    m.def(
        "project_box",
        [](const Vector& v, double lo, double hi) { return linalg::project_box(v, lo, hi); },
        py::arg("v"), py::arg("lo") = 0.0, py::arg("hi") = 1.0);

    m.def(
        "sym_eigendecomposition",
        [](const std::vector<std::vector<double>>& rows) {
            auto eig = linalg::sym_eigendecomposition(linalg::SymMatrix(matrix_from_rows(rows)));
            return py::make_tuple(eig.eigenvalues, matrix_to_rows(eig.vectors));
        },
        py::arg("matrix"));

    m.def(
        "matrix_exp_sym",
        [](const std::vector<std::vector<double>>& rows) {
            return matrix_to_rows(
                linalg::matrix_exp_sym(linalg::SymMatrix(matrix_from_rows(rows))).matrix());
        },
        py::arg("matrix"));

    m.def(
        "estimate_labeled_discrepancy",
        [](const std::vector<std::vector<double>>& xp, const Vector& yp,
           const std::vector<std::vector<double>>& xq, const Vector& yq, const std::string& loss,
           double radius, std::size_t restarts, std::uint64_t seed) {
            auto p = dataset_from(xp, yp, std::vector<std::string>(yp.size(), "target"));
            auto q = dataset_from(xq, yq, std::vector<std::string>(yq.size(), "source"));
            discrepancy::EstimatorSettings settings;
            settings.restarts = restarts;
            settings.seed = seed;
            auto est = discrepancy::estimate_labeled_discrepancy(p, q, space_from(loss, radius),
                                                                 settings);
            py::dict out;
            out["value"] = est.value;
            out["maximizer_w"] = est.maximizer.w;
            out["restarts"] = est.restarts_used;
            return out;
        },
        py::arg("target_features"), py::arg("target_labels"), py::arg("source_features"),
        py::arg("source_labels"), py::arg("loss") = "squared", py::arg("radius") = 1.0,
        py::arg("restarts") = 16, py::arg("seed") = 0);

    m.def(
        "unlabeled_discrepancy",
        [](const Vector& q_prime, const Vector& p,
           const std::vector<std::vector<double>>& target_features,
           const std::vector<std::vector<double>>& source_features, double lambda) {
            auto ud = discrepancy::unlabeled_discrepancy(q_prime, p,
                                                         matrix_from_rows(target_features),
                                                         matrix_from_rows(source_features),
                                                         lambda);
            py::dict out;
            out["value"] = ud.value;
            out["raw_lambda_max"] = ud.raw_lambda_max;
            out["grad_q_prime"] = ud.grad_q_prime;
            out["grad_p"] = ud.grad_p;
            return out;
        },
        py::arg("q_prime"), py::arg("p"), py::arg("target_features"), py::arg("source_features"),
        py::arg("lambda_") = 1.0);

    m.def(
        "softmax_unlabeled_discrepancy",
        [](const Vector& q_prime, const Vector& p,
           const std::vector<std::vector<double>>& target_features,
           const std::vector<std::vector<double>>& source_features, double mu) {
            auto sm = discrepancy::softmax_unlabeled_discrepancy(
                q_prime, p, matrix_from_rows(target_features), matrix_from_rows(source_features),
                mu);
            py::dict out;
            out["value"] = sm.value;
            out["grad_q_prime"] = sm.grad_q_prime;
            out["grad_p"] = sm.grad_p;
            return out;
        },
        py::arg("q_prime"), py::arg("p"), py::arg("target_features"), py::arg("source_features"),
        py::arg("mu"));

    m.def("alpha_weights",
          [](std::size_t m_, std::size_t n, double alpha) {
              return algorithms::alpha_weights(m_, n, alpha).values;
          },
          py::arg("m"), py::arg("n"), py::arg("alpha"));

    m.def(
        "weighted_erm",
        [](const std::vector<std::vector<double>>& x, const Vector& y,
           const std::vector<std::string>& domains, const Vector& q, const std::string& loss,
           double radius, double ridge) {
            auto data = dataset_from(x, y, domains);
            WeightVector qv{q, WeightConstraint::Box01};
            auto h = algorithms::weighted_erm(data, qv, space_from(loss, radius), ridge);
            return py::make_tuple(h.w, h.bias);
        },
        py::arg("features"), py::arg("labels"), py::arg("domains"), py::arg("q"),
        py::arg("loss") = "squared", py::arg("radius") = 1.0, py::arg("ridge") = 1e-3);

    m.def(
        "fit",
        [](const std::string& algo, const std::vector<std::vector<double>>& x, const Vector& y,
           const std::vector<std::string>& domains, const std::map<std::string, double>& params,
           const std::string& loss, double radius, std::uint64_t seed) {
            auto data = dataset_from(x, y, domains);
            auto run = harness::run_algorithm(algo, params, data, space_from(loss, radius), seed);
            if (run.fit) return fit_to_dict(*run.fit);
            py::dict out;
            out["w"] = run.hypothesis.w;
            out["bias"] = run.hypothesis.bias;
            return out;
        },
        py::arg("algo"), py::arg("features"), py::arg("labels"), py::arg("domains"),
        py::arg("params") = std::map<std::string, double>{}, py::arg("loss") = "squared",
        py::arg("radius") = 1.0, py::arg("seed") = 0);

    m.def(
        "gen_best_effort_task",
        [](std::size_t d, std::size_t m_, std::size_t n, std::size_t test_size, double eta,
           double epsilon, std::uint64_t seed) {
            datagen::BestEffortTaskConfig c{d, m_, n, test_size, eta, epsilon, seed};
            auto t = datagen::gen_best_effort_task(c);
            py::dict out;
            out["source_features"] = matrix_to_rows(t.source.features);
            out["source_labels"] = t.source.labels;
            out["target_features"] = matrix_to_rows(t.target.features);
            out["target_labels"] = t.target.labels;
            out["test_features"] = matrix_to_rows(t.test.features);
            out["test_labels"] = t.test.labels;
            out["w_p"] = t.w_p;
            out["w_q"] = t.w_q;
            out["u"] = t.u;
            out["noisy_rows"] = t.noisy_rows;
            return out;
        },
        py::arg("d") = 20, py::arg("m") = 1000, py::arg("n") = 50, py::arg("test_size") = 2000,
        py::arg("eta") = 0.1, py::arg("epsilon") = 0.01, py::arg("seed") = 0);

    m.def("load_dataset_csv", [](const std::string& path) {
        auto d = datagen::load_dataset_csv(path);
        std::vector<std::string> domains;
        domains.reserve(d.size());
        for (auto t : d.domains)
            domains.push_back(t == Domain::Source ? "source" : "target");
        return py::make_tuple(matrix_to_rows(d.features), d.labels, domains);
    });

    m.def("save_dataset_csv",
          [](const std::vector<std::vector<double>>& x, const Vector& y,
             const std::vector<std::string>& domains, const std::string& path) {
              datagen::save_dataset_csv(dataset_from(x, y, domains), path);
          });

    m.def(
        "bound_theorem1",
        [](const std::vector<std::vector<double>>& x, const Vector& y,
           const std::vector<std::string>& domains, const Vector& w, const Vector& q,
           double d_hat, double delta, double rademacher, const std::string& loss) {
            auto data = dataset_from(x, y, domains);
            LinearHypothesis h{w, 0.0, std::max(1.0, norm2(w))};
            WeightVector qv{q, WeightConstraint::Box01};
            auto report = bounds::bound_theorem1(h, qv, data, d_hat, delta, rademacher,
                                                 loss == "logistic" ? LossKind::Logistic
                                                                    : LossKind::Squared);
            py::dict out;
            for (const auto& [name, value] : report.terms) out[name.c_str()] = value;
            out["total"] = report.total;
            return out;
        },
        py::arg("features"), py::arg("labels"), py::arg("domains"), py::arg("w"), py::arg("q"),
        py::arg("d_hat"), py::arg("delta"), py::arg("rademacher"), py::arg("loss") = "squared");
}
