#include "adapt/serialize.hpp"

#include <sstream>

#include "adapt/datagen.hpp"

namespace adapt {

using nlohmann::json;

json to_json(const LinearHypothesis& h) {
    return json{{"w", h.w}, {"bias", h.bias}, {"norm_bound", h.norm_bound}};
}

LinearHypothesis hypothesis_from_json(const json& j) {
    LinearHypothesis h;
    h.w = j.at("w").get<Vector>();
    h.bias = j.value("bias", 0.0);
    h.norm_bound = j.value("norm_bound", 1.0);
    return h;
}

json to_json(const algorithms::FitResult& fit) {
    json weights = json::object();
    for (const auto& [name, wv] : fit.weights) weights[name] = wv.values;
    json j = to_json(fit.hypothesis);
    j["weights"] = weights;
    j["trace"] = fit.objective_trace;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["objective_final"] = fit.objective_final();
    return j;
}

algorithms::FitResult fit_result_from_json(const json& j) {
    algorithms::FitResult fit;
    fit.hypothesis = hypothesis_from_json(j);
    if (j.contains("weights")) {
        for (auto it = j.at("weights").begin(); it != j.at("weights").end(); ++it)
            fit.weights.emplace_back(it.key(),
                                     WeightVector{it.value().get<Vector>(),
                                                  WeightConstraint::Box01});
    }
    if (j.contains("trace")) fit.objective_trace = j.at("trace").get<std::vector<double>>();
    fit.converged = j.value("converged", false);
    fit.iterations = j.value("iterations", std::size_t{0});
    return fit;
}

json to_json(const discrepancy::DiscrepancyEstimate& est) {
    const char* method = est.method == discrepancy::Method::Eigen
                             ? "eigen"
                             : (est.method == discrepancy::Method::Softmax ? "softmax"
                                                                           : "grid_restart");
    json j{{"value", est.value},
           {"method", method},
           {"maximizer_w", est.maximizer.w},
           {"restarts", est.restarts_used},
           {"final_grad_norm", est.final_grad_norm},
           {"raw_value", est.raw_value}};
    return j;
}

json to_json(const bounds::BoundReport& report) {
    json terms = json::object();
    json order = json::array();
    for (const auto& [name, value] : report.terms) {
        terms[name] = value;
        order.push_back(name);
    }
    return json{{"terms", terms},
                {"term_order", order},
                {"total", report.total},
                {"delta", report.delta},
                {"q_l1", report.q_l1},
                {"q_l2", report.q_l2},
                {"q_linf", report.q_linf},
                {"q_bar", report.q_bar},
                {"q_p0_l1", report.q_p0_l1},
                {"degenerate_warning", report.degenerate_warning},
                {"surrogate_terms", report.surrogate_terms}};
}

std::string bound_report_csv(const bounds::BoundReport& report) {
    std::ostringstream head, row;
    for (const auto& [name, value] : report.terms) {
        head << name << ',';
        row << datagen::format_double(value) << ',';
    }
    head << "total";
    row << datagen::format_double(report.total);
    return head.str() + "\n" + row.str() + "\n";
}

} // namespace adapt
