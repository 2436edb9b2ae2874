#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "adapt/harness.hpp"
#include "adapt/serialize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace adapt;

namespace {

int run_gen_data(const std::string& task, const std::string& config_path,
                 const std::string& out_dir) {
    json cfg = json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot open config " + config_path);
        in >> cfg;
    }
    fs::create_directories(out_dir);
    std::uint64_t seed = cfg.value("seed", 0ULL);

    if (task == "best-effort") {
        datagen::BestEffortTaskConfig c;
        c.d = cfg.value("d", c.d);
        c.m = cfg.value("m", c.m);
        c.n = cfg.value("n", c.n);
        c.test_size = cfg.value("test_size", c.test_size);
        c.eta = cfg.value("eta", c.eta);
        c.epsilon = cfg.value("epsilon", c.epsilon);
        c.seed = seed;
        auto t = datagen::gen_best_effort_task(c);
        datagen::save_dataset_csv(t.source, (fs::path(out_dir) / "source.csv").string());
        datagen::save_dataset_csv(t.target, (fs::path(out_dir) / "target.csv").string());
        datagen::save_dataset_csv(t.test, (fs::path(out_dir) / "test.csv").string());
        json meta{{"w_p", t.w_p},
                  {"w_q", t.w_q},
                  {"u", t.u},
                  {"noisy_row_indices", t.noisy_rows},
                  {"seed", t.seed},
                  {"config",
                   {{"d", c.d},
                    {"m", c.m},
                    {"n", c.n},
                    {"test_size", c.test_size},
                    {"eta", c.eta},
                    {"epsilon", c.epsilon}}}};
        std::ofstream meta_out(fs::path(out_dir) / "metadata.json");
        meta_out << meta.dump(2) << '\n';
    } else if (task == "covshift") {
        datagen::CovariateShiftTaskConfig c;
        c.d = cfg.value("d", c.d);
        c.source_size = cfg.value("source_size", c.source_size);
        c.target_size = cfg.value("target_size", c.target_size);
        c.test_size = cfg.value("test_size", c.test_size);
        c.epsilon = cfg.value("epsilon", c.epsilon);
        c.sigma = cfg.value("sigma", c.sigma);
        c.mixture_weight = cfg.value("mixture_weight", c.mixture_weight);
        c.seed = seed;
        auto t = datagen::gen_covariate_shift_task(c);
        datagen::save_dataset_csv(t.source, (fs::path(out_dir) / "source.csv").string());
        datagen::save_dataset_csv(t.target, (fs::path(out_dir) / "target.csv").string());
        datagen::save_dataset_csv(t.test, (fs::path(out_dir) / "test.csv").string());
        json meta{{"w_star", t.w_star},
                  {"w_mix", t.w_mix},
                  {"seed", t.seed},
                  {"config",
                   {{"d", c.d},
                    {"source_size", c.source_size},
                    {"target_size", c.target_size},
                    {"test_size", c.test_size},
                    {"epsilon", c.epsilon},
                    {"sigma", c.sigma},
                    {"mixture_weight", c.mixture_weight}}}};
        std::ofstream meta_out(fs::path(out_dir) / "metadata.json");
        meta_out << meta.dump(2) << '\n';
    } else {
        throw ConfigError("unknown task: " + task);
    }
    return 0;
}

HypothesisSpace space_from(const std::string& loss, double lambda) {
    HypothesisSpace space;
    space.loss = loss == "logistic" ? LossKind::Logistic : LossKind::Squared;
    space.radius = lambda;
    return space;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrepancy-based sample reweighting for best-effort and domain adaptation"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic task as CSV files");
    std::string gen_task, gen_config, gen_out;
    gen->add_option("--task", gen_task, "best-effort | covshift")->required();
    gen->add_option("--config", gen_config, "JSON config file");
    gen->add_option("--out", gen_out, "output directory")->required();

    // estimate-discrepancy
    auto* est = app.add_subcommand("estimate-discrepancy",
                                   "Estimate the labeled discrepancy between two samples");
    std::string est_source, est_target, est_loss = "squared";
    double est_lambda = 1.0, est_local_ball = -1.0;
    std::size_t est_restarts = 16;
    std::uint64_t est_seed = 0;
    est->add_option("--source", est_source)->required();
    est->add_option("--target", est_target)->required();
    est->add_option("--loss", est_loss, "squared | logistic");
    est->add_option("--lambda", est_lambda, "hypothesis norm bound");
    est->add_option("--local-ball", est_local_ball,
                    "restrict to a ball of this radius around a target-sample ridge fit");
    est->add_option("--restarts", est_restarts);
    est->add_option("--seed", est_seed);

    // train
    auto* train = app.add_subcommand("train", "Fit one algorithm and emit the fit as JSON");
    std::string tr_algo, tr_source, tr_target, tr_loss = "squared", tr_out;
    double tr_lambda = 1.0, tr_linf = 0.0, tr_l1 = 0.0, tr_l2 = 0.0, tr_ridge = 1e-3;
    double tr_dhat = -1.0, tr_tau = 1e-6, tr_alpha = 1.0, tr_mu = -1.0;
    std::size_t tr_iters = 100, tr_dhat_restarts = 8;
    std::uint64_t tr_seed = 0;
    train->add_option("--algo", tr_algo,
                      "sbest-am | sbest-dc | best-da | dm | alpha | target-only | source-only | "
                      "pooled")
        ->required();
    train->add_option("--source", tr_source)->required();
    train->add_option("--target", tr_target)->required();
    train->add_option("--loss", tr_loss, "squared | logistic");
    train->add_option("--lambda", tr_lambda, "hypothesis norm bound");
    train->add_option("--lambda-inf", tr_linf);
    train->add_option("--lambda1", tr_l1);
    train->add_option("--lambda2", tr_l2);
    train->add_option("--ridge", tr_ridge);
    train->add_option("--d-hat", tr_dhat, "discrepancy estimate; estimated when omitted");
    train->add_option("--d-hat-restarts", tr_dhat_restarts);
    train->add_option("--tau", tr_tau);
    train->add_option("--max-iters", tr_iters);
    train->add_option("--alpha", tr_alpha, "alpha for the alpha baseline");
    train->add_option("--mu-smooth", tr_mu, "softmax smoothing for best-da");
    train->add_option("--seed", tr_seed);
    train->add_option("--out", tr_out, "output JSON path (stdout when omitted)");

    // experiment
    auto* exp = app.add_subcommand("experiment", "Run a multi-seed experiment sweep");
    std::string exp_config;
    exp->add_option("--config", exp_config, "experiment JSON config")->required();

    // bounds
    auto* bnd = app.add_subcommand("bounds", "Evaluate a generalization bound for a fit");
    std::string bnd_fit, bnd_data, bnd_loss = "squared", bnd_theorem = "theorem1", bnd_out;
    double bnd_delta = 0.05, bnd_dhat = 0.0, bnd_lambda = 1.0;
    std::size_t bnd_sigma = 64;
    std::uint64_t bnd_seed = 0;
    bnd->add_option("--fit", bnd_fit, "fit JSON from the train subcommand")->required();
    bnd->add_option("--data", bnd_data, "combined CSV sample")->required();
    bnd->add_option("--delta", bnd_delta)->required();
    bnd->add_option("--theorem", bnd_theorem, "theorem1 | corollary4");
    bnd->add_option("--d-hat", bnd_dhat);
    bnd->add_option("--loss", bnd_loss);
    bnd->add_option("--lambda", bnd_lambda);
    bnd->add_option("--sigma-samples", bnd_sigma);
    bnd->add_option("--seed", bnd_seed);
    bnd->add_option("--out", bnd_out, "output JSON path (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return run_gen_data(gen_task, gen_config, gen_out);

        if (est->parsed()) {
            auto source = datagen::load_dataset_csv(est_source);
            auto target = datagen::load_dataset_csv(est_target);
            HypothesisSpace space = space_from(est_loss, est_lambda);
            if (est_local_ball >= 0.0) {
                WeightVector uniform = WeightVector::uniform(target.size());
                LinearHypothesis center =
                    algorithms::weighted_erm(target, uniform, space, 1e-3);
                space.local_ball = LocalBall{std::move(center), est_local_ball};
            }
            discrepancy::EstimatorSettings settings;
            settings.restarts = est_restarts;
            settings.seed = est_seed;
            auto result = discrepancy::estimate_labeled_discrepancy(target, source, space,
                                                                    settings);
            std::cout << to_json(result).dump(2) << '\n';
            return 0;
        }

        if (train->parsed()) {
            auto source = datagen::load_dataset_csv(tr_source);
            auto target = datagen::load_dataset_csv(tr_target);
            for (auto& d : source.domains) d = Domain::Source;
            for (auto& d : target.domains) d = Domain::Target;
            LabeledDataset data = combine(source, target);
            HypothesisSpace space = space_from(tr_loss, tr_lambda);

            harness::ParamSet params{{"lambda_inf", tr_linf}, {"lambda1", tr_l1},
                                     {"lambda2", tr_l2},      {"ridge", tr_ridge},
                                     {"tau", tr_tau},         {"max_iters", double(tr_iters)},
                                     {"alpha", tr_alpha}};
            if (tr_mu > 0) params["mu_smooth"] = tr_mu;
            if (tr_algo == "sbest-am" || tr_algo == "sbest-dc") {
                if (tr_dhat < 0) {
                    discrepancy::EstimatorSettings est_settings;
                    est_settings.restarts = tr_dhat_restarts;
                    est_settings.seed = tr_seed;
                    tr_dhat = std::max(0.0, discrepancy::estimate_labeled_discrepancy(
                                                target, source, space, est_settings)
                                                .value);
                }
                params["d_hat"] = tr_dhat;
            }
            if (tr_algo == "best-da" && space.loss == LossKind::Squared)
                params["d_bar"] =
                    discrepancy::empirical_unlabeled_discrepancy(target, source, space.radius);

            auto run = harness::run_algorithm(tr_algo, params, data, space, tr_seed);
            json out = run.fit ? to_json(*run.fit) : to_json(run.hypothesis);
            if (tr_out.empty()) {
                std::cout << out.dump(2) << '\n';
            } else {
                std::ofstream f(tr_out);
                if (!f) throw DataError("cannot write " + tr_out);
                f << out.dump(2) << '\n';
            }
            return 0;
        }

        if (exp->parsed()) {
            auto config = harness::load_experiment_config(exp_config);
            auto result = harness::run_experiment(config);
            harness::emit_results(result, config);
            std::cout << "cells: " << result.cells.size() << ", failures: " << result.failures
                      << ", output: " << config.output_dir << '\n';
            return result.failures == 0 ? 0 : 1;
        }

        if (bnd->parsed()) {
            std::ifstream f(bnd_fit);
            if (!f) throw DataError("cannot open " + bnd_fit);
            json fit_json;
            f >> fit_json;
            auto fit = fit_result_from_json(fit_json);
            auto data = datagen::load_dataset_csv(bnd_data);
            HypothesisSpace space = space_from(bnd_loss, bnd_lambda);

            WeightVector q = fit.weights.empty()
                                 ? WeightVector::uniform(data.size())
                                 : WeightVector{fit.weight("q").values, WeightConstraint::Box01};
            if (q.size() != data.size())
                throw DimensionError("bounds: fit weights do not match the data rows");

            bounds::RademacherSettings rad;
            rad.num_sigma_samples = bnd_sigma;
            rad.seed = bnd_seed;
            auto rademacher = bounds::rademacher_estimate(data, q, space, rad);

            bounds::BoundReport report;
            if (bnd_theorem == "corollary4") {
                WeightVector p0 = WeightVector::zeros(data.size(), WeightConstraint::Simplex);
                std::size_t n_target = data.count(Domain::Target);
                for (std::size_t i = 0; i < data.size(); ++i)
                    if (data.domains[i] == Domain::Target)
                        p0.values[i] = 1.0 / static_cast<double>(n_target);
                discrepancy::EstimatorSettings est_settings;
                est_settings.seed = bnd_seed;
                auto index_est =
                    discrepancy::index_weight_discrepancy(q, p0, data, space, est_settings);
                report = bounds::bound_corollary4(fit.hypothesis, q, p0, data, bnd_dhat,
                                                  bnd_delta, rademacher.mean, index_est.value,
                                                  space.loss);
            } else {
                report = bounds::bound_theorem1(fit.hypothesis, q, data, bnd_dhat, bnd_delta,
                                                rademacher.mean, space.loss);
            }

            json out = to_json(report);
            out["rademacher_std_error"] = rademacher.std_error;
            if (bnd_out.empty()) {
                std::cout << out.dump(2) << '\n' << bound_report_csv(report);
            } else {
                std::ofstream of(bnd_out);
                if (!of) throw DataError("cannot write " + bnd_out);
                of << out.dump(2) << '\n';
                std::ofstream cf(bnd_out + ".csv");
                cf << bound_report_csv(report);
            }
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
