#include "adapt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "adapt/rng.hpp"
#include "adapt/serialize.hpp"

namespace adapt::harness {

using nlohmann::json;

void ExperimentConfig::validate() const {
    if (algorithms.empty()) throw ConfigError("experiment: at least one algorithm required");
    if (seeds.empty()) throw ConfigError("experiment: at least one seed required");
    bool any_grid = false;
    for (const auto& a : algorithms)
        for (const auto& [k, vs] : a.grid)
            if (vs.size() > 1) any_grid = true;
    if (any_grid && (validation_fraction <= 0.0 || validation_fraction >= 1.0))
        throw ConfigError("experiment: validation fraction must lie in (0,1) when any grid has "
                          "more than one point");
    if (workers < 1) throw ConfigError("experiment: workers must be >= 1");
}

namespace {

LossKind parse_loss(const std::string& s) {
    if (s == "squared") return LossKind::Squared;
    if (s == "logistic") return LossKind::Logistic;
    throw ConfigError("unknown loss kind: " + s);
}

HypothesisSpace parse_space(const json& j) {
    HypothesisSpace space;
    space.loss = parse_loss(j.value("loss", std::string("squared")));
    space.radius = j.value("radius", 1.0);
    return space;
}

} // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    try {
        ExperimentConfig c;
        const json& task = j.at("task");
        std::string type = task.at("type").get<std::string>();
        if (type == "best-effort") {
            c.task_kind = TaskKind::BestEffort;
            auto& b = c.best_effort;
            b.d = task.value("d", b.d);
            b.m = task.value("m", b.m);
            b.n = task.value("n", b.n);
            b.test_size = task.value("test_size", b.test_size);
            b.eta = task.value("eta", b.eta);
            b.epsilon = task.value("epsilon", b.epsilon);
        } else if (type == "covshift") {
            c.task_kind = TaskKind::CovariateShift;
            auto& s = c.covariate_shift;
            s.d = task.value("d", s.d);
            s.source_size = task.value("source_size", s.source_size);
            s.target_size = task.value("target_size", s.target_size);
            s.test_size = task.value("test_size", s.test_size);
            s.epsilon = task.value("epsilon", s.epsilon);
            s.sigma = task.value("sigma", s.sigma);
            s.mixture_weight = task.value("mixture_weight", s.mixture_weight);
        } else if (type == "csv") {
            c.task_kind = TaskKind::Csv;
            c.csv.source_path = task.at("source").get<std::string>();
            c.csv.target_path = task.at("target").get<std::string>();
            c.csv.test_path = task.at("test").get<std::string>();
        } else {
            throw ConfigError("config: unknown task type " + type);
        }
        if (j.contains("n_sweep")) c.n_sweep = j.at("n_sweep").get<std::vector<std::size_t>>();
        if (j.contains("space")) c.space = parse_space(j.at("space"));
        c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
        c.da_validation_size = j.value("da_validation_size", c.da_validation_size);
        c.d_hat_restarts = j.value("d_hat_restarts", c.d_hat_restarts);
        c.workers = j.value("workers", c.workers);
        c.fit_budget_sec = j.value("fit_budget_sec", c.fit_budget_sec);
        c.output_dir = j.value("output_dir", c.output_dir);
        for (const auto& a : j.at("algorithms")) {
            AlgorithmConfig ac;
            ac.name = a.at("name").get<std::string>();
            if (a.contains("grid"))
                ac.grid = a.at("grid").get<ParamGrid>();
            c.algorithms.push_back(std::move(ac));
        }
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str());
}

namespace {

double param(const ParamSet& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

WeightVector uniform_on_target(const LabeledDataset& data) {
    WeightVector p0 = WeightVector::zeros(data.size(), WeightConstraint::Simplex);
    std::size_t n = data.count(Domain::Target);
    if (n == 0) throw EmptyDataError("p0: no target rows");
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data.domains[i] == Domain::Target) p0.values[i] = 1.0 / static_cast<double>(n);
    return p0;
}

algorithms::SbestHyperparams sbest_params_from(const ParamSet& p, const LabeledDataset& data) {
    algorithms::SbestHyperparams hp;
    hp.lambda_inf = param(p, "lambda_inf", 0.0);
    hp.lambda_1 = param(p, "lambda1", 0.0);
    hp.lambda_2 = param(p, "lambda2", 0.0);
    hp.d_hat = std::max(0.0, param(p, "d_hat", 0.0));
    hp.tau = param(p, "tau", 1e-6);
    hp.max_iters = static_cast<std::size_t>(param(p, "max_iters", 100));
    hp.weight_step_iters = static_cast<std::size_t>(param(p, "weight_step_iters", 300));
    hp.weight_step_size = param(p, "weight_step_size", 0.1);
    hp.constraint = param(p, "box", 0.0) != 0.0 ? WeightConstraint::Box01
                                                : WeightConstraint::Simplex;
    hp.explicit_index_discrepancy = param(p, "explicit_index_discrepancy", 0.0) != 0.0;
    hp.init_at_reference = param(p, "init_at_reference", 0.0) != 0.0;
    hp.p0 = uniform_on_target(data);
    return hp;
}

} // namespace

AlgoRun run_algorithm(const std::string& name, const ParamSet& params, const LabeledDataset& data,
                      const HypothesisSpace& space, std::uint64_t seed) {
    AlgoRun run;
    run.params = params;
    double ridge = param(params, "ridge", 1e-3);

    if (name == "sbest-am" || name == "sbest-dc") {
        auto hp = sbest_params_from(params, data);
        run.fit = name == "sbest-am" ? algorithms::sbest_am(data, hp, space, seed)
                                     : algorithms::sbest_dc(data, hp, space, seed);
        run.hypothesis = run.fit->hypothesis;
    } else if (name == "best-da") {
        LabeledDataset src = data.subset(Domain::Source);
        LabeledDataset tgt = data.subset(Domain::Target);
        algorithms::BestDaHyperparams hp;
        hp.lambda_inf = param(params, "lambda_inf", 0.0);
        hp.lambda_1 = param(params, "lambda1", 0.0);
        hp.lambda_2 = param(params, "lambda2", 0.0);
        hp.d_bar = param(params, "d_bar", 0.0);
        hp.tau = param(params, "tau", 1e-6);
        hp.max_iters = static_cast<std::size_t>(param(params, "max_iters", 50));
        hp.weight_step_iters = static_cast<std::size_t>(param(params, "weight_step_iters", 200));
        hp.weight_step_size = param(params, "weight_step_size", 0.1);
        hp.h_ridge = param(params, "h_ridge", 0.0);
        if (params.count("mu_smooth")) hp.mu_smooth = params.at("mu_smooth");
        hp.p0 = uniform_on_target(data);
        run.fit = algorithms::bestda_am(src, tgt, hp, space, seed);
        run.hypothesis = run.fit->hypothesis;
    } else if (name == "dm") {
        LabeledDataset src = data.subset(Domain::Source);
        LabeledDataset tgt = data.subset(Domain::Target);
        auto dm = algorithms::dm_baseline(src, tgt, space.radius, ridge, space);
        run.hypothesis = dm.hypothesis;
        algorithms::FitResult fit;
        fit.hypothesis = dm.hypothesis;
        fit.weights.emplace_back("q", dm.stage1_weights);
        fit.objective_trace = dm.stage1_trace;
        fit.converged = true;
        fit.iterations = dm.stage1_trace.size();
        run.fit = std::move(fit);
    } else if (name == "alpha") {
        std::size_t m = data.count(Domain::Source);
        std::size_t n = data.count(Domain::Target);
        double alpha = param(params, "alpha", 1.0);
        WeightVector q = algorithms::alpha_weights(m, n, alpha);
        run.hypothesis = algorithms::weighted_erm(data, q, space, ridge);
        algorithms::FitResult fit;
        fit.hypothesis = run.hypothesis;
        fit.weights.emplace_back("q", std::move(q));
        fit.converged = true;
        run.fit = std::move(fit);
    } else if (name == "target-only" || name == "source-only" || name == "pooled") {
        auto kind = name == "target-only"
                        ? algorithms::BaselineKind::TargetOnly
                        : (name == "source-only" ? algorithms::BaselineKind::SourceOnly
                                                 : algorithms::BaselineKind::PooledUniform);
        run.hypothesis = algorithms::baseline_train(data, kind, space, ridge);
    } else {
        throw ConfigError("unknown algorithm: " + name);
    }
    return run;
}

namespace {

std::vector<ParamSet> grid_points(const ParamGrid& grid) {
    std::vector<ParamSet> points;
    points.emplace_back();
    for (const auto& [key, values] : grid) {
        if (values.empty()) throw ConfigError("cross_validate: empty grid axis " + key);
        std::vector<ParamSet> expanded;
        expanded.reserve(points.size() * values.size());
        for (const auto& base : points)
            for (double v : values) {
                ParamSet p = base;
                p[key] = v;
                expanded.push_back(std::move(p));
            }
        points = std::move(expanded);
    }
    return points;
}

double l1_to_uniform_target(const AlgoRun& run, const LabeledDataset& data) {
    if (!run.fit) return 0.0;
    for (const auto& [name, wv] : run.fit->weights) {
        if (name != "q") continue;
        if (wv.size() != data.size()) return 0.0;
        return l1_distance(wv.values, uniform_on_target(data).values);
    }
    return 0.0;
}

} // namespace

ParamSet cross_validate(const std::string& algorithm, const ParamGrid& grid,
                        const LabeledDataset& train, const LabeledDataset& validation,
                        const HypothesisSpace& space, std::uint64_t seed) {
    if (validation.empty()) throw EmptyDataError("cross_validate: empty validation set");
    auto points = grid_points(grid);
    if (points.empty()) throw ConfigError("cross_validate: empty grid");

    ParamSet best;
    double best_score = 0.0, best_l1 = 0.0;
    bool first = true;
    for (const auto& p : points) {
        AlgoRun run = run_algorithm(algorithm, p, train, space, seed);
        Metrics m = evaluate_metrics(run.hypothesis, validation);
        double score = space.loss == LossKind::Logistic ? m.accuracy : -m.mse;
        double l1 = l1_to_uniform_target(run, train);
        if (first || score > best_score || (score == best_score && l1 < best_l1)) {
            best = p;
            best_score = score;
            best_l1 = l1;
            first = false;
        }
    }
    return best;
}

namespace {

struct TaskInstance {
    LabeledDataset train; // canonical source + target-train
    LabeledDataset validation;
    LabeledDataset test;
    std::vector<std::size_t> noisy_train_rows;
    double d_hat = 0.0;
    double d_bar = 0.0;
};

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i)
        std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
    return idx;
}

TaskInstance build_instance(const ExperimentConfig& config, std::size_t n_override,
                            std::uint64_t seed) {
    TaskInstance inst;
    LabeledDataset source, target;

    if (config.task_kind == TaskKind::BestEffort) {
        datagen::BestEffortTaskConfig tc = config.best_effort;
        if (n_override) tc.n = n_override;
        tc.seed = seed;
        auto task = datagen::gen_best_effort_task(tc);
        source = std::move(task.source);
        target = std::move(task.target);
        inst.test = std::move(task.test);
        inst.noisy_train_rows = task.noisy_rows; // source block leads, indices unchanged
    } else if (config.task_kind == TaskKind::CovariateShift) {
        datagen::CovariateShiftTaskConfig tc = config.covariate_shift;
        tc.seed = seed;
        auto task = datagen::gen_covariate_shift_task(tc);
        source = std::move(task.source);
        target = std::move(task.target);
        inst.test = std::move(task.test);
    } else {
        source = datagen::load_dataset_csv(config.csv.source_path);
        target = datagen::load_dataset_csv(config.csv.target_path);
        inst.test = datagen::load_dataset_csv(config.csv.test_path);
        for (auto& d : source.domains) d = Domain::Source;
        for (auto& d : target.domains) d = Domain::Target;
    }

    // split the target sample into fit and validation parts
    std::size_t n = target.size();
    std::size_t n_val;
    if (config.task_kind == TaskKind::CovariateShift)
        n_val = std::min(config.da_validation_size, n > 1 ? n - 1 : 0);
    else
        n_val = std::min<std::size_t>(
            n > 1 ? n - 1 : 0,
            std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                         config.validation_fraction * static_cast<double>(n)))));
    auto order = shuffled_indices(n, Rng(seed).child(0xA11CE));
    std::vector<std::size_t> val_idx(order.begin(),
                                     order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val),
                                       order.end());
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    inst.validation = target.select(val_idx);
    LabeledDataset target_train = target.select(train_idx);
    inst.train = combine(source, target_train);

    // discrepancy estimates shared by every algorithm on this instance
    discrepancy::EstimatorSettings est;
    est.restarts = config.d_hat_restarts;
    est.seed = Rng(seed).child(0xD15C).next_u64();
    HypothesisSpace space = config.space;
    inst.d_hat = std::max(
        0.0, discrepancy::estimate_labeled_discrepancy(target_train, source, space, est).value);
    if (space.loss == LossKind::Squared)
        inst.d_bar = discrepancy::empirical_unlabeled_discrepancy(target_train, source,
                                                                  space.radius);
    return inst;
}

double elapsed_sec(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();

    std::vector<std::size_t> sweep = config.n_sweep;
    if (sweep.empty() || config.task_kind != TaskKind::BestEffort) sweep = {0};

    struct Job {
        std::size_t algo_index;
        std::size_t n;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (std::size_t n : sweep)
        for (auto seed : config.seeds)
            for (std::size_t a = 0; a < config.algorithms.size(); ++a)
                jobs.push_back(Job{a, n, seed});

    ExperimentResult result;
    result.cells.resize(jobs.size());

    // instances are shared across algorithms of the same (n, seed) cell group;
    // build lazily per job to keep workers independent
    auto run_job = [&](std::size_t j) {
        const Job& job = jobs[j];
        const AlgorithmConfig& algo = config.algorithms[job.algo_index];
        CellResult cell;
        cell.algorithm = algo.name;
        cell.n = job.n;
        cell.seed = job.seed;
        auto t0 = std::chrono::steady_clock::now();
        try {
            TaskInstance inst = build_instance(config, job.n, job.seed);
            ParamSet chosen;
            if (algo.name == "alpha") {
                std::vector<double> grid = algo.grid.count("alpha")
                                               ? algo.grid.at("alpha")
                                               : std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0};
                double ridge = algo.grid.count("ridge") ? algo.grid.at("ridge").front() : 1e-3;
                auto fit = algorithms::alpha_reweighting_train(inst.train, grid, inst.validation,
                                                               config.space, ridge);
                chosen["alpha"] = fit.alpha;
                Metrics m = evaluate_metrics(fit.hypothesis, inst.test);
                cell.test_accuracy = m.accuracy;
                cell.test_mse = m.mse;
                std::size_t ms = inst.train.count(Domain::Source);
                std::size_t nt = inst.train.count(Domain::Target);
                WeightVector q = algorithms::alpha_weights(ms, nt, fit.alpha);
                cell.q_bar = q.mass_on_prefix(ms);
                cell.q_l2 = q.l2();
            } else {
                ParamGrid grid = algo.grid;
                // derived estimates are injected as singleton axes unless the
                // config pins them explicitly
                if (!grid.count("d_hat")) grid["d_hat"] = {inst.d_hat};
                if (!grid.count("d_bar")) grid["d_bar"] = {inst.d_bar};
                std::size_t points = 1;
                for (const auto& [k, vs] : grid) points *= vs.size();
                if (points > 1) {
                    chosen = cross_validate(algo.name, grid, inst.train, inst.validation,
                                            config.space, job.seed);
                } else {
                    for (const auto& [k, vs] : grid) chosen[k] = vs.front();
                }
                AlgoRun run =
                    run_algorithm(algo.name, chosen, inst.train, config.space, job.seed);
                Metrics m = evaluate_metrics(run.hypothesis, inst.test);
                cell.test_accuracy = m.accuracy;
                cell.test_mse = m.mse;
                if (run.fit) {
                    for (const auto& [name, wv] : run.fit->weights) {
                        if (name != "q") continue;
                        if (wv.size() == inst.train.size()) {
                            cell.q_bar = wv.mass_on_prefix(inst.train.count(Domain::Source));
                            double mass = 0.0;
                            for (auto r : inst.noisy_train_rows) mass += wv.values[r];
                            if (!inst.noisy_train_rows.empty()) cell.noisy_mass = mass;
                        } else {
                            cell.q_bar = wv.sum();
                        }
                        cell.q_l2 = wv.l2();
                    }
                }
            }
            cell.chosen = std::move(chosen);
            cell.runtime_sec = elapsed_sec(t0);
            if (cell.runtime_sec > config.fit_budget_sec) {
                cell.failed = true;
                cell.error = "fit budget exceeded";
            }
        } catch (const std::exception& e) {
            cell.failed = true;
            cell.error = e.what();
            cell.runtime_sec = elapsed_sec(t0);
        }
        result.cells[j] = std::move(cell);
    };

    std::size_t workers = std::min<std::size_t>(config.workers, jobs.size());
    if (workers <= 1) {
        for (std::size_t j = 0; j < jobs.size(); ++j) run_job(j);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t j = next.fetch_add(1); j < jobs.size(); j = next.fetch_add(1))
                    run_job(j);
            });
        for (auto& t : pool) t.join();
    }

    // aggregates per (algorithm, n), cells in config order
    for (std::size_t n : sweep) {
        for (const auto& algo : config.algorithms) {
            Aggregate agg;
            agg.algorithm = algo.name;
            agg.n = n;
            std::vector<double> accs, mses, noisy;
            for (const auto& cell : result.cells) {
                if (cell.algorithm != algo.name || cell.n != n) continue;
                ++agg.cells;
                if (cell.failed) {
                    ++agg.failures;
                    continue;
                }
                accs.push_back(cell.test_accuracy);
                mses.push_back(cell.test_mse);
                if (cell.noisy_mass >= 0.0) noisy.push_back(cell.noisy_mass);
            }
            auto mean_std = [](const std::vector<double>& v) {
                if (v.empty()) return std::make_pair(0.0, 0.0);
                double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
                double var = 0.0;
                for (double x : v) var += (x - mean) * (x - mean);
                var = v.size() > 1 ? var / (v.size() - 1) : 0.0;
                return std::make_pair(mean, std::sqrt(var));
            };
            std::tie(agg.mean_accuracy, agg.std_accuracy) = mean_std(accs);
            std::tie(agg.mean_mse, agg.std_mse) = mean_std(mses);
            if (!noisy.empty()) agg.mean_noisy_mass = mean_std(noisy).first;
            result.aggregates.push_back(std::move(agg));
        }
    }
    for (const auto& cell : result.cells)
        if (cell.failed) ++result.failures;
    return result;
}

namespace {

std::string sanitize(std::string s) {
    for (auto& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ' ';
    return s;
}

std::string chosen_to_string(const ParamSet& p) {
    std::ostringstream out;
    bool first = true;
    for (const auto& [k, v] : p) {
        if (!first) out << ';';
        out << k << '=' << datagen::format_double(v);
        first = false;
    }
    return out.str();
}

} // namespace

void emit_results(const ExperimentResult& result, const ExperimentConfig& config) {
    namespace fs = std::filesystem;
    fs::create_directories(config.output_dir);

    {
        std::ofstream out(fs::path(config.output_dir) / "results.csv");
        if (!out) throw DataError("emit_results: cannot write results.csv");
        out << "algorithm,n,seed,status,error,test_accuracy,test_mse,q_bar,q_l2,noisy_mass,"
               "chosen\n";
        for (const auto& c : result.cells) {
            out << c.algorithm << ',' << c.n << ',' << c.seed << ','
                << (c.failed ? "failed" : "ok") << ',' << sanitize(c.error) << ','
                << datagen::format_double(c.test_accuracy) << ','
                << datagen::format_double(c.test_mse) << ',' << datagen::format_double(c.q_bar)
                << ',' << datagen::format_double(c.q_l2) << ','
                << datagen::format_double(c.noisy_mass) << ',' << chosen_to_string(c.chosen)
                << '\n';
        }
    }

    {
        json agg = json::array();
        for (const auto& a : result.aggregates) {
            agg.push_back(json{{"algorithm", a.algorithm},
                               {"n", a.n},
                               {"cells", a.cells},
                               {"failures", a.failures},
                               {"mean_accuracy", a.mean_accuracy},
                               {"std_accuracy", a.std_accuracy},
                               {"mean_mse", a.mean_mse},
                               {"std_mse", a.std_mse},
                               {"mean_noisy_mass", a.mean_noisy_mass}});
        }
        json runtimes = json::array();
        for (const auto& c : result.cells)
            runtimes.push_back(json{{"algorithm", c.algorithm},
                                    {"n", c.n},
                                    {"seed", c.seed},
                                    {"runtime_sec", c.runtime_sec}});
        json summary{{"aggregates", agg}, {"failures", result.failures}, {"runtimes", runtimes}};
        std::ofstream out(fs::path(config.output_dir) / "summary.json");
        if (!out) throw DataError("emit_results: cannot write summary.json");
        out << summary.dump(2) << '\n';
    }

    {
        std::ofstream out(fs::path(config.output_dir) / "curves.csv");
        if (!out) throw DataError("emit_results: cannot write curves.csv");
        const bool classification = config.space.loss == LossKind::Logistic;
        out << "algorithm,n,metric,mean,std\n";
        for (const auto& a : result.aggregates) {
            out << a.algorithm << ',' << a.n << ',' << (classification ? "accuracy" : "mse")
                << ',' << datagen::format_double(classification ? a.mean_accuracy : a.mean_mse)
                << ',' << datagen::format_double(classification ? a.std_accuracy : a.std_mse)
                << '\n';
        }
    }
}

} // namespace adapt::harness
