#include "adapt/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "adapt/rng.hpp"

namespace adapt::datagen {

namespace {

double sgn(double x) { return x >= 0.0 ? 1.0 : -1.0; }

Matrix gaussian_rows(std::size_t rows, std::size_t d, Rng& rng) {
    Matrix m(rows, d);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < d; ++j) m(i, j) = rng.normal();
    return m;
}

/// w_q = normalize(w_p + t v), t bisected so that ||w_p - w_q|| = epsilon.
Vector perturbed_unit_vector(const Vector& w_p, double epsilon, Rng& rng) {
    if (epsilon <= 0.0) return w_p;
    Vector v = rng.unit_vector(w_p.size());
    auto candidate = [&](double t) {
        Vector w(w_p.size());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = w_p[i] + t * v[i];
        double n = norm2(w);
        for (auto& x : w) x /= n;
        return w;
    };
    auto distance = [&](double t) { return l2_distance(candidate(t), w_p); };
    double lo = 0.0, hi = 1.0;
    while (distance(hi) < epsilon && hi < 1e6) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (distance(mid) < epsilon)
            lo = mid;
        else
            hi = mid;
    }
    return candidate(0.5 * (lo + hi));
}

} // namespace

void BestEffortTaskConfig::validate() const {
    if (d < 2) throw InvalidParameterError("best-effort task: d must be >= 2");
    if (m < 1 || n < 1 || test_size < 1)
        throw InvalidParameterError("best-effort task: sample sizes must be >= 1");
    if (eta < 0.0 || eta >= 1.0 + 1e-12)
        throw InvalidParameterError("best-effort task: eta must lie in [0, 1]");
    if (epsilon <= 0.0) throw InvalidParameterError("best-effort task: epsilon must be > 0");
    double k = std::round(eta * static_cast<double>(m));
    if (k > static_cast<double>(m))
        throw InvalidParameterError("best-effort task: eta*m exceeds m");
}

BestEffortTask gen_best_effort_task(const BestEffortTaskConfig& config) {
    config.validate();
    Rng rng(config.seed);
    Rng hyper_rng = rng.child(0);
    Rng target_rng = rng.child(1);
    Rng source_rng = rng.child(2);
    Rng test_rng = rng.child(3);

    BestEffortTask task;
    task.config = config;
    task.seed = config.seed;
    task.w_p = hyper_rng.unit_vector(config.d);
    task.w_q = perturbed_unit_vector(task.w_p, config.epsilon, hyper_rng);

    // Noise anchor at the typical feature norm sqrt(d). The +1 label must
    // genuinely contradict the clean-source concept, so the anchor carries a
    // fixed negative component along w_q plus a random orthogonal part; a
    // blind sphere draw is nearly orthogonal to w_q in high dimension and the
    // anchor rows would be fittable at no cost, i.e. not noise at all.
    {
        const double against = 0.95;
        Vector g = hyper_rng.unit_vector(config.d);
        double proj = dot(g, task.w_q);
        Vector perp(config.d);
        for (std::size_t j = 0; j < config.d; ++j) perp[j] = g[j] - proj * task.w_q[j];
        double pn = norm2(perp);
        if (pn < 1e-12) {
            perp = hyper_rng.unit_vector(config.d); // g parallel to w_q; redraw
            pn = norm2(perp);
        }
        double ortho = std::sqrt(1.0 - against * against);
        task.u.assign(config.d, 0.0);
        for (std::size_t j = 0; j < config.d; ++j)
            task.u[j] = -against * task.w_q[j] + ortho * perp[j] / pn;
        double scale = std::sqrt(static_cast<double>(config.d)) / norm2(task.u);
        for (auto& x : task.u) x *= scale;
    }

    auto labeled_by = [&](Matrix features, const Vector& w, Domain tag) {
        Vector labels(features.rows());
        for (std::size_t i = 0; i < features.rows(); ++i)
            labels[i] = sgn(dot(features.row(i), w));
        return make_dataset(std::move(features), std::move(labels), tag);
    };

    task.target = labeled_by(gaussian_rows(config.n, config.d, target_rng), task.w_p,
                             Domain::Target);
    task.test = labeled_by(gaussian_rows(config.test_size, config.d, test_rng), task.w_p,
                           Domain::Target);

    const std::size_t noisy = static_cast<std::size_t>(
        std::llround(config.eta * static_cast<double>(config.m)));
    const std::size_t clean = config.m - noisy;
    Matrix sf(config.m, config.d);
    Vector sl(config.m);
    for (std::size_t i = 0; i < clean; ++i) {
        for (std::size_t j = 0; j < config.d; ++j) sf(i, j) = source_rng.normal();
        sl[i] = sgn(dot(sf.row(i), task.w_q));
    }
    for (std::size_t i = clean; i < config.m; ++i) {
        for (std::size_t j = 0; j < config.d; ++j) sf(i, j) = task.u[j];
        sl[i] = 1.0;
        task.noisy_rows.push_back(i);
    }
    task.source = make_dataset(std::move(sf), std::move(sl), Domain::Source);
    return task;
}

void CovariateShiftTaskConfig::validate() const {
    if (d < 1) throw InvalidParameterError("covariate-shift task: d must be >= 1");
    if (source_size < 1 || target_size < 1 || test_size < 1)
        throw InvalidParameterError("covariate-shift task: sample sizes must be >= 1");
    if (sigma < 0.0) throw InvalidParameterError("covariate-shift task: sigma must be >= 0");
    if (mixture_weight <= 0.0 || mixture_weight >= 1.0)
        throw InvalidParameterError("covariate-shift task: mixture weight must lie in (0, 1)");
}

CovariateShiftTask gen_covariate_shift_task(const CovariateShiftTaskConfig& config) {
    config.validate();
    Rng rng(config.seed);
    Rng hyper_rng = rng.child(0);
    Rng source_rng = rng.child(1);
    Rng target_rng = rng.child(2);
    Rng test_rng = rng.child(3);

    CovariateShiftTask task;
    task.config = config;
    task.seed = config.seed;
    task.w_star = hyper_rng.unit_vector(config.d);
    task.w_mix = hyper_rng.unit_vector(config.d);

    auto label = [&](std::span<const double> x, Rng& r) {
        return dot(x, task.w_star) + config.sigma * r.normal();
    };
    auto base_sample = [&](std::size_t rows, Rng& r, Domain tag) {
        Matrix f = gaussian_rows(rows, config.d, r);
        Vector y(rows);
        for (std::size_t i = 0; i < rows; ++i) y[i] = label(f.row(i), r);
        return make_dataset(std::move(f), std::move(y), tag);
    };

    task.target = base_sample(config.target_size, target_rng, Domain::Target);
    task.test = base_sample(config.test_size, test_rng, Domain::Target);

    // rejection-sampled halfspace mixture for the source marginal
    Matrix sf(config.source_size, config.d);
    Vector sy(config.source_size);
    std::size_t draws = 0;
    const std::size_t max_draws = 1000000;
    for (std::size_t i = 0; i < config.source_size; ++i) {
        bool upper = source_rng.uniform() < config.mixture_weight;
        for (;;) {
            if (++draws > max_draws)
                throw InfeasibleRegionError(
                    "covariate-shift task: rejection sampling exceeded 1e6 draws");
            Vector x(config.d);
            for (auto& v : x) v = source_rng.normal();
            bool in_upper = dot(x, task.w_mix) >= config.epsilon;
            if (in_upper == upper) {
                for (std::size_t j = 0; j < config.d; ++j) sf(i, j) = x[j];
                sy[i] = label(x, source_rng);
                break;
            }
        }
    }
    task.source = make_dataset(std::move(sf), std::move(sy), Domain::Source);
    return task;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void save_dataset_csv(const LabeledDataset& data, const std::string& path) {
    data.validate();
    std::ofstream out(path);
    if (!out) throw DataError("save_dataset_csv: cannot open " + path);
    const std::size_t d = data.dim();
    for (std::size_t j = 0; j < d; ++j) out << 'f' << j << ',';
    out << "y,domain\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto row = data.features.row(i);
        for (std::size_t j = 0; j < d; ++j) out << format_double(row[j]) << ',';
        out << format_double(data.labels[i]) << ','
            << (data.domains[i] == Domain::Source ? "source" : "target") << '\n';
    }
    if (!out) throw DataError("save_dataset_csv: write failed for " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

} // namespace

LabeledDataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_dataset_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_csv_line(line);
    if (header.size() < 3 || header[header.size() - 2] != "y" ||
        header[header.size() - 1] != "domain")
        throw ParseError(path + ": header must be f0,...,y,domain");
    const std::size_t d = header.size() - 2;
    for (std::size_t j = 0; j < d; ++j)
        if (header[j] != "f" + std::to_string(j))
            throw ParseError(path + ": expected column f" + std::to_string(j));

    std::vector<Vector> rows;
    Vector labels;
    std::vector<Domain> domains;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != d + 2)
            throw ParseError(path + ": row " + std::to_string(lineno) + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(d + 2));
        Vector x(d);
        for (std::size_t j = 0; j <= d; ++j) {
            double v;
            try {
                std::size_t pos = 0;
                v = std::stod(fields[j], &pos);
                if (pos != fields[j].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw ParseError(path + ": row " + std::to_string(lineno) +
                                 ": bad numeric field '" + fields[j] + "'");
            }
            if (!std::isfinite(v))
                throw DataError(path + ": row " + std::to_string(lineno) + ": non-finite value");
            if (j < d)
                x[j] = v;
            else
                labels.push_back(v);
        }
        const std::string& dom = fields[d + 1];
        if (dom == "source")
            domains.push_back(Domain::Source);
        else if (dom == "target")
            domains.push_back(Domain::Target);
        else
            throw ParseError(path + ": row " + std::to_string(lineno) + ": bad domain '" + dom +
                             "'");
        rows.push_back(std::move(x));
    }

    LabeledDataset out;
    out.features = Matrix(rows.size(), d);
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(rows[i].begin(), rows[i].end(), out.features.row(i).begin());
    out.labels = std::move(labels);
    out.domains = std::move(domains);
    out.validate();
    return out;
}

} // namespace adapt::datagen
