#include "adapt/core.hpp"

#include <cmath>
#include <string>

namespace adapt {

void LabeledDataset::validate() const {
    if (features.rows() != labels.size() || features.rows() != domains.size())
        throw DimensionError("dataset: feature rows, labels and domain tags must agree");
    if (!empty() && dim() < 1) throw DimensionError("dataset: dimension must be >= 1");
    if (!features.all_finite() || !all_finite(labels))
        throw DataError("dataset: non-finite entry");
}

bool LabeledDataset::canonical_layout() const {
    bool seen_target = false;
    for (auto t : domains) {
        if (t == Domain::Target) seen_target = true;
        else if (seen_target) return false;
    }
    return true;
}

LabeledDataset LabeledDataset::select(const std::vector<std::size_t>& idx) const {
    LabeledDataset out;
    out.features = Matrix(idx.size(), dim());
    out.labels.resize(idx.size());
    out.domains.resize(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        auto src = features.row(idx[k]);
        auto dst = out.features.row(k);
        std::copy(src.begin(), src.end(), dst.begin());
        out.labels[k] = labels[idx[k]];
        out.domains[k] = domains[idx[k]];
    }
    return out;
}

LabeledDataset LabeledDataset::subset(Domain d) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < size(); ++i)
        if (domains[i] == d) idx.push_back(i);
    return select(idx);
}

LabeledDataset LabeledDataset::with_bias_column() const {
    LabeledDataset out;
    out.features = Matrix(size(), dim() + 1);
    for (std::size_t i = 0; i < size(); ++i) {
        auto src = features.row(i);
        auto dst = out.features.row(i);
        std::copy(src.begin(), src.end(), dst.begin());
        dst[dim()] = 1.0;
    }
    out.labels = labels;
    out.domains = domains;
    return out;
}

LabeledDataset combine(const LabeledDataset& source, const LabeledDataset& target) {
    if (!source.empty() && !target.empty() && source.dim() != target.dim())
        throw DimensionError("combine: dimension mismatch between source and target");
    std::size_t d = source.empty() ? target.dim() : source.dim();
    LabeledDataset out;
    out.features = Matrix(source.size() + target.size(), d);
    out.labels.reserve(out.features.rows());
    out.domains.reserve(out.features.rows());
    std::size_t r = 0;
    for (std::size_t i = 0; i < source.size(); ++i, ++r) {
        auto row = source.features.row(i);
        std::copy(row.begin(), row.end(), out.features.row(r).begin());
        out.labels.push_back(source.labels[i]);
        out.domains.push_back(Domain::Source);
    }
    for (std::size_t i = 0; i < target.size(); ++i, ++r) {
        auto row = target.features.row(i);
        std::copy(row.begin(), row.end(), out.features.row(r).begin());
        out.labels.push_back(target.labels[i]);
        out.domains.push_back(Domain::Target);
    }
    return out;
}

LabeledDataset make_dataset(Matrix features, Vector labels, Domain tag) {
    LabeledDataset d;
    d.features = std::move(features);
    d.labels = std::move(labels);
    d.domains.assign(d.labels.size(), tag);
    d.validate();
    return d;
}

void LinearHypothesis::validate() const {
    if (!all_finite(w) || !std::isfinite(bias)) throw DataError("hypothesis: non-finite parameter");
    if (norm_bound <= 0.0) throw InvalidParameterError("hypothesis: norm bound must be positive");
    if (norm2(w) > norm_bound + 1e-9)
        throw InvalidParameterError("hypothesis: ||w|| exceeds norm bound");
}

void HypothesisSpace::validate() const {
    if (radius <= 0.0) throw InvalidParameterError("hypothesis space: radius must be positive");
    if (local_ball) {
        // radius 0 degenerates to the singleton {center}, used by the
        // frozen-hypothesis estimators
        if (local_ball->radius < 0.0)
            throw InvalidParameterError("hypothesis space: local ball radius must be non-negative");
        local_ball->center.validate();
    }
}

void WeightVector::validate() const {
    if (!all_finite(values)) throw DataError("weights: non-finite entry");
    for (double v : values) {
        if (v < -1e-12 || v > 1.0 + 1e-12)
            throw InvalidParameterError("weights: entry outside [0, 1]");
    }
    if (constraint == WeightConstraint::Simplex) {
        if (std::fabs(sum() - 1.0) > 1e-9)
            throw InvalidParameterError("weights: simplex entries must sum to 1");
    }
}

double loss_value(LossKind kind, double prediction, double label) {
    if (!std::isfinite(prediction) || !std::isfinite(label))
        throw DataError("loss_value: non-finite input");
    switch (kind) {
    case LossKind::Squared: {
        double r = prediction - label;
        return r * r;
    }
    case LossKind::Logistic: {
        if (label != 1.0 && label != -1.0)
            throw InvalidLabelError("logistic loss requires labels in {-1, +1}");
        double margin = label * prediction;
        // log1p(exp(-m)) computed on the stable side
        if (margin > 0) return std::log1p(std::exp(-margin));
        return -margin + std::log1p(std::exp(margin));
    }
    }
    throw InvalidParameterError("loss_value: unknown loss kind");
}

double loss_grad_prediction(LossKind kind, double prediction, double label) {
    switch (kind) {
    case LossKind::Squared:
        return 2.0 * (prediction - label);
    case LossKind::Logistic: {
        if (label != 1.0 && label != -1.0)
            throw InvalidLabelError("logistic loss requires labels in {-1, +1}");
        double margin = label * prediction;
        // -y * sigmoid(-m), stable for large |m|
        double s = margin > 0 ? std::exp(-margin) / (1.0 + std::exp(-margin))
                              : 1.0 / (1.0 + std::exp(margin));
        return -label * s;
    }
    }
    throw InvalidParameterError("loss_grad_prediction: unknown loss kind");
}

Vector per_example_losses(const LinearHypothesis& h, const LabeledDataset& data, LossKind loss) {
    Vector out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        out[i] = loss_value(loss, h.predict(data.features.row(i)), data.labels[i]);
    return out;
}

double weighted_empirical_loss(const LinearHypothesis& h, const LabeledDataset& data,
                               const WeightVector& q, LossKind loss) {
    if (q.size() != data.size())
        throw DimensionError("weighted_empirical_loss: weight length != example count");
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i)
        s += q.values[i] * loss_value(loss, h.predict(data.features.row(i)), data.labels[i]);
    return s;
}

Metrics evaluate_metrics(const LinearHypothesis& h, const LabeledDataset& data) {
    if (data.empty()) throw EmptyDataError("evaluate_metrics: empty dataset");
    Metrics m;
    std::size_t correct = 0;
    double sq = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        double pred = h.predict(data.features.row(i));
        double sign = pred >= 0.0 ? 1.0 : -1.0;
        if (sign == data.labels[i]) ++correct;
        double r = pred - data.labels[i];
        sq += r * r;
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    m.mse = sq / static_cast<double>(data.size());
    return m;
}

} // namespace adapt
