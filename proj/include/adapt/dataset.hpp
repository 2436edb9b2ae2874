#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "adapt/errors.hpp"
#include "adapt/matrix.hpp"

namespace adapt {

enum class Domain { Source, Target };

/// Labeled sample: feature rows, labels (+-1 for classification, reals for
/// regression) and a per-row domain tag. Rows from the source sample always
/// precede target rows in the canonical layout used by the learners.
struct LabeledDataset {
    Matrix features;             // rows x d
    Vector labels;               // length rows
    std::vector<Domain> domains; // length rows

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return features.cols(); }
    bool empty() const { return labels.empty(); }

    std::size_t count(Domain d) const {
        std::size_t c = 0;
        for (auto t : domains)
            if (t == d) ++c;
        return c;
    }

    void validate() const;

    /// True when all source rows precede all target rows.
    bool canonical_layout() const;

    /// Subset by row indices; tags preserved.
    LabeledDataset select(const std::vector<std::size_t>& idx) const;

    /// Rows tagged with the given domain, in order.
    LabeledDataset subset(Domain d) const;

    /// Appends a constant-1 column (bias folded into the weight vector).
    LabeledDataset with_bias_column() const;
};

/// Canonical concatenation: source block then target block. Row tags are
/// overwritten so the result is well-formed even if the operands carried
/// mixed tags.
LabeledDataset combine(const LabeledDataset& source, const LabeledDataset& target);

LabeledDataset make_dataset(Matrix features, Vector labels, Domain tag);

} // namespace adapt
