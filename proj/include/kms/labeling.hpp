#pragma once

// Classification on top of multi-level clusterings: label the prototypes of
// one level (AL), propagate class confidences through the finer levels
// (ALC), make the levels nested (ALN), and reject low-confidence objects.

#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "kms/core.hpp"

namespace kms {

/// Answers "what class is object i?". Each object is asked at most once;
/// answers (including refusals) are cached and queries_used() counts the
/// distinct objects asked.
class LabelOracle {
public:
    virtual ~LabelOracle() = default;

    std::optional<ClassLabel> query(ObjectId id);
    std::size_t queries_used() const { return cache_.size(); }
    virtual std::size_t num_classes() const = 0;

protected:
    /// nullopt means the expert declined or gave an unknown class.
    virtual std::optional<ClassLabel> ask(ObjectId id) = 0;

private:
    std::unordered_map<ObjectId, std::optional<ClassLabel>> cache_;
};

/// Answers from the dataset's ground-truth labels.
class GroundTruthOracle final : public LabelOracle {
public:
    explicit GroundTruthOracle(const Dataset& dataset);
    std::size_t num_classes() const override { return num_classes_; }

protected:
    std::optional<ClassLabel> ask(ObjectId id) override;

private:
    const std::vector<ClassLabel>* labels_;
    std::size_t num_classes_;
};

/// Prompts `label object <id> ?` on `out` and reads one token from `in`.
/// Tokens are matched against the class names; `?` or an unknown token
/// leaves the object unlabeled. When a dataset is given, a short rendition
/// of the feature vector is printed before the prompt.
class InteractiveOracle final : public LabelOracle {
public:
    InteractiveOracle(std::istream& in, std::ostream& out, std::vector<std::string> class_names,
                      const Dataset* dataset = nullptr);
    std::size_t num_classes() const override { return class_names_.size(); }

protected:
    std::optional<ClassLabel> ask(ObjectId id) override;

private:
    std::istream& in_;
    std::ostream& out_;
    std::vector<std::string> class_names_;
    const Dataset* dataset_;
};

/// Text rendition of a feature vector: an ASCII intensity grid when the
/// dimension is a perfect square, otherwise the values on one line.
std::string render_features(std::span<const double> features);

struct ActiveLabelResult {
    /// Per object; kUnlabeled for objects of unlabeled clusters.
    std::vector<ClassLabel> labels;
    std::size_t queries = 0;
    std::size_t unlabeled_clusters = 0;
    std::size_t unlabeled_objects = 0;
};

/// Queries the prototype of every cluster once and gives each object the
/// class of its cluster's prototype.
ActiveLabelResult active_label(const ClusteringLevel& level, LabelOracle& oracle);

/// n x r class confidences, row-major. Column c-1 holds class c.
struct ConfidenceMatrix {
    std::size_t rows = 0;
    std::size_t classes = 0;
    std::vector<double> values;
    /// Index of the level (in its MultiLevelClustering) that produced it.
    std::size_t level_tag = 0;

    ConfidenceMatrix() = default;
    ConfidenceMatrix(std::size_t n, std::size_t r) : rows(n), classes(r), values(n * r, 0.0) {}

    double& at(std::size_t i, std::size_t c) { return values[i * classes + c]; }
    double at(std::size_t i, std::size_t c) const { return values[i * classes + c]; }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * classes, classes}; }

    /// Largest deviation of a row sum from 1 (negative entries count as
    /// a deviation of their magnitude).
    double max_stochastic_deviation() const;
};

/// Q <- A Q for the averaging matrix of `level`: every row becomes the mean
/// of the rows in its cluster. Computed cluster by cluster, never forming A.
ConfidenceMatrix averaging_matrix_apply(const ClusteringLevel& level, const ConfidenceMatrix& confidences);

/// Arg-max class per row (lowest class on ties), as 1-based labels.
std::vector<ClassLabel> predict(const ConfidenceMatrix& confidences);

struct PropagationResult {
    ConfidenceMatrix confidences;
    /// kUnlabeled where no labeled mass reached the object.
    std::vector<ClassLabel> predictions;
    /// Fraction of each object's row mass that came from labeled clusters.
    std::vector<double> coverage;
    std::size_t queries = 0;
    std::size_t unlabeled_clusters = 0;
};

/// One-hot confidences from active labeling at `start_level`, then
/// Q^{l+1} = A^{l+1} Q^l through every finer level. Returns the confidences
/// of the finest level. Unlabeled clusters start as zero rows; rows are
/// normalized once at the end (rows without labeled mass become uniform
/// and their prediction is kUnlabeled).
PropagationResult propagate_confidences(const MultiLevelClustering& levels, std::size_t start_level,
                                        LabelOracle& oracle);

/// Level whose cluster count is closest to `budget` (first on ties).
std::size_t level_for_budget(const MultiLevelClustering& levels, std::size_t budget);

/// Top-down rewrite making every coarser level consistent with the next
/// finer one: fine clusters whose prototype lies in coarse cluster j merge
/// into the modified cluster j'. It keeps the old prototype if that is a
/// member, otherwise takes the prototype of its largest constituent (lower
/// fine index on ties). Coarse clusters that receive no fine cluster vanish.
MultiLevelClustering nest_levels(const MultiLevelClustering& levels);

/// True if every cluster of `fine` lies inside one cluster of `coarse`.
bool is_nested(const ClusteringLevel& coarse, const ClusteringLevel& fine);

struct RejectPoint {
    double threshold = 0.0;
    double reject_rate = 0.0;
    /// Error among accepted objects; nullopt when everything was rejected.
    std::optional<double> error;
};

/// Rejects objects whose largest confidence is below the threshold. Only
/// objects with both a truth label and a prediction are counted. Thresholds
/// must be finite and non-negative; values above 1 reject everything.
std::vector<RejectPoint> reject_curve(const ConfidenceMatrix& confidences,
                                      std::span<const ClassLabel> predictions,
                                      std::span<const ClassLabel> truth,
                                      std::span<const double> thresholds);

}  // namespace kms
