#include "kms/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "kms/parallel.hpp"

namespace kms {

std::optional<ClassLabel> LabelOracle::query(ObjectId id) {
    if (auto it = cache_.find(id); it != cache_.end()) return it->second;
    auto answer = ask(id);
    cache_.emplace(id, answer);
    return answer;
}

GroundTruthOracle::GroundTruthOracle(const Dataset& dataset)
    : labels_(&dataset.labels()), num_classes_(dataset.num_classes()) {
    if (!dataset.has_labels()) throw std::invalid_argument("ground-truth oracle needs a labeled dataset");
}

std::optional<ClassLabel> GroundTruthOracle::ask(ObjectId id) {
    const ClassLabel l = labels_->at(id);
    if (l == kUnlabeled) return std::nullopt;
    return l;
}

InteractiveOracle::InteractiveOracle(std::istream& in, std::ostream& out,
                                     std::vector<std::string> class_names, const Dataset* dataset)
    : in_(in), out_(out), class_names_(std::move(class_names)), dataset_(dataset) {}

std::optional<ClassLabel> InteractiveOracle::ask(ObjectId id) {
    if (dataset_ && id < dataset_->size()) out_ << render_features(dataset_->row(id));
    out_ << "label object " << id << " ?" << std::endl;
    std::string token;
    if (!(in_ >> token) || token == "?") return std::nullopt;
    for (std::size_t c = 0; c < class_names_.size(); ++c) {
        if (class_names_[c] == token) return static_cast<ClassLabel>(c + 1);
    }
    return std::nullopt;
}

std::string render_features(std::span<const double> features) {
    std::ostringstream os;
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(features.size()))));
    if (side * side == features.size() && side > 1) {
        static constexpr std::string_view ramp = " .:-=+*#%@";
        double lo = features[0], hi = features[0];
        for (double v : features) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double span = hi > lo ? hi - lo : 1.0;
        for (std::size_t r = 0; r < side; ++r) {
            for (std::size_t c = 0; c < side; ++c) {
                const double t = (features[r * side + c] - lo) / span;
                os << ramp[std::min(ramp.size() - 1, static_cast<std::size_t>(t * static_cast<double>(ramp.size())))];
            }
            os << '\n';
        }
    } else {
        for (std::size_t j = 0; j < features.size(); ++j) os << (j ? " " : "") << features[j];
        os << '\n';
    }
    return os.str();
}

ActiveLabelResult active_label(const ClusteringLevel& level, LabelOracle& oracle) {
    ActiveLabelResult res;
    const std::size_t before = oracle.queries_used();
    std::vector<ClassLabel> cluster_label(level.num_clusters(), kUnlabeled);
    for (std::size_t j = 0; j < level.num_clusters(); ++j) {
        const auto answer = oracle.query(level.modal_objects[j]);
        if (answer) {
            cluster_label[j] = *answer;
        } else {
            ++res.unlabeled_clusters;
        }
    }
    res.queries = oracle.queries_used() - before;
    res.labels.resize(level.size());
    for (std::size_t i = 0; i < level.size(); ++i) {
        res.labels[i] = cluster_label[level.assignment[i]];
        if (res.labels[i] == kUnlabeled) ++res.unlabeled_objects;
    }
    return res;
}

double ConfidenceMatrix::max_stochastic_deviation() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        double sum = 0.0;
        for (double v : row(i)) {
            if (v < 0.0) worst = std::max(worst, -v);
            sum += v;
        }
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    return worst;
}

ConfidenceMatrix averaging_matrix_apply(const ClusteringLevel& level, const ConfidenceMatrix& confidences) {
    if (confidences.rows != level.size())
        throw std::invalid_argument("confidence matrix has " + std::to_string(confidences.rows) +
                                    " rows, clustering has " + std::to_string(level.size()) + " objects");
    const std::size_t r = confidences.classes;
    ConfidenceMatrix out(confidences.rows, r);
    out.level_tag = confidences.level_tag;
    const auto members = level.members();
    parallel_for_blocks(members.size(), [&](std::size_t begin, std::size_t end) {
        std::vector<double> mean(r);
        for (std::size_t j = begin; j < end; ++j) {
            const auto& m = members[j];
            if (m.empty()) continue;
            std::fill(mean.begin(), mean.end(), 0.0);
            for (ObjectId t : m) {
                const auto q = confidences.row(t);
                for (std::size_t c = 0; c < r; ++c) mean[c] += q[c];
            }
            const double inv = 1.0 / static_cast<double>(m.size());
            for (double& v : mean) v *= inv;
            for (ObjectId t : m) std::copy(mean.begin(), mean.end(), out.values.begin() + static_cast<std::ptrdiff_t>(t * r));
        }
    });
    return out;
}

std::vector<ClassLabel> predict(const ConfidenceMatrix& confidences) {
    std::vector<ClassLabel> out(confidences.rows, kUnlabeled);
    for (std::size_t i = 0; i < confidences.rows; ++i) {
        const auto q = confidences.row(i);
        if (q.empty()) continue;
        const auto it = std::max_element(q.begin(), q.end());  // first maximum
        out[i] = static_cast<ClassLabel>(std::distance(q.begin(), it) + 1);
    }
    return out;
}

PropagationResult propagate_confidences(const MultiLevelClustering& levels, std::size_t start_level,
                                        LabelOracle& oracle) {
    if (start_level >= levels.levels.size())
        throw std::out_of_range("start level " + std::to_string(start_level) + " does not exist");
    const ClusteringLevel& start = levels.levels[start_level];
    const std::size_t n = start.size();
    const std::size_t r = oracle.num_classes();
    if (r == 0) throw std::invalid_argument("oracle knows no classes");

    const ActiveLabelResult al = active_label(start, oracle);
    PropagationResult res;
    res.queries = al.queries;
    res.unlabeled_clusters = al.unlabeled_clusters;

    ConfidenceMatrix q(n, r);
    q.level_tag = start_level;
    for (std::size_t i = 0; i < n; ++i) {
        const ClassLabel l = al.labels[i];
        if (l == kUnlabeled) continue;
        if (static_cast<std::size_t>(l) > r) throw std::out_of_range("oracle returned class beyond r");
        q.at(i, static_cast<std::size_t>(l - 1)) = 1.0;
    }
    for (std::size_t l = start_level + 1; l < levels.levels.size(); ++l) {
        q = averaging_matrix_apply(levels.levels[l], q);
        q.level_tag = l;
    }

    res.coverage.assign(n, 1.0);
    if (al.unlabeled_clusters > 0) {
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (std::size_t c = 0; c < r; ++c) sum += q.at(i, c);
            res.coverage[i] = sum;
            for (std::size_t c = 0; c < r; ++c)
                q.at(i, c) = sum > 0.0 ? q.at(i, c) / sum : 1.0 / static_cast<double>(r);
        }
    }
    res.predictions = predict(q);
    for (std::size_t i = 0; i < n; ++i) {
        if (res.coverage[i] <= 0.0) res.predictions[i] = kUnlabeled;
    }
    res.confidences = std::move(q);
    return res;
}

std::size_t level_for_budget(const MultiLevelClustering& levels, std::size_t budget) {
    if (levels.levels.empty()) throw std::invalid_argument("no clustering levels");
    std::size_t best = 0;
    std::size_t best_gap = SIZE_MAX;
    for (std::size_t l = 0; l < levels.levels.size(); ++l) {
        const std::size_t nc = levels.levels[l].num_clusters();
        const std::size_t gap = nc > budget ? nc - budget : budget - nc;
        if (gap < best_gap) {
            best_gap = gap;
            best = l;
        }
    }
    return best;
}

bool is_nested(const ClusteringLevel& coarse, const ClusteringLevel& fine) {
    if (coarse.size() != fine.size()) return false;
    std::vector<std::int64_t> parent(fine.num_clusters(), -1);
    for (std::size_t i = 0; i < fine.size(); ++i) {
        auto& p = parent[fine.assignment[i]];
        if (p < 0) {
            p = coarse.assignment[i];
        } else if (p != static_cast<std::int64_t>(coarse.assignment[i])) {
            return false;
        }
    }
    return true;
}

namespace {

ClusteringLevel nest_one(const ClusteringLevel& coarse, const ClusteringLevel& fine) {
    const std::size_t nf = fine.num_clusters();
    const std::size_t nc = coarse.num_clusters();
    std::vector<std::size_t> fine_size(nf, 0);
    for (ClusterIndex a : fine.assignment) ++fine_size[a];

    // Coarse cluster receiving each fine cluster: the one holding its prototype.
    std::vector<ClusterIndex> target(nf);
    std::vector<std::vector<ClusterIndex>> groups(nc);
    for (std::size_t f = 0; f < nf; ++f) {
        target[f] = coarse.assignment[fine.modal_objects[f]];
        groups[target[f]].push_back(static_cast<ClusterIndex>(f));
    }

    ClusteringLevel out;
    out.k = coarse.k;
    out.clamped_objects = coarse.clamped_objects;
    std::vector<ClusterIndex> new_index(nc, 0);
    for (std::size_t j = 0; j < nc; ++j) {
        if (groups[j].empty()) continue;
        const ObjectId old_proto = coarse.modal_objects[j];
        ObjectId proto;
        if (target[fine.assignment[old_proto]] == j) {
            proto = old_proto;
        } else {
            ClusterIndex largest = groups[j].front();
            for (ClusterIndex f : groups[j]) {
                if (fine_size[f] > fine_size[largest]) largest = f;
            }
            proto = fine.modal_objects[largest];
        }
        new_index[j] = static_cast<ClusterIndex>(out.modal_objects.size());
        out.modal_objects.push_back(proto);
    }
    out.assignment.resize(fine.size());
    for (std::size_t i = 0; i < fine.size(); ++i) out.assignment[i] = new_index[target[fine.assignment[i]]];
    out.canonicalize();
    return out;
}

}  // namespace

MultiLevelClustering nest_levels(const MultiLevelClustering& levels) {
    MultiLevelClustering out = levels;
    if (out.levels.size() < 2) return out;
    for (std::size_t l = out.levels.size() - 1; l-- > 0;) {
        out.levels[l] = nest_one(levels.levels[l], out.levels[l + 1]);
    }
    out.provenance.parameters["nested"] = "true";
    return out;
}

std::vector<RejectPoint> reject_curve(const ConfidenceMatrix& confidences,
                                      std::span<const ClassLabel> predictions,
                                      std::span<const ClassLabel> truth,
                                      std::span<const double> thresholds) {
    if (predictions.size() != confidences.rows || truth.size() != confidences.rows)
        throw std::invalid_argument("reject_curve: confidences, predictions and truth differ in length");
    std::vector<double> top;
    std::vector<bool> correct;
    for (std::size_t i = 0; i < confidences.rows; ++i) {
        if (truth[i] == kUnlabeled || predictions[i] == kUnlabeled) continue;
        const auto q = confidences.row(i);
        top.push_back(q.empty() ? 0.0 : *std::max_element(q.begin(), q.end()));
        correct.push_back(predictions[i] == truth[i]);
    }
    if (top.empty()) throw std::invalid_argument("reject_curve: no labeled objects");

    std::vector<RejectPoint> out;
    out.reserve(thresholds.size());
    for (double tau : thresholds) {
        if (!std::isfinite(tau) || tau < 0.0)
            throw std::invalid_argument("reject threshold must be finite and non-negative");
        std::size_t rejected = 0, wrong = 0;
        for (std::size_t i = 0; i < top.size(); ++i) {
            if (top[i] < tau) {
                ++rejected;
            } else if (!correct[i]) {
                ++wrong;
            }
        }
        RejectPoint p;
        p.threshold = tau;
        p.reject_rate = static_cast<double>(rejected) / static_cast<double>(top.size());
        const std::size_t accepted = top.size() - rejected;
        if (accepted > 0) p.error = static_cast<double>(wrong) / static_cast<double>(accepted);
        out.push_back(p);
    }
    return out;
}

}  // namespace kms
