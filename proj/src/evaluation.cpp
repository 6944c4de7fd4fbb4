#include "kms/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "kms/parallel.hpp"

namespace kms {

ContingencyTable ContingencyTable::build(std::span<const ClusterIndex> assignment,
                                         std::span<const ClassLabel> labels) {
    if (assignment.size() != labels.size())
        throw std::invalid_argument("assignment and labels differ in length");
    std::map<ClusterIndex, std::size_t> rows;
    std::map<ClassLabel, std::size_t> cols;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == kUnlabeled) continue;
        rows.emplace(assignment[i], 0);
        cols.emplace(labels[i], 0);
    }
    std::size_t idx = 0;
    for (auto& [key, v] : rows) v = idx++;
    idx = 0;
    for (auto& [key, v] : cols) v = idx++;

    ContingencyTable t;
    t.counts.assign(rows.size(), std::vector<std::size_t>(cols.size(), 0));
    t.cluster_totals.assign(rows.size(), 0);
    t.class_totals.assign(cols.size(), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == kUnlabeled) continue;
        const std::size_t a = rows[assignment[i]];
        const std::size_t b = cols[labels[i]];
        ++t.counts[a][b];
        ++t.cluster_totals[a];
        ++t.class_totals[b];
        ++t.total;
    }
    return t;
}

namespace {
double entropy_of(std::span<const std::size_t> totals, std::size_t n) {
    double h = 0.0;
    const double nd = static_cast<double>(n);
    for (std::size_t c : totals) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / nd;
        h -= p * std::log(p);
    }
    return h;
}
}  // namespace

double mutual_information(const ContingencyTable& table) {
    const double n = static_cast<double>(table.total);
    double mi = 0.0;
    for (std::size_t a = 0; a < table.counts.size(); ++a) {
        for (std::size_t b = 0; b < table.counts[a].size(); ++b) {
            const std::size_t c = table.counts[a][b];
            if (c == 0) continue;
            const double pab = static_cast<double>(c) / n;
            const double pa = static_cast<double>(table.cluster_totals[a]) / n;
            const double pb = static_cast<double>(table.class_totals[b]) / n;
            mi += pab * std::log(pab / (pa * pb));
        }
    }
    return mi;
}

double cluster_entropy(const ContingencyTable& table) { return entropy_of(table.cluster_totals, table.total); }
double class_entropy(const ContingencyTable& table) { return entropy_of(table.class_totals, table.total); }

double nmi(std::span<const ClusterIndex> assignment, std::span<const ClassLabel> labels) {
    const auto t = ContingencyTable::build(assignment, labels);
    if (t.total == 0) throw std::invalid_argument("nmi needs at least one labeled object");
    const bool single_cluster = t.cluster_totals.size() == 1;
    const bool single_class = t.class_totals.size() == 1;
    if (single_cluster && single_class) return 1.0;
    if (single_cluster || single_class) return 0.0;
    return mutual_information(t) / std::min(cluster_entropy(t), class_entropy(t));
}

std::optional<double> classification_error(std::span<const ClassLabel> predictions,
                                           std::span<const ClassLabel> truth) {
    if (predictions.size() != truth.size())
        throw std::invalid_argument("predictions and truth differ in length");
    std::size_t included = 0, wrong = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == kUnlabeled || predictions[i] == kUnlabeled) continue;
        ++included;
        if (predictions[i] != truth[i]) ++wrong;
    }
    if (included == 0) return std::nullopt;
    return static_cast<double>(wrong) / static_cast<double>(included);
}

std::vector<ClassLabel> nn1_classify(const Dataset& dataset, std::span<const ObjectId> train_ids,
                                     std::span<const ObjectId> query_ids, bool leave_one_out) {
    if (!dataset.has_labels()) throw std::invalid_argument("nn1_classify needs a labeled dataset");
    if (train_ids.empty()) throw std::invalid_argument("nn1_classify needs a non-empty training set");
    for (ObjectId t : train_ids)
        if (t >= dataset.size()) throw std::out_of_range("training id out of range");
    for (ObjectId q : query_ids)
        if (q >= dataset.size()) throw std::out_of_range("query id out of range");

    std::vector<ClassLabel> out(query_ids.size(), kUnlabeled);
    parallel_for_blocks(query_ids.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t qi = begin; qi < end; ++qi) {
            const ObjectId q = query_ids[qi];
            const auto xq = dataset.row(q);
            double best = std::numeric_limits<double>::infinity();
            ObjectId arg = std::numeric_limits<ObjectId>::max();
            for (ObjectId t : train_ids) {
                if (leave_one_out && t == q) continue;
                const double d = squared_distance(xq, dataset.row(t));
                if (d < best || (d == best && t < arg)) {
                    best = d;
                    arg = t;
                }
            }
            if (arg != std::numeric_limits<ObjectId>::max()) out[qi] = dataset.label(arg);
        }
    });
    return out;
}

LearningMethod parse_learning_method(const std::string& name) {
    if (name == "al") return LearningMethod::al;
    if (name == "alc") return LearningMethod::alc;
    if (name == "aln") return LearningMethod::aln;
    if (name == "random-1nn") return LearningMethod::random_1nn;
    throw std::invalid_argument("unknown learning method '" + name + "' (expected al, alc, aln, random-1nn)");
}

std::string to_string(LearningMethod method) {
    switch (method) {
        case LearningMethod::al: return "al";
        case LearningMethod::alc: return "alc";
        case LearningMethod::aln: return "aln";
        case LearningMethod::random_1nn: return "random-1nn";
    }
    return "?";
}

std::vector<CurvePoint> learning_curve(const MultiLevelClustering& levels, LearningMethod method,
                                       const Dataset& dataset, const LearningCurveOptions& options) {
    if (!dataset.has_labels()) throw std::invalid_argument("learning curves need ground-truth labels");
    const std::string series = options.series.empty() ? to_string(method) : options.series;
    const auto& truth = dataset.labels();
    std::vector<CurvePoint> out;

    if (method == LearningMethod::random_1nn) {
        if (options.repetitions == 0) throw std::invalid_argument("random baseline needs >= 1 repetition");
        std::vector<ObjectId> all(dataset.size());
        std::iota(all.begin(), all.end(), 0);
        const RandomSource root(options.seed);
        for (std::size_t l = 0; l < levels.levels.size(); ++l) {
            const std::size_t budget = levels.levels[l].num_clusters();
            double sum = 0.0;
            for (std::size_t rep = 0; rep < options.repetitions; ++rep) {
                RandomSource rng = root.child(rep);
                auto train = rng.sample_without_replacement(dataset.size(), budget);
                const auto pred = nn1_classify(dataset, train, all, false);
                sum += classification_error(pred, truth).value_or(0.0);
            }
            out.push_back({static_cast<double>(budget), sum / static_cast<double>(options.repetitions), series});
        }
        return out;
    }

    const MultiLevelClustering nested = method == LearningMethod::aln ? nest_levels(levels) : MultiLevelClustering{};
    const MultiLevelClustering& source = method == LearningMethod::aln ? nested : levels;
    for (std::size_t l = 0; l < source.levels.size(); ++l) {
        GroundTruthOracle oracle(dataset);
        std::vector<ClassLabel> pred;
        std::size_t queries = 0;
        if (method == LearningMethod::alc) {
            auto res = propagate_confidences(source, l, oracle);
            pred = std::move(res.predictions);
            queries = res.queries;
        } else {
            auto res = active_label(source.levels[l], oracle);
            pred = std::move(res.labels);
            queries = res.queries;
        }
        out.push_back({static_cast<double>(queries), classification_error(pred, truth), series});
    }
    return out;
}

std::vector<CurvePoint> nmi_curve(const MultiLevelClustering& levels, const Dataset& dataset,
                                  const std::string& series) {
    if (!dataset.has_labels()) throw std::invalid_argument("NMI needs ground-truth labels");
    std::vector<CurvePoint> out;
    for (const auto& level : levels.levels) {
        if (level.size() != dataset.size())
            throw std::invalid_argument("clustering and dataset differ in size");
        out.push_back({static_cast<double>(level.num_clusters()), nmi(level.assignment, dataset.labels()), series});
    }
    return out;
}

LogLogFit fit_loglog(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("fit_loglog needs >= 2 paired points");
    const double m = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0) || !(ys[i] > 0)) throw std::invalid_argument("fit_loglog needs positive values");
        const double lx = std::log(xs[i]), ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = m * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("fit_loglog needs distinct x values");
    LogLogFit fit;
    fit.slope = (m * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / m;
    return fit;
}

BenchmarkResult timing_benchmark(const Dataset& dataset, std::span<const std::size_t> sizes,
                                 const std::function<void(const Dataset&)>& algorithm, RandomSource& rng,
                                 const std::string& series) {
    const std::set<std::size_t> distinct(sizes.begin(), sizes.end());
    if (distinct.size() < 3) throw std::invalid_argument("timing benchmark needs at least 3 distinct sizes");
    if (*distinct.rbegin() > dataset.size())
        throw std::invalid_argument("benchmark size " + std::to_string(*distinct.rbegin()) +
                                    " exceeds dataset size " + std::to_string(dataset.size()));
    if (*distinct.begin() < 1) throw std::invalid_argument("benchmark sizes must be positive");

    auto draw = [&](std::size_t size) {
        auto ids = rng.sample_without_replacement(dataset.size(), size);
        std::sort(ids.begin(), ids.end());
        return dataset.subset(ids);
    };

    algorithm(draw(*distinct.begin()));  // warm-up, discarded

    BenchmarkResult res;
    std::vector<double> xs, ys;
    for (std::size_t size : sizes) {
        const Dataset sub = draw(size);
        const auto t0 = std::chrono::steady_clock::now();
        algorithm(sub);
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        xs.push_back(static_cast<double>(size));
        ys.push_back(dt.count());
        res.points.push_back({static_cast<double>(size), dt.count(), series});
    }
    res.fit = fit_loglog(xs, ys);
    return res;
}

}  // namespace kms
