// kms: cluster, evaluate, label and benchmark from the command line.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "kms/core.hpp"
#include "kms/evaluation.hpp"
#include "kms/io.hpp"
#include "kms/kmeans.hpp"
#include "kms/labeling.hpp"
#include "kms/modeseek_exact.hpp"
#include "kms/modeseek_fast.hpp"
#include "kms/parallel.hpp"
#include "kms/synthetic.hpp"

namespace {

using namespace kms;
using Header = std::map<std::string, std::string>;

constexpr int kExitError = 1;
constexpr int kExitBudget = 3;

struct DataOptions {
    std::string path;
    std::string format = "csv";
    std::string label_column;
    std::string labels_path;
    bool header = false;
    bool normalize = false;

    void attach(CLI::App& app) {
        app.add_option("data", path, "Dataset file")->required();
        app.add_option("--format", format, "Dataset format")->check(CLI::IsMember({"csv", "raw-f32", "f32", "idx"}));
        app.add_option("--label-column", label_column, "CSV label column (1-based index or header name)");
        app.add_option("--labels", labels_path, "Side-car label file (raw-f32: text tokens; idx: IDX labels)");
        app.add_flag("--header", header, "CSV has a header line");
        app.add_flag("--normalize", normalize, "Scale every feature vector to sum one");
    }

    Dataset load() const {
        DatasetFile f;
        f.format = parse_dataset_format(format);
        f.path = path;
        if (!label_column.empty()) f.label_column = label_column;
        if (!labels_path.empty()) f.labels_path = labels_path;
        f.has_header = header;
        f.normalize = normalize;
        return load_dataset(f);
    }

    void describe(Header& h) const {
        h["data"] = path;
        h["format"] = format;
        if (!label_column.empty()) h["label_column"] = label_column;
        if (!labels_path.empty()) h["labels"] = labels_path;
        if (normalize) h["normalize"] = "true";
    }
};

struct ScheduleOptions {
    std::size_t base = 2;
    double ratio = 1.21;
    double cap = 0.1;
    std::vector<std::size_t> sizes;

    void attach(CLI::App& app) {
        app.add_option("--base", base, "Smallest neighborhood size")->capture_default_str();
        app.add_option("--ratio", ratio, "Geometric ratio between neighborhood sizes")->capture_default_str();
        app.add_option("--cap", cap, "Neighborhood sizes stay below cap * n")->capture_default_str();
        app.add_option("--k", sizes, "Explicit neighborhood sizes (overrides the geometric schedule)")->delimiter(',');
    }

    NeighborhoodSchedule build(std::size_t n) const {
        if (!sizes.empty()) {
            auto s = NeighborhoodSchedule::explicit_sizes(sizes);
            s.validate(n);
            return s;
        }
        return build_schedule(n, base, ratio, cap);
    }

    void describe(Header& h) const {
        if (!sizes.empty()) {
            std::string list;
            for (auto k : sizes) list += (list.empty() ? "" : ",") + std::to_string(k);
            h["k"] = list;
        } else {
            h["base"] = std::to_string(base);
            h["ratio"] = format_double(ratio);
            h["cap"] = format_double(cap);
        }
    }
};

CurveFormat format_for(const std::string& path) {
    return std::filesystem::path(path).extension() == ".svg" ? CurveFormat::svg : CurveFormat::csv;
}

void write_text_with_header(const std::string& path, const Header& header, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    for (const auto& [k, v] : header) f << "# " << k << '=' << v << '\n';
    f << body;
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

void check_checksum(const ClusteringArtifact& artifact, const Dataset& ds) {
    if (artifact.num_objects != ds.size())
        throw std::invalid_argument("artifact covers " + std::to_string(artifact.num_objects) +
                                    " objects but the dataset has " + std::to_string(ds.size()));
    if (artifact.clustering.provenance.dataset_checksum != ds.checksum())
        throw std::invalid_argument("dataset checksum differs from the one recorded in the artifact");
}

std::string series_name(const Provenance& p) {
    if (p.algorithm == "fms" && p.parameters.count("c")) return "fms-" + p.parameters.at("c");
    return p.algorithm;
}

/// Oracle wrapper that stops once a query budget is spent.
class BudgetedOracle final : public LabelOracle {
public:
    struct Exceeded : std::runtime_error {
        using std::runtime_error::runtime_error;
    };
    BudgetedOracle(LabelOracle& inner, std::size_t budget) : inner_(inner), budget_(budget) {}
    std::size_t num_classes() const override { return inner_.num_classes(); }

protected:
    std::optional<ClassLabel> ask(ObjectId id) override {
        if (queries_used() >= budget_)
            throw Exceeded("query budget of " + std::to_string(budget_) + " labels exhausted");
        return inner_.query(id);
    }

private:
    LabelOracle& inner_;
    std::size_t budget_;
};

// --------------------------------------------------------------------------

struct ClusterCmd {
    DataOptions data;
    ScheduleOptions schedule;
    std::string algo = "fms";
    std::size_t c = kDefaultComplexity;
    std::uint64_t seed = 0;
    std::vector<std::size_t> counts;
    std::size_t max_iter = 100;
    double time_budget = 0.0;
    std::string output = "clustering.json";
    std::string summary;

    int run(const std::string& command) {
        const Dataset ds = data.load();
        const auto t0 = std::chrono::steady_clock::now();
        MultiLevelClustering m;
        std::vector<double> seconds;
        Header h;
        data.describe(h);
        h["command"] = command;
        h["algo"] = algo;
        h["seed"] = std::to_string(seed);
        if (algo == "kmeans") {
            if (counts.empty()) throw std::invalid_argument("--algo kmeans needs --counts");
            KMeansOptions opt;
            opt.max_iterations = max_iter;
            if (time_budget > 0) opt.time_budget = std::chrono::duration<double>(time_budget);
            const RandomSource root(seed);
            for (std::size_t r = 0; r < counts.size(); ++r) {
                const auto s0 = std::chrono::steady_clock::now();
                const std::size_t one[] = {counts[r]};
                auto single = kmeans_multilevel(ds, one, opt, root.child(r));
                seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count());
                m.levels.push_back(std::move(single.levels[0]));
            }
            m.provenance.algorithm = "kmeans";
            h["max_iter"] = std::to_string(max_iter);
        } else {
            const auto sched = schedule.build(ds.size());
            schedule.describe(h);
            if (algo == "ms") {
                m = ms_cluster(ds, sched);
            } else {
                RandomSource rng(seed);
                FmsStats stats;
                m = fms_cluster(ds, sched, c, rng, &stats);
                h["c"] = std::to_string(c);
                if (m.provenance.parameters.at("effective_c") != std::to_string(c))
                    std::cerr << "warning: c=" << c << " clamped to " << m.provenance.parameters.at("effective_c")
                              << " surviving prototypes\n";
            }
        }
        const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        m.provenance.seed = seed;
        m.provenance.dataset_checksum = ds.checksum();
        for (const auto& [k, v] : h) m.provenance.parameters[k] = v;
        if (algo == "kmeans") {
            // Keep per-level timings aligned with the sorted levels.
            std::vector<std::size_t> order(m.levels.size());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                const auto& la = m.levels[a];
                const auto& lb = m.levels[b];
                return la.num_clusters() != lb.num_clusters() ? la.num_clusters() < lb.num_clusters() : la.k > lb.k;
            });
            std::vector<ClusteringLevel> lv;
            std::vector<double> sec;
            for (auto i : order) {
                lv.push_back(std::move(m.levels[i]));
                sec.push_back(seconds[i]);
            }
            m.levels = std::move(lv);
            seconds = std::move(sec);
        } else {
            seconds.assign(m.levels.size(), total);
        }

        ClusteringArtifact artifact;
        artifact.clustering = m;
        artifact.num_objects = ds.size();
        save_artifact(artifact, output);

        std::ostringstream table;
        table << "k,num_clusters,clamped_objects,seconds\n";
        for (std::size_t l = 0; l < m.levels.size(); ++l)
            table << m.levels[l].k << ',' << m.levels[l].num_clusters() << ',' << m.levels[l].clamped_objects << ','
                  << std::fixed << std::setprecision(6) << seconds[l] << '\n';
        std::cout << table.str();
        if (!summary.empty()) write_text_with_header(summary, h, table.str());
        std::cerr << "wrote " << m.levels.size() << " levels to " << output << " in " << std::fixed
                  << std::setprecision(3) << total << " s\n";
        return 0;
    }
};

struct EvaluateCmd {
    DataOptions data;
    std::vector<std::string> artifacts;
    std::string output = "nmi.csv";
    bool log_x = true;

    int run(const std::string& command) {
        const Dataset ds = data.load();
        if (!ds.has_labels()) throw std::invalid_argument("evaluate needs ground-truth labels (use --label-column or --labels)");
        std::vector<CurvePoint> points;
        Header h;
        data.describe(h);
        h["command"] = command;
        for (const auto& path : artifacts) {
            const auto a = load_artifact(path);
            check_checksum(a, ds);
            const std::string series = series_name(a.clustering.provenance);
            for (auto& p : nmi_curve(a.clustering, ds, series)) points.push_back(std::move(p));
        }
        CurveStyle style{"NMI by number of clusters", "clusters", "NMI", log_x, false};
        emit_curves(points, format_for(output), output, style, h);
        for (const auto& p : points) std::cout << p.series << ',' << format_double(p.x) << ',' << format_double(*p.y) << '\n';
        return 0;
    }
};

struct ActiveLearnCmd {
    DataOptions data;
    std::string artifact;
    std::string method = "alc";
    std::string oracle_kind = "labels";
    std::optional<std::size_t> budget;
    std::optional<std::size_t> level;
    std::optional<std::size_t> max_queries;
    std::string predictions = "predictions.csv";
    std::string curves;
    std::string confidences_out;
    std::size_t repetitions = 10;
    std::uint64_t seed = 0;

    int run(const std::string& command) {
        const Dataset ds = data.load();
        auto a = load_artifact(artifact);
        check_checksum(a, ds);
        const LearningMethod lm = parse_learning_method(method);
        if (lm == LearningMethod::random_1nn) throw std::invalid_argument("active-learn runs al, alc or aln");
        Header h;
        data.describe(h);
        h["command"] = command;
        h["method"] = method;
        h["oracle"] = oracle_kind;

        const MultiLevelClustering levels = lm == LearningMethod::aln ? nest_levels(a.clustering) : a.clustering;
        std::size_t start;
        if (level) {
            start = *level;
            if (start >= levels.levels.size()) throw std::out_of_range("level " + std::to_string(start) + " does not exist");
        } else {
            start = level_for_budget(levels, budget.value_or(1000));
        }
        h["level"] = std::to_string(start);

        std::unique_ptr<LabelOracle> base;
        if (oracle_kind == "labels") {
            if (!ds.has_labels()) throw std::invalid_argument("--oracle labels needs ground-truth labels");
            base = std::make_unique<GroundTruthOracle>(ds);
        } else {
            std::vector<std::string> names = ds.class_names();
            if (names.empty()) throw std::invalid_argument("interactive labeling needs the class names of a labeled dataset");
            base = std::make_unique<InteractiveOracle>(std::cin, std::cout, names, &ds);
        }
        LabelOracle* oracle = base.get();
        std::unique_ptr<BudgetedOracle> capped;
        if (max_queries) {
            capped = std::make_unique<BudgetedOracle>(*base, *max_queries);
            oracle = capped.get();
        }

        std::vector<ClassLabel> pred;
        std::optional<ConfidenceMatrix> conf;
        std::size_t queries = 0, unlabeled = 0;
        try {
            if (lm == LearningMethod::alc) {
                auto res = propagate_confidences(levels, start, *oracle);
                pred = std::move(res.predictions);
                conf = std::move(res.confidences);
                queries = res.queries;
                unlabeled = res.unlabeled_clusters;
            } else {
                auto res = active_label(levels.levels[start], *oracle);
                pred = std::move(res.labels);
                queries = res.queries;
                unlabeled = res.unlabeled_clusters;
            }
        } catch (const BudgetedOracle::Exceeded& e) {
            std::cerr << "error: " << e.what() << "; partial report: " << oracle->queries_used() << " of "
                      << levels.levels[start].num_clusters() << " prototypes labeled at level " << start << '\n';
            return kExitBudget;
        }

        std::ostringstream body;
        body << "object,prediction" << (conf ? ",confidence" : "") << '\n';
        const auto& names = ds.class_names();
        for (std::size_t i = 0; i < pred.size(); ++i) {
            body << i << ',' << (pred[i] == kUnlabeled ? std::string("?") : names.at(static_cast<std::size_t>(pred[i] - 1)));
            if (conf) {
                const auto row = conf->row(i);
                body << ',' << format_double(*std::max_element(row.begin(), row.end()));
            }
            body << '\n';
        }
        h["queries"] = std::to_string(queries);
        write_text_with_header(predictions, h, body.str());

        std::cout << "method " << method << ", level " << start << ", clusters " << levels.levels[start].num_clusters()
                  << ", queries " << queries << ", unlabeled clusters " << unlabeled;
        if (ds.has_labels()) {
            const auto err = classification_error(pred, ds.labels());
            std::cout << ", error " << (err ? format_double(*err) : std::string("undefined"));
        }
        std::cout << '\n';

        if (conf && !confidences_out.empty()) {
            ClusteringArtifact out = a;
            out.confidences = conf;
            out.clustering.provenance.parameters["confidences_start_level"] = std::to_string(start);
            save_artifact(out, confidences_out);
        }

        if (!curves.empty()) {
            if (!ds.has_labels() || oracle_kind != "labels")
                throw std::invalid_argument("learning curves need --oracle labels and ground truth");
            LearningCurveOptions opt;
            opt.repetitions = repetitions;
            opt.seed = seed;
            const std::string prefix = series_name(a.clustering.provenance);
            std::vector<CurvePoint> pts;
            opt.series = prefix + "-" + method;
            for (auto& p : learning_curve(a.clustering, lm, ds, opt)) pts.push_back(std::move(p));
            opt.series = "random-1nn";
            for (auto& p : learning_curve(a.clustering, LearningMethod::random_1nn, ds, opt)) pts.push_back(std::move(p));
            h["repetitions"] = std::to_string(repetitions);
            h["seed"] = std::to_string(seed);
            CurveStyle style{"Error by number of labeled objects", "labeled objects", "error", true, false};
            emit_curves(pts, format_for(curves), curves, style, h);
        }
        return 0;
    }
};

struct RejectCmd {
    DataOptions data;
    std::string artifact;
    std::optional<std::size_t> budget;
    std::vector<double> thresholds;
    std::size_t steps = 20;
    std::string output = "reject.csv";

    int run(const std::string& command) {
        const Dataset ds = data.load();
        if (!ds.has_labels()) throw std::invalid_argument("reject curves need ground-truth labels");
        const auto a = load_artifact(artifact);
        check_checksum(a, ds);
        Header h;
        data.describe(h);
        h["command"] = command;

        ConfidenceMatrix conf;
        if (a.confidences && !budget) {
            conf = *a.confidences;
            h["confidences"] = "artifact";
        } else {
            const std::size_t start = level_for_budget(a.clustering, budget.value_or(1000));
            GroundTruthOracle oracle(ds);
            conf = propagate_confidences(a.clustering, start, oracle).confidences;
            h["level"] = std::to_string(start);
        }
        if (conf.rows != ds.size()) throw std::invalid_argument("confidence matrix does not match the dataset");
        const auto pred = predict(conf);
        std::vector<double> taus = thresholds;
        if (taus.empty())
            for (std::size_t s = 0; s <= steps; ++s) taus.push_back(static_cast<double>(s) / static_cast<double>(steps));
        const auto curve = reject_curve(conf, pred, ds.labels(), taus);

        std::vector<CurvePoint> pts;
        std::cout << "threshold,reject_rate,error\n";
        for (const auto& p : curve) {
            pts.push_back({p.reject_rate, p.error, "alc"});
            std::cout << format_double(p.threshold) << ',' << format_double(p.reject_rate) << ','
                      << (p.error ? format_double(*p.error) : std::string()) << '\n';
        }
        CurveStyle style{"Reject curve", "reject rate", "error", false, false};
        emit_curves(pts, format_for(output), output, style, h);
        return 0;
    }
};

struct BenchCmd {
    DataOptions data;
    ScheduleOptions schedule;
    std::string algo = "fms";
    std::size_t c = kDefaultComplexity;
    std::vector<std::size_t> sizes;
    std::vector<std::size_t> counts = {100};
    std::uint64_t seed = 0;
    std::string output = "bench.csv";

    int run(const std::string& command) {
        const Dataset ds = data.load();
        RandomSource rng(seed);
        Header h;
        data.describe(h);
        h["command"] = command;
        std::function<void(const Dataset&)> fn;
        if (algo == "ms") {
            fn = [&](const Dataset& sub) { ms_cluster(sub, schedule.build(sub.size())); };
        } else if (algo == "fms") {
            fn = [&](const Dataset& sub) {
                RandomSource r(seed);
                fms_cluster(sub, schedule.build(sub.size()), c, r);
            };
        } else {
            fn = [&](const Dataset& sub) { kmeans_multilevel(sub, counts, {}, RandomSource(seed)); };
        }
        const auto res = timing_benchmark(ds, sizes, fn, rng, algo);
        h["slope"] = format_double(res.fit.slope);
        for (const auto& p : res.points) std::cout << "n=" << format_double(p.x) << " seconds=" << *p.y << '\n';
        std::cout << "fitted exponent " << std::fixed << std::setprecision(3) << res.fit.slope << '\n';
        CurveStyle style{"Wall time by dataset size", "objects", "seconds", true, true};
        emit_curves(res.points, format_for(output), output, style, h);
        return 0;
    }
};

struct SynthCmd {
    MixtureSpec spec;
    std::uint64_t seed = 0;
    std::string output = "synthetic.csv";

    int run(const std::string& command) {
        RandomSource rng(seed);
        const Dataset ds = gaussian_mixture(spec, rng);
        std::ostringstream body;
        for (ObjectId i = 0; i < ds.size(); ++i) {
            for (double v : ds.row(i)) body << format_double(v) << ',';
            body << ds.class_names()[static_cast<std::size_t>(ds.label(i) - 1)] << '\n';
        }
        std::ofstream f(output, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write '" + output + "'");
        f << body.str();
        std::cerr << command << ": wrote " << ds.size() << " objects; labels in column " << spec.d + 1 << '\n';
        return 0;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kNN mode seeking clustering, active labeling and evaluation"};
    app.require_subcommand(1);
    std::size_t workers = 0;
    app.add_option("--workers", workers, "Worker threads (0 = all hardware threads)");

    ClusterCmd cluster;
    auto* c = app.add_subcommand("cluster", "Cluster a dataset into a multi-level artifact");
    cluster.data.attach(*c);
    cluster.schedule.attach(*c);
    c->add_option("--algo", cluster.algo, "Clusterer")->check(CLI::IsMember({"ms", "fms", "kmeans"}))->capture_default_str();
    c->add_option("--c", cluster.c, "FMS complexity parameter")->capture_default_str();
    c->add_option("--seed", cluster.seed, "Random seed")->capture_default_str();
    c->add_option("--counts", cluster.counts, "kMeans cluster counts")->delimiter(',');
    c->add_option("--max-iter", cluster.max_iter, "kMeans iteration cap")->capture_default_str();
    c->add_option("--time-budget", cluster.time_budget, "kMeans wall-clock budget per run in seconds");
    c->add_option("-o,--output", cluster.output, "Artifact path")->capture_default_str();
    c->add_option("--summary", cluster.summary, "Write the per-level summary table to this file");

    EvaluateCmd evaluate;
    auto* e = app.add_subcommand("evaluate", "NMI of every level against ground truth");
    evaluate.data.attach(*e);
    e->add_option("-a,--artifact", evaluate.artifacts, "Clustering artifact (repeatable)")->required();
    e->add_option("-o,--output", evaluate.output, "Curve file (.csv or .svg)")->capture_default_str();

    ActiveLearnCmd al;
    auto* a = app.add_subcommand("active-learn", "Label prototypes and classify every object");
    al.data.attach(*a);
    a->add_option("-a,--artifact", al.artifact, "Clustering artifact")->required();
    a->add_option("--method", al.method, "Labeling method")->check(CLI::IsMember({"al", "alc", "aln"}))->capture_default_str();
    a->add_option("--oracle", al.oracle_kind, "Label source")->check(CLI::IsMember({"labels", "interactive"}))->capture_default_str();
    auto* budget_opt = a->add_option("--budget", al.budget, "Pick the level whose cluster count is closest to this");
    a->add_option("--level", al.level, "Start level index (0 = fewest clusters)")->excludes(budget_opt);
    a->add_option("--max-queries", al.max_queries, "Stop with a partial report after this many labels");
    a->add_option("--predictions", al.predictions, "Predictions CSV")->capture_default_str();
    a->add_option("--curves", al.curves, "Learning-curve file (.csv or .svg) over all levels");
    a->add_option("--save-confidences", al.confidences_out, "Write an artifact carrying the ALC confidences");
    a->add_option("--repetitions", al.repetitions, "Random-1NN baseline repetitions")->capture_default_str();
    a->add_option("--seed", al.seed, "Seed for the random baseline")->capture_default_str();

    RejectCmd reject;
    auto* r = app.add_subcommand("reject", "Reject curve from ALC confidences");
    reject.data.attach(*r);
    r->add_option("-a,--artifact", reject.artifact, "Artifact (with or without stored confidences)")->required();
    r->add_option("--budget", reject.budget, "Recompute ALC from the level closest to this label budget");
    r->add_option("--thresholds", reject.thresholds, "Explicit thresholds")->delimiter(',');
    r->add_option("--steps", reject.steps, "Evenly spaced thresholds in [0, 1]")->capture_default_str();
    r->add_option("-o,--output", reject.output, "Curve file (.csv or .svg)")->capture_default_str();

    BenchCmd bench;
    auto* b = app.add_subcommand("bench", "Wall-time scaling exponent on random subsets");
    bench.data.attach(*b);
    bench.schedule.attach(*b);
    b->add_option("--algo", bench.algo, "Clusterer")->check(CLI::IsMember({"ms", "fms", "kmeans"}))->capture_default_str();
    b->add_option("--c", bench.c, "FMS complexity parameter")->capture_default_str();
    b->add_option("--sizes", bench.sizes, "Subset sizes (at least 3 distinct)")->delimiter(',')->required();
    b->add_option("--counts", bench.counts, "kMeans cluster counts")->delimiter(',');
    b->add_option("--seed", bench.seed, "Random seed")->capture_default_str();
    b->add_option("-o,--output", bench.output, "Curve file (.csv or .svg)")->capture_default_str();

    SynthCmd synth;
    auto* s = app.add_subcommand("synth", "Write a labeled Gaussian mixture as CSV");
    s->add_option("--n", synth.spec.n, "Objects")->capture_default_str();
    s->add_option("--d", synth.spec.d, "Dimensions")->capture_default_str();
    s->add_option("--components", synth.spec.components, "Mixture components")->capture_default_str();
    s->add_option("--classes", synth.spec.classes, "Classes")->capture_default_str();
    s->add_option("--spread", synth.spec.spread, "Center spread")->capture_default_str();
    s->add_option("--sigma", synth.spec.sigma, "Component standard deviation")->capture_default_str();
    s->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
    s->add_option("-o,--output", synth.output, "CSV path")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        if (err.get_exit_code() != 0) std::cerr << "error: ";
        return app.exit(err);
    }

    try {
        set_worker_count(workers);
        if (*c) return cluster.run("cluster");
        if (*e) return evaluate.run("evaluate");
        if (*a) return al.run("active-learn");
        if (*r) return reject.run("reject");
        if (*b) return bench.run("bench");
        if (*s) return synth.run("synth");
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
