#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kms/io.hpp"
#include "kms/modeseek_fast.hpp"
#include "kms/synthetic.hpp"

using namespace kms;

namespace {

std::string bytes_be32(std::initializer_list<std::uint32_t> words) {
    std::string s;
    for (std::uint32_t w : words) {
        s.push_back(static_cast<char>(w >> 24));
        s.push_back(static_cast<char>(w >> 16));
        s.push_back(static_cast<char>(w >> 8));
        s.push_back(static_cast<char>(w));
    }
    return s;
}

std::string f32_file(std::uint64_t n, std::uint64_t d, const std::vector<float>& values) {
    std::string s;
    for (std::uint64_t v : {n, d})
        for (int b = 0; b < 8; ++b) s.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
    for (float f : values) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        for (int b = 0; b < 4; ++b) s.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
    }
    return s;
}

std::string error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ParseError& e) {
        return e.what();
    }
    return {};
}

ClusteringArtifact sample_artifact() {
    ClusteringArtifact a;
    a.num_objects = 5;
    auto& p = a.clustering.provenance;
    p.algorithm = "fms";
    p.seed = 42;
    p.dataset_checksum = 0x0123456789abcdefULL;
    p.parameters = {{"c", "6"}, {"ratio", "1.21"}};
    ClusteringLevel coarse;
    coarse.k = 4;
    coarse.assignment = {0, 0, 0, 1, 1};
    coarse.modal_objects = {1, 4};
    coarse.clamped_objects = 2;
    ClusteringLevel fine;
    fine.k = 2;
    fine.assignment = {0, 1, 2, 3, 4};
    fine.modal_objects = {0, 1, 2, 3, 4};
    a.clustering.levels = {coarse, fine};
    ConfidenceMatrix q(5, 2);
    q.values = {1.0, 0.0, 0.1, 0.9, 1.0 / 3.0, 2.0 / 3.0, 0.0, 1.0, 0.5, 0.5};
    q.level_tag = 1;
    a.confidences = q;
    return a;
}

void check_same(const ClusteringArtifact& a, const ClusteringArtifact& b) {
    CHECK(a.num_objects == b.num_objects);
    CHECK(a.clustering.provenance.algorithm == b.clustering.provenance.algorithm);
    CHECK(a.clustering.provenance.seed == b.clustering.provenance.seed);
    CHECK(a.clustering.provenance.dataset_checksum == b.clustering.provenance.dataset_checksum);
    CHECK(a.clustering.provenance.parameters == b.clustering.provenance.parameters);
    REQUIRE(a.clustering.levels.size() == b.clustering.levels.size());
    for (std::size_t l = 0; l < a.clustering.levels.size(); ++l) {
        CHECK(a.clustering.levels[l].k == b.clustering.levels[l].k);
        CHECK(a.clustering.levels[l].assignment == b.clustering.levels[l].assignment);
        CHECK(a.clustering.levels[l].modal_objects == b.clustering.levels[l].modal_objects);
        CHECK(a.clustering.levels[l].clamped_objects == b.clustering.levels[l].clamped_objects);
    }
    REQUIRE(a.confidences.has_value() == b.confidences.has_value());
    if (a.confidences) {
        CHECK(a.confidences->rows == b.confidences->rows);
        CHECK(a.confidences->classes == b.confidences->classes);
        CHECK(a.confidences->level_tag == b.confidences->level_tag);
        CHECK(std::memcmp(a.confidences->values.data(), b.confidences->values.data(),
                          a.confidences->values.size() * sizeof(double)) == 0);
    }
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("kms_test_io_" + name);
}

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("csv with a label column") {
    std::istringstream in("1,2,A\n3,4,B\n");
    const Dataset ds = read_csv(in, std::string("3"), false, false);
    CHECK(ds.size() == 2);
    CHECK(ds.dim() == 2);
    CHECK(ds.features() == std::vector<double>{1, 2, 3, 4});
    CHECK(ds.labels() == std::vector<ClassLabel>{1, 2});
    CHECK(ds.class_names() == std::vector<std::string>{"A", "B"});
}

TEST_CASE("csv header, named label column and numeric class order") {
    std::istringstream in("cls, a, b\n10, 0.5, 1\n9, 2, -3e1\n\n10, 1, 1\n");
    const Dataset ds = read_csv(in, std::string("cls"), true, false);
    CHECK(ds.size() == 3);
    CHECK(ds.row(1)[1] == -30.0);
    CHECK(ds.class_names() == std::vector<std::string>{"9", "10"});
    CHECK(ds.labels() == std::vector<ClassLabel>{2, 1, 2});
}

TEST_CASE("csv errors name the line") {
    auto parse = [](const std::string& text, std::optional<std::string> label = std::nullopt, bool header = false) {
        return error_of([&] {
            std::istringstream in(text);
            read_csv(in, label, header, false);
        });
    };
    CHECK(parse("1,2\n3\n").find("line 2") != std::string::npos);
    CHECK(parse("1,2\n3,x\n").find("line 2, column 2") != std::string::npos);
    CHECK(parse("1,nan\n").find("line 1") != std::string::npos);
    CHECK_FALSE(parse("").empty());
    CHECK_FALSE(parse("1,2\n", std::string("5")).empty());
    CHECK_FALSE(parse("a,b\n1,2\n", std::string("c"), true).empty());
    CHECK_FALSE(parse("1,,A\n", std::string("3")).empty());
    CHECK_FALSE(parse("A\nB\n", std::string("1")).empty());
}

TEST_CASE("normalization is explicit") {
    std::istringstream in("1,3\n2,2\n");
    const Dataset ds = read_csv(in, std::nullopt, false, true);
    CHECK(ds.features() == std::vector<double>{0.25, 0.75, 0.5, 0.5});
    std::istringstream zero("0,0\n");
    CHECK_THROWS_AS(read_csv(zero, std::nullopt, false, true), ParseError);
}

TEST_CASE("raw float32") {
    std::istringstream in(f32_file(2, 2, {1.5f, 2.0f, -3.0f, 0.25f}));
    std::istringstream labels("7 3");
    const Dataset ds = read_raw_f32(in, &labels, false);
    CHECK(ds.size() == 2);
    CHECK(ds.dim() == 2);
    CHECK(ds.features() == std::vector<double>{1.5, 2.0, -3.0, 0.25});
    CHECK(ds.class_names() == std::vector<std::string>{"3", "7"});
    CHECK(ds.labels() == std::vector<ClassLabel>{2, 1});

    std::istringstream truncated(f32_file(2, 2, {1, 2, 3}));
    CHECK(error_of([&] { read_raw_f32(truncated, nullptr, false); }).find("byte 28") != std::string::npos);
    std::istringstream trailing(f32_file(1, 1, {1, 2}));
    CHECK(error_of([&] { read_raw_f32(trailing, nullptr, false); }).find("trailing") != std::string::npos);
    std::istringstream short_header(std::string(10, '\0'));
    CHECK_THROWS_AS(read_raw_f32(short_header, nullptr, false), ParseError);
    std::istringstream good(f32_file(2, 1, {1, 2}));
    std::istringstream few("1");
    CHECK_THROWS_AS(read_raw_f32(good, &few, false), ParseError);
    std::istringstream inf_file(f32_file(1, 1, {INFINITY}));
    CHECK_THROWS_AS(read_raw_f32(inf_file, nullptr, false), ParseError);
}

TEST_CASE("idx images and labels") {
    std::istringstream labels(bytes_be32({0x801, 3}) + std::string("\x07\x02\x01", 3));
    CHECK(read_idx_labels(labels) == std::vector<std::string>{"7", "2", "1"});

    std::string images = bytes_be32({0x803, 2, 2, 2});
    images += std::string("\x00\xff\x33\x00\x10\x10\x10\x10", 8);
    std::istringstream img(images);
    std::istringstream lab(bytes_be32({0x801, 2}) + std::string("\x05\x03", 2));
    const Dataset ds = read_idx(img, &lab, false);
    CHECK(ds.size() == 2);
    CHECK(ds.dim() == 4);
    CHECK(ds.row(0)[1] == 1.0);
    CHECK(ds.row(0)[2] == 0.2);
    CHECK(ds.class_names() == std::vector<std::string>{"3", "5"});

    std::istringstream img2(images);
    const Dataset normalized = read_idx(img2, nullptr, true);
    CHECK(normalized.row(1)[0] == doctest::Approx(0.25));

    std::istringstream bad(bytes_be32({0x802, 1}));
    CHECK(error_of([&] { read_idx_labels(bad); }).find("magic") != std::string::npos);
    std::istringstream bad_img(bytes_be32({0x801, 1, 1, 1}));
    CHECK(error_of([&] { read_idx(bad_img, nullptr, false); }).find("byte 0") != std::string::npos);
    std::istringstream cut(bytes_be32({0x803, 2, 2, 2}) + std::string(5, '\x01'));
    CHECK_THROWS_AS(read_idx(cut, nullptr, false), ParseError);
}

TEST_CASE("load_dataset from files") {
    const auto csv = temp_path("a.csv");
    {
        std::ofstream f(csv);
        f << "0,0,x\n1,1,y\n";
    }
    DatasetFile spec;
    spec.path = csv.string();
    spec.label_column = "3";
    const Dataset ds = load_dataset(spec);
    CHECK(ds.size() == 2);
    CHECK(ds.num_classes() == 2);
    spec.path = temp_path("missing.csv").string();
    CHECK_THROWS_AS(load_dataset(spec), ParseError);
    std::filesystem::remove(csv);

    CHECK(parse_dataset_format("raw-f32") == DatasetFormat::raw_f32);
    CHECK(parse_dataset_format("idx") == DatasetFormat::idx);
    CHECK_THROWS_AS(parse_dataset_format("png"), std::invalid_argument);
}

TEST_CASE("artifact round trip is exact") {
    const auto a = sample_artifact();
    const auto b = artifact_from_json(artifact_to_json(a));
    check_same(a, b);
    CHECK(artifact_to_json(b) == artifact_to_json(a));

    RandomSource data_rng(1);
    const Dataset ds = uniform_points(300, 3, data_rng);
    RandomSource rng(42);
    ClusteringArtifact real;
    real.clustering = fms_cluster(ds, build_schedule(300), 6, rng);
    real.num_objects = 300;
    const auto path = temp_path("artifact.json");
    save_artifact(real, path.string());
    check_same(real, load_artifact(path.string()));
    std::filesystem::remove(path);
}

TEST_CASE("artifact matches the golden file") {
    const std::string golden = std::string(KMS_GOLDEN_DIR) + "/artifact_v1.json";
    if (std::getenv("KMS_UPDATE_GOLDEN")) {
        std::ofstream out(golden, std::ios::binary);
        out << artifact_to_json(sample_artifact());
    }
    std::ifstream f(golden, std::ios::binary);
    REQUIRE(f);
    std::ostringstream ss;
    ss << f.rdbuf();
    CHECK(artifact_to_json(sample_artifact()) == ss.str());
    check_same(sample_artifact(), artifact_from_json(ss.str()));
}

TEST_CASE("artifact errors") {
    const std::string text = artifact_to_json(sample_artifact());
    CHECK_THROWS_AS(artifact_from_json(text.substr(0, text.size() / 2)), ParseError);
    CHECK_THROWS_AS(artifact_from_json(""), ParseError);

    std::string future = text;
    future.replace(future.find("\"schema_version\": 1"), 19, "\"schema_version\": 2");
    const std::string msg = error_of([&] { artifact_from_json(future); });
    CHECK(msg.find("schema version 2") != std::string::npos);
    CHECK(msg.find("regenerate") != std::string::npos);

    std::string broken = text;
    broken.replace(broken.find("\"num_objects\": 5"), 16, "\"num_objects\": 6");
    CHECK_THROWS_AS(artifact_from_json(broken), ParseError);
    CHECK_THROWS_AS(load_artifact(temp_path("nope.json").string()), ParseError);
}

TEST_CASE("curve csv round trip") {
    const std::vector<CurvePoint> pts = {
        {1, 0.5, "ms"}, {10, std::nullopt, "ms"}, {3.3333333333333335, 1e-300, "fms-6"}, {0.1, 0.30000000000000004, "kmeans"}};
    std::stringstream ss;
    write_curves_csv(ss, pts, {{"seed", "3"}, {"command", "evaluate"}});
    const std::string text = ss.str();
    CHECK(text.rfind("# command=evaluate\n# seed=3\nseries,x,y\n", 0) == 0);
    CHECK(text.find("ms,10,\n") != std::string::npos);
    const auto back = read_curves_csv(ss);
    REQUIRE(back.size() == pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(back[i].series == pts[i].series);
        CHECK(back[i].x == pts[i].x);
        CHECK(back[i].y == pts[i].y);
    }
    std::istringstream bad("series,x,y\nms,abc,1\n");
    CHECK_THROWS_AS(read_curves_csv(bad), ParseError);
    std::istringstream no_header("ms,1,1\n");
    CHECK_THROWS_AS(read_curves_csv(no_header), ParseError);
}

TEST_CASE("curve emission") {
    const auto csv = temp_path("curve.csv");
    const auto svg = temp_path("curve.svg");
    CHECK_THROWS_AS(emit_curves({}, CurveFormat::csv, csv.string()), std::invalid_argument);

    emit_curves({{5, 0.25, "only"}}, CurveFormat::csv, csv.string());
    std::ifstream f(csv);
    const auto one = read_curves_csv(f);
    CHECK(one.size() == 1);

    std::vector<CurvePoint> three;
    for (const char* s : {"ms", "fms-6", "kmeans"})
        for (double x : {10.0, 100.0, 1000.0}) three.push_back({x, x / 2000.0, s});
    CurveStyle style;
    style.title = "NMI <vs> clusters";
    style.log_x = true;
    emit_curves(three, CurveFormat::svg, svg.string(), style, {{"seed", "1"}});
    std::ifstream g(svg);
    std::ostringstream ss;
    ss << g.rdbuf();
    const std::string text = ss.str();
    CHECK(text.find("<svg") != std::string::npos);
    CHECK(text.find("&lt;vs&gt;") != std::string::npos);
    CHECK(text.find("<!-- seed=1 -->") != std::string::npos);
    std::size_t groups = 0, circles = 0;
    for (auto pos = text.find("class=\"series\""); pos != std::string::npos; pos = text.find("class=\"series\"", pos + 1)) ++groups;
    for (auto pos = text.find("<circle"); pos != std::string::npos; pos = text.find("<circle", pos + 1)) ++circles;
    CHECK(groups == 3);
    CHECK(circles == 9);

    std::ostringstream single;
    write_curves_svg(single, {{5, 0.25, "only"}}, {});
    const std::string s1 = single.str();
    CHECK(s1.find("<circle") != std::string::npos);
    CHECK(s1.find("<polyline") == std::string::npos);
    std::filesystem::remove(csv);
    std::filesystem::remove(svg);
}

TEST_CASE("format_double round trips") {
    RandomSource rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double v = (rng.uniform_real() - 0.5) * std::pow(10.0, static_cast<double>(rng.uniform_index(40)) - 20.0);
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("label alphabet") {
    const auto a = LabelAlphabet::from_tokens({"b", "a", "b", "10", "9"});
    CHECK(a.names == std::vector<std::string>{"10", "9", "a", "b"});
    CHECK(a.labels == std::vector<ClassLabel>{4, 3, 4, 1, 2});
    const auto n = LabelAlphabet::from_tokens({"10", "-1", "9"});
    CHECK(n.names == std::vector<std::string>{"-1", "9", "10"});
}

TEST_SUITE_END();
