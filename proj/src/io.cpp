#include "kms/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace kms {

using nlohmann::json;

DatasetFormat parse_dataset_format(const std::string& name) {
    if (name == "csv") return DatasetFormat::csv;
    if (name == "raw-f32" || name == "f32") return DatasetFormat::raw_f32;
    if (name == "idx") return DatasetFormat::idx;
    throw std::invalid_argument("unknown dataset format '" + name + "' (expected csv, raw-f32, idx)");
}

std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) throw std::runtime_error("cannot format double");
    return std::string(buf.data(), ptr);
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const char* first = s.data();
    if (*first == '+') ++first;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

bool is_integer_token(const std::string& s) {
    if (s.empty()) return false;
    std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i == s.size()) return false;
    return std::all_of(s.begin() + static_cast<std::ptrdiff_t>(i), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

Dataset make_dataset(std::size_t n, std::size_t d, std::vector<double> features,
                     const std::vector<std::string>* tokens, bool normalize) {
    if (normalize) normalize_rows(features, d);
    if (!tokens) return Dataset(n, d, std::move(features));
    auto alphabet = LabelAlphabet::from_tokens(*tokens);
    return Dataset(n, d, std::move(features), std::move(alphabet.labels), std::move(alphabet.names));
}

std::uint64_t read_u64_le(std::istream& in, const std::string& source, std::size_t offset) {
    std::array<unsigned char, 8> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 8))
        throw ParseError(source + ": truncated header at byte " + std::to_string(offset));
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
    return v;
}

std::uint32_t read_u32_be(std::istream& in, const std::string& source, std::size_t offset) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4))
        throw ParseError(source + ": truncated header at byte " + std::to_string(offset));
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

void expect_end(std::istream& in, const std::string& source, std::size_t offset) {
    if (in.peek() != std::char_traits<char>::eof())
        throw ParseError(source + ": unexpected trailing data at byte " + std::to_string(offset));
}

std::vector<std::string> read_label_tokens(std::istream& in) {
    std::vector<std::string> tokens;
    std::string t;
    while (in >> t) tokens.push_back(t);
    return tokens;
}

std::ifstream open_binary(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open '" + path + "'");
    return f;
}

}  // namespace

LabelAlphabet LabelAlphabet::from_tokens(const std::vector<std::string>& tokens) {
    std::vector<std::string> names(tokens.begin(), tokens.end());
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    if (std::all_of(names.begin(), names.end(), is_integer_token)) {
        std::sort(names.begin(), names.end(),
                  [](const std::string& a, const std::string& b) { return std::stoll(a) < std::stoll(b); });
    }
    std::map<std::string, ClassLabel> index;
    for (std::size_t c = 0; c < names.size(); ++c) index[names[c]] = static_cast<ClassLabel>(c + 1);
    LabelAlphabet a;
    a.names = std::move(names);
    a.labels.reserve(tokens.size());
    for (const auto& t : tokens) a.labels.push_back(index.at(t));
    return a;
}

void normalize_rows(std::vector<double>& features, std::size_t d) {
    for (std::size_t i = 0; i * d < features.size(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < d; ++j) sum += features[i * d + j];
        if (sum == 0.0) throw ParseError("cannot normalize object " + std::to_string(i) + ": features sum to zero");
        for (std::size_t j = 0; j < d; ++j) features[i * d + j] /= sum;
    }
}

Dataset read_csv(std::istream& in, const std::optional<std::string>& label_column, bool has_header,
                 bool normalize, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> label_idx;
    std::vector<std::string> header;

    if (has_header) {
        while (std::getline(in, line)) {
            ++line_no;
            if (!trim(line).empty()) break;
        }
        if (trim(line).empty()) throw ParseError(source + ": missing header line");
        header = split_csv(line);
    }
    if (label_column) {
        if (is_integer_token(*label_column)) {
            const long long idx = std::stoll(*label_column);
            if (idx < 1) throw ParseError(source + ": label column index must be >= 1");
            label_idx = static_cast<std::size_t>(idx - 1);
        } else {
            const auto it = std::find(header.begin(), header.end(), *label_column);
            if (it == header.end()) throw ParseError(source + ": no header column named '" + *label_column + "'");
            label_idx = static_cast<std::size_t>(it - header.begin());
        }
    }

    std::vector<double> features;
    std::vector<std::string> tokens;
    std::size_t columns = has_header ? header.size() : 0;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv(line);
        if (columns == 0) columns = cells.size();
        if (cells.size() != columns)
            throw ParseError(source + ": line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                             " columns, expected " + std::to_string(columns));
        if (label_idx && *label_idx >= columns)
            throw ParseError(source + ": label column " + std::to_string(*label_idx + 1) + " beyond " +
                             std::to_string(columns) + " columns");
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (label_idx && c == *label_idx) {
                if (cells[c].empty())
                    throw ParseError(source + ": line " + std::to_string(line_no) + ": empty label");
                tokens.push_back(cells[c]);
                continue;
            }
            const auto v = parse_number(cells[c]);
            if (!v || !std::isfinite(*v))
                throw ParseError(source + ": line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                                 ": non-numeric value '" + cells[c] + "'");
            features.push_back(*v);
        }
        ++n;
    }
    if (n == 0) throw ParseError(source + ": no data rows");
    const std::size_t d = columns - (label_idx ? 1 : 0);
    if (d == 0) throw ParseError(source + ": no feature columns");
    return make_dataset(n, d, std::move(features), label_idx ? &tokens : nullptr, normalize);
}

Dataset read_raw_f32(std::istream& in, std::istream* labels, bool normalize, const std::string& source) {
    const std::uint64_t n = read_u64_le(in, source, 0);
    const std::uint64_t d = read_u64_le(in, source, 8);
    if (n == 0 || d == 0) throw ParseError(source + ": header declares n=" + std::to_string(n) + ", d=" + std::to_string(d));
    if (n * d > (std::uint64_t{1} << 36)) throw ParseError(source + ": header declares an implausible size");
    std::vector<double> features(n * d);
    std::array<unsigned char, 4> b{};
    for (std::uint64_t i = 0; i < n * d; ++i) {
        if (!in.read(reinterpret_cast<char*>(b.data()), 4))
            throw ParseError(source + ": truncated data at byte " + std::to_string(16 + 4 * i) + " (declared n=" +
                             std::to_string(n) + ", d=" + std::to_string(d) + ")");
        const std::uint32_t bits = std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
                                   (std::uint32_t{b[3]} << 24);
        const auto f = std::bit_cast<float>(bits);
        if (!std::isfinite(f)) throw ParseError(source + ": non-finite value at byte " + std::to_string(16 + 4 * i));
        features[i] = static_cast<double>(f);
    }
    expect_end(in, source, 16 + 4 * n * d);
    if (!labels) return make_dataset(n, d, std::move(features), nullptr, normalize);
    const auto tokens = read_label_tokens(*labels);
    if (tokens.size() != n)
        throw ParseError(source + ": label file holds " + std::to_string(tokens.size()) + " labels, expected " +
                         std::to_string(n));
    return make_dataset(n, d, std::move(features), &tokens, normalize);
}

std::vector<std::string> read_idx_labels(std::istream& in, const std::string& source) {
    const std::uint32_t magic = read_u32_be(in, source, 0);
    if (magic != 0x00000801)
        throw ParseError(source + ": bad magic number at byte 0 (expected 0x00000801 for labels)");
    const std::uint32_t n = read_u32_be(in, source, 4);
    std::vector<std::string> tokens;
    tokens.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const int c = in.get();
        if (c == std::char_traits<char>::eof())
            throw ParseError(source + ": truncated label data at byte " + std::to_string(8 + i));
        tokens.push_back(std::to_string(c));
    }
    expect_end(in, source, 8 + n);
    return tokens;
}

Dataset read_idx(std::istream& images, std::istream* labels, bool normalize, const std::string& source) {
    const std::uint32_t magic = read_u32_be(images, source, 0);
    if (magic != 0x00000803)
        throw ParseError(source + ": bad magic number at byte 0 (expected 0x00000803 for images)");
    const std::uint32_t n = read_u32_be(images, source, 4);
    const std::uint32_t rows = read_u32_be(images, source, 8);
    const std::uint32_t cols = read_u32_be(images, source, 12);
    const std::size_t d = static_cast<std::size_t>(rows) * cols;
    if (n == 0 || d == 0) throw ParseError(source + ": empty image tensor");
    std::vector<unsigned char> raw(static_cast<std::size_t>(n) * d);
    if (!images.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
        throw ParseError(source + ": truncated image data at byte " + std::to_string(16 + images.gcount()));
    expect_end(images, source, 16 + raw.size());
    std::vector<double> features(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) features[i] = raw[i] / 255.0;
    if (!labels) return make_dataset(n, d, std::move(features), nullptr, normalize);
    const auto tokens = read_idx_labels(*labels, source + " labels");
    if (tokens.size() != n)
        throw ParseError(source + ": label file holds " + std::to_string(tokens.size()) + " labels, expected " +
                         std::to_string(n));
    return make_dataset(n, d, std::move(features), &tokens, normalize);
}

Dataset load_dataset(const DatasetFile& file) {
    switch (file.format) {
        case DatasetFormat::csv: {
            std::ifstream f(file.path);
            if (!f) throw ParseError("cannot open '" + file.path + "'");
            return read_csv(f, file.label_column, file.has_header, file.normalize, file.path);
        }
        case DatasetFormat::raw_f32: {
            auto f = open_binary(file.path);
            std::optional<std::ifstream> lf;
            if (file.labels_path) {
                lf.emplace(*file.labels_path);
                if (!*lf) throw ParseError("cannot open '" + *file.labels_path + "'");
            }
            return read_raw_f32(f, lf ? &*lf : nullptr, file.normalize, file.path);
        }
        case DatasetFormat::idx: {
            auto f = open_binary(file.path);
            std::optional<std::ifstream> lf;
            if (file.labels_path) lf.emplace(open_binary(*file.labels_path));
            return read_idx(f, lf ? &*lf : nullptr, file.normalize, file.path);
        }
    }
    throw std::invalid_argument("unknown dataset format");
}

// ---------------------------------------------------------------------------
// Artifacts

namespace {

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

std::uint64_t parse_hex64(const std::string& s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw ParseError("artifact: malformed checksum '" + s + "'");
    return v;
}

}  // namespace

std::string artifact_to_json(const ClusteringArtifact& artifact) {
    json j;
    j["format"] = "kms-clustering";
    j["schema_version"] = kArtifactSchemaVersion;
    j["num_objects"] = artifact.num_objects;
    const auto& p = artifact.clustering.provenance;
    j["provenance"] = {{"algorithm", p.algorithm},
                       {"seed", p.seed},
                       {"dataset_checksum", hex64(p.dataset_checksum)},
                       {"parameters", p.parameters}};
    json levels = json::array();
    for (const auto& level : artifact.clustering.levels) {
        levels.push_back({{"k", level.k},
                          {"num_clusters", level.num_clusters()},
                          {"clamped_objects", level.clamped_objects},
                          {"prototypes", level.modal_objects},
                          {"assignment", level.assignment}});
    }
    j["levels"] = std::move(levels);
    if (artifact.confidences) {
        const auto& q = *artifact.confidences;
        j["confidences"] = {{"level_tag", q.level_tag}, {"rows", q.rows}, {"classes", q.classes}, {"values", q.values}};
    }
    return j.dump(1) + "\n";
}

ClusteringArtifact artifact_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("artifact: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "kms-clustering") throw ParseError("artifact: not a clustering artifact");
        const int version = j.at("schema_version").get<int>();
        if (version != kArtifactSchemaVersion)
            throw ParseError("artifact: schema version " + std::to_string(version) + " is not supported (this build reads " +
                             std::to_string(kArtifactSchemaVersion) + "); regenerate it with `kms cluster`");
        ClusteringArtifact a;
        a.num_objects = j.at("num_objects").get<std::size_t>();
        const auto& p = j.at("provenance");
        auto& prov = a.clustering.provenance;
        prov.algorithm = p.at("algorithm").get<std::string>();
        prov.seed = p.at("seed").get<std::uint64_t>();
        prov.dataset_checksum = parse_hex64(p.at("dataset_checksum").get<std::string>());
        prov.parameters = p.at("parameters").get<std::map<std::string, std::string>>();
        for (const auto& lj : j.at("levels")) {
            ClusteringLevel level;
            level.k = lj.at("k").get<std::size_t>();
            level.clamped_objects = lj.at("clamped_objects").get<std::size_t>();
            level.modal_objects = lj.at("prototypes").get<std::vector<ObjectId>>();
            level.assignment = lj.at("assignment").get<std::vector<ClusterIndex>>();
            if (lj.at("num_clusters").get<std::size_t>() != level.num_clusters())
                throw ParseError("artifact: level num_clusters does not match its prototype list");
            if (level.size() != a.num_objects)
                throw ParseError("artifact: level assignment length does not match num_objects");
            try {
                level.validate();
            } catch (const InvariantError& e) {
                throw ParseError(std::string("artifact: invalid level: ") + e.what());
            }
            a.clustering.levels.push_back(std::move(level));
        }
        if (j.contains("confidences")) {
            const auto& qj = j.at("confidences");
            ConfidenceMatrix q(qj.at("rows").get<std::size_t>(), qj.at("classes").get<std::size_t>());
            q.level_tag = qj.at("level_tag").get<std::size_t>();
            q.values = qj.at("values").get<std::vector<double>>();
            if (q.values.size() != q.rows * q.classes) throw ParseError("artifact: confidence matrix shape mismatch");
            a.confidences = std::move(q);
        }
        return a;
    } catch (const json::exception& e) {
        throw ParseError(std::string("artifact: ") + e.what());
    }
}

void save_artifact(const ClusteringArtifact& artifact, const std::string& path) {
    const std::string text = artifact_to_json(artifact);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << text;
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

ClusteringArtifact load_artifact(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return artifact_from_json(ss.str());
}

// ---------------------------------------------------------------------------
// Curves

void write_curves_csv(std::ostream& out, const std::vector<CurvePoint>& points,
                      const std::map<std::string, std::string>& header) {
    for (const auto& [key, value] : header) out << "# " << key << '=' << value << '\n';
    out << "series,x,y\n";
    for (const auto& p : points) {
        if (p.series.find(',') != std::string::npos) throw std::invalid_argument("series name contains a comma");
        out << p.series << ',' << format_double(p.x) << ',' << (p.y ? format_double(*p.y) : "") << '\n';
    }
}

std::vector<CurvePoint> read_curves_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::vector<CurvePoint> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (trim(line) != "series,x,y") throw ParseError("curve csv: line " + std::to_string(line_no) + ": expected header 'series,x,y'");
            header_seen = true;
            continue;
        }
        const auto cells = split_csv(line);
        if (cells.size() != 3) throw ParseError("curve csv: line " + std::to_string(line_no) + ": expected 3 fields");
        CurvePoint p;
        p.series = cells[0];
        const auto x = parse_number(cells[1]);
        if (!x) throw ParseError("curve csv: line " + std::to_string(line_no) + ": bad x value");
        p.x = *x;
        if (!cells[2].empty()) {
            const auto y = parse_number(cells[2]);
            if (!y) throw ParseError("curve csv: line " + std::to_string(line_no) + ": bad y value");
            p.y = *y;
        }
        out.push_back(std::move(p));
    }
    if (!header_seen) throw ParseError("curve csv: missing header");
    return out;
}

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string tick_label(double v) {
    std::ostringstream os;
    os << std::setprecision(4) << v;
    return os.str();
}

}  // namespace

void write_curves_svg(std::ostream& out, const std::vector<CurvePoint>& points, const CurveStyle& style,
                      const std::map<std::string, std::string>& header) {
    constexpr double width = 640, height = 420, left = 70, right = 150, top = 40, bottom = 55;
    auto tx = [&](double v) { return style.log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return style.log_y ? std::log10(v) : v; };
    auto usable = [&](const CurvePoint& p) {
        return p.y && std::isfinite(p.x) && std::isfinite(*p.y) && (!style.log_x || p.x > 0) && (!style.log_y || *p.y > 0);
    };

    std::vector<std::string> series;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& p : points) {
        if (std::find(series.begin(), series.end(), p.series) == series.end()) series.push_back(p.series);
        if (!usable(p)) continue;
        x0 = std::min(x0, tx(p.x));
        x1 = std::max(x1, tx(p.x));
        y0 = std::min(y0, ty(*p.y));
        y1 = std::max(y1, ty(*p.y));
    }
    if (!(x0 <= x1)) x0 = 0, x1 = 1;
    if (!(y0 <= y1)) y0 = 0, y1 = 1;
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double pw = width - left - right, ph = height - top - bottom;
    auto px = [&](double v) { return left + (tx(v) - x0) / (x1 - x0) * pw; };
    auto py = [&](double v) { return top + ph - (ty(v) - y0) / (y1 - y0) * ph; };

    static constexpr std::array<const char*, 8> colors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    for (const auto& [key, value] : header) out << "<!-- " << xml_escape(key) << '=' << xml_escape(value) << " -->\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(style.title)
        << "</text>\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    const auto inv_x = [&](double t) { return style.log_x ? std::pow(10.0, t) : t; };
    const auto inv_y = [&](double t) { return style.log_y ? std::pow(10.0, t) : t; };
    for (int i = 0; i <= 4; ++i) {
        const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
        const double sx = left + pw * i / 4.0, sy = top + ph - ph * i / 4.0;
        out << "<text x=\"" << sx << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
            << tick_label(inv_x(fx)) << "</text>\n";
        out << "<text x=\"" << left - 6 << "\" y=\"" << sy + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
            << tick_label(inv_y(fy)) << "</text>\n";
    }
    out << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\" font-size=\"13\">"
        << xml_escape(style.x_label) << (style.log_x ? " (log)" : "") << "</text>\n";
    out << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
        << top + ph / 2 << ")\">" << xml_escape(style.y_label) << (style.log_y ? " (log)" : "") << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = colors[s % colors.size()];
        std::vector<std::pair<double, double>> xy;
        for (const auto& p : points)
            if (p.series == series[s] && usable(p)) xy.emplace_back(px(p.x), py(*p.y));
        out << "<g class=\"series\" data-name=\"" << xml_escape(series[s]) << "\">\n";
        if (xy.size() > 1) {
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (const auto& [a, b] : xy) out << a << ',' << b << ' ';
            out << "\"/>\n";
        }
        for (const auto& [a, b] : xy) out << "<circle cx=\"" << a << "\" cy=\"" << b << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
        out << "</g>\n";
        const double ly = top + 14 + 18.0 * static_cast<double>(s);
        out << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 30 << "\" y2=\"" << ly
            << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << left + pw + 35 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">" << xml_escape(series[s])
            << "</text>\n";
    }
    out << "</svg>\n";
}

void emit_curves(const std::vector<CurvePoint>& points, CurveFormat format, const std::string& path,
                 const CurveStyle& style, const std::map<std::string, std::string>& header) {
    if (points.empty()) throw std::invalid_argument("no curve points to emit");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    if (format == CurveFormat::csv) {
        write_curves_csv(f, points, header);
    } else {
        write_curves_svg(f, points, style, header);
    }
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace kms
