#pragma once

// Dataset ingestion (CSV, raw float32, IDX), clustering artifacts and curve
// output (CSV, SVG).

#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kms/core.hpp"
#include "kms/evaluation.hpp"
#include "kms/labeling.hpp"

namespace kms {

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DatasetFormat { csv, raw_f32, idx };
DatasetFormat parse_dataset_format(const std::string& name);

struct DatasetFile {
    DatasetFormat format = DatasetFormat::csv;
    std::string path;
    /// CSV: label column as 1-based index or header name.
    std::optional<std::string> label_column;
    bool has_header = false;
    /// raw-f32: text file of n whitespace-separated class tokens.
    /// idx: IDX label file (magic 0x00000801).
    std::optional<std::string> labels_path;
    /// Divide every feature vector by its sum.
    bool normalize = false;
};

Dataset load_dataset(const DatasetFile& file);

/// Stream-level readers behind load_dataset. `source` names the input in
/// error messages.
Dataset read_csv(std::istream& in, const std::optional<std::string>& label_column, bool has_header,
                 bool normalize, const std::string& source = "<csv>");
Dataset read_raw_f32(std::istream& in, std::istream* labels, bool normalize, const std::string& source = "<f32>");
Dataset read_idx(std::istream& images, std::istream* labels, bool normalize, const std::string& source = "<idx>");
/// Class tokens of an IDX label vector (magic 0x00000801).
std::vector<std::string> read_idx_labels(std::istream& in, const std::string& source = "<idx labels>");

/// Dense 1..r class ids for arbitrary label tokens. Classes are ordered
/// numerically when every token is an integer, lexicographically otherwise.
struct LabelAlphabet {
    std::vector<std::string> names;
    std::vector<ClassLabel> labels;
    static LabelAlphabet from_tokens(const std::vector<std::string>& tokens);
};

/// Scales every row to sum one. Rows summing to zero are rejected.
void normalize_rows(std::vector<double>& features, std::size_t d);

inline constexpr int kArtifactSchemaVersion = 1;

struct ClusteringArtifact {
    MultiLevelClustering clustering;
    std::size_t num_objects = 0;
    std::optional<ConfidenceMatrix> confidences;
};

std::string artifact_to_json(const ClusteringArtifact& artifact);
ClusteringArtifact artifact_from_json(const std::string& text);
void save_artifact(const ClusteringArtifact& artifact, const std::string& path);
ClusteringArtifact load_artifact(const std::string& path);

enum class CurveFormat { csv, svg };

struct CurveStyle {
    std::string title;
    std::string x_label = "x";
    std::string y_label = "y";
    bool log_x = false;
    bool log_y = false;
};

/// CSV with header `series,x,y`, preceded by `# key=value` lines; an
/// undefined y is written as an empty field.
void write_curves_csv(std::ostream& out, const std::vector<CurvePoint>& points,
                      const std::map<std::string, std::string>& header = {});
std::vector<CurvePoint> read_curves_csv(std::istream& in);
void write_curves_svg(std::ostream& out, const std::vector<CurvePoint>& points, const CurveStyle& style,
                      const std::map<std::string, std::string>& header = {});

/// Writes the points to `path`. Throws std::invalid_argument on empty input.
void emit_curves(const std::vector<CurvePoint>& points, CurveFormat format, const std::string& path,
                 const CurveStyle& style = {}, const std::map<std::string, std::string>& header = {});

/// Shortest decimal spelling that parses back to the same double.
std::string format_double(double v);

}  // namespace kms
