#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "covkit/metrics.hpp"
#include "covkit/models.hpp"

namespace covkit::io {

using nlohmann::json;

// Datasets. Every file has a header row; fields are comma separated with a
// decimal point and no quoting.

/// Covariate columns (any names) followed by a `group` column with 1..3.
PoData read_po_csv(const std::filesystem::path& path);
void write_po_csv(const std::filesystem::path& path, const PoData& data);

/// Columns team1,team2,score1,score2,home. Teams are labels; indices follow
/// first appearance, so the first team listed is the reference (strength 1).
BasketballData read_basketball_csv(const std::filesystem::path& path);
void write_basketball_csv(const std::filesystem::path& path,
                          const BasketballData& data);

/// Single column `x`.
std::vector<double> read_normal_csv(const std::filesystem::path& path);
void write_normal_csv(const std::filesystem::path& path,
                      const std::vector<double>& data);

// JSON. Matrices are {"n": rows, "m": cols, "values": [row-major]}.

json to_json(const Vector& v);
json to_json(const Matrix& m);
Vector vector_from_json(const json& j);
Matrix matrix_from_json(const json& j);

// Benchmark table: method,F,corr_F,G,time_seconds,evaluations

void write_report_csv(const std::filesystem::path& path,
                      const std::vector<ComparisonReport>& rows);
std::vector<ComparisonReport> read_report_csv(const std::filesystem::path& path);
std::string format_report_csv(const std::vector<ComparisonReport>& rows);
std::vector<ComparisonReport> parse_report_csv(const std::string& text);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace covkit::io
