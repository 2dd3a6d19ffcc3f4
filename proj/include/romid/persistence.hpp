#pragma once

// On-disk formats.
//
// Matrix file: 8-byte magic "OMDCMAT1", u64 rows, u64 cols (little-endian),
// then rows*cols float64 little-endian values in column-major order.
//
// SnapshotSet directory: S.mat, U.mat, meta.json.
// RomModel directory:    L.mat, M.mat, P.mat, model.json.

#include "romid/matstore.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace romid::persistence {

namespace fs = std::filesystem;

inline constexpr std::size_t kMatrixHeaderBytes = 24;

void save_matrix(const fs::path& path, const Eigen::Ref<const Matrix>& m);
Matrix load_matrix(const fs::path& path);

void save_snapshot_set(const fs::path& dir, const matstore::SnapshotSet& set);
matstore::SnapshotSet load_snapshot_set(const fs::path& dir);

/// `extra` is merged into model.json (e.g. a solver report).
void save_model(const fs::path& dir, const matstore::RomModel& model,
                const nlohmann::json& extra = nlohmann::json::object());
matstore::RomModel load_model(const fs::path& dir);
nlohmann::json load_model_metadata(const fs::path& dir);

nlohmann::json to_json(const std::vector<matstore::FieldSpan>& layout);
nlohmann::json to_json(const std::optional<matstore::NormSpec>& spec);
std::vector<matstore::FieldSpan> layout_from_json(const nlohmann::json& j);
std::optional<matstore::NormSpec> norm_from_json(const nlohmann::json& j);

/// Header row plus numeric records; `values` has one row per record.
struct CsvTable {
    std::vector<std::string> header;
    Matrix values;
};

void write_csv(const fs::path& path, const CsvTable& table);
CsvTable read_csv(const fs::path& path);

/// Writes to a temporary sibling and renames it into place.
void write_text_atomic(const fs::path& path, const std::string& content);

}  // namespace romid::persistence
