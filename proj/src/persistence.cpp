#include "romid/persistence.hpp"

#include "romid/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace romid::persistence {

using matstore::FieldSpan;
using matstore::NormSpec;

namespace {

constexpr std::array<char, 8> kMagic = {'O', 'M', 'D', 'C', 'M', 'A', 'T', '1'};

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        std::array<unsigned char, sizeof(T)> bytes;
        std::memcpy(bytes.data(), &v, sizeof(T));
        std::reverse(bytes.begin(), bytes.end());
        std::memcpy(&v, bytes.data(), sizeof(T));
    }
    return v;
}

template <typename T>
void put(std::ostream& os, T v) {
    v = to_little(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const fs::path& path) {
    T v;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
        throw FormatError(path.string() + ": truncated header");
    }
    return to_little(v);
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace

void save_matrix(const fs::path& path, const Eigen::Ref<const Matrix>& m) {
    require_finite(m, "matrix to save");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out.write(kMagic.data(), kMagic.size());
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    if constexpr (std::endian::native == std::endian::little) {
        for (Index j = 0; j < m.cols(); ++j) {
            out.write(reinterpret_cast<const char*>(m.col(j).data()),
                      static_cast<std::streamsize>(sizeof(double) * m.rows()));
        }
    } else {
        for (Index j = 0; j < m.cols(); ++j) {
            for (Index i = 0; i < m.rows(); ++i) put<double>(out, m(i, j));
        }
    }
    if (!out) throw FormatError("write failed: " + path.string());
}

Matrix load_matrix(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
        throw FormatError(path.string() + ": bad magic");
    }
    const auto rows = get<std::uint64_t>(in, path);
    const auto cols = get<std::uint64_t>(in, path);
    const auto size = fs::file_size(path);
    constexpr auto limit = static_cast<std::uint64_t>(std::numeric_limits<Index>::max()) / sizeof(double);
    if (rows > limit || cols > limit || (cols != 0 && rows > limit / cols) ||
        size != kMatrixHeaderBytes + rows * cols * sizeof(double)) {
        throw FormatError(path.string() + ": payload length does not match " + std::to_string(rows) + "×" +
                          std::to_string(cols));
    }
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(rows * cols * sizeof(double)));
        if (!in) throw FormatError(path.string() + ": truncated payload");
    } else {
        for (Index j = 0; j < m.cols(); ++j) {
            for (Index i = 0; i < m.rows(); ++i) m(i, j) = get<double>(in, path);
        }
    }
    require_finite(m, path.string());
    return m;
}

nlohmann::json to_json(const std::vector<FieldSpan>& layout) {
    auto arr = nlohmann::json::array();
    for (const auto& f : layout) {
        arr.push_back({{"name", f.name}, {"begin", f.begin}, {"count", f.count}});
    }
    return arr;
}

nlohmann::json to_json(const std::optional<NormSpec>& spec) {
    if (!spec) return nullptr;
    auto arr = nlohmann::json::array();
    for (const auto& s : spec->fields) arr.push_back({{"shift", s.shift}, {"scale", s.scale}});
    return arr;
}

std::vector<FieldSpan> layout_from_json(const nlohmann::json& j) {
    std::vector<FieldSpan> layout;
    if (j.is_null()) return layout;
    try {
        for (const auto& f : j) {
            layout.push_back({f.at("name").get<std::string>(), f.at("begin").get<Index>(),
                              f.at("count").get<Index>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("field_layout: ") + e.what());
    }
    return layout;
}

std::optional<NormSpec> norm_from_json(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    NormSpec spec;
    try {
        for (const auto& s : j) spec.fields.push_back({s.at("shift").get<double>(), s.at("scale").get<double>()});
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("norm_spec: ") + e.what());
    }
    return spec;
}

void save_snapshot_set(const fs::path& dir, const matstore::SnapshotSet& set) {
    fs::create_directories(dir);
    save_matrix(dir / "S.mat", set.states());
    save_matrix(dir / "U.mat", set.inputs());
    nlohmann::json meta = {{"dt_sample", set.dt_sample()},
                           {"field_layout", to_json(set.layout())},
                           {"norm_spec", to_json(set.norm_spec())}};
    write_text_atomic(dir / "meta.json", meta.dump(2) + "\n");
}

matstore::SnapshotSet load_snapshot_set(const fs::path& dir) {
    const auto meta = read_json(dir / "meta.json");
    double dt = 0.0;
    try {
        dt = meta.at("dt_sample").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError((dir / "meta.json").string() + ": " + e.what());
    }
    return matstore::SnapshotSet(load_matrix(dir / "S.mat"), load_matrix(dir / "U.mat"), dt,
                                 layout_from_json(meta.value("field_layout", nlohmann::json())),
                                 norm_from_json(meta.value("norm_spec", nlohmann::json())));
}

void save_model(const fs::path& dir, const matstore::RomModel& model, const nlohmann::json& extra) {
    fs::create_directories(dir);
    save_matrix(dir / "L.mat", model.modes());
    save_matrix(dir / "M.mat", model.system());
    save_matrix(dir / "P.mat", model.input());
    nlohmann::json meta = extra.is_object() ? extra : nlohmann::json::object();
    meta["method"] = std::string(to_string(model.method()));
    meta["r"] = model.rank();
    meta["n"] = model.state_dim();
    meta["p"] = model.input_dim();
    meta["dt_sample"] = model.dt_sample();
    meta["field_layout"] = to_json(model.layout());
    meta["norm_spec"] = to_json(model.norm_spec());
    write_text_atomic(dir / "model.json", meta.dump(2) + "\n");
}

nlohmann::json load_model_metadata(const fs::path& dir) {
    return read_json(dir / "model.json");
}

matstore::RomModel load_model(const fs::path& dir) {
    const auto meta = load_model_metadata(dir);
    try {
        return matstore::RomModel(load_matrix(dir / "L.mat"), load_matrix(dir / "M.mat"),
                                  load_matrix(dir / "P.mat"),
                                  matstore::method_from_string(meta.at("method").get<std::string>()),
                                  meta.at("dt_sample").get<double>(),
                                  norm_from_json(meta.value("norm_spec", nlohmann::json())),
                                  layout_from_json(meta.value("field_layout", nlohmann::json())));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError((dir / "model.json").string() + ": " + e.what());
    }
}

void write_csv(const fs::path& path, const CsvTable& table) {
    if (!table.header.empty() && static_cast<Index>(table.header.size()) != table.values.cols()) {
        throw DimensionMismatch("CSV header has " + std::to_string(table.header.size()) + " names for " +
                                std::to_string(table.values.cols()) + " columns");
    }
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(17);
    for (std::size_t j = 0; j < table.header.size(); ++j) os << (j ? "," : "") << table.header[j];
    os << '\n';
    for (Index i = 0; i < table.values.rows(); ++i) {
        for (Index j = 0; j < table.values.cols(); ++j) os << (j ? "," : "") << table.values(i, j);
        os << '\n';
    }
    write_text_atomic(path, os.str());
}

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header row");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) table.header.push_back(cell);
    }
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        ss.imbue(std::locale::classic());
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            std::istringstream cs(cell);
            cs.imbue(std::locale::classic());
            double v = 0.0;
            if (!(cs >> v)) {
                throw FormatError(path.string() + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
            }
            row.push_back(v);
        }
        if (row.size() != table.header.size()) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(table.header.size()) + " fields");
        }
        rows.push_back(std::move(row));
    }
    table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.header.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            table.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
        }
    }
    require_finite(table.values, path.string());
    return table;
}

void write_text_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw FormatError("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

}  // namespace romid::persistence
