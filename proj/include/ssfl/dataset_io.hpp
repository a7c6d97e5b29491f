#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "ssfl/types.hpp"

namespace ssfl {

// Per-class semantic vectors keyed by dataset class id.
struct SemanticTable {
    Matrix vectors;               // one row per class
    std::vector<int> class_ids;   // row -> class id

    int dim() const { return static_cast<int>(vectors.cols()); }

    std::optional<Vector> lookup(int class_id) const {
        for (size_t i = 0; i < class_ids.size(); ++i)
            if (class_ids[i] == class_id) return vectors.row(static_cast<Eigen::Index>(i)).transpose();
        return std::nullopt;
    }
};

struct EmbeddingDataset {
    Matrix rows;                           // n x d
    std::vector<int> labels;               // dense in [0, num_classes)
    std::vector<std::string> class_names;  // defaults to "class_<id>"
    std::optional<SemanticTable> semantics;

    int num_classes() const { return static_cast<int>(class_names.size()); }
    int dim() const { return static_cast<int>(rows.cols()); }
    int size() const { return static_cast<int>(rows.rows()); }
};

enum class FileFormat { csv, packed_binary };

namespace io_detail {

constexpr char kMagic[8] = {'S', 'S', 'F', 'L', 'E', 'M', 'B', '\0'};
constexpr std::uint32_t kVersion = 1;

inline double parse_double(const std::string& token, int line_no) {
    double value = 0.0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw data_error("row " + std::to_string(line_no) + ": bad number '" + token + "'");
    return value;
}

inline void finalize(EmbeddingDataset& ds, const std::string& path) {
    if (ds.labels.empty()) throw data_error(path + ": no samples");
    int max_label = 0;
    for (int y : ds.labels) {
        if (y < 0) throw data_error(path + ": negative label");
        max_label = std::max(max_label, y);
    }
    std::vector<bool> seen(static_cast<size_t>(max_label) + 1, false);
    for (int y : ds.labels) seen[static_cast<size_t>(y)] = true;
    for (int c = 0; c <= max_label; ++c)
        if (!seen[static_cast<size_t>(c)])
            throw data_error(path + ": labels not dense, class " + std::to_string(c) + " missing");
    ds.class_names.clear();
    for (int c = 0; c <= max_label; ++c) ds.class_names.push_back("class_" + std::to_string(c));
    if (!ds.rows.allFinite()) {
        for (Eigen::Index i = 0; i < ds.rows.rows(); ++i)
            if (!ds.rows.row(i).allFinite())
                throw data_error(path + ": non-finite feature in row " + std::to_string(i + 1));
    }
}

}  // namespace io_detail

// CSV layout: header "label,f0,f1,...", one sample per line.
inline EmbeddingDataset load_embeddings_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error(path + ": cannot open");
    std::string line;
    if (!std::getline(in, line)) throw data_error(path + ": empty file");
    if (line.rfind("label", 0) != 0) throw data_error(path + ": missing 'label,...' header");
    int dim = -1;
    std::vector<double> values;
    std::vector<int> labels;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string token;
        if (!std::getline(ss, token, ','))
            throw data_error("row " + std::to_string(line_no) + ": missing label");
        const double label_val = io_detail::parse_double(token, line_no);
        labels.push_back(static_cast<int>(label_val));
        int count = 0;
        while (std::getline(ss, token, ',')) {
            values.push_back(io_detail::parse_double(token, line_no));
            ++count;
        }
        if (dim == -1) dim = count;
        if (count != dim)
            throw data_error("row " + std::to_string(line_no) + ": expected " +
                             std::to_string(dim) + " features, got " + std::to_string(count));
    }
    if (dim <= 0) throw data_error(path + ": no feature columns");
    EmbeddingDataset ds;
    ds.labels = std::move(labels);
    ds.rows = Matrix(static_cast<Eigen::Index>(ds.labels.size()), dim);
    for (size_t i = 0; i < ds.labels.size(); ++i)
        for (int j = 0; j < dim; ++j)
            ds.rows(static_cast<Eigen::Index>(i), j) = values[i * static_cast<size_t>(dim) + static_cast<size_t>(j)];
    io_detail::finalize(ds, path);
    return ds;
}

inline void save_embeddings_csv(const EmbeddingDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error(path + ": cannot write");
    out << "label";
    for (int j = 0; j < ds.dim(); ++j) out << ",f" << j;
    out << "\n";
    char buf[32];
    for (int i = 0; i < ds.size(); ++i) {
        out << ds.labels[static_cast<size_t>(i)];
        for (int j = 0; j < ds.dim(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.rows(i, j));
            out << ',' << buf;
        }
        out << "\n";
    }
}

// Packed binary: magic, version, n, d (u32 LE), int32 labels, float32
// row-major features. Values are stored at float32 precision.
inline EmbeddingDataset load_embeddings_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error(path + ": cannot open");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, io_detail::kMagic, 8) != 0)
        throw data_error(path + ": bad magic bytes");
    std::uint32_t version = 0, n = 0, d = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&n), 4);
    in.read(reinterpret_cast<char*>(&d), 4);
    if (!in) throw data_error(path + ": truncated header");
    if (version != io_detail::kVersion)
        throw data_error(path + ": unsupported version " + std::to_string(version));
    if (n == 0 || d == 0) throw data_error(path + ": empty dataset");

    EmbeddingDataset ds;
    ds.labels.resize(n);
    std::vector<std::int32_t> raw_labels(n);
    in.read(reinterpret_cast<char*>(raw_labels.data()), static_cast<std::streamsize>(n) * 4);
    std::vector<float> feats(static_cast<size_t>(n) * d);
    in.read(reinterpret_cast<char*>(feats.data()), static_cast<std::streamsize>(feats.size()) * 4);
    if (!in) throw data_error(path + ": truncated payload");
    for (std::uint32_t i = 0; i < n; ++i) ds.labels[i] = raw_labels[i];
    ds.rows = Matrix(n, d);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < d; ++j)
            ds.rows(i, j) = static_cast<double>(feats[static_cast<size_t>(i) * d + j]);
    io_detail::finalize(ds, path);
    return ds;
}

inline void save_embeddings_binary(const EmbeddingDataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error(path + ": cannot write");
    out.write(io_detail::kMagic, 8);
    const std::uint32_t version = io_detail::kVersion;
    const std::uint32_t n = static_cast<std::uint32_t>(ds.size());
    const std::uint32_t d = static_cast<std::uint32_t>(ds.dim());
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&n), 4);
    out.write(reinterpret_cast<const char*>(&d), 4);
    std::vector<std::int32_t> raw_labels(ds.labels.begin(), ds.labels.end());
    out.write(reinterpret_cast<const char*>(raw_labels.data()),
              static_cast<std::streamsize>(raw_labels.size()) * 4);
    std::vector<float> feats(static_cast<size_t>(n) * d);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < d; ++j)
            feats[static_cast<size_t>(i) * d + j] = static_cast<float>(ds.rows(i, j));
    out.write(reinterpret_cast<const char*>(feats.data()),
              static_cast<std::streamsize>(feats.size()) * 4);
}

inline EmbeddingDataset load_embeddings(const std::string& path, FileFormat format) {
    return format == FileFormat::csv ? load_embeddings_csv(path) : load_embeddings_binary(path);
}

inline void save_embeddings(const EmbeddingDataset& ds, const std::string& path,
                            FileFormat format) {
    if (format == FileFormat::csv)
        save_embeddings_csv(ds, path);
    else
        save_embeddings_binary(ds, path);
}

// Sidecar CSV: "class_id,t0,t1,...".
inline SemanticTable load_semantic_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error(path + ": cannot open");
    std::string line;
    if (!std::getline(in, line)) throw data_error(path + ": empty file");
    if (line.rfind("class_id", 0) != 0) throw data_error(path + ": missing 'class_id,...' header");
    SemanticTable table;
    std::vector<double> values;
    int dim = -1, line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string token;
        std::getline(ss, token, ',');
        table.class_ids.push_back(static_cast<int>(io_detail::parse_double(token, line_no)));
        int count = 0;
        while (std::getline(ss, token, ',')) {
            values.push_back(io_detail::parse_double(token, line_no));
            ++count;
        }
        if (dim == -1) dim = count;
        if (count != dim)
            throw data_error("row " + std::to_string(line_no) + ": inconsistent semantic dim");
    }
    if (dim <= 0 || table.class_ids.empty()) throw data_error(path + ": no semantic vectors");
    table.vectors = Matrix(static_cast<Eigen::Index>(table.class_ids.size()), dim);
    for (size_t i = 0; i < table.class_ids.size(); ++i)
        for (int j = 0; j < dim; ++j)
            table.vectors(static_cast<Eigen::Index>(i), j) =
                values[i * static_cast<size_t>(dim) + static_cast<size_t>(j)];
    check_finite(table.vectors, "semantic table");
    return table;
}

inline void save_semantic_table(const SemanticTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error(path + ": cannot write");
    out << "class_id";
    for (int j = 0; j < table.dim(); ++j) out << ",t" << j;
    out << "\n";
    char buf[32];
    for (size_t i = 0; i < table.class_ids.size(); ++i) {
        out << table.class_ids[i];
        for (int j = 0; j < table.dim(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", table.vectors(static_cast<Eigen::Index>(i), j));
            out << ',' << buf;
        }
        out << "\n";
    }
}

}  // namespace ssfl
