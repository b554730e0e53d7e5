#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "ksums/common.hpp"
#include "ksums/dataset.hpp"
#include "ksums/rng.hpp"

namespace ksums {

enum class FileFormat { Fvecs, Bvecs, Csv, SparseTriplet };

inline const char* to_string(FileFormat f) {
    switch (f) {
        case FileFormat::Fvecs: return "fvecs";
        case FileFormat::Bvecs: return "bvecs";
        case FileFormat::Csv: return "csv";
        default: return "sparse-triplet";
    }
}

inline FileFormat format_from_name(std::string_view name) {
    if (name == "fvecs") return FileFormat::Fvecs;
    if (name == "bvecs") return FileFormat::Bvecs;
    if (name == "csv") return FileFormat::Csv;
    if (name == "sparse-triplet" || name == "sparse") return FileFormat::SparseTriplet;
    throw ConfigError("unknown format '" + std::string(name) + "'");
}

// Guess the format from the file extension.
inline FileFormat format_from_path(const std::string& path) {
    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    if (ext == "fvecs") return FileFormat::Fvecs;
    if (ext == "bvecs") return FileFormat::Bvecs;
    if (ext == "csv") return FileFormat::Csv;
    if (ext == "st" || ext == "triplet") return FileFormat::SparseTriplet;
    throw ConfigError("cannot infer format from '" + path + "'; pass --format");
}

struct LoadOptions {
    bool labels_last = false;  // CSV only: final integer column is the class
    bool normalize = false;    // l2-normalize rows after loading
};

namespace detail {

inline std::vector<char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    in.seekg(0, std::ios::end);
    const auto size = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<char> bytes(static_cast<std::size_t>(size));
    if (size > 0) in.read(bytes.data(), size);
    if (!in) throw DataError("cannot read '" + path + "'");
    return bytes;
}

inline void trim(std::string_view& s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
}

template <typename T>
T parse_number(std::string_view token, const std::string& where) {
    trim(token);
    T value{};
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size())
        throw DataError(where + ": cannot parse '" + std::string(token) + "'");
    return value;
}

// Splits on the delimiter, calling fn(token) per field.
template <typename Fn>
void for_each_field(std::string_view line, char delim, Fn&& fn) {
    while (true) {
        const auto pos = line.find(delim);
        fn(line.substr(0, pos));
        if (pos == std::string_view::npos) break;
        line.remove_prefix(pos + 1);
    }
}

template <typename Elem>
Dataset load_xvecs(const std::string& path, bool bytes_are_u8) {
    const auto bytes = read_file(path);
    std::vector<float> values;
    std::size_t dim = 0;
    std::size_t offset = 0;
    while (offset < bytes.size()) {
        if (offset + 4 > bytes.size())
            throw DataError(path + ": truncated header at byte " + std::to_string(offset));
        std::int32_t d = 0;
        std::memcpy(&d, bytes.data() + offset, 4);
        if (d < 1)
            throw DataError(path + ": non-positive dimension " + std::to_string(d) +
                            " at byte " + std::to_string(offset));
        if (dim == 0) dim = static_cast<std::size_t>(d);
        if (static_cast<std::size_t>(d) != dim)
            throw DataError(path + ": dimension " + std::to_string(d) + " at byte " +
                            std::to_string(offset) + " does not match " +
                            std::to_string(dim));
        offset += 4;
        const std::size_t payload = dim * sizeof(Elem);
        if (offset + payload > bytes.size())
            throw DataError(path + ": truncated vector at byte " + std::to_string(offset));
        if (bytes_are_u8) {
            for (std::size_t j = 0; j < dim; ++j)
                values.push_back(static_cast<float>(
                    static_cast<std::uint8_t>(bytes[offset + j])));
        } else {
            const std::size_t base = values.size();
            values.resize(base + dim);
            std::memcpy(values.data() + base, bytes.data() + offset, payload);
        }
        offset += payload;
    }
    if (values.empty()) throw DataError(path + ": no vectors");
    return Dataset::dense(dim, std::move(values));
}

}  // namespace detail

// Little-endian records: a 4-byte signed dimension, then d 4-byte floats.
inline Dataset load_fvecs(const std::string& path) {
    return detail::load_xvecs<float>(path, false);
}

// Same layout with unsigned byte components, widened to float.
inline Dataset load_bvecs(const std::string& path) {
    return detail::load_xvecs<std::uint8_t>(path, true);
}

// One vector per line, comma-delimited; with labels_last the final integer
// column is the ground-truth class.
inline Dataset load_csv(const std::string& path, bool labels_last) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::vector<float> values;
    std::vector<int> labels;
    std::size_t dim = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        detail::trim(view);
        if (view.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        std::vector<std::string_view> fields;
        detail::for_each_field(view, ',', [&](std::string_view f) { fields.push_back(f); });
        const std::size_t cols = fields.size() - (labels_last ? 1 : 0);
        if (cols < 1) throw DataError(where + ": no value columns");
        if (dim == 0) dim = cols;
        if (cols != dim)
            throw DataError(where + ": expected " + std::to_string(dim) +
                            " value columns, got " + std::to_string(cols));
        for (std::size_t j = 0; j < dim; ++j)
            values.push_back(detail::parse_number<float>(fields[j], where));
        if (labels_last) {
            const int c = detail::parse_number<int>(fields.back(), where);
            if (c < 0) throw DataError(where + ": negative class id");
            labels.push_back(c);
        }
    }
    if (values.empty()) throw DataError(path + ": no rows");
    return Dataset::dense(dim, std::move(values), std::move(labels));
}

// Header "n d nnz", then one line per nonzero: "row col value", 0-indexed.
inline Dataset load_sparse_triplet(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string line;
    std::size_t line_no = 0;

    auto next_line = [&](std::string_view& out) -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            std::string_view view(line);
            detail::trim(view);
            if (!view.empty()) {
                out = view;
                return true;
            }
        }
        return false;
    };

    std::string_view header;
    if (!next_line(header)) throw DataError(path + ": missing header");
    std::vector<std::string_view> fields;
    detail::for_each_field(header, ' ', [&](std::string_view f) {
        if (!f.empty()) fields.push_back(f);
    });
    if (fields.size() != 3)
        throw DataError(path + ":1: header must be 'n d nnz'");
    const auto n = detail::parse_number<std::size_t>(fields[0], path + ":1");
    const auto d = detail::parse_number<std::size_t>(fields[1], path + ":1");
    const auto nnz = detail::parse_number<std::size_t>(fields[2], path + ":1");
    if (n < 1 || d < 1) throw DataError(path + ":1: need n >= 1 and d >= 1");

    struct Triplet {
        std::size_t row;
        std::uint32_t col;
        float value;
    };
    std::vector<Triplet> triplets;
    triplets.reserve(nnz);
    std::string_view body;
    for (std::size_t e = 0; e < nnz; ++e) {
        if (!next_line(body))
            throw DataError(path + ": body ended after " + std::to_string(e) +
                            " of " + std::to_string(nnz) + " entries");
        const std::string where = path + ":" + std::to_string(line_no);
        fields.clear();
        detail::for_each_field(body, ' ', [&](std::string_view f) {
            if (!f.empty()) fields.push_back(f);
        });
        if (fields.size() != 3) throw DataError(where + ": expected 'row col value'");
        Triplet t{detail::parse_number<std::size_t>(fields[0], where),
                  detail::parse_number<std::uint32_t>(fields[1], where),
                  detail::parse_number<float>(fields[2], where)};
        if (t.row >= n) throw DataError(where + ": row out of range");
        if (t.col >= d) throw DataError(where + ": column out of range");
        triplets.push_back(t);
    }
    if (next_line(body))
        throw DataError(path + ":" + std::to_string(line_no) +
                        ": more entries than the declared nnz");

    std::stable_sort(triplets.begin(), triplets.end(),
                     [](const Triplet& a, const Triplet& b) {
                         return a.row != b.row ? a.row < b.row : a.col < b.col;
                     });
    for (std::size_t e = 1; e < triplets.size(); ++e)
        if (triplets[e].row == triplets[e - 1].row &&
            triplets[e].col == triplets[e - 1].col)
            throw DataError(path + ": duplicate entry for row " +
                            std::to_string(triplets[e].row) + ", column " +
                            std::to_string(triplets[e].col));

    std::vector<std::size_t> row_start(n + 1, 0);
    std::vector<std::uint32_t> cols(triplets.size());
    std::vector<float> vals(triplets.size());
    for (std::size_t e = 0; e < triplets.size(); ++e) {
        row_start[triplets[e].row + 1] += 1;
        cols[e] = triplets[e].col;
        vals[e] = triplets[e].value;
    }
    for (std::size_t i = 0; i < n; ++i) row_start[i + 1] += row_start[i];
    return Dataset::sparse(n, d, std::move(row_start), std::move(cols), std::move(vals));
}

inline Dataset load(const std::string& path, FileFormat format,
                    const LoadOptions& options = {}) {
    if (options.labels_last && format != FileFormat::Csv)
        throw ConfigError("--labels-last applies only to CSV input");
    Dataset ds;
    switch (format) {
        case FileFormat::Fvecs: ds = load_fvecs(path); break;
        case FileFormat::Bvecs: ds = load_bvecs(path); break;
        case FileFormat::Csv: ds = load_csv(path, options.labels_last); break;
        case FileFormat::SparseTriplet: ds = load_sparse_triplet(path); break;
    }
    if (options.normalize) ds.l2_normalize();
    return ds;
}

inline void write_fvecs(const Dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    const std::int32_t d = static_cast<std::int32_t>(data.dim());
    std::vector<double> dense(data.dim());
    std::vector<float> row(data.dim());
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.is_sparse()) {
            data.copy_row(i, dense.data());
            for (std::size_t j = 0; j < dense.size(); ++j)
                row[j] = static_cast<float>(dense[j]);
        } else {
            const auto src = data.dense_row(i);
            std::copy(src.begin(), src.end(), row.begin());
        }
        out.write(reinterpret_cast<const char*>(&d), 4);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

namespace detail {

inline void append_number(std::string& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

inline void append_number(std::string& out, float v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

}  // namespace detail

inline void write_csv(const Dataset& data, const std::string& path,
                      bool include_labels) {
    if (include_labels && !data.has_labels_true())
        throw ConfigError("dataset has no ground-truth labels to write");
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    std::vector<double> dense(data.dim());
    std::string buf;
    for (std::size_t i = 0; i < data.size(); ++i) {
        buf.clear();
        if (data.is_sparse()) {
            data.copy_row(i, dense.data());
            for (std::size_t j = 0; j < dense.size(); ++j) {
                if (j) buf.push_back(',');
                detail::append_number(buf, static_cast<float>(dense[j]));
            }
        } else {
            const auto row = data.dense_row(i);
            for (std::size_t j = 0; j < row.size(); ++j) {
                if (j) buf.push_back(',');
                detail::append_number(buf, row[j]);
            }
        }
        if (include_labels) {
            buf.push_back(',');
            buf.append(std::to_string(data.labels_true()[i]));
        }
        buf.push_back('\n');
        out << buf;
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

// Isotropic unit-variance Gaussian blobs around k_true centers drawn
// uniformly in [0, separation]^d. Blob of sample i is i mod k_true, recorded
// as the ground-truth class. Deterministic per seed.
inline Dataset generate_synthetic(std::size_t n, std::size_t d, std::size_t k_true,
                                  double separation, std::uint64_t seed) {
    if (k_true < 1 || n < k_true)
        throw ConfigError("synthetic data needs n >= k_true >= 1");
    if (d < 1) throw ConfigError("synthetic data needs d >= 1");
    if (separation < 0.0) throw ConfigError("separation must be >= 0");
    Rng rng(seed);
    std::vector<double> centers(k_true * d);
    for (auto& c : centers) c = rng.unit() * separation;
    std::vector<float> values(n * d);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t blob = i % k_true;
        labels[i] = static_cast<int>(blob);
        for (std::size_t j = 0; j < d; ++j)
            values[i * d + j] =
                static_cast<float>(centers[blob * d + j] + rng.gaussian());
    }
    return Dataset::dense(d, std::move(values), std::move(labels));
}

}  // namespace ksums
