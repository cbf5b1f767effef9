#include "colm/dataset.h"

#include <algorithm>
#include <charconv>
#include <optional>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "colm/errors.h"

namespace colm {

std::map<int, std::size_t> Dataset::source_sizes() const {
    std::map<int, std::size_t> sizes;
    for (const auto& ex : examples) ++sizes[ex.source_id];
    return sizes;
}

DataFormat parse_data_format(const std::string& name) {
    if (name == "csv") return DataFormat::csv;
    if (name == "jsonl") return DataFormat::jsonl;
    throw ConfigError("unknown format '" + name + "' (expected csv or jsonl)");
}

std::string to_string(DataFormat format) { return format == DataFormat::csv ? "csv" : "jsonl"; }

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

double parse_double(std::string_view field, std::size_t line, const std::string& column) {
    double value = 0.0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (field.empty() || ec != std::errc() || ptr != end) {
        throw DatasetFormatError(line, "column " + column + ": '" + std::string(field) + "' is not a number");
    }
    return value;
}

long long parse_integer(std::string_view field, std::size_t line, const std::string& column) {
    long long value = 0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (field.empty() || ec != std::errc() || ptr != end) {
        throw DatasetFormatError(line, "column " + column + ": '" + std::string(field) + "' is not an integer");
    }
    return value;
}

std::size_t parse_label(long long raw, std::size_t line) {
    if (raw < 0) throw DatasetFormatError(line, "negative label");
    return static_cast<std::size_t>(raw);
}

void finish(Dataset& ds, std::size_t first_data_line) {
    if (ds.examples.empty()) throw DatasetFormatError(first_data_line, "no data rows");
    std::size_t max_label = 0;
    for (const auto& ex : ds.examples) max_label = std::max(max_label, ex.label);
    ds.num_classes = std::max<std::size_t>(2, max_label + 1);
}

Dataset load_csv(std::istream& in, bool allow_missing_source) {
    std::string line;
    if (!std::getline(in, line)) throw DatasetFormatError(1, "empty file");
    const auto header = split_commas(line);
    std::size_t d = 0;
    while (d < header.size() && header[d] == "f" + std::to_string(d)) ++d;
    if (d == 0) throw DatasetFormatError(1, "header must start with f0");
    if (header.size() < d + 1 || header[d] != "label") throw DatasetFormatError(1, "expected 'label' after features");
    bool has_source = false;
    if (header.size() == d + 2) {
        if (header[d + 1] != "source") {
            throw DatasetFormatError(1, "unexpected column '" + std::string(header[d + 1]) + "'");
        }
        has_source = true;
    } else if (header.size() > d + 2) {
        throw DatasetFormatError(1, "too many columns in header");
    }
    if (!has_source && !allow_missing_source) {
        throw ConfigError("dataset has no source column; enable source discovery or add one");
    }

    Dataset ds;
    ds.feature_dim = d;
    ds.has_sources = has_source;
    const std::size_t width = header.size();
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_commas(line);
        if (fields.size() != width) {
            throw DatasetFormatError(line_no, "expected " + std::to_string(width) + " fields, got " +
                                                  std::to_string(fields.size()));
        }
        Example ex;
        ex.features = DenseVector(d);
        for (std::size_t j = 0; j < d; ++j) ex.features[j] = parse_double(fields[j], line_no, "f" + std::to_string(j));
        ex.label = parse_label(parse_integer(fields[d], line_no, "label"), line_no);
        ex.source_id = has_source ? static_cast<int>(parse_integer(fields[d + 1], line_no, "source")) : 0;
        ds.examples.push_back(std::move(ex));
    }
    finish(ds, 2);
    return ds;
}

Dataset load_jsonl(std::istream& in, bool allow_missing_source) {
    Dataset ds;
    std::string line;
    std::size_t line_no = 0;
    std::optional<bool> has_source;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json row;
        try {
            row = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DatasetFormatError(line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!row.is_object()) throw DatasetFormatError(line_no, "expected an object");
        for (const auto& [key, _] : row.items()) {
            if (key != "features" && key != "label" && key != "source") {
                throw DatasetFormatError(line_no, "unexpected field '" + key + "'");
            }
        }
        if (!row.contains("features") || !row["features"].is_array()) {
            throw DatasetFormatError(line_no, "missing features array");
        }
        const auto& feats = row["features"];
        if (ds.examples.empty()) {
            ds.feature_dim = feats.size();
            if (ds.feature_dim == 0) throw DatasetFormatError(line_no, "empty features array");
        } else if (feats.size() != ds.feature_dim) {
            throw DatasetFormatError(line_no, "expected " + std::to_string(ds.feature_dim) + " features");
        }
        Example ex;
        ex.features = DenseVector(ds.feature_dim);
        for (std::size_t j = 0; j < ds.feature_dim; ++j) {
            if (!feats[j].is_number()) throw DatasetFormatError(line_no, "feature " + std::to_string(j) + " is not a number");
            ex.features[j] = feats[j].get<double>();
        }
        if (!row.contains("label") || !row["label"].is_number_integer()) {
            throw DatasetFormatError(line_no, "label must be an integer");
        }
        ex.label = parse_label(row["label"].get<long long>(), line_no);
        const bool row_has_source = row.contains("source");
        if (has_source.has_value() && *has_source != row_has_source) {
            throw DatasetFormatError(line_no, "source field present on some rows only");
        }
        has_source = row_has_source;
        if (row_has_source) {
            if (!row["source"].is_number_integer()) throw DatasetFormatError(line_no, "source must be an integer");
            ex.source_id = row["source"].get<int>();
        }
        ds.examples.push_back(std::move(ex));
    }
    finish(ds, 1);
    ds.has_sources = has_source.value_or(false);
    if (!ds.has_sources && !allow_missing_source) {
        throw ConfigError("dataset has no source field; enable source discovery or add one");
    }
    return ds;
}

}  // namespace

void write_dataset(const std::filesystem::path& path, const Dataset& dataset, DataFormat format) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    if (format == DataFormat::csv) {
        for (std::size_t j = 0; j < dataset.feature_dim; ++j) out << 'f' << j << ',';
        out << "label,source\n";
        for (const auto& ex : dataset.examples) {
            for (std::size_t j = 0; j < ex.features.size(); ++j) out << format_double(ex.features[j]) << ',';
            out << ex.label << ',' << ex.source_id << '\n';
        }
    } else {
        for (const auto& ex : dataset.examples) {
            out << "{\"features\":[";
            for (std::size_t j = 0; j < ex.features.size(); ++j) {
                if (j) out << ',';
                out << format_double(ex.features[j]);
            }
            out << "],\"label\":" << ex.label << ",\"source\":" << ex.source_id << "}\n";
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path, DataFormat format, bool allow_missing_source) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open dataset " + path.string());
    return format == DataFormat::csv ? load_csv(in, allow_missing_source) : load_jsonl(in, allow_missing_source);
}

}  // namespace colm
