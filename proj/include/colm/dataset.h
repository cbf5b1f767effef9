#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "colm/toy_model.h"

namespace colm {

struct Dataset {
    std::size_t feature_dim = 0;
    std::size_t num_classes = 0;
    std::vector<Example> examples;
    /// False when the file had no source column; every source_id is then 0.
    bool has_sources = true;

    std::size_t size() const noexcept { return examples.size(); }
    /// Count per source id over the whole dataset.
    std::map<int, std::size_t> source_sizes() const;
};

enum class DataFormat { csv, jsonl };

DataFormat parse_data_format(const std::string& name);
std::string to_string(DataFormat format);

/// CSV: header `f0,...,f{d-1},label,source`. JSONL: one object per line with
/// `features`, `label`, `source`. Doubles are written with 17 significant
/// digits so a write-then-read round trip is exact.
void write_dataset(const std::filesystem::path& path, const Dataset& dataset, DataFormat format);

/// Throws DatasetFormatError (with line number) on malformed rows. A missing
/// source column raises ConfigError unless `allow_missing_source` is set.
Dataset load_dataset(const std::filesystem::path& path, DataFormat format, bool allow_missing_source = false);

/// 17 significant digits ("%.17g"); parses back to the same double.
std::string format_double(double value);

}  // namespace colm
