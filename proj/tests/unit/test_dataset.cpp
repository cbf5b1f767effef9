#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "colm/data_gen.h"
#include "colm/dataset.h"
#include "colm/errors.h"

using namespace colm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / "colm_unit_dataset";
    fs::create_directories(dir);
    return dir / name;
}

fs::path write_text(const std::string& name, const std::string& text) {
    auto p = scratch(name);
    std::ofstream(p) << text;
    return p;
}

}  // namespace

TEST_CASE("three-row csv loads field for field") {
    auto p = write_text("three.csv", "f0,f1,label,source\n0.5,-1,1,0\n2,3.25,0,2\n-0,1e-3,1,2\n");
    auto ds = load_dataset(p, DataFormat::csv);
    REQUIRE(ds.size() == 3);
    CHECK(ds.feature_dim == 2);
    CHECK(ds.num_classes == 2);
    CHECK(ds.examples[0].features == DenseVector{0.5, -1});
    CHECK(ds.examples[1].label == 0);
    CHECK(ds.examples[2].source_id == 2);
    CHECK(ds.examples[2].features[1] == 1e-3);
    CHECK(ds.source_sizes() == std::map<int, std::size_t>{{0, 1}, {2, 2}});
}

TEST_CASE("non-numeric feature is rejected with its line number") {
    auto p = write_text("bad.csv", "f0,f1,label,source\n0.5,-1,1,0\n2,abc,0,2\n");
    try {
        load_dataset(p, DataFormat::csv);
        FAIL("expected DatasetFormatError");
    } catch (const DatasetFormatError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("line 3") == 0);
    }
    CHECK_THROWS_AS(load_dataset(write_text("short.csv", "f0,label,source\n1,0\n"), DataFormat::csv),
                    DatasetFormatError);
    CHECK_THROWS_AS(load_dataset(write_text("neg.csv", "f0,label,source\n1,-1,0\n"), DataFormat::csv),
                    DatasetFormatError);
    CHECK_THROWS_AS(load_dataset(write_text("hdr.csv", "x,label,source\n1,0,0\n"), DataFormat::csv),
                    DatasetFormatError);
    CHECK_THROWS_AS(load_dataset(write_text("empty.csv", "f0,label,source\n"), DataFormat::csv), DatasetFormatError);
}

TEST_CASE("missing source column is a configuration error unless allowed") {
    auto p = write_text("nosrc.csv", "f0,f1,label\n1,2,0\n3,4,1\n");
    CHECK_THROWS_AS(load_dataset(p, DataFormat::csv), ConfigError);
    auto ds = load_dataset(p, DataFormat::csv, true);
    CHECK_FALSE(ds.has_sources);
    CHECK(ds.examples[1].source_id == 0);

    auto j = write_text("nosrc.jsonl", "{\"features\":[1,2],\"label\":0}\n");
    CHECK_THROWS_AS(load_dataset(j, DataFormat::jsonl), ConfigError);
    CHECK(load_dataset(j, DataFormat::jsonl, true).size() == 1);
}

TEST_CASE("jsonl parsing is strict") {
    CHECK_THROWS_AS(load_dataset(write_text("k.jsonl", "{\"features\":[1],\"label\":0,\"source\":0,\"x\":1}\n"),
                                 DataFormat::jsonl),
                    DatasetFormatError);
    try {
        load_dataset(write_text("s.jsonl", "{\"features\":[1],\"label\":0,\"source\":0}\n{\"features\":[\"a\"],"
                                           "\"label\":0,\"source\":0}\n"),
                     DataFormat::jsonl);
        FAIL("expected DatasetFormatError");
    } catch (const DatasetFormatError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("generated data survives a write-then-read round trip exactly") {
    MixtureSpec spec;
    spec.num_sources = 3;
    spec.largest_source = 60;
    spec.imbalance_ratio = 6;
    spec.outliers = 4;
    spec.seed = 2;
    auto g = generate(spec);
    for (auto fmt : {DataFormat::csv, DataFormat::jsonl}) {
        auto p = scratch("round." + to_string(fmt));
        write_dataset(p, g.dataset, fmt);
        auto back = load_dataset(p, fmt);
        REQUIRE(back.size() == g.dataset.size());
        CHECK(back.feature_dim == g.dataset.feature_dim);
        for (std::size_t i = 0; i < back.size(); ++i) {
            CHECK(back.examples[i].features == g.dataset.examples[i].features);
            CHECK(back.examples[i].label == g.dataset.examples[i].label);
            CHECK(back.examples[i].source_id == g.dataset.examples[i].source_id);
        }
    }
}

TEST_CASE("format names") {
    CHECK(parse_data_format("csv") == DataFormat::csv);
    CHECK(parse_data_format("jsonl") == DataFormat::jsonl);
    CHECK_THROWS_AS(parse_data_format("xml"), ConfigError);
    CHECK(std::stod(format_double(0.1)) == 0.1);
}
