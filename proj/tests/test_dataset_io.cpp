#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ssfl/dataset_io.hpp"
#include "ssfl/rng.hpp"

using ssfl::EmbeddingDataset;
using ssfl::FileFormat;
using ssfl::Matrix;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

EmbeddingDataset random_f32_dataset(ssfl::Rng& rng, int n, int d, int classes) {
    EmbeddingDataset ds;
    ds.rows = Matrix(n, d);
    for (int i = 0; i < n; ++i) {
        // ensure label density: first `classes` rows carry each class once
        ds.labels.push_back(i < classes ? i : static_cast<int>(rng.bounded(classes)));
        for (int j = 0; j < d; ++j)
            ds.rows(i, j) = static_cast<double>(static_cast<float>(rng.normal()));
    }
    for (int c = 0; c < classes; ++c) ds.class_names.push_back("class_" + std::to_string(c));
    return ds;
}

}  // namespace

TEST_CASE("csv load of a small dataset", "[dataset_io]") {
    const std::string path = temp_path("ssfl_small.csv");
    std::ofstream out(path);
    out << "label,f0,f1,f2\n0,1.5,2,3\n1,-1,0.25,9\n";
    out.close();
    auto ds = ssfl::load_embeddings(path, FileFormat::csv);
    REQUIRE(ds.size() == 2);
    REQUIRE(ds.dim() == 3);
    REQUIRE(ds.num_classes() == 2);
    REQUIRE(ds.rows(0, 0) == 1.5);
    REQUIRE(ds.rows(1, 2) == 9.0);
    std::remove(path.c_str());
}

TEST_CASE("csv and binary round trips are bit-exact", "[dataset_io]") {
    ssfl::Rng rng(71);
    auto ds = random_f32_dataset(rng, 20, 5, 3);

    const std::string csv = temp_path("ssfl_rt.csv");
    ssfl::save_embeddings(ds, csv, FileFormat::csv);
    auto from_csv = ssfl::load_embeddings(csv, FileFormat::csv);
    REQUIRE(from_csv.rows == ds.rows);
    REQUIRE(from_csv.labels == ds.labels);

    const std::string bin = temp_path("ssfl_rt.bin");
    ssfl::save_embeddings(ds, bin, FileFormat::packed_binary);
    auto from_bin = ssfl::load_embeddings(bin, FileFormat::packed_binary);
    REQUIRE(from_bin.rows == ds.rows);
    REQUIRE(from_bin.labels == ds.labels);

    std::remove(csv.c_str());
    std::remove(bin.c_str());
}

TEST_CASE("binary round trip property over several datasets", "[dataset_io]") {
    ssfl::Rng rng(72);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 5 + static_cast<int>(rng.bounded(30));
        const int d = 1 + static_cast<int>(rng.bounded(8));
        const int classes = 2 + static_cast<int>(rng.bounded(3));
        auto ds = random_f32_dataset(rng, std::max(n, classes), d, classes);
        const std::string bin = temp_path("ssfl_prop.bin");
        ssfl::save_embeddings(ds, bin, FileFormat::packed_binary);
        auto back = ssfl::load_embeddings(bin, FileFormat::packed_binary);
        REQUIRE(back.rows == ds.rows);
        REQUIRE(back.labels == ds.labels);
        std::remove(bin.c_str());
    }
}

TEST_CASE("csv errors name the offending row", "[dataset_io]") {
    const std::string path = temp_path("ssfl_bad.csv");
    {
        std::ofstream out(path);
        out << "label,f0,f1\n0,1,2\n1,nan,3\n";
    }
    try {
        ssfl::load_embeddings(path, FileFormat::csv);
        FAIL("expected data_error");
    } catch (const ssfl::data_error& e) {
        REQUIRE(std::string(e.what()).find("row 2") != std::string::npos);
    }
    {
        std::ofstream out(path);
        out << "label,f0,f1\n0,1,2\n1,3\n";
    }
    REQUIRE_THROWS_AS(ssfl::load_embeddings(path, FileFormat::csv), ssfl::data_error);
    {
        std::ofstream out(path);
        out << "label,f0,f1\n0,1,2\n1,x,3\n";
    }
    REQUIRE_THROWS_AS(ssfl::load_embeddings(path, FileFormat::csv), ssfl::data_error);
    std::remove(path.c_str());
}

TEST_CASE("label density and header are validated", "[dataset_io]") {
    const std::string path = temp_path("ssfl_density.csv");
    {
        std::ofstream out(path);
        out << "label,f0\n0,1\n2,2\n";  // class 1 missing
    }
    REQUIRE_THROWS_AS(ssfl::load_embeddings(path, FileFormat::csv), ssfl::data_error);
    {
        std::ofstream out(path);
        out << "f0,f1\n0,1\n";
    }
    REQUIRE_THROWS_AS(ssfl::load_embeddings(path, FileFormat::csv), ssfl::data_error);
    std::remove(path.c_str());
}

TEST_CASE("binary magic and truncation are rejected", "[dataset_io]") {
    const std::string path = temp_path("ssfl_magic.bin");
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOTMAGIC-extra";
    }
    REQUIRE_THROWS_AS(ssfl::load_embeddings(path, FileFormat::packed_binary), ssfl::data_error);
    std::remove(path.c_str());
}

TEST_CASE("semantic table round trip and lookup", "[dataset_io]") {
    ssfl::SemanticTable table;
    table.class_ids = {4, 7};
    table.vectors = Matrix(2, 3);
    table.vectors << 1.0, 2.0, 3.0, -1.0, 0.5, 0.0;
    const std::string path = temp_path("ssfl_sem.csv");
    ssfl::save_semantic_table(table, path);
    auto back = ssfl::load_semantic_table(path);
    REQUIRE(back.class_ids == table.class_ids);
    REQUIRE(back.vectors == table.vectors);
    REQUIRE(back.lookup(7).has_value());
    REQUIRE(back.lookup(7)->operator[](1) == 0.5);
    REQUIRE(!back.lookup(5).has_value());
    std::remove(path.c_str());
}
