/*
 * Copyright 2026 The ddcx authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddcx/cli.hpp"
#include "ddcx/sa_io.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("ddcx_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

int run_cli(std::vector<std::string> args) {
    std::vector<const char*> argv{"ddcx"};
    for (const std::string& a : args) argv.push_back(a.c_str());
    return ddcx::cli::run(static_cast<int>(argv.size()), argv.data());
}

} // namespace

TEST_CASE("banana fixture end to end with verification") {
    TempDir tmp;
    write_file(tmp.file("banana.txt"), "banana");
    int rc = run_cli({"--input", tmp.file("banana.txt"), "--out", tmp.file("banana.sa"), "--metrics",
                      tmp.file("banana.json"), "--verify"});
    CHECK(rc == 0);
    auto sa = ddcx::read_sa(tmp.file("banana.sa"), 8);
    CHECK(sa == std::vector<std::uint64_t>{6, 5, 3, 1, 0, 4, 2});
}

TEST_CASE("independence of the PE count and bucket schedule, byte for byte") {
    TempDir tmp;
    std::mt19937_64 gen(3);
    std::string text(9000, 'x');
    for (auto& c : text) c = static_cast<char>(1 + gen() % 255);
    write_file(tmp.file("in.bin"), text);

    CHECK(run_cli({"--input", tmp.file("in.bin"), "--out", tmp.file("a.sa"), "--pes", "1", "--buckets",
                   "1", "--verify"}) == 0);
    CHECK(run_cli({"--input", tmp.file("in.bin"), "--out", tmp.file("b.sa"), "--pes", "8", "--buckets",
                   "32,8,1", "--verify"}) == 0);
    CHECK(read_file(tmp.file("a.sa")) == read_file(tmp.file("b.sa")));
}

TEST_CASE("identical flags give identical output files") {
    TempDir tmp;
    std::mt19937_64 gen(5);
    std::string text(4000, 'x');
    for (auto& c : text) c = static_cast<char>(1 + gen() % 4);
    write_file(tmp.file("in.bin"), text);

    auto flags = [&](const std::string& out) {
        return std::vector<std::string>{"--input", tmp.file("in.bin"), "--pes", "4",
                                        "--seed",  "7",                "--out", out};
    };
    CHECK(run_cli(flags(tmp.file("a.sa"))) == 0);
    CHECK(run_cli(flags(tmp.file("b.sa"))) == 0);
    CHECK(read_file(tmp.file("a.sa")) == read_file(tmp.file("b.sa")));
}

TEST_CASE("five byte output is exactly 5n bytes and round-trips") {
    TempDir tmp;
    write_file(tmp.file("in.txt"), "mississippi");
    CHECK(run_cli({"--input", tmp.file("in.txt"), "--out", tmp.file("out.sa"), "--int-width", "5"}) == 0);
    CHECK(fs::file_size(tmp.file("out.sa")) == 5 * 12); // n = 11 + sentinel
    CHECK(ddcx::read_sa(tmp.file("out.sa"), 5) ==
          std::vector<std::uint64_t>{11, 10, 7, 4, 1, 0, 9, 8, 6, 3, 5, 2});
}

TEST_CASE("sa_io round trip and width checks") {
    TempDir tmp;
    std::vector<std::uint64_t> sa{0, 1, (1ull << 39), 42};
    ddcx::write_sa(tmp.file("t.sa"), sa, 5);
    CHECK(ddcx::read_sa(tmp.file("t.sa"), 5) == sa);
    ddcx::write_sa(tmp.file("t8.sa"), sa, 8);
    CHECK(ddcx::read_sa(tmp.file("t8.sa"), 8) == sa);

    std::vector<std::uint64_t> too_big{1ull << 40};
    CHECK_THROWS(ddcx::write_sa(tmp.file("o.sa"), too_big, 5));
    CHECK_THROWS(ddcx::write_sa(tmp.file("o.sa"), sa, 6));
}

TEST_CASE("zero byte in the input is rejected as a usage error") {
    TempDir tmp;
    write_file(tmp.file("bad.bin"), std::string("ab\0cd", 5));
    CHECK(run_cli({"--input", tmp.file("bad.bin")}) == 2);
}

TEST_CASE("unreadable input is an I/O error") {
    TempDir tmp;
    CHECK(run_cli({"--input", tmp.file("missing.bin")}) == 3);
}

TEST_CASE("bad flags are usage errors") {
    TempDir tmp;
    write_file(tmp.file("in.txt"), "abc");
    CHECK(run_cli({"--input", tmp.file("in.txt"), "--x", "5"}) == 2);
    CHECK(run_cli({"--input", tmp.file("in.txt"), "--no-such-flag"}) == 2);
    CHECK(run_cli({}) == 2); // --input is required
}

TEST_CASE("metrics report has the stable schema and conserved volumes") {
    TempDir tmp;
    std::mt19937_64 gen(9);
    std::string text(6000, 'x');
    for (auto& c : text) c = static_cast<char>('a' + gen() % 2);
    write_file(tmp.file("in.bin"), text);
    CHECK(run_cli({"--input", tmp.file("in.bin"), "--pes", "4", "--buckets", "4,2,1", "--metrics",
                   tmp.file("m.json"), "--verify"}) == 0);

    nlohmann::json m = nlohmann::json::parse(read_file(tmp.file("m.json")));
    CHECK(m["n"] == 6001);
    CHECK(m["pes"] == 4);
    CHECK(m["x"] == 21);
    REQUIRE(m.contains("phases"));
    REQUIRE(m["phases"].is_array());
    REQUIRE(!m["phases"].empty());
    for (const auto& ph : m["phases"]) {
        CHECK(ph["sent_records"].size() == 4); // per-PE arrays
        CHECK(ph["total_sent"] == ph["total_received"]);
    }
    bool saw_merge = false;
    for (const auto& ph : m["phases"]) {
        if (ph["phase"] == "merge_sort" && ph["depth"] == 0) {
            saw_merge = true;
            CHECK(ph["buckets"] == 4);
            CHECK(ph.contains("bound_2n_over_pq"));
            CHECK(ph.contains("expected_load"));
            CHECK(ph.contains("load_bound_precondition_ok"));
        }
    }
    CHECK(saw_merge);
    REQUIRE(m.contains("levels"));
    CHECK(!m["levels"].empty());
}

TEST_CASE("single PE metrics arrays have length one") {
    TempDir tmp;
    write_file(tmp.file("in.txt"), "banana");
    CHECK(run_cli({"--input", tmp.file("in.txt"), "--pes", "1", "--metrics", tmp.file("m.json")}) == 0);
    nlohmann::json m = nlohmann::json::parse(read_file(tmp.file("m.json")));
    for (const auto& ph : m["phases"]) CHECK(ph["sent_records"].size() == 1);
}
