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

#include "ddcx/cli.hpp"

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ddcx/chunking.hpp"
#include "ddcx/dcx.hpp"
#include "ddcx/difference_cover.hpp"
#include "ddcx/metrics.hpp"
#include "ddcx/oracle.hpp"
#include "ddcx/runtime.hpp"
#include "ddcx/sa_io.hpp"

namespace ddcx::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

std::vector<std::uint8_t> read_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw std::ios_base::failure("cannot open input file " + path);
    std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> text(static_cast<std::size_t>(size));
    if (size > 0) in.read(reinterpret_cast<char*>(text.data()), size);
    if (!in) throw std::ios_base::failure("cannot read input file " + path);
    return text;
}

} // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"ddcx - distributed DCX suffix array construction on a simulated message-passing runtime"};

    std::string input_path;
    std::string out_path;
    std::string metrics_path;
    unsigned x = 21;
    int pes = 4;
    std::vector<std::uint32_t> buckets{32, 8, 1};
    std::uint64_t chunk_size = 512;
    std::uint64_t seed = 0;
    std::string pack = "auto";
    std::string discard = "auto";
    std::string redistribute = "level";
    unsigned int_width = 8;
    bool verify = false;

    app.add_option("--input", input_path, "input file, raw bytes (byte 0 is reserved for the sentinel)")
        ->required();
    app.add_option("--x", x, "difference cover modulus")
        ->check(CLI::IsMember({3u, 7u, 13u, 21u, 31u}))
        ->capture_default_str();
    app.add_option("--pes", pes, "number of simulated PEs")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--buckets", buckets, "bucket counts per recursion level (last repeats)")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--chunk-size", chunk_size, "chunk size in characters")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--seed", seed, "seed for chunk redistribution and sampling")->capture_default_str();
    app.add_option("--pack", pack, "window packing")->check(CLI::IsMember({"auto", "off"}))->capture_default_str();
    app.add_option("--discard", discard, "discard unique-rank samples before recursing")
        ->check(CLI::IsMember({"auto", "off"}))
        ->capture_default_str();
    app.add_option("--redistribute", redistribute, "random chunk redistribution")
        ->check(CLI::IsMember({"level", "per-sort", "off"}))
        ->capture_default_str();
    app.add_option("--out", out_path, "suffix array output file");
    app.add_option("--int-width", int_width, "bytes per SA entry in the output file")
        ->check(CLI::IsMember({5u, 8u}))
        ->capture_default_str();
    app.add_option("--metrics", metrics_path, "metrics report output file (JSON)");
    app.add_flag("--verify", verify, "check the result against the direct suffix order");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        std::vector<std::uint8_t> text = read_input(input_path);
        for (std::size_t i = 0; i < text.size(); ++i) {
            if (text[i] == 0) {
                std::cerr << "error: input contains byte 0 at offset " << i
                          << "; byte 0 is reserved for the sentinel\n";
                return kExitUsage;
            }
        }
        text.push_back(0); // the sentinel, smallest character, owns SA position n-1
        const std::uint64_t n = text.size();

        DifferenceCover cover = DifferenceCover::builtin(x);
        DcxConfig cfg;
        cfg.bucket_schedule = buckets;
        cfg.chunk_size = chunk_size;
        cfg.seed = seed;
        cfg.pack = (pack == "auto");
        cfg.discard = (discard == "auto");
        cfg.redistribute = (redistribute == "level")      ? DcxConfig::Redistribute::level
                           : (redistribute == "per-sort") ? DcxConfig::Redistribute::per_sort
                                                          : DcxConfig::Redistribute::off;

        auto t0 = std::chrono::steady_clock::now();
        Topology topo{pes, seed};
        auto results = spawn(topo, [&](PeContext& ctx) {
            std::uint64_t b = block_begin(n, ctx.pes(), ctx.rank());
            std::uint64_t e = block_begin(n, ctx.pes(), ctx.rank() + 1);
            PeMetrics pm;
            std::vector<std::uint64_t> slice = build_suffix_array(
                ctx, std::span<const std::uint8_t>(text.data() + b, e - b), cover, cfg, &pm);
            return std::make_pair(std::move(slice), std::move(pm));
        });
        double wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

        std::vector<std::uint64_t> sa;
        sa.reserve(n);
        RunMetrics metrics;
        metrics.n = n;
        metrics.pes = pes;
        metrics.x = x;
        metrics.chunk_size = chunk_size;
        metrics.seed = seed;
        for (auto& [slice, pm] : results) {
            sa.insert(sa.end(), slice.begin(), slice.end());
            metrics.per_pe.push_back(std::move(pm));
        }

        if (!out_path.empty()) write_sa(out_path, sa, int_width);
        if (!metrics_path.empty()) emit_metrics(metrics, metrics_path);

        std::cout << "n=" << n << " pes=" << pes << " x=" << x << " wall_ms=" << wall_ms << '\n';

        if (verify) {
            oracle::SaCheck check = oracle::verify_sa(text, sa);
            if (!check.ok) {
                std::cerr << "verification FAILED at SA position " << check.violation << ": "
                          << check.reason << '\n';
                return kExitVerifyFailed;
            }
            std::cout << "verification ok\n";
        }
        return kExitOk;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
}

} // namespace ddcx::cli
