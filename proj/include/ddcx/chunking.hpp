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

#ifndef DDCX_CHUNKING_HPP
#define DDCX_CHUNKING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ddcx/rng.hpp"
#include "ddcx/runtime.hpp"

namespace ddcx {

//! A contiguous piece of the text: `payload_len` owned characters starting
//! at `global_start`, followed by `overlap` further characters so that a
//! full window can be built for every payload position without
//! communication. Characters at global positions >= n are sentinel (0).
//! `annotations` carries one rank value per sample slot of the extended
//! range [global_start, global_start + payload_len + overlap); it is empty
//! until ranks are attached.
template <typename Char>
struct Chunk {
    std::uint64_t global_start = 0;
    std::uint32_t payload_len = 0;
    std::uint32_t overlap_len = 0;
    std::vector<Char> chars; // payload_len + overlap_len characters
    std::vector<std::uint64_t> annotations;

    std::span<const Char> payload() const { return {chars.data(), payload_len}; }
    std::span<const Char> overlap() const { return {chars.data() + payload_len, overlap_len}; }
};

struct ChunkingConfig {
    std::uint64_t chunk_size = 512;
    std::uint64_t seed = 0;
    double gamma = 1.0;
};

//! PE that a chunk starting at `global_start` is assigned to: uniform and
//! independent per chunk, keyed only on (seed, global_start) so the
//! assignment is reproducible and independent of where the chunk currently
//! lives.
inline int chunk_target_pe(std::uint64_t seed, std::uint64_t global_start, int pes) {
    return static_cast<int>(uniform_index(seed, global_start, static_cast<std::uint32_t>(pes)));
}

//! Block distribution: PE i holds [i*n/p, (i+1)*n/p).
inline std::uint64_t block_begin(std::uint64_t n, int pes, int rank) {
    return (static_cast<__uint128_t>(n) * rank) / pes;
}

inline int block_owner(std::uint64_t n, int pes, std::uint64_t pos) {
    int i = static_cast<int>((static_cast<__uint128_t>(pos) * pes) / (n ? n : 1));
    if (i >= pes) i = pes - 1;
    while (i + 1 < pes && block_begin(n, pes, i + 1) <= pos) ++i;
    while (i > 0 && block_begin(n, pes, i) > pos) --i;
    return i;
}

//! Where each global text position lives: either the initial block layout
//! or the randomly redistributed chunk layout.
struct TextLayout {
    enum class Kind { block, chunked };
    Kind kind = Kind::block;
    std::uint64_t n = 0;
    int pes = 1;
    std::uint64_t chunk_size = 0; // chunked only
    std::uint64_t seed = 0;       // chunked only

    static TextLayout block(std::uint64_t n, int pes) { return {Kind::block, n, pes, 0, 0}; }
    static TextLayout chunked(std::uint64_t n, int pes, std::uint64_t chunk_size, std::uint64_t seed) {
        return {Kind::chunked, n, pes, chunk_size, seed};
    }

    int owner_of(std::uint64_t pos) const {
        if (kind == Kind::block) return block_owner(n, pes, pos);
        return chunk_target_pe(seed, (pos / chunk_size) * chunk_size, pes);
    }
};

namespace detail {

template <typename Char>
struct ChunkPiece {
    std::uint64_t chunk_start = 0;
    std::uint32_t ext_offset = 0;
    std::vector<Char> chars;
};

// Assembles chunks with boundaries `starts` (plus implicit end n) from the
// block-distributed text, each chunk at the PE `target(chunk_index)` says.
// Every chunk's extended range is filled from the PEs owning those
// characters via one all_to_all; positions >= n stay 0 (sentinel padding).
template <typename Char, typename TargetFn>
std::vector<Chunk<Char>> assemble_chunks(PeContext& ctx, std::span<const Char> local_text,
                                         std::uint64_t global_offset, std::uint64_t n, unsigned overlap,
                                         const std::vector<std::uint64_t>& starts, TargetFn target) {
    const std::uint64_t my_begin = global_offset;
    const std::uint64_t my_end = global_offset + local_text.size();

    auto chunk_len = [&](std::size_t c) {
        std::uint64_t end = (c + 1 < starts.size()) ? starts[c + 1] : n;
        return end - starts[c];
    };

    std::vector<std::vector<ChunkPiece<Char>>> outgoing(ctx.pes());
    if (my_begin < my_end) {
        // first chunk whose extended range reaches into my slice
        std::size_t c = std::upper_bound(starts.begin(), starts.end(), my_begin) - starts.begin();
        c = (c > 0) ? c - 1 : 0;
        while (c > 0 && starts[c] + chunk_len(c) + overlap > my_begin) --c;
        for (; c < starts.size() && starts[c] < my_end; ++c) {
            std::uint64_t ext_begin = starts[c];
            std::uint64_t ext_end = starts[c] + chunk_len(c) + overlap;
            std::uint64_t lo = std::max(ext_begin, my_begin);
            std::uint64_t hi = std::min(ext_end, my_end);
            if (lo >= hi) continue;
            ChunkPiece<Char> piece;
            piece.chunk_start = starts[c];
            piece.ext_offset = static_cast<std::uint32_t>(lo - ext_begin);
            piece.chars.assign(local_text.begin() + (lo - my_begin), local_text.begin() + (hi - my_begin));
            outgoing[target(c)].push_back(std::move(piece));
        }
    }

    std::vector<std::vector<ChunkPiece<Char>>> incoming = all_to_all(ctx, std::move(outgoing));

    std::vector<Chunk<Char>> chunks;
    for (std::size_t c = 0; c < starts.size(); ++c) {
        if (target(c) != ctx.rank() || chunk_len(c) == 0) continue;
        Chunk<Char> chunk;
        chunk.global_start = starts[c];
        chunk.payload_len = static_cast<std::uint32_t>(chunk_len(c));
        chunk.overlap_len = overlap;
        chunk.chars.assign(chunk.payload_len + overlap, Char(0));
        chunks.push_back(std::move(chunk));
    }
    std::sort(chunks.begin(), chunks.end(),
              [](const Chunk<Char>& a, const Chunk<Char>& b) { return a.global_start < b.global_start; });

    auto find_chunk = [&](std::uint64_t start) -> Chunk<Char>& {
        auto it = std::lower_bound(chunks.begin(), chunks.end(), start,
                                   [](const Chunk<Char>& ch, std::uint64_t s) { return ch.global_start < s; });
        return *it;
    };
    for (auto& from : incoming) {
        for (auto& piece : from) {
            Chunk<Char>& chunk = find_chunk(piece.chunk_start);
            std::copy(piece.chars.begin(), piece.chars.end(), chunk.chars.begin() + piece.ext_offset);
        }
    }
    return chunks;
}

} // namespace detail

//! Cuts the global text into chunks of `chunk_size` characters (the last
//! one may be shorter), each with `overlap` following characters
//! (sentinel-padded past the text end). Chunk payloads partition [0, n);
//! every chunk is assembled at the PE owning its first character.
template <typename Char>
std::vector<Chunk<Char>> make_chunks(PeContext& ctx, std::span<const Char> local_text,
                                     std::uint64_t global_offset, std::uint64_t n,
                                     std::uint64_t chunk_size, unsigned overlap) {
    if (chunk_size < 1) throw std::invalid_argument("make_chunks: chunk size must be >= 1");
    std::vector<std::uint64_t> starts;
    starts.reserve(static_cast<std::size_t>(n / chunk_size) + 1);
    for (std::uint64_t s = 0; s < n; s += chunk_size) starts.push_back(s);
    if (starts.empty()) starts.push_back(0);
    return detail::assemble_chunks(ctx, local_text, global_offset, n, overlap, starts,
                                   [&](std::size_t c) { return block_owner(n, ctx.pes(), starts[c]); });
}

//! One chunk per non-empty PE covering exactly its block slice, overlap
//! fetched from the successor PE(s). This is the redistribute=off layout.
template <typename Char>
std::vector<Chunk<Char>> block_chunks(PeContext& ctx, std::span<const Char> local_text,
                                      std::uint64_t global_offset, std::uint64_t n, unsigned overlap) {
    std::vector<std::uint64_t> starts = all_gather(ctx, global_offset);
    starts.erase(std::unique(starts.begin(), starts.end()), starts.end()); // empty slices collapse
    if (starts.empty() || starts.front() != 0) starts.insert(starts.begin(), 0);
    return detail::assemble_chunks(ctx, local_text, global_offset, n, overlap, starts,
                                   [&](std::size_t c) { return block_owner(n, ctx.pes(), starts[c]); });
}

//! Randomly redistributes chunks across PEs, keyed on (seed, global_start).
//! Received chunks are sorted by global_start.
template <typename Char>
std::vector<Chunk<Char>> redistribute(PeContext& ctx, std::vector<Chunk<Char>> chunks, std::uint64_t seed) {
    std::vector<std::vector<Chunk<Char>>> outgoing(ctx.pes());
    for (auto& chunk : chunks)
        outgoing[chunk_target_pe(seed, chunk.global_start, ctx.pes())].push_back(std::move(chunk));
    chunks.clear();

    std::vector<std::vector<Chunk<Char>>> incoming = all_to_all(ctx, std::move(outgoing));
    std::vector<Chunk<Char>> received;
    for (auto& from : incoming)
        for (auto& chunk : from) received.push_back(std::move(chunk));
    std::sort(received.begin(), received.end(),
              [](const Chunk<Char>& a, const Chunk<Char>& b) { return a.global_start < b.global_start; });
    return received;
}

//! Load-bound report: whether n is large enough for the bound to
//! apply and whether the observed per-PE per-bucket maximum stayed below
//! 2n/(pq).
struct LoadBoundReport {
    bool precondition_ok = false;
    double required_n = 0;     // 8c(gamma+2)pq ln(p)/3
    double expected_load = 0;  // n/(pq)
    double bound = 0;          // 2n/(pq)
    std::uint64_t max_observed = 0;
    bool within_bound = false;
};

inline LoadBoundReport check_load_bound(std::uint64_t max_observed, std::uint64_t n, int pes,
                                        std::uint64_t q, std::uint64_t chunk_size, double gamma) {
    LoadBoundReport r;
    r.required_n = 8.0 * static_cast<double>(chunk_size) * (gamma + 2.0) * static_cast<double>(pes) *
                   static_cast<double>(q) * std::log(static_cast<double>(pes)) / 3.0;
    r.precondition_ok = static_cast<double>(n) >= r.required_n;
    r.expected_load = static_cast<double>(n) / (static_cast<double>(pes) * static_cast<double>(q));
    r.bound = 2.0 * r.expected_load;
    r.max_observed = max_observed;
    r.within_bound = static_cast<double>(max_observed) < r.bound;
    return r;
}

} // namespace ddcx

#endif // DDCX_CHUNKING_HPP
