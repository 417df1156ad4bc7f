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

#ifndef DDCX_DCX_HPP
#define DDCX_DCX_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cassert>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "ddcx/chunking.hpp"
#include "ddcx/difference_cover.hpp"
#include "ddcx/dsort.hpp"
#include "ddcx/metrics.hpp"
#include "ddcx/packing.hpp"
#include "ddcx/rng.hpp"
#include "ddcx/runtime.hpp"

namespace ddcx {

//! Knobs of the distributed construction. The defaults follow the evaluated
//! configuration: 32 buckets at the top level, 8 on the first recursion
//! level, one-shot sorting below; chunk redistribution once per level;
//! packing and discarding enabled where they can help.
struct DcxConfig {
    enum class Redistribute { off, level, per_sort };

    std::vector<std::uint32_t> bucket_schedule{32, 8, 1}; // q per depth, last value repeats
    std::uint64_t chunk_size = 512;
    std::uint64_t seed = 0;
    Redistribute redistribute = Redistribute::level;
    bool pack = true;    // pack window characters at depth 0
    bool discard = true; // discard unique-rank samples before recursing
    double discard_min_saving = 0.01;
    std::uint64_t base_case_threshold = 0; // 0: max(4096, 2*X*p)
    std::size_t oversampling = 16;         // splitter samples per bucket
    std::uint32_t phase1_buckets = 0;      // 0/1: one-shot sample sort

    std::uint32_t buckets_at(int depth) const {
        if (bucket_schedule.empty()) return 1;
        std::size_t i = std::min<std::size_t>(depth, bucket_schedule.size() - 1);
        return std::max<std::uint32_t>(1, bucket_schedule[i]);
    }
};

//! Rank of one suffix, addressed by its global start index. Rank 0 is
//! reserved for positions at or past the end of the text.
struct RankEntry {
    std::uint64_t index = 0;
    std::uint64_t rank = 0;
};

namespace detail {

// ---------------------------------------------------------------------
// window storage: plain character array or packed machine words
// ---------------------------------------------------------------------

template <typename Char, unsigned X, bool Packed>
struct PrefixRep;

template <typename Char, unsigned X>
struct PrefixRep<Char, X, false> {
    using Storage = std::array<Char, X>;

    static Storage load(const Char* src, unsigned /*bits*/) {
        Storage s;
        std::copy(src, src + X, s.begin());
        return s;
    }
    static int compare_first(const Storage& a, const Storage& b, unsigned limit, unsigned /*bits*/) {
        for (unsigned i = 0; i < limit; ++i) {
            if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
        }
        return 0;
    }
    static int compare(const Storage& a, const Storage& b, unsigned /*bits*/) {
        return compare_first(a, b, X, 0);
    }
};

template <typename Char, unsigned X>
struct PrefixRep<Char, X, true> {
    static_assert(sizeof(Char) == 1, "packed windows are for byte alphabets");
    static constexpr unsigned words = (X * 8u + 63u) / 64u;
    using Storage = std::array<std::uint64_t, words>;

    static Storage load(const Char* src, unsigned bits) {
        Storage s{};
        const unsigned cpw = 64u / bits; // bits <= 8, so X chars always fit
        for (unsigned i = 0; i < X; ++i) {
            s[i / cpw] |= std::uint64_t(src[i]) << (64u - bits * (i % cpw + 1));
        }
        return s;
    }
    static int compare_first(const Storage& a, const Storage& b, unsigned limit, unsigned bits) {
        const unsigned cpw = 64u / bits;
        const unsigned full = limit / cpw;
        for (unsigned w = 0; w < full; ++w) {
            if (a[w] != b[w]) return a[w] < b[w] ? -1 : 1;
        }
        const unsigned rem = limit % cpw;
        if (rem) {
            std::uint64_t mask = ~std::uint64_t(0) << (64u - bits * rem);
            std::uint64_t av = a[full] & mask, bv = b[full] & mask;
            if (av != bv) return av < bv ? -1 : 1;
        }
        return 0;
    }
    static int compare(const Storage& a, const Storage& b, unsigned /*bits*/) {
        for (unsigned w = 0; w < words; ++w) {
            if (a[w] != b[w]) return a[w] < b[w] ? -1 : 1;
        }
        return 0;
    }
};

} // namespace detail

//! (X-prefix, global index) record of one difference-cover sample suffix.
template <typename Char, unsigned X, bool Packed>
struct SampleTuple {
    typename detail::PrefixRep<Char, X, Packed>::Storage prefix{};
    std::uint64_t index = 0;
};

//! Merge record of one suffix: its X-character window, the |D| sample
//! ranks at the cover offsets of its residue (increasing offset order,
//! 0 for offsets past the text end), and its global index.
template <typename Char, unsigned X, unsigned D, bool Packed>
struct MergeTuple {
    typename detail::PrefixRep<Char, X, Packed>::Storage prefix{};
    std::array<std::uint64_t, D> ranks{};
    std::uint64_t index = 0;

    unsigned residue() const { return static_cast<unsigned>(index % X); }
};

//! Three-way suffix comparison through the difference cover: compare the
//! first l = shift(residues) characters, then the sample ranks at offset l.
//! Returns <0, 0, >0. Zero is unreachable for distinct suffixes of the same
//! text.
template <typename Char, unsigned X, unsigned D, bool Packed>
int compare_merge_tuples(const MergeTuple<Char, X, D, Packed>& a, const MergeTuple<Char, X, D, Packed>& b,
                         const DifferenceCover& cover, unsigned bits) {
    const unsigned ra = a.residue(), rb = b.residue();
    const unsigned l = cover.shift(ra, rb);
    int c = detail::PrefixRep<Char, X, Packed>::compare_first(a.prefix, b.prefix, l, bits);
    if (c != 0) return c;
    const std::uint64_t va = a.ranks[cover.rank_slot(ra, l)];
    const std::uint64_t vb = b.ranks[cover.rank_slot(rb, l)];
    if (va != vb) return va < vb ? -1 : 1;
    return 0;
}

//! Builds the merge record of suffix j from plain arrays: `text` is the
//! whole text, `rank_at` holds the sample rank per position (positions at
//! or past the end read as sentinel/rank 0).
template <typename Char, unsigned X, unsigned D, bool Packed>
MergeTuple<Char, X, D, Packed> make_merge_tuple(std::span<const Char> text, std::uint64_t j,
                                                std::span<const std::uint64_t> rank_at,
                                                const DifferenceCover& cover, unsigned bits) {
    std::array<Char, X> window{};
    for (unsigned i = 0; i < X; ++i)
        window[i] = (j + i < text.size()) ? text[j + i] : Char(0);
    MergeTuple<Char, X, D, Packed> t;
    t.prefix = detail::PrefixRep<Char, X, Packed>::load(window.data(), bits);
    t.index = j;
    const unsigned residue = static_cast<unsigned>(j % X);
    for (unsigned s = 0; s < D; ++s) {
        std::uint64_t pos = j + cover.cover_offset(residue, s);
        t.ranks[s] = (pos < rank_at.size()) ? rank_at[pos] : 0;
    }
    return t;
}

//! Global positions of the difference cover sample: exactly the j < n with
//! (j mod X) in D.
inline std::vector<std::uint64_t> sample_positions(const DifferenceCover& cover, std::uint64_t n) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t j = 0; j < n; ++j)
        if (cover.contains(static_cast<unsigned>(j % cover.x()))) out.push_back(j);
    return out;
}

namespace detail {

// Sequential fallback for base-case texts. Direct comparison sort; shorter
// suffixes win ties through the virtual sentinel. Deliberately simple -
// the distributed algorithm never feeds it more than the base-case bound.
template <typename Char>
std::vector<std::uint64_t> sequential_suffix_sort(std::span<const Char> text) {
    std::vector<std::uint64_t> sa(text.size());
    for (std::size_t i = 0; i < sa.size(); ++i) sa[i] = i;
    std::sort(sa.begin(), sa.end(), [&](std::uint64_t a, std::uint64_t b) {
        std::size_t la = text.size() - a, lb = text.size() - b;
        std::size_t l = std::min(la, lb);
        for (std::size_t i = 0; i < l; ++i) {
            if (text[a + i] != text[b + i]) return text[a + i] < text[b + i];
        }
        return la < lb;
    });
    return sa;
}

struct FlaggedRank {
    std::uint64_t index = 0;
    std::uint64_t rank = 0;
    std::uint8_t shared = 0;
};

// Routes each item to owner(item) and returns what arrived here. Items are
// moved out back to front with periodic shrinking so the sequence is never
// held twice in full; arrival order is not meaningful.
template <typename T, typename OwnerFn>
std::vector<T> exchange_by(PeContext& ctx, std::vector<T> items, OwnerFn owner) {
    std::vector<std::size_t> counts(ctx.pes(), 0);
    for (const T& it : items) ++counts[owner(it)];
    std::vector<std::vector<T>> outgoing(ctx.pes());
    for (int d = 0; d < ctx.pes(); ++d) outgoing[d].reserve(counts[d]);
    const std::size_t shrink_step = std::size_t(4) << 20;
    std::size_t moved = 0;
    for (std::size_t i = items.size(); i-- > 0;) {
        outgoing[owner(items[i])].push_back(std::move(items[i]));
        if (++moved % shrink_step == 0) {
            items.resize(i);
            items.shrink_to_fit();
        }
    }
    items.clear();
    items.shrink_to_fit();

    std::vector<std::vector<T>> incoming = all_to_all(ctx, std::move(outgoing));
    std::size_t total = 0;
    for (const auto& part : incoming) total += part.size();
    std::vector<T> received;
    received.reserve(total);
    for (auto& part : incoming) {
        received.insert(received.end(), std::make_move_iterator(part.begin()),
                        std::make_move_iterator(part.end()));
        part.clear();
        part.shrink_to_fit();
    }
    return received;
}

// T' layout: one block per cover offset (increasing), positions within a
// block ordered by j div X. When n mod X is a cover offset other than the
// last one, the class tail window is sentinel-free and same-class
// comparisons could leak across the class boundary; a single terminator
// entry at virtual position n (strictly smallest character) closes that
// class. See the sequential algorithm's dummy mod-1 suffix for the X=3
// special case of the same construction.
template <unsigned X, unsigned D>
struct RecursiveLayout {
    std::array<std::uint64_t, D> class_begin{};
    std::array<std::uint64_t, D> class_count{};
    std::array<unsigned, D> offsets{};
    std::uint64_t n = 0;
    std::uint64_t n_prime = 0;
    bool has_terminator = false;
    unsigned terminator_class = 0;

    RecursiveLayout(const DifferenceCover& cover, std::uint64_t text_n) {
        n = text_n;
        for (unsigned c = 0; c < D; ++c) offsets[c] = cover.offsets()[c];
        unsigned residue = static_cast<unsigned>(n % X);
        if (cover.contains(residue) && residue != offsets[D - 1]) {
            has_terminator = true;
            for (unsigned c = 0; c < D; ++c)
                if (offsets[c] == residue) terminator_class = c;
        }
        std::uint64_t at = 0;
        for (unsigned c = 0; c < D; ++c) {
            std::uint64_t d = offsets[c];
            std::uint64_t count = (n > d) ? (n - d - 1) / X + 1 : 0;
            if (has_terminator && c == terminator_class) ++count;
            class_begin[c] = at;
            class_count[c] = count;
            at += count;
        }
        n_prime = at;
    }

    std::uint64_t terminator_pos() const {
        return class_begin[terminator_class] + class_count[terminator_class] - 1;
    }

    std::uint64_t t_of(std::uint64_t j) const {
        unsigned residue = static_cast<unsigned>(j % X);
        for (unsigned c = 0; c < D; ++c)
            if (offsets[c] == residue) return class_begin[c] + (j - residue) / X;
        assert(false);
        return 0;
    }

    // inverse of t_of; the terminator maps to j == n
    std::uint64_t j_of(std::uint64_t t) const {
        unsigned c = D - 1;
        while (c > 0 && class_begin[c] > t) --c;
        return offsets[c] + (t - class_begin[c]) * X;
    }
};

struct SaSegment {
    std::uint64_t sa_begin = 0;
    std::vector<std::uint64_t> indices;
};

struct ReducedChar {
    std::uint64_t pos = 0;
    std::uint64_t ch = 0;
};

struct ReducedRank {
    std::uint64_t pos = 0;
    std::uint64_t rank = 0;
};

struct GroupKey {
    std::uint64_t primary = 0;   // phase-1 rank
    std::uint64_t refined = 0;   // recursion rank within the group (0: alone)
    std::uint64_t index = 0;     // suffix index, for a strict order

    friend bool operator<(const GroupKey& a, const GroupKey& b) {
        if (a.primary != b.primary) return a.primary < b.primary;
        if (a.refined != b.refined) return a.refined < b.refined;
        return a.index < b.index;
    }
};

class PhaseTimer {
public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------
// the distributed pipeline, instantiated per (char type, cover, packing)
// ---------------------------------------------------------------------

template <typename Char, unsigned X, unsigned D, bool Packed>
class Pipeline {
public:
    using Prefix = PrefixRep<Char, X, Packed>;
    using Sample = SampleTuple<Char, X, Packed>;
    using Merge = MergeTuple<Char, X, D, Packed>;

    Pipeline(PeContext& ctx, const DifferenceCover& cover, const DcxConfig& cfg, PeMetrics& pm)
        : ctx_(ctx), cover_(cover), cfg_(cfg), pm_(pm) {}

    // local block slice in, local block slice of the SA out
    std::vector<std::uint64_t> run(std::vector<Char> local_text, std::uint64_t n, int depth) {
        if (n == 0) return {};

        LevelMetrics lm;
        lm.depth = depth;
        lm.level_n = n;

        std::uint64_t threshold = cfg_.base_case_threshold
                                      ? cfg_.base_case_threshold
                                      : std::max<std::uint64_t>(4096, 2ull * X * ctx_.pes());
        // below 2X the sample can stop shrinking (every position may be in
        // the cover), so the sequential fallback is mandatory
        threshold = std::max<std::uint64_t>(threshold, 2 * X);
        if (n <= threshold) {
            lm.base_case = true;
            pm_.levels.push_back(lm);
            return base_case(std::move(local_text), n, depth);
        }

        bits_ = static_cast<unsigned>(std::bit_width(std::max<std::uint64_t>(
            all_reduce_max(ctx_, local_max(local_text)), 1)));

        // text layout for this level: random chunks or plain blocks
        std::vector<Chunk<Char>> chunks;
        TextLayout layout;
        std::uint64_t my_begin = block_begin(n, ctx_.pes(), ctx_.rank());
        if (cfg_.redistribute != DcxConfig::Redistribute::off) {
            std::uint64_t level_seed = derive_seed(cfg_.seed, 2 * depth);
            chunks = make_chunks<Char>(ctx_, local_text, my_begin, n, cfg_.chunk_size, X);
            local_text.clear();
            local_text.shrink_to_fit();
            chunks = redistribute(ctx_, std::move(chunks), level_seed);
            layout = TextLayout::chunked(n, ctx_.pes(), cfg_.chunk_size, level_seed);
        } else {
            chunks = block_chunks<Char>(ctx_, local_text, my_begin, n, X);
            local_text.clear();
            local_text.shrink_to_fit();
            layout = TextLayout::block(n, ctx_.pes());
        }

        auto [entries, all_unique] = rank_samples(chunks, layout, n, depth);
        lm.all_unique = all_unique;

        if (!all_unique)
            entries = resolve_ranks_recursively(std::move(entries), layout, n, depth, lm);

        pm_.levels.push_back(lm);

        annotate(chunks, std::move(entries), layout, n, depth);
        return merge_all_suffixes(std::move(chunks), layout, n, depth);
    }

    // the phases below are public so they can be driven one at a time
    static std::uint64_t local_max(const std::vector<Char>& v) {
        std::uint64_t m = 0;
        for (Char c : v) m = std::max<std::uint64_t>(m, static_cast<std::uint64_t>(c));
        return m;
    }

    // ----- base case ---------------------------------------------------

    std::vector<std::uint64_t> base_case(std::vector<Char> local_text, std::uint64_t n, int depth) {
        PhaseTimer timer;
        CommCounters before = ctx_.comm();

        std::vector<std::vector<Char>> to_root(ctx_.pes());
        to_root[0] = std::move(local_text);
        std::vector<std::vector<Char>> gathered = all_to_all(ctx_, std::move(to_root));

        std::vector<std::vector<std::uint64_t>> slices(ctx_.pes());
        std::uint64_t materialized = 0;
        if (ctx_.rank() == 0) {
            std::vector<Char> text;
            text.reserve(n);
            for (auto& part : gathered) text.insert(text.end(), part.begin(), part.end());
            materialized = text.size();
            std::vector<std::uint64_t> sa = sequential_suffix_sort(std::span<const Char>(text));
            for (int r = 0; r < ctx_.pes(); ++r) {
                std::uint64_t b = block_begin(n, ctx_.pes(), r);
                std::uint64_t e = block_begin(n, ctx_.pes(), r + 1);
                slices[r].assign(sa.begin() + b, sa.begin() + e);
            }
        }
        std::vector<std::vector<std::uint64_t>> mine = all_to_all(ctx_, std::move(slices));

        PhaseMetrics ph;
        ph.depth = depth;
        ph.phase = "base_case";
        ph.level_n = n;
        ph.buckets = 1;
        ph.built = {materialized};
        ph.received = {mine[0].size()};
        ph.max_materialized = std::max<std::uint64_t>(materialized, mine[0].size());
        ph.sent_records = ctx_.comm().records_sent - before.records_sent;
        ph.received_records = ctx_.comm().records_received - before.records_received;
        ph.wall_ms = timer.ms();
        pm_.phases.push_back(ph);

        return std::move(mine[0]);
    }

    // ----- phase 1: sort the difference cover sample --------------------

    template <typename Fn>
    void for_each_sample(const std::vector<Chunk<Char>>& chunks, Fn&& fn) const {
        for (const auto& chunk : chunks) {
            for (std::uint32_t off = 0; off < chunk.payload_len; ++off) {
                if (cover_.contains(static_cast<unsigned>((chunk.global_start + off) % X)))
                    fn(chunk, off);
            }
        }
    }

    Sample materialize_sample(const Chunk<Char>& chunk, std::uint32_t off) const {
        Sample s;
        s.prefix = Prefix::load(chunk.chars.data() + off, bits_);
        s.index = chunk.global_start + off;
        return s;
    }

    std::pair<std::vector<FlaggedRank>, bool> rank_samples(const std::vector<Chunk<Char>>& chunks,
                                                           const TextLayout& layout, std::uint64_t n,
                                                           int depth) {
        PhaseTimer timer;
        CommCounters before = ctx_.comm();
        const unsigned bits = bits_;

        auto sample_less = [bits](const Sample& a, const Sample& b) {
            int c = Prefix::compare(a.prefix, b.prefix, bits);
            if (c != 0) return c < 0;
            return a.index < b.index;
        };
        auto prefix_less = [bits](const Sample& a, const Sample& b) {
            return Prefix::compare(a.prefix, b.prefix, bits) < 0;
        };

        std::vector<FlaggedRank> flat;
        bool all_unique = true;
        PhaseMetrics ph;
        ph.depth = depth;
        ph.phase = "sample_sort";
        ph.level_n = n;

        std::uint32_t q1 = std::max<std::uint32_t>(1, cfg_.phase1_buckets);
        if (q1 <= 1) {
            std::vector<Sample> records;
            std::uint64_t count = 0;
            for_each_sample(chunks, [&](const Chunk<Char>&, std::uint32_t) { ++count; });
            records.reserve(count);
            for_each_sample(chunks, [&](const Chunk<Char>& c, std::uint32_t off) {
                records.push_back(materialize_sample(c, off));
            });
            ph.buckets = 1;
            ph.built = {records.size()};
            std::vector<Sample> sorted = global_sort(ctx_, std::move(records), sample_less, cfg_.oversampling);
            ph.received = {sorted.size()};

            DenseRankResult<Sample> rr = dense_rank(ctx_, std::span<const Sample>(sorted), prefix_less);
            all_unique = rr.all_unique;
            flat.reserve(sorted.size());
            for (std::size_t i = 0; i < sorted.size(); ++i)
                flat.push_back({sorted[i].index, rr.ranks[i], rr.shared[i]});
        } else {
            ph.buckets = q1;
            RankCarry<Sample> carry;
            BucketStats stats = bucketed_sort<Sample>(
                ctx_, q1, cfg_.oversampling,
                [&](auto&& fn) {
                    for_each_sample(chunks, [&](const Chunk<Char>& c, std::uint32_t off) {
                        fn(std::pair<const Chunk<Char>*, std::uint32_t>(&c, off));
                    });
                },
                [&](const std::pair<const Chunk<Char>*, std::uint32_t>& e) {
                    return materialize_sample(*e.first, e.second);
                },
                sample_less,
                [&](std::size_t, std::vector<Sample> slice) {
                    DenseRankResult<Sample> rr =
                        dense_rank(ctx_, std::span<const Sample>(slice), prefix_less, &carry);
                    all_unique = all_unique && rr.all_unique;
                    for (std::size_t i = 0; i < slice.size(); ++i)
                        flat.push_back({slice[i].index, rr.ranks[i], rr.shared[i]});
                });
            ph.built = stats.built;
            ph.received = stats.received;
        }
        for (std::size_t k = 0; k < ph.built.size(); ++k)
            ph.max_materialized = std::max({ph.max_materialized, ph.built[k], ph.received[k]});
        ph.sent_records = ctx_.comm().records_sent - before.records_sent;
        ph.received_records = ctx_.comm().records_received - before.records_received;
        ph.wall_ms = timer.ms();
        pm_.phases.push_back(ph);

        // deliver rank entries to the PEs owning the indexed positions
        std::vector<FlaggedRank> home = exchange_by(
            ctx_, std::move(flat), [&](const FlaggedRank& e) { return layout.owner_of(e.index); });
        std::sort(home.begin(), home.end(),
                  [](const FlaggedRank& a, const FlaggedRank& b) { return a.index < b.index; });

        bool unique_everywhere = !all_reduce_bool_or(ctx_, !all_unique);
        return {std::move(home), unique_everywhere};
    }

    // ----- phase 2: unique ranks through recursion ----------------------

    std::vector<FlaggedRank> resolve_ranks_recursively(std::vector<FlaggedRank> entries,
                                                       const TextLayout& layout, std::uint64_t n,
                                                       int depth, LevelMetrics& lm) {
        PhaseTimer timer;
        CommCounters before = ctx_.comm();

        RecursiveLayout<X, D> rl(cover_, n);
        const std::uint64_t np = rl.n_prime;
        const int p = ctx_.pes();
        assert(np <= (static_cast<std::uint64_t>(D) * n + X - 1) / X + D); // recursion progress
        assert(np < n);

        // route (t, rank+1, shared) to the block owners of T'
        std::vector<FlaggedRank> routed = exchange_by(ctx_, std::move(entries), [&](const FlaggedRank& e) {
            return block_owner(np, p, rl.t_of(e.index));
        });

        const std::uint64_t t_begin = block_begin(np, p, ctx_.rank());
        const std::uint64_t t_end = block_begin(np, p, ctx_.rank() + 1);
        std::vector<std::uint64_t> tprime(t_end - t_begin, 0);
        std::vector<std::uint8_t> shared(t_end - t_begin, 0);
        for (const FlaggedRank& e : routed) {
            std::uint64_t t = rl.t_of(e.index);
            tprime[t - t_begin] = e.rank + 1;
            shared[t - t_begin] = e.shared;
        }
        routed.clear();
        routed.shrink_to_fit();
        if (rl.has_terminator) {
            std::uint64_t td = rl.terminator_pos();
            if (td >= t_begin && td < t_end) tprime[td - t_begin] = 1; // strictly smallest character
        }
        for (std::uint64_t v : tprime) assert(v != 0 && "recursive text position left unfilled");

        // keep flag: duplicated rank, or the entry right after a duplicated
        // run (its terminator)
        std::uint64_t kept_local = 0;
        std::vector<std::uint8_t> kept(tprime.size(), 0);
        {
            struct Tail {
                std::uint8_t any = 0;
                std::uint8_t last_shared = 0;
            } tail;
            if (!shared.empty()) {
                tail.any = 1;
                tail.last_shared = shared.back();
            }
            std::vector<Tail> tails = all_gather(ctx_, tail);
            std::uint8_t prev = 0;
            for (int r = ctx_.rank() - 1; r >= 0; --r) {
                if (tails[r].any) {
                    prev = tails[r].last_shared;
                    break;
                }
            }
            for (std::size_t i = 0; i < kept.size(); ++i) {
                std::uint8_t before_me = (i == 0) ? prev : shared[i - 1];
                kept[i] = shared[i] || before_me;
                kept_local += kept[i];
            }
        }
        std::uint64_t kept_total = all_reduce_sum(ctx_, kept_local);
        std::uint64_t savings = np - kept_total;
        bool use_discard = cfg_.discard && savings > 0 &&
                           static_cast<double>(savings) > cfg_.discard_min_saving * static_cast<double>(np);

        std::vector<FlaggedRank> final_entries;
        if (!use_discard) {
            lm.recursion_input = np;
            shared.clear();
            shared.shrink_to_fit();
            record_phase(depth, "recursion_routing", n, before, timer);

            Pipeline<std::uint64_t, X, D, false> rec(ctx_, cover_, cfg_, pm_);
            std::vector<std::uint64_t> sa_slice = rec.run(std::move(tprime), np, depth + 1);

            PhaseTimer return_timer;
            CommCounters at_return = ctx_.comm();
            const std::uint64_t g0 = block_begin(np, p, ctx_.rank());
            std::vector<FlaggedRank> produced;
            produced.reserve(sa_slice.size());
            for (std::size_t i = 0; i < sa_slice.size(); ++i) {
                std::uint64_t j = rl.j_of(sa_slice[i]);
                if (j >= n) continue; // terminator entry
                produced.push_back({j, g0 + i + 1, 0});
            }
            sa_slice.clear();
            sa_slice.shrink_to_fit();
            final_entries = exchange_by(ctx_, std::move(produced),
                                        [&](const FlaggedRank& e) { return layout.owner_of(e.index); });
            record_phase(depth, "rank_return", n, at_return, return_timer);
        } else {
            lm.used_discarding = true;
            lm.recursion_input = kept_total;
            lm.discarded = savings;

            // reduced text: kept entries, order preserved
            std::vector<std::uint64_t> kept_counts = all_gather(ctx_, kept_local);
            std::uint64_t red_off = 0;
            for (int r = 0; r < ctx_.rank(); ++r) red_off += kept_counts[r];
            const std::uint64_t red_n = kept_total;

            std::vector<ReducedChar> kept_chars;
            kept_chars.reserve(kept_local);
            {
                std::uint64_t pos = red_off;
                for (std::size_t i = 0; i < kept.size(); ++i) {
                    if (!kept[i]) continue;
                    kept_chars.push_back({pos, tprime[i]});
                    ++pos;
                }
            }
            std::vector<ReducedChar> arrived = exchange_by(
                ctx_, std::move(kept_chars),
                [&](const ReducedChar& e) { return block_owner(red_n, p, e.pos); });

            const std::uint64_t rb = block_begin(red_n, p, ctx_.rank());
            const std::uint64_t re = block_begin(red_n, p, ctx_.rank() + 1);
            std::vector<std::uint64_t> reduced(re - rb, 0);
            for (const ReducedChar& e : arrived) reduced[e.pos - rb] = e.ch;
            arrived.clear();
            arrived.shrink_to_fit();

            record_phase(depth, "recursion_routing", n, before, timer);

            Pipeline<std::uint64_t, X, D, false> rec(ctx_, cover_, cfg_, pm_);
            std::vector<std::uint64_t> sa_slice = rec.run(std::move(reduced), red_n, depth + 1);

            PhaseTimer return_timer;
            CommCounters at_return = ctx_.comm();

            // refined ranks back to the PEs holding the kept entries
            std::vector<std::uint64_t> kept_begin(p + 1, 0);
            for (int r = 0; r < p; ++r) kept_begin[r + 1] = kept_begin[r] + kept_counts[r];
            const std::uint64_t g0 = block_begin(red_n, p, ctx_.rank());
            std::vector<ReducedRank> produced;
            produced.reserve(sa_slice.size());
            for (std::size_t i = 0; i < sa_slice.size(); ++i) produced.push_back({sa_slice[i], g0 + i + 1});
            sa_slice.clear();
            sa_slice.shrink_to_fit();
            std::vector<ReducedRank> back = exchange_by(ctx_, std::move(produced), [&](const ReducedRank& e) {
                return static_cast<int>(std::upper_bound(kept_begin.begin(), kept_begin.end(), e.pos) -
                                        kept_begin.begin()) - 1;
            });

            std::vector<std::uint64_t> refined(kept_local, 0);
            for (const ReducedRank& e : back) refined[e.pos - red_off] = e.rank;
            back.clear();
            back.shrink_to_fit();

            // total order of all samples: phase-1 rank, then refined rank
            std::vector<GroupKey> keys;
            keys.reserve(tprime.size());
            {
                std::size_t ki = 0;
                for (std::size_t i = 0; i < kept.size(); ++i) {
                    std::uint64_t t = t_begin + i;
                    std::uint64_t j = rl.j_of(t);
                    std::uint64_t r2 = kept[i] ? refined[ki] : 0;
                    if (kept[i]) ++ki;
                    if (j >= n) continue; // terminator
                    keys.push_back({tprime[i], r2, j});
                }
            }
            std::vector<GroupKey> sorted =
                global_sort(ctx_, std::move(keys), std::less<GroupKey>(), cfg_.oversampling);
            std::uint64_t off = prefix_sum(ctx_, sorted.size());

            std::vector<FlaggedRank> produced2;
            produced2.reserve(sorted.size());
            for (std::size_t i = 0; i < sorted.size(); ++i)
                produced2.push_back({sorted[i].index, off + i + 1, 0});
            sorted.clear();
            sorted.shrink_to_fit();
            final_entries = exchange_by(ctx_, std::move(produced2),
                                        [&](const FlaggedRank& e) { return layout.owner_of(e.index); });
            record_phase(depth, "rank_return", n, at_return, return_timer);
        }

        std::sort(final_entries.begin(), final_entries.end(),
                  [](const FlaggedRank& a, const FlaggedRank& b) { return a.index < b.index; });
        return final_entries;
    }

    void record_phase(int depth, const char* name, std::uint64_t n, const CommCounters& before,
                      const PhaseTimer& timer) {
        PhaseMetrics ph;
        ph.depth = depth;
        ph.phase = name;
        ph.level_n = n;
        ph.buckets = 1;
        ph.sent_records = ctx_.comm().records_sent - before.records_sent;
        ph.received_records = ctx_.comm().records_received - before.records_received;
        ph.wall_ms = timer.ms();
        pm_.phases.push_back(ph);
    }

    // ----- phase 3: merge all suffixes ----------------------------------

    // sample slots strictly below pos, over the whole text
    static std::uint64_t slot_global(const DifferenceCover& cover, std::uint64_t pos) {
        return (pos / X) * D + cover.rank_slot(0, static_cast<unsigned>(pos % X));
    }

    void annotate(std::vector<Chunk<Char>>& chunks, std::vector<FlaggedRank> entries,
                  const TextLayout& layout, std::uint64_t n, int depth) {
        PhaseTimer timer;
        CommCounters before = ctx_.comm();
        for (auto& chunk : chunks) {
            std::uint64_t ext_end = chunk.global_start + chunk.payload_len + chunk.overlap_len;
            chunk.annotations.assign(slot_global(cover_, ext_end) - slot_global(cover_, chunk.global_start),
                                     0);
        }

        // an entry may fall into the overlap of up to X/chunk_size + 1
        // preceding chunks; send it to every owner whose extension covers it
        std::vector<std::vector<RankEntry>> outgoing(ctx_.pes());
        std::array<int, 40> targets{};
        std::size_t processed = 0;
        for (std::size_t idx = entries.size(); idx-- > 0;) {
            const FlaggedRank& e = entries[idx];
            std::size_t ntargets = 0;
            auto add = [&](int pe) {
                for (std::size_t i = 0; i < ntargets; ++i)
                    if (targets[i] == pe) return;
                targets[ntargets++] = pe;
            };
            if (layout.kind == TextLayout::Kind::chunked) {
                const std::uint64_t c = layout.chunk_size;
                std::uint64_t id = e.index / c;
                add(layout.owner_of(e.index));
                while (id > 0 && (id - 1) * c + c + X > e.index) {
                    --id;
                    add(chunk_target_pe(layout.seed, id * c, ctx_.pes()));
                }
            } else {
                int b = block_owner(n, ctx_.pes(), e.index);
                add(b);
                while (b > 0 && block_begin(n, ctx_.pes(), b) + X > e.index) {
                    --b;
                    add(b);
                }
            }
            for (std::size_t i = 0; i < ntargets; ++i)
                outgoing[targets[i]].push_back({e.index, e.rank});
            if (++processed % (std::size_t(4) << 20) == 0) {
                entries.resize(idx);
                entries.shrink_to_fit();
            }
        }
        entries.clear();
        entries.shrink_to_fit();

        for (auto& part : all_to_all(ctx_, std::move(outgoing))) {
            for (const RankEntry& e : part) {
                // all local chunks whose extended range covers e.index
                auto it = std::upper_bound(chunks.begin(), chunks.end(), e.index,
                                           [](std::uint64_t pos, const Chunk<Char>& ch) {
                                               return pos < ch.global_start;
                                           });
                while (it != chunks.begin()) {
                    --it;
                    std::uint64_t ext_end = it->global_start + it->payload_len + it->overlap_len;
                    if (ext_end <= e.index) break;
                    it->annotations[slot_global(cover_, e.index) - slot_global(cover_, it->global_start)] =
                        e.rank;
                }
            }
        }
        record_phase(depth, "rank_delivery", n, before, timer);
    }

    unsigned bits() const { return bits_; }
    void set_bits(unsigned b) { bits_ = b; }

private:

    std::vector<std::uint64_t> merge_all_suffixes(std::vector<Chunk<Char>> chunks, TextLayout layout,
                                                  std::uint64_t n, int depth) {
        PhaseTimer timer;
        CommCounters before = ctx_.comm();

        if (cfg_.redistribute == DcxConfig::Redistribute::per_sort) {
            std::uint64_t seed2 = derive_seed(cfg_.seed, 2 * depth + 1);
            chunks = redistribute(ctx_, std::move(chunks), seed2);
            layout = TextLayout::chunked(n, ctx_.pes(), layout.kind == TextLayout::Kind::chunked
                                                            ? layout.chunk_size
                                                            : cfg_.chunk_size,
                                         seed2);
        }

        const unsigned bits = bits_;
        const DifferenceCover& cover = cover_;
        auto merge_less = [&cover, bits](const Merge& a, const Merge& b) {
            int c = compare_merge_tuples(a, b, cover, bits);
            if (c != 0) return c < 0;
            return a.index < b.index;
        };

        auto for_each = [&](auto&& fn) {
            for (const auto& chunk : chunks)
                for (std::uint32_t off = 0; off < chunk.payload_len; ++off)
                    fn(std::pair<const Chunk<Char>*, std::uint32_t>(&chunk, off));
        };
        auto materialize = [&](const std::pair<const Chunk<Char>*, std::uint32_t>& e) {
            const Chunk<Char>& chunk = *e.first;
            const std::uint64_t j = chunk.global_start + e.second;
            Merge t;
            t.prefix = Prefix::load(chunk.chars.data() + e.second, bits_);
            t.index = j;
            const unsigned residue = static_cast<unsigned>(j % X);
            const std::uint64_t base = slot_global(cover_, chunk.global_start);
            for (unsigned s = 0; s < D; ++s) {
                std::uint64_t pos = j + cover_.cover_offset(residue, s);
                t.ranks[s] = chunk.annotations[slot_global(cover_, pos) - base];
            }
            return t;
        };

        std::vector<SaSegment> segments;
        std::uint64_t bucket_base = 0;
        auto sink = [&](std::size_t, std::vector<Merge> slice) {
            std::vector<std::uint64_t> counts = all_gather(ctx_, static_cast<std::uint64_t>(slice.size()));
            std::uint64_t my_pos = 0, total = 0;
            for (int r = 0; r < ctx_.pes(); ++r) {
                if (r < ctx_.rank()) my_pos += counts[r];
                total += counts[r];
            }
            if (!slice.empty()) {
                SaSegment seg;
                seg.sa_begin = bucket_base + my_pos;
                seg.indices.reserve(slice.size());
                for (const Merge& t : slice) seg.indices.push_back(t.index);
                segments.push_back(std::move(seg));
            }
            bucket_base += total;
        };

        std::uint32_t q = cfg_.buckets_at(depth);
        BucketStats stats =
            bucketed_sort<Merge>(ctx_, q, cfg_.oversampling, for_each, materialize, merge_less, sink);

        chunks.clear();
        chunks.shrink_to_fit();

        PhaseMetrics ph;
        ph.depth = depth;
        ph.phase = "merge_sort";
        ph.level_n = n;
        ph.buckets = q;
        ph.built = stats.built;
        ph.received = stats.received;
        ph.max_materialized = stats.peak_materialized();
        ph.sent_records = ctx_.comm().records_sent - before.records_sent;
        ph.received_records = ctx_.comm().records_received - before.records_received;
        ph.wall_ms = timer.ms();
        pm_.phases.push_back(ph);

        // rearrange the SA pieces into block layout: the concatenation over
        // ranks is the suffix array
        struct SaPart {
            std::uint64_t begin = 0;
            std::vector<std::uint64_t> indices;
        };
        std::vector<std::vector<SaPart>> outgoing(ctx_.pes());
        for (SaSegment& seg : segments) {
            std::uint64_t pos = seg.sa_begin;
            std::size_t used = 0;
            while (used < seg.indices.size()) {
                int owner = block_owner(n, ctx_.pes(), pos);
                std::uint64_t owner_end = block_begin(n, ctx_.pes(), owner + 1);
                std::size_t take = static_cast<std::size_t>(
                    std::min<std::uint64_t>(seg.indices.size() - used, owner_end - pos));
                SaPart part;
                part.begin = pos;
                part.indices.assign(seg.indices.begin() + used, seg.indices.begin() + used + take);
                outgoing[owner].push_back(std::move(part));
                used += take;
                pos += take;
            }
            seg.indices.clear();
            seg.indices.shrink_to_fit();
        }
        segments.clear();

        const std::uint64_t my_begin = block_begin(n, ctx_.pes(), ctx_.rank());
        const std::uint64_t my_end = block_begin(n, ctx_.pes(), ctx_.rank() + 1);
        std::vector<std::uint64_t> sa(my_end - my_begin, 0);
        for (auto& from : all_to_all(ctx_, std::move(outgoing)))
            for (SaPart& part : from)
                std::copy(part.indices.begin(), part.indices.end(), sa.begin() + (part.begin - my_begin));
        return sa;
    }

    PeContext& ctx_;
    const DifferenceCover& cover_;
    const DcxConfig& cfg_;
    PeMetrics& pm_;
    unsigned bits_ = 8;

    template <typename C2, unsigned X2, unsigned D2, bool P2>
    friend class Pipeline;
};

} // namespace detail

//! Distributed DCX suffix array construction. `local_text` must be this
//! PE's block slice [rank*n/p, (rank+1)*n/p) of the text; characters are
//! 1..255 (byte 0 is the reserved sentinel). Returns the same block slice
//! of the suffix array: concatenated over ranks it lists all suffix start
//! positions in lexicographic order.
//!
//! The cover must be one of the supported moduli {3, 7, 13, 21, 31} with
//! the canonical cover size (a user-verified cover of the same size works
//! too).
std::vector<std::uint64_t> build_suffix_array(PeContext& ctx, std::span<const std::uint8_t> local_text,
                                              const DifferenceCover& cover, const DcxConfig& cfg,
                                              PeMetrics* metrics = nullptr);

} // namespace ddcx

#endif // DDCX_DCX_HPP
