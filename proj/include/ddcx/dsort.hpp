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

#ifndef DDCX_DSORT_HPP
#define DDCX_DSORT_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "ddcx/runtime.hpp"

namespace ddcx {

//! Bucket convention: with splitters s_1 <= ... <= s_{q-1} (and implicit
//! sentinels s_0 = -inf, s_q = +inf), element e belongs to bucket k iff
//! s_k < e <= s_{k+1}. Ties go to the lower bucket, so the assignment is a
//! pure function of the key.
template <typename Record, typename Comp>
std::size_t bucket_of(const Record& e, const std::vector<Record>& splitters, Comp comp) {
    return static_cast<std::size_t>(
        std::lower_bound(splitters.begin(), splitters.end(), e, comp) - splitters.begin());
}

namespace detail {

// k distinct indices from [0, n), ascending. Floyd's sampling on the PE's
// deterministic stream.
inline std::vector<std::uint64_t> sample_indices(std::mt19937_64& rng, std::uint64_t n, std::uint64_t k) {
    if (k >= n) {
        std::vector<std::uint64_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        return all;
    }
    std::vector<std::uint64_t> picked;
    picked.reserve(k);
    for (std::uint64_t j = n - k; j < n; ++j) {
        std::uint64_t t = std::uniform_int_distribution<std::uint64_t>(0, j)(rng);
        auto it = std::lower_bound(picked.begin(), picked.end(), t);
        if (it != picked.end() && *it == t)
            picked.insert(std::lower_bound(picked.begin(), picked.end(), j), j);
        else
            picked.insert(it, t);
    }
    return picked;
}

// Equidistant picks from the union of all PEs' sample records; identical
// result on every PE. The i-th splitter is the (i * N / q)-th smallest
// sample (1-based), i = 1..q-1.
template <typename Record, typename Comp>
std::vector<Record> splitters_from_sample(PeContext& ctx, const std::vector<Record>& local_sample,
                                          std::size_t q, Comp comp) {
    std::vector<Record> sample = all_gather_v(ctx, local_sample);
    if (sample.empty())
        throw std::runtime_error("select_splitters: no PE holds any key but q > 1 buckets were requested");
    std::sort(sample.begin(), sample.end(), comp);
    std::vector<Record> splitters;
    splitters.reserve(q - 1);
    for (std::size_t i = 1; i < q; ++i) {
        std::size_t pos = i * sample.size() / q;
        splitters.push_back(sample[pos > 0 ? pos - 1 : 0]);
    }
    return splitters;
}

// Combines sorted runs into one sorted vector. Small inputs use a binary
// merge tree (stable, fast); large ones switch to concatenate-and-sort,
// freeing each source run right after it is consumed, because the merge
// tree's final pass would briefly hold the data twice.
template <typename Record, typename Comp>
std::vector<Record> merge_runs(std::vector<std::vector<Record>> runs, Comp comp) {
    std::erase_if(runs, [](const std::vector<Record>& r) { return r.empty(); });
    if (runs.empty()) return {};

    std::size_t total = 0;
    for (const auto& r : runs) total += r.size();
    if (total * sizeof(Record) > (std::size_t(256) << 20)) {
        std::vector<Record> all;
        all.reserve(total);
        for (auto& r : runs) {
            all.insert(all.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
            r.clear();
            r.shrink_to_fit();
        }
        std::sort(all.begin(), all.end(), comp);
        return all;
    }

    while (runs.size() > 1) {
        std::vector<std::vector<Record>> next;
        next.reserve((runs.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < runs.size(); i += 2) {
            std::vector<Record> merged;
            merged.reserve(runs[i].size() + runs[i + 1].size());
            std::merge(std::make_move_iterator(runs[i].begin()), std::make_move_iterator(runs[i].end()),
                       std::make_move_iterator(runs[i + 1].begin()), std::make_move_iterator(runs[i + 1].end()),
                       std::back_inserter(merged), comp);
            runs[i].clear();
            runs[i].shrink_to_fit();
            runs[i + 1].clear();
            runs[i + 1].shrink_to_fit();
            next.push_back(std::move(merged));
        }
        if (runs.size() % 2) next.push_back(std::move(runs.back()));
        runs = std::move(next);
    }
    return std::move(runs.front());
}

} // namespace detail

//! Global splitter selection by random oversampling: every PE contributes
//! min(oversampling * q, |local|) sample keys, the union is sorted and q-1
//! equidistant keys are taken. All PEs return the same splitter vector.
template <typename Record, typename Comp>
std::vector<Record> select_splitters(PeContext& ctx, std::span<const Record> local_keys, std::size_t q,
                                     std::size_t oversampling, Comp comp) {
    if (q < 1) throw std::invalid_argument("select_splitters: q must be >= 1");
    if (q == 1) return {};
    std::uint64_t want = static_cast<std::uint64_t>(oversampling) * q;
    std::vector<std::uint64_t> idx = detail::sample_indices(ctx.rng(), local_keys.size(), want);
    std::vector<Record> sample;
    sample.reserve(idx.size());
    for (std::uint64_t i : idx) sample.push_back(local_keys[i]);
    return detail::splitters_from_sample(ctx, sample, q, comp);
}

//! Distributed sample sort. The concatenation of the returned slices over
//! ranks 0..p-1 is a sorted permutation of the global input multiset.
template <typename Record, typename Comp>
std::vector<Record> global_sort(PeContext& ctx, std::vector<Record> local, Comp comp,
                                std::size_t oversampling = 16) {
    std::sort(local.begin(), local.end(), comp);
    if (ctx.pes() == 1) return local;
    if (all_reduce_sum(ctx, local.size()) == 0) return {};

    std::vector<Record> splitters =
        select_splitters(ctx, std::span<const Record>(local), static_cast<std::size_t>(ctx.pes()),
                         oversampling, comp);

    // local is sorted, so the parts are contiguous slices; move them out
    // back to front, releasing the tail as we go, so the data is never held
    // twice in full
    std::vector<std::size_t> cut(ctx.pes() + 1);
    cut[ctx.pes()] = local.size();
    for (int part = ctx.pes() - 1; part >= 1; --part) {
        cut[part] = static_cast<std::size_t>(
            std::upper_bound(local.begin(), local.begin() + cut[part + 1], splitters[part - 1], comp) -
            local.begin());
    }
    std::vector<std::vector<Record>> outgoing(ctx.pes());
    for (int part = ctx.pes() - 1; part >= 0; --part) {
        outgoing[part].assign(std::make_move_iterator(local.begin() + cut[part]),
                              std::make_move_iterator(local.begin() + cut[part + 1]));
        local.resize(cut[part]);
        if (part % 4 == 0) local.shrink_to_fit();
    }
    local.clear();
    local.shrink_to_fit();

    return detail::merge_runs(all_to_all(ctx, std::move(outgoing)), comp);
}

template <typename Record>
struct DenseRankResult {
    std::vector<std::uint64_t> ranks;      // aligned with the local slice, 1-based
    std::vector<std::uint8_t> shared;      // 1 iff the record's key occurs more than once globally
    bool all_unique = true;                // no key occurs twice globally
};

//! Carry state for ranking a stream of globally sorted slices bucket by
//! bucket: the key of the last record ranked so far, the global start of
//! its run, and the number of records ranked so far.
template <typename Record>
struct RankCarry {
    bool valid = false;
    Record key{};
    std::uint64_t run_start = 0;
    std::uint64_t consumed = 0;
};

//! Dense global rank of each record in a globally sorted distributed array:
//! 1 + number of strictly smaller records, so equal records share a rank.
//! Cross-PE runs are resolved from gathered boundary summaries.
template <typename Record, typename KeyLess>
DenseRankResult<Record> dense_rank(PeContext& ctx, std::span<const Record> sorted, KeyLess key_less,
                                   RankCarry<Record>* carry = nullptr) {
    struct Boundary {
        std::uint8_t empty = 1;
        std::uint8_t single_run = 0;
        Record first{};
        Record last{};
        std::uint64_t count = 0;
        std::uint64_t last_run_start = 0; // local index
    };

    auto key_equal = [&](const Record& a, const Record& b) { return !key_less(a, b) && !key_less(b, a); };

    Boundary mine;
    bool local_dup = false;
    std::vector<std::uint64_t> run_start(sorted.size(), 0);
    if (!sorted.empty()) {
        mine.empty = 0;
        mine.first = sorted.front();
        mine.last = sorted.back();
        mine.count = sorted.size();
        std::uint64_t rs = 0;
        for (std::size_t i = 1; i < sorted.size(); ++i) {
            if (key_less(sorted[i - 1], sorted[i]))
                rs = i;
            else
                local_dup = true;
            run_start[i] = rs;
        }
        mine.last_run_start = rs;
        mine.single_run = (rs == 0);
    } else {
        mine.count = 0;
    }

    std::vector<Boundary> info = all_gather(ctx, mine);

    // Walk PE summaries in rank order, tracking the run containing the last
    // record seen so far ("carry"): global start of my first run plus my
    // global offset fall out of the walk.
    bool carry_valid = carry && carry->valid;
    Record carry_key = carry_valid ? carry->key : Record{};
    std::uint64_t carry_start = carry_valid ? carry->run_start : 0;
    std::uint64_t offset = carry ? carry->consumed : 0;
    std::uint64_t my_offset = 0;
    std::uint64_t my_head_start = 0;
    bool boundary_dup = false;

    for (int r = 0; r < ctx.pes(); ++r) {
        if (info[r].empty) {
            if (r == ctx.rank()) {
                my_offset = offset;
                my_head_start = offset;
            }
            continue;
        }
        bool joins = carry_valid && key_equal(carry_key, info[r].first);
        std::uint64_t head_start = joins ? carry_start : offset;
        if (joins) boundary_dup = true;
        if (r == ctx.rank()) {
            my_offset = offset;
            my_head_start = head_start;
        }
        carry_key = info[r].last;
        carry_start = info[r].single_run ? head_start : offset + info[r].last_run_start;
        carry_valid = true;
        offset += info[r].count;
    }

    DenseRankResult<Record> result;
    result.ranks.resize(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        std::uint64_t start = (run_start[i] == 0) ? my_head_start : my_offset + run_start[i];
        result.ranks[i] = start + 1;
    }

    // per-record duplicate flags: in-slice runs plus runs joined across PEs
    result.shared.assign(sorted.size(), 0);
    if (!sorted.empty()) {
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            if ((i > 0 && run_start[i] == run_start[i - 1]) ||
                (i + 1 < sorted.size() && run_start[i + 1] == run_start[i]))
                result.shared[i] = 1;
        }
        if (my_head_start != my_offset)
            for (std::size_t i = 0; i < sorted.size() && run_start[i] == 0; ++i) result.shared[i] = 1;
        for (int r = ctx.rank() + 1; r < ctx.pes(); ++r) {
            if (info[r].empty) continue;
            if (key_equal(info[r].first, mine.last))
                for (std::size_t i = sorted.size(); i-- > 0 && run_start[i] == mine.last_run_start;)
                    result.shared[i] = 1;
            break;
        }
    }
    result.all_unique = !all_reduce_bool_or(ctx, local_dup || boundary_dup);

    if (carry) {
        carry->valid = carry_valid;
        carry->key = carry_key;
        carry->run_start = carry_start;
        carry->consumed = offset;
    }
    return result;
}

//! Per-PE bucket loads of one bucketed sort: how many records this PE
//! materialized for each bucket and how many it held after the exchange.
struct BucketStats {
    std::vector<std::uint64_t> built;
    std::vector<std::uint64_t> received;

    std::uint64_t peak_materialized() const {
        std::uint64_t peak = 0;
        for (std::size_t k = 0; k < built.size(); ++k)
            peak = std::max({peak, built[k], received[k]});
        return peak;
    }
};

//! Space-efficient sorting of a space-efficiently represented sequence:
//! splitters are selected from a materialized sample, every element is
//! tagged with its bucket, and the q buckets are materialized, globally
//! sorted and handed to `sink` one at a time. Concatenating the sink slices
//! over buckets and ranks equals global_sort of the fully materialized
//! input.
//!
//! `for_each(f)` must replay the element sequence identically on every
//! call; `materialize(e)` builds the sortable record of an element.
template <typename Record, typename ForEach, typename Materialize, typename Comp, typename Sink>
BucketStats bucketed_sort(PeContext& ctx, std::size_t q, std::size_t oversampling, ForEach&& for_each,
                          Materialize&& materialize, Comp comp, Sink&& sink) {
    if (q < 1) throw std::invalid_argument("bucketed_sort: q must be >= 1");
    if (q > 65535) throw std::invalid_argument("bucketed_sort: q exceeds the bucket tag range");

    BucketStats stats;
    stats.built.assign(q, 0);
    stats.received.assign(q, 0);

    std::uint64_t local_n = 0;
    for_each([&](auto&&) { ++local_n; });

    if (q == 1) {
        std::vector<Record> records;
        records.reserve(local_n);
        for_each([&](auto&& e) { records.push_back(materialize(e)); });
        stats.built[0] = records.size();
        std::vector<Record> sorted = global_sort(ctx, std::move(records), comp);
        stats.received[0] = sorted.size();
        sink(0, std::move(sorted));
        return stats;
    }

    if (all_reduce_sum(ctx, local_n) == 0) return stats;

    // splitters from a materialized random sample
    std::vector<Record> sample;
    {
        std::vector<std::uint64_t> idx =
            detail::sample_indices(ctx.rng(), local_n, static_cast<std::uint64_t>(oversampling) * q);
        sample.reserve(idx.size());
        std::uint64_t i = 0;
        std::size_t next = 0;
        for_each([&](auto&& e) {
            if (next < idx.size() && idx[next] == i) {
                sample.push_back(materialize(e));
                ++next;
            }
            ++i;
        });
    }
    std::vector<Record> splitters = detail::splitters_from_sample(ctx, sample, q, comp);
    sample.clear();
    sample.shrink_to_fit();

    // tag pass: bucket index per element, via a transient record
    std::vector<std::uint16_t> tags;
    tags.reserve(local_n);
    for_each([&](auto&& e) {
        tags.push_back(static_cast<std::uint16_t>(bucket_of(materialize(e), splitters, comp)));
    });

    for (std::size_t k = 0; k < q; ++k) {
        std::vector<Record> records;
        std::uint64_t i = 0;
        for_each([&](auto&& e) {
            if (tags[i] == k) records.push_back(materialize(e));
            ++i;
        });
        stats.built[k] = records.size();
        std::vector<Record> sorted = global_sort(ctx, std::move(records), comp);
        stats.received[k] = sorted.size();
        sink(k, std::move(sorted));
    }
    return stats;
}

} // namespace ddcx

#endif // DDCX_DSORT_HPP
