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

#ifndef DDCX_METRICS_HPP
#define DDCX_METRICS_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace ddcx {

//! One distributed sorting step of one PE: per-bucket loads and the
//! communication volume it caused.
struct PhaseMetrics {
    int depth = 0;
    std::string phase;                   // "sample_sort", "merge_sort", "base_case"
    std::uint64_t level_n = 0;           // text length at this recursion level
    std::uint32_t buckets = 1;           // q of this step
    std::vector<std::uint64_t> built;    // per bucket: records this PE materialized
    std::vector<std::uint64_t> received; // per bucket: records this PE held after the exchange
    std::uint64_t max_materialized = 0;  // max over buckets of max(built, received)
    std::uint64_t sent_records = 0;
    std::uint64_t received_records = 0;
    double wall_ms = 0.0;
};

//! Recursion bookkeeping of one PE at one level (identical on all PEs).
struct LevelMetrics {
    int depth = 0;
    std::uint64_t level_n = 0;
    bool base_case = false;
    bool all_unique = false;
    bool used_discarding = false;
    std::uint64_t recursion_input = 0; // length of the text handed to the next level
    std::uint64_t discarded = 0;       // sample entries dropped by discarding
};

//! Everything one PE recorded during a run.
struct PeMetrics {
    std::vector<PhaseMetrics> phases;
    std::vector<LevelMetrics> levels;
};

//! Merged view over all PEs, ready for reporting.
struct RunMetrics {
    std::uint64_t n = 0;
    int pes = 1;
    unsigned x = 0;
    std::uint64_t chunk_size = 0;
    std::uint64_t seed = 0;
    double gamma = 1.0;
    std::vector<PeMetrics> per_pe;

    // Max over PEs and buckets of the named phase's materialized records at
    // one recursion depth; ~0 means "any depth".
    std::uint64_t max_materialized(const std::string& phase, int depth = -1) const;
    // Recursion input sizes by depth (from PE 0's level records).
    std::vector<std::uint64_t> recursion_inputs() const;
};

//! Writes the metrics as a stable-schema JSON document.
void emit_metrics(const RunMetrics& metrics, const std::string& path);
std::string metrics_to_json(const RunMetrics& metrics);

} // namespace ddcx

#endif // DDCX_METRICS_HPP
