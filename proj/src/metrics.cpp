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

#include "ddcx/metrics.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "ddcx/chunking.hpp"

namespace ddcx {

std::uint64_t RunMetrics::max_materialized(const std::string& phase, int depth) const {
    std::uint64_t peak = 0;
    for (const PeMetrics& pe : per_pe)
        for (const PhaseMetrics& ph : pe.phases)
            if (ph.phase == phase && (depth < 0 || ph.depth == depth))
                peak = std::max(peak, ph.max_materialized);
    return peak;
}

std::vector<std::uint64_t> RunMetrics::recursion_inputs() const {
    std::vector<std::uint64_t> sizes;
    if (per_pe.empty()) return sizes;
    for (const LevelMetrics& lvl : per_pe.front().levels)
        if (lvl.recursion_input > 0) {
            if (sizes.size() <= static_cast<std::size_t>(lvl.depth)) sizes.resize(lvl.depth + 1, 0);
            sizes[lvl.depth] = lvl.recursion_input;
        }
    return sizes;
}

namespace {

nlohmann::json phase_to_json(const RunMetrics& m, const std::string& phase_name, int depth,
                             std::uint32_t buckets, std::uint64_t level_n) {
    nlohmann::json j;
    j["phase"] = phase_name;
    j["depth"] = depth;
    j["level_n"] = level_n;
    j["buckets"] = buckets;

    nlohmann::json sent = nlohmann::json::array();
    nlohmann::json received = nlohmann::json::array();
    nlohmann::json max_mat = nlohmann::json::array();
    nlohmann::json bucket_built = nlohmann::json::array();
    nlohmann::json bucket_received = nlohmann::json::array();
    nlohmann::json wall = nlohmann::json::array();

    std::uint64_t total_sent = 0, total_received = 0, peak = 0;
    for (const PeMetrics& pe : m.per_pe) {
        for (const PhaseMetrics& ph : pe.phases) {
            if (ph.phase != phase_name || ph.depth != depth) continue;
            sent.push_back(ph.sent_records);
            received.push_back(ph.received_records);
            max_mat.push_back(ph.max_materialized);
            bucket_built.push_back(ph.built);
            bucket_received.push_back(ph.received);
            wall.push_back(ph.wall_ms);
            total_sent += ph.sent_records;
            total_received += ph.received_records;
            peak = std::max(peak, ph.max_materialized);
        }
    }
    j["sent_records"] = sent;
    j["received_records"] = received;
    j["total_sent"] = total_sent;
    j["total_received"] = total_received;
    j["max_materialized"] = max_mat;
    j["max_materialized_any_pe"] = peak;
    j["bucket_built"] = bucket_built;
    j["bucket_received"] = bucket_received;
    j["wall_ms"] = wall;

    if (buckets >= 1 && level_n > 0) {
        double expected = static_cast<double>(level_n) /
                          (static_cast<double>(m.pes) * static_cast<double>(buckets));
        j["expected_load"] = expected;
        j["bound_2n_over_pq"] = 2.0 * expected;
        LoadBoundReport r =
            check_load_bound(peak, level_n, m.pes, buckets, m.chunk_size ? m.chunk_size : 1, m.gamma);
        j["load_bound_precondition_ok"] = r.precondition_ok;
        j["load_bound_required_n"] = r.required_n;
        j["within_bound"] = r.within_bound;
    }
    return j;
}

} // namespace

std::string metrics_to_json(const RunMetrics& m) {
    nlohmann::json root;
    root["n"] = m.n;
    root["pes"] = m.pes;
    root["x"] = m.x;
    root["chunk_size"] = m.chunk_size;
    root["seed"] = m.seed;
    root["gamma"] = m.gamma;

    // distinct (depth, phase) pairs in first-seen order of PE 0
    nlohmann::json phases = nlohmann::json::array();
    if (!m.per_pe.empty()) {
        for (const PhaseMetrics& ph : m.per_pe.front().phases)
            phases.push_back(phase_to_json(m, ph.phase, ph.depth, ph.buckets, ph.level_n));
    }
    root["phases"] = phases;

    nlohmann::json levels = nlohmann::json::array();
    if (!m.per_pe.empty()) {
        for (const LevelMetrics& lvl : m.per_pe.front().levels) {
            nlohmann::json j;
            j["depth"] = lvl.depth;
            j["level_n"] = lvl.level_n;
            j["base_case"] = lvl.base_case;
            j["all_unique"] = lvl.all_unique;
            j["used_discarding"] = lvl.used_discarding;
            j["recursion_input"] = lvl.recursion_input;
            j["discarded"] = lvl.discarded;
            levels.push_back(j);
        }
    }
    root["levels"] = levels;
    root["sa_int_width_note"] = "SA file: fixed-width little-endian integers, no header";
    return root.dump(2);
}

void emit_metrics(const RunMetrics& m, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("metrics: cannot open " + path + " for writing");
    out << metrics_to_json(m) << '\n';
    if (!out) throw std::runtime_error("metrics: write to " + path + " failed");
}

} // namespace ddcx
