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

#include "ddcx/difference_cover.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace ddcx {

namespace {

void check_residues(unsigned x, std::span<const unsigned> candidate) {
    if (x < 1)
        throw std::invalid_argument("difference cover: modulus must be >= 1");
    for (unsigned v : candidate) {
        if (v >= x) {
            std::ostringstream os;
            os << "difference cover: element " << v << " outside [0, " << x << ")";
            throw std::invalid_argument(os.str());
        }
    }
}

} // namespace

bool DifferenceCover::is_difference_cover(unsigned x, std::span<const unsigned> candidate) {
    check_residues(x, candidate);
    std::vector<std::uint8_t> seen(x, 0);
    unsigned covered = 0;
    for (unsigned i : candidate) {
        for (unsigned j : candidate) {
            unsigned diff = (i + x - j) % x;
            if (!seen[diff]) {
                seen[diff] = 1;
                ++covered;
            }
        }
    }
    return covered == x;
}

std::vector<unsigned> DifferenceCover::find_minimal_cover(unsigned x) {
    if (x > 32)
        throw std::invalid_argument("find_minimal_cover: exhaustive search is limited to x <= 32");
    if (x < 1)
        throw std::invalid_argument("find_minimal_cover: modulus must be >= 1");

    // Enumerate k-subsets of [0, x) in lexicographic order; the first hit of
    // the smallest size is the canonical result.
    for (unsigned k = 1; k <= x; ++k) {
        std::vector<unsigned> idx(k);
        for (unsigned i = 0; i < k; ++i) idx[i] = i;
        while (true) {
            if (is_difference_cover(x, idx))
                return idx;
            // next combination
            int pos = static_cast<int>(k) - 1;
            while (pos >= 0 && idx[pos] == x - k + pos) --pos;
            if (pos < 0) break;
            ++idx[pos];
            for (unsigned i = pos + 1; i < k; ++i) idx[i] = idx[i - 1] + 1;
        }
    }
    throw std::logic_error("find_minimal_cover: no cover found"); // unreachable, D = [0,x) always covers
}

DifferenceCover::DifferenceCover(unsigned x, std::vector<unsigned> offsets) : x_(x) {
    if (!is_difference_cover(x, offsets)) {
        std::ostringstream os;
        os << "difference cover: the given set is not a difference cover modulo " << x;
        throw std::invalid_argument(os.str());
    }
    std::sort(offsets.begin(), offsets.end());
    offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());
    offsets_ = std::move(offsets);

    in_cover_.assign(x_, 0);
    for (unsigned d : offsets_) in_cover_[d] = 1;

    // Minimal shift per residue pair, by exhaustive scan.
    shift_table_.assign(static_cast<std::size_t>(x_) * x_, 0);
    for (unsigned k1 = 0; k1 < x_; ++k1) {
        for (unsigned k2 = 0; k2 < x_; ++k2) {
            unsigned l = 0;
            while (l < x_ && !(in_cover_[(k1 + l) % x_] && in_cover_[(k2 + l) % x_]))
                ++l;
            // l < x is guaranteed by the cover property just validated
            shift_table_[k1 * x_ + k2] = static_cast<std::uint16_t>(l);
        }
    }

    // For residue k: the offsets d with (k + d) mod x in D, ascending, and
    // the inverse map from offset to slot position.
    slot_table_.assign(static_cast<std::size_t>(x_) * x_, 0);
    offset_table_.assign(static_cast<std::size_t>(x_) * size(), 0);
    for (unsigned k = 0; k < x_; ++k) {
        unsigned slot = 0;
        for (unsigned l = 0; l < x_; ++l) {
            slot_table_[k * x_ + l] = static_cast<std::uint8_t>(slot);
            if (in_cover_[(k + l) % x_]) {
                offset_table_[k * size() + slot] = static_cast<std::uint16_t>(l);
                ++slot;
            }
        }
    }
}

const std::vector<unsigned>& DifferenceCover::supported_x() {
    static const std::vector<unsigned> xs = {3, 7, 13, 21, 31};
    return xs;
}

DifferenceCover DifferenceCover::builtin(unsigned x) {
    // D_3 is the classic {1,2}; the larger ones are minimal covers found by
    // exhaustive search. All are re-validated on construction.
    switch (x) {
        case 3:  return DifferenceCover(3, {1, 2});
        case 7:  return DifferenceCover(7, {0, 1, 3});
        case 13: return DifferenceCover(13, {0, 1, 3, 9});
        case 21: return DifferenceCover(21, {0, 1, 4, 14, 16});
        case 31: return DifferenceCover(31, {0, 1, 3, 8, 12, 18});
        default: {
            std::ostringstream os;
            os << "unsupported difference cover modulus " << x << "; supported:";
            for (unsigned s : supported_x()) os << ' ' << s;
            throw std::invalid_argument(os.str());
        }
    }
}

} // namespace ddcx
