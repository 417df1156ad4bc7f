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

#ifndef DDCX_DIFFERENCE_COVER_HPP
#define DDCX_DIFFERENCE_COVER_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace ddcx {

//----------------------------------------------------------------------
// A difference cover D modulo X is a subset of [0,X) such that every
// residue k in [0,X) can be written as i - j (mod X) with i, j in D.
// Equivalently, for any two residues k1, k2 there is a shift l < X with
// (k1 + l) mod X in D and (k2 + l) mod X in D; that shift is what makes
// cover-sampled suffix comparison work.
//
// The class precomputes
//   - membership of each residue,
//   - the minimal shift l for every residue pair,
//   - for each residue k, the positions of the offsets d with
//     (k + d) mod X in D (the "rank slots" of a tuple with residue k).
//
// Construction validates the candidate set with is_difference_cover, so
// a mistyped fixture fails immediately instead of corrupting results.
//----------------------------------------------------------------------
class DifferenceCover {
public:
    // Throws std::invalid_argument if `offsets` is not a difference cover
    // modulo x or contains elements outside [0, x).
    DifferenceCover(unsigned x, std::vector<unsigned> offsets);

    // Verified fixture covers for x in {3, 7, 13, 21, 31}.
    // Throws std::invalid_argument for any other x.
    static DifferenceCover builtin(unsigned x);

    static const std::vector<unsigned>& supported_x();

    // True iff the pairwise differences of `candidate` modulo x cover [0, x).
    // Throws std::invalid_argument if x < 1 or an element is out of range.
    static bool is_difference_cover(unsigned x, std::span<const unsigned> candidate);

    // Minimum-cardinality cover modulo x, lexicographically smallest among
    // the minimum ones. Exhaustive search; throws for x > 32.
    static std::vector<unsigned> find_minimal_cover(unsigned x);

    unsigned x() const { return x_; }
    const std::vector<unsigned>& offsets() const { return offsets_; }
    unsigned size() const { return static_cast<unsigned>(offsets_.size()); }

    bool contains(unsigned residue) const { return in_cover_[residue] != 0; }

    // Smallest l in [0, x) with (k1 + l) mod x in D and (k2 + l) mod x in D.
    unsigned shift(unsigned k1, unsigned k2) const {
        return shift_table_[k1 * x_ + k2];
    }

    // For a tuple with residue k, rank slot s holds the rank at offset
    // cover_offset(k, s); slots are ordered by increasing offset.
    // rank_slot(k, l) gives the slot index belonging to offset l
    // (meaningful when (k + l) mod x is in D).
    unsigned rank_slot(unsigned residue, unsigned l) const {
        return slot_table_[residue * x_ + l];
    }
    unsigned cover_offset(unsigned residue, unsigned slot) const {
        return offset_table_[residue * size() + slot];
    }

private:
    unsigned x_;
    std::vector<unsigned> offsets_;      // D, sorted ascending
    std::vector<std::uint8_t> in_cover_; // membership per residue
    std::vector<std::uint16_t> shift_table_;  // x*x minimal shifts
    std::vector<std::uint8_t> slot_table_;    // x*x offset -> slot index
    std::vector<std::uint16_t> offset_table_; // x*size slot -> offset
};

} // namespace ddcx

#endif // DDCX_DIFFERENCE_COVER_HPP
