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

#ifndef DDCX_ORACLE_HPP
#define DDCX_ORACLE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ddcx::oracle {

//! Ground-truth suffix array by direct comparison sort of all suffixes.
//! Shares no code with the distributed construction. The implicit sentinel
//! past the end is smaller than every character, so shorter suffixes win
//! ties. Quadratic worst case; guarded at n <= 10^6.
std::vector<std::uint64_t> naive_sa(std::span<const std::uint8_t> text);

struct SaCheck {
    bool ok = true;
    std::uint64_t violation = 0; // first offending SA position when !ok
    std::string reason;

    explicit operator bool() const { return ok; }
};

//! Checks that `sa` is a permutation of [0, n) and that adjacent suffixes
//! strictly increase (strict because the sentinel makes suffixes
//! prefix-free). Linear time via the inverse permutation: suffix order
//! T[a..] < T[b..] is equivalent to (T[a], rank of a+1) < (T[b], rank of
//! b+1).
SaCheck verify_sa(std::span<const std::uint8_t> text, std::span<const std::uint64_t> sa);

} // namespace ddcx::oracle

#endif // DDCX_ORACLE_HPP
