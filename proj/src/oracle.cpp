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

#include "ddcx/oracle.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ddcx::oracle {

std::vector<std::uint64_t> naive_sa(std::span<const std::uint8_t> text) {
    if (text.size() > 1000000)
        throw std::invalid_argument("naive_sa: guarded against inputs above 10^6 characters");
    std::vector<std::uint64_t> sa(text.size());
    for (std::size_t i = 0; i < sa.size(); ++i) sa[i] = i;
    std::sort(sa.begin(), sa.end(), [&](std::uint64_t a, std::uint64_t b) {
        std::size_t la = text.size() - a, lb = text.size() - b;
        std::size_t l = std::min(la, lb);
        for (std::size_t i = 0; i < l; ++i) {
            if (text[a + i] != text[b + i]) return text[a + i] < text[b + i];
        }
        return la < lb; // sentinel: the shorter suffix is smaller
    });
    return sa;
}

SaCheck verify_sa(std::span<const std::uint8_t> text, std::span<const std::uint64_t> sa) {
    SaCheck check;
    const std::uint64_t n = text.size();
    if (sa.size() != n) {
        check.ok = false;
        check.violation = 0;
        check.reason = "length mismatch";
        return check;
    }
    if (n == 0) return check;

    // permutation check via the inverse
    std::vector<std::uint64_t> inv(n, n);
    for (std::uint64_t i = 0; i < n; ++i) {
        if (sa[i] >= n) {
            check.ok = false;
            check.violation = i;
            check.reason = "index out of range";
            return check;
        }
        if (inv[sa[i]] != n) {
            check.ok = false;
            check.violation = i;
            check.reason = "duplicate index";
            return check;
        }
        inv[sa[i]] = i;
    }

    // adjacent order: (first char, rank of the successor suffix) must
    // strictly increase; the successor of position n-1 is the sentinel,
    // strictly smaller than every suffix.
    auto succ_rank = [&](std::uint64_t pos) -> std::uint64_t {
        return (pos + 1 < n) ? inv[pos + 1] + 1 : 0;
    };
    for (std::uint64_t i = 1; i < n; ++i) {
        std::uint64_t a = sa[i - 1], b = sa[i];
        if (text[a] != text[b]) {
            if (text[a] < text[b]) continue;
        } else if (succ_rank(a) < succ_rank(b)) {
            continue;
        }
        check.ok = false;
        check.violation = i;
        check.reason = "adjacent suffixes out of order";
        return check;
    }
    return check;
}

} // namespace ddcx::oracle
