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

#ifndef DDCX_PACKING_HPP
#define DDCX_PACKING_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace ddcx {

//! How window characters are laid out in machine words.
//!   off  - one word per character (identity),
//!   fit  - X characters in ceil(X*b/B) words,
//!   fill - the same word count, topped up to floor(words*B/b) characters.
//! Characters are placed big-endian with zeroed slack bits, so comparing
//! word sequences equals comparing character sequences.
struct PackingScheme {
    enum class Mode { off, fit, fill };

    Mode mode = Mode::off;
    unsigned bits_per_char = 8; // b
    static constexpr unsigned word_bits = 64; // B

    unsigned chars_per_word() const { return word_bits / bits_per_char; }

    // words used for an X-character window
    unsigned words_for(unsigned x) const {
        if (mode == Mode::off) return x;
        return (x * bits_per_char + word_bits - 1) / word_bits;
    }

    // characters actually encoded for an X-character window
    unsigned chars_for(unsigned x) const {
        if (mode == Mode::fill) return words_for(x) * chars_per_word();
        return x;
    }
};

//! Packs `chars` (each below 2^b) into words per `scheme`. In off mode the
//! characters are returned widened one per word. Throws on out-of-range
//! characters or unusable b.
template <typename Char>
std::vector<std::uint64_t> pack_prefix(std::span<const Char> chars, const PackingScheme& scheme) {
    const unsigned b = scheme.bits_per_char;
    if (scheme.mode == PackingScheme::Mode::off) {
        std::vector<std::uint64_t> words(chars.begin(), chars.end());
        return words;
    }
    if (b < 1 || b > 64) throw std::invalid_argument("pack_prefix: bits_per_char must be in [1, 64]");
    const unsigned cpw = scheme.chars_per_word();
    std::vector<std::uint64_t> words((chars.size() + cpw - 1) / cpw, 0);
    for (std::size_t i = 0; i < chars.size(); ++i) {
        std::uint64_t value = static_cast<std::uint64_t>(chars[i]);
        if (b < 64 && value >= (std::uint64_t(1) << b))
            throw std::invalid_argument("pack_prefix: character does not fit into bits_per_char bits");
        unsigned slot = static_cast<unsigned>(i % cpw);
        words[i / cpw] |= value << (PackingScheme::word_bits - b * (slot + 1));
    }
    return words;
}

} // namespace ddcx

#endif // DDCX_PACKING_HPP
