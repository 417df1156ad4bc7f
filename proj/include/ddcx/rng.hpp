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

#ifndef DDCX_RNG_HPP
#define DDCX_RNG_HPP

#include <cstdint>

namespace ddcx {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Splittable seed derivation: distinct streams for distinct (seed, stream)
// pairs, independent of how many streams exist.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 0x632be59bd9b4e019ULL));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return a ^ (b << 1);
}

// Uniform draw from [0, n) keyed on (seed, key); pure function, no engine
// state. Multiply-shift reduction keeps the modulo bias below 2^-64.
inline std::uint32_t uniform_index(std::uint64_t seed, std::uint64_t key, std::uint32_t n) {
    std::uint64_t s = derive_seed(seed, key);
    std::uint64_t h = splitmix64(s);
    return static_cast<std::uint32_t>((static_cast<__uint128_t>(h) * n) >> 64);
}

} // namespace ddcx

#endif // DDCX_RNG_HPP
