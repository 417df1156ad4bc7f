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

#ifndef DDCX_SA_IO_HPP
#define DDCX_SA_IO_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ddcx {

//! Suffix array file layout: n fixed-width little-endian integers, no
//! header. Width is 5 or 8 bytes; the width and byte order live in the
//! metrics sidecar, not in the file.
void write_sa(const std::string& path, std::span<const std::uint64_t> sa, unsigned int_width);

//! Reads a suffix array file written by write_sa (n = file size / width).
std::vector<std::uint64_t> read_sa(const std::string& path, unsigned int_width);

} // namespace ddcx

#endif // DDCX_SA_IO_HPP
