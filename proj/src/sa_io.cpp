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

#include "ddcx/sa_io.hpp"

#include <fstream>
#include <stdexcept>

namespace ddcx {

namespace {

void check_width(unsigned int_width) {
    if (int_width != 5 && int_width != 8)
        throw std::invalid_argument("sa_io: integer width must be 5 or 8 bytes");
}

} // namespace

void write_sa(const std::string& path, std::span<const std::uint64_t> sa, unsigned int_width) {
    check_width(int_width);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("sa_io: cannot open " + path + " for writing");

    const std::uint64_t limit = (int_width == 8) ? ~std::uint64_t(0) : ((std::uint64_t(1) << 40) - 1);
    std::vector<char> buffer;
    buffer.reserve(1 << 16);
    for (std::uint64_t v : sa) {
        if (v > limit) throw std::invalid_argument("sa_io: index does not fit into 5 bytes");
        for (unsigned b = 0; b < int_width; ++b) buffer.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
        if (buffer.size() >= (1 << 16)) {
            out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
            buffer.clear();
        }
    }
    out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    if (!out) throw std::runtime_error("sa_io: write to " + path + " failed");
}

std::vector<std::uint64_t> read_sa(const std::string& path, unsigned int_width) {
    check_width(int_width);
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("sa_io: cannot open " + path);
    const std::uint64_t bytes = static_cast<std::uint64_t>(in.tellg());
    if (bytes % int_width != 0)
        throw std::runtime_error("sa_io: file size of " + path + " is not a multiple of the integer width");
    in.seekg(0);

    std::vector<std::uint64_t> sa(bytes / int_width, 0);
    std::vector<char> raw(bytes);
    in.read(raw.data(), static_cast<std::streamsize>(bytes));
    if (!in) throw std::runtime_error("sa_io: read from " + path + " failed");
    for (std::size_t i = 0; i < sa.size(); ++i) {
        std::uint64_t v = 0;
        for (unsigned b = 0; b < int_width; ++b)
            v |= std::uint64_t(static_cast<unsigned char>(raw[i * int_width + b])) << (8 * b);
        sa[i] = v;
    }
    return sa;
}

} // namespace ddcx
