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

#include "ddcx/dcx.hpp"

#include <sstream>

namespace ddcx {

namespace {

template <unsigned X, unsigned D>
std::vector<std::uint64_t> run_cover(PeContext& ctx, std::span<const std::uint8_t> local_text,
                                     const DifferenceCover& cover, const DcxConfig& cfg, PeMetrics& pm,
                                     std::uint64_t n) {
    if (cover.size() != D) {
        std::ostringstream os;
        os << "build_suffix_array: cover modulo " << X << " must have " << D << " offsets, got "
           << cover.size();
        throw std::invalid_argument(os.str());
    }
    std::vector<std::uint8_t> local(local_text.begin(), local_text.end());
    if (cfg.pack) {
        detail::Pipeline<std::uint8_t, X, D, true> pipe(ctx, cover, cfg, pm);
        return pipe.run(std::move(local), n, 0);
    }
    detail::Pipeline<std::uint8_t, X, D, false> pipe(ctx, cover, cfg, pm);
    return pipe.run(std::move(local), n, 0);
}

} // namespace

std::vector<std::uint64_t> build_suffix_array(PeContext& ctx, std::span<const std::uint8_t> local_text,
                                              const DifferenceCover& cover, const DcxConfig& cfg,
                                              PeMetrics* metrics) {
    const std::uint64_t n = all_reduce_sum(ctx, local_text.size());
    const std::uint64_t expected = block_begin(n, ctx.pes(), ctx.rank() + 1) -
                                   block_begin(n, ctx.pes(), ctx.rank());
    if (all_reduce_bool_or(ctx, expected != local_text.size()))
        throw std::invalid_argument("build_suffix_array: local slices must follow the block layout [i*n/p, (i+1)*n/p)");

    PeMetrics scratch;
    PeMetrics& pm = metrics ? *metrics : scratch;

    switch (cover.x()) {
        case 3: return run_cover<3, 2>(ctx, local_text, cover, cfg, pm, n);
        case 7: return run_cover<7, 3>(ctx, local_text, cover, cfg, pm, n);
        case 13: return run_cover<13, 4>(ctx, local_text, cover, cfg, pm, n);
        case 21: return run_cover<21, 5>(ctx, local_text, cover, cfg, pm, n);
        case 31: return run_cover<31, 6>(ctx, local_text, cover, cfg, pm, n);
        default: {
            std::ostringstream os;
            os << "build_suffix_array: unsupported cover modulus " << cover.x() << "; supported:";
            for (unsigned s : DifferenceCover::supported_x()) os << ' ' << s;
            throw std::invalid_argument(os.str());
        }
    }
}

} // namespace ddcx
