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

#include "ddcx/runtime.hpp"

#include <sstream>

namespace ddcx {
namespace detail {

const char* collective_name(CollectiveOp op) {
    switch (op) {
        case CollectiveOp::prefix_sum: return "prefix_sum";
        case CollectiveOp::all_to_all: return "all_to_all";
        case CollectiveOp::all_gather: return "all_gather";
        case CollectiveOp::all_reduce: return "all_reduce";
        case CollectiveOp::broadcast: return "broadcast";
        case CollectiveOp::neighbor_exchange: return "neighbor_exchange";
    }
    return "unknown";
}

CollectiveHub::CollectiveHub(int pes) : pes_(pes), slots_(pes), present_(pes, 0) {}

void CollectiveHub::fail_round_locked(const std::string& message) {
    mismatch_ = message;
    open_ = true; // wake everyone; arrive() re-checks mismatch_ before and after waiting
    cv_.notify_all();
}

void CollectiveHub::validate_locked() {
    if (finished_ > 0) {
        std::ostringstream os;
        os << "collective mismatch: ";
        for (int r = 0; r < pes_; ++r)
            if (present_[r]) {
                os << "PE " << r << " entered " << collective_name(slots_[r].op) << "; ";
                break;
            }
        os << finished_ << " PE(s) already completed their program";
        fail_round_locked(os.str());
        return;
    }
    const Deposit& ref = slots_[0];
    for (int r = 1; r < pes_; ++r) {
        const Deposit& d = slots_[r];
        if (d.op != ref.op || d.type != ref.type || d.aux != ref.aux) {
            std::ostringstream os;
            os << "collective mismatch: PE 0 called " << collective_name(ref.op) << " but PE " << r
               << " called " << collective_name(d.op);
            if (d.op == ref.op && d.type != ref.type)
                os << " with a different record type";
            else if (d.op == ref.op && d.aux != ref.aux)
                os << " with different parameters (root/reduction)";
            fail_round_locked(os.str());
            return;
        }
    }
    open_ = true;
    cv_.notify_all();
}

std::span<Deposit> CollectiveHub::arrive(int rank, Deposit d) {
    std::unique_lock<std::mutex> lk(mu_);
    cv_.wait(lk, [&] { return !open_ || !mismatch_.empty(); });
    if (!mismatch_.empty()) throw CollectiveMismatchError(mismatch_);

    slots_[rank] = d;
    present_[rank] = 1;
    ++arrived_;
    if (arrived_ + finished_ == pes_) {
        validate_locked();
    } else {
        cv_.wait(lk, [&] { return open_; });
    }
    if (!mismatch_.empty()) throw CollectiveMismatchError(mismatch_);
    return std::span<Deposit>(slots_);
}

void CollectiveHub::depart(int rank) {
    (void)rank;
    std::unique_lock<std::mutex> lk(mu_);
    if (!mismatch_.empty()) return; // poisoned; no round bookkeeping left to do
    const std::uint64_t my_epoch = epoch_;
    ++departed_;
    if (departed_ == arrived_) {
        arrived_ = 0;
        departed_ = 0;
        std::fill(present_.begin(), present_.end(), 0);
        open_ = false;
        ++epoch_;
        cv_.notify_all();
    } else {
        // Deposited payloads must outlive the round; block until everyone
        // has read what they need.
        cv_.wait(lk, [&] { return epoch_ != my_epoch || !mismatch_.empty(); });
    }
}

void CollectiveHub::finish(int rank) {
    (void)rank;
    std::unique_lock<std::mutex> lk(mu_);
    ++finished_;
    if (mismatch_.empty() && !open_ && arrived_ > 0 && arrived_ + finished_ == pes_) {
        // The PEs currently waiting inside a collective can never be joined.
        validate_locked();
    }
}

} // namespace detail
} // namespace ddcx
