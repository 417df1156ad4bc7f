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

#ifndef DDCX_RUNTIME_HPP
#define DDCX_RUNTIME_HPP

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <typeindex>
#include <type_traits>
#include <vector>

#include "ddcx/rng.hpp"

namespace ddcx {

//! Simulated machine: p PEs plus the global seed every PE observes.
struct Topology {
    int pes = 1;
    std::uint64_t seed = 0;
};

//! Raised on every PE that participates in a diverging collective call,
//! i.e. when the SPMD discipline (same collectives in the same order on
//! all PEs) is violated. The message names the diverging operations.
class CollectiveMismatchError : public std::runtime_error {
public:
    explicit CollectiveMismatchError(const std::string& what)
        : std::runtime_error(what) {}
};

namespace detail {

enum class CollectiveOp : std::uint8_t {
    prefix_sum,
    all_to_all,
    all_gather,
    all_reduce,
    broadcast,
    neighbor_exchange,
};

const char* collective_name(CollectiveOp op);

struct Deposit {
    CollectiveOp op = CollectiveOp::prefix_sum;
    std::type_index type = std::type_index(typeid(void));
    std::uint64_t aux = 0; // root rank / reduction kind, must agree on all PEs
    void* payload = nullptr;
};

// Rendezvous point for one collective at a time. Every round: all live PEs
// arrive with a deposit, the completing PE validates that all deposits
// describe the same operation, then everyone reads everyone's payload and
// departs. A PE whose program has finished counts as permanently departed;
// if it is missed by a later collective the round fails with a mismatch.
// After any mismatch the hub stays poisoned so all threads unwind.
class CollectiveHub {
public:
    explicit CollectiveHub(int pes);

    // Blocks until all live PEs arrived; returns the deposit table for the
    // round. Throws CollectiveMismatchError if the round diverges.
    std::span<Deposit> arrive(int rank, Deposit d);
    void depart(int rank);
    void finish(int rank);

private:
    void fail_round_locked(const std::string& message);
    void validate_locked();

    std::mutex mu_;
    std::condition_variable cv_;
    int pes_;
    int arrived_ = 0;
    int departed_ = 0;
    int finished_ = 0;
    std::uint64_t epoch_ = 0;
    bool open_ = false;
    std::vector<Deposit> slots_;
    std::vector<std::uint8_t> present_;
    std::string mismatch_;
};

// Joins the round in the constructor, departs in the destructor.
class Round {
public:
    Round(CollectiveHub& hub, int rank, Deposit d)
        : hub_(hub), rank_(rank), slots_(hub.arrive(rank, d)) {}
    ~Round() { hub_.depart(rank_); }
    Round(const Round&) = delete;
    Round& operator=(const Round&) = delete;

    std::span<Deposit> slots() const { return slots_; }

    template <typename T>
    T& peer(int rank) const {
        return *static_cast<T*>(slots_[rank].payload);
    }

private:
    CollectiveHub& hub_;
    int rank_;
    std::span<Deposit> slots_;
};

} // namespace detail

//! Record traffic of one PE, in records (self-messages excluded).
struct CommCounters {
    std::uint64_t records_sent = 0;
    std::uint64_t records_received = 0;
};

//! Per-PE handle passed to the SPMD program: rank, topology, a derived
//! deterministic RNG stream, and access to the collective service.
class PeContext {
public:
    PeContext(detail::CollectiveHub* hub, int rank, const Topology& topo)
        : hub_(hub), rank_(rank), topo_(topo), rng_(derive_seed(topo.seed, static_cast<std::uint64_t>(rank))) {}

    int rank() const { return rank_; }
    int pes() const { return topo_.pes; }
    std::uint64_t seed() const { return topo_.seed; }
    std::mt19937_64& rng() { return rng_; }
    CommCounters& comm() { return comm_; }
    detail::CollectiveHub& hub() { return *hub_; }

private:
    detail::CollectiveHub* hub_;
    int rank_;
    Topology topo_;
    std::mt19937_64 rng_;
    CommCounters comm_;
};

//! Exclusive prefix sum: PE i receives the sum of the values of PEs 0..i-1.
inline std::uint64_t prefix_sum(PeContext& ctx, std::uint64_t local) {
    detail::Round round(ctx.hub(), ctx.rank(),
                        {detail::CollectiveOp::prefix_sum, std::type_index(typeid(std::uint64_t)), 0, &local});
    std::uint64_t sum = 0;
    for (int j = 0; j < ctx.rank(); ++j) sum += round.peer<std::uint64_t>(j);
    return sum;
}

namespace detail {

enum class ReduceKind : std::uint64_t { bool_or = 1, sum = 2, max = 3, min = 4 };

template <typename T, typename Fold>
T all_reduce(PeContext& ctx, ReduceKind kind, T local, T init, Fold fold) {
    Round round(ctx.hub(), ctx.rank(),
                {CollectiveOp::all_reduce, std::type_index(typeid(T)), static_cast<std::uint64_t>(kind), &local});
    T acc = init;
    for (int j = 0; j < ctx.pes(); ++j) acc = fold(acc, round.peer<T>(j));
    return acc;
}

} // namespace detail

inline bool all_reduce_bool_or(PeContext& ctx, bool local) {
    return detail::all_reduce<std::uint8_t>(ctx, detail::ReduceKind::bool_or, local ? 1 : 0, 0,
                                            [](std::uint8_t a, std::uint8_t b) { return std::uint8_t(a | b); }) != 0;
}

inline std::uint64_t all_reduce_sum(PeContext& ctx, std::uint64_t local) {
    return detail::all_reduce<std::uint64_t>(ctx, detail::ReduceKind::sum, local, 0,
                                             [](std::uint64_t a, std::uint64_t b) { return a + b; });
}

inline std::uint64_t all_reduce_max(PeContext& ctx, std::uint64_t local) {
    return detail::all_reduce<std::uint64_t>(ctx, detail::ReduceKind::max, local, 0,
                                             [](std::uint64_t a, std::uint64_t b) { return a > b ? a : b; });
}

//! Personalized exchange. `outgoing[j]` goes to PE j; PE i receives the
//! vectors addressed to it grouped by sender rank, element order preserved.
//! Vectors are moved, not copied - records must be self-contained values.
template <typename T>
std::vector<std::vector<T>> all_to_all(PeContext& ctx, std::vector<std::vector<T>> outgoing) {
    if (static_cast<int>(outgoing.size()) != ctx.pes())
        throw std::invalid_argument("all_to_all: outgoing must hold one vector per PE");
    for (int j = 0; j < ctx.pes(); ++j)
        if (j != ctx.rank()) ctx.comm().records_sent += outgoing[j].size();

    std::vector<std::vector<T>> incoming(ctx.pes());
    {
        detail::Round round(ctx.hub(), ctx.rank(),
                            {detail::CollectiveOp::all_to_all, std::type_index(typeid(T)), 0, &outgoing});
        for (int j = 0; j < ctx.pes(); ++j) {
            auto& theirs = round.peer<std::vector<std::vector<T>>>(j);
            incoming[j] = std::move(theirs[ctx.rank()]);
        }
    }
    for (int j = 0; j < ctx.pes(); ++j)
        if (j != ctx.rank()) ctx.comm().records_received += incoming[j].size();
    return incoming;
}

//! Concatenation of every PE's value, ordered by rank.
template <typename T>
std::vector<T> all_gather(PeContext& ctx, const T& local) {
    detail::Round round(ctx.hub(), ctx.rank(),
                        {detail::CollectiveOp::all_gather, std::type_index(typeid(T)),
                         0, const_cast<T*>(&local)});
    std::vector<T> result;
    result.reserve(ctx.pes());
    for (int j = 0; j < ctx.pes(); ++j) result.push_back(round.peer<T>(j));
    ctx.comm().records_sent += ctx.pes() - 1;
    ctx.comm().records_received += ctx.pes() - 1;
    return result;
}

//! Gather of whole vectors, concatenated in rank order.
template <typename T>
std::vector<T> all_gather_v(PeContext& ctx, const std::vector<T>& local) {
    detail::Round round(ctx.hub(), ctx.rank(),
                        {detail::CollectiveOp::all_gather, std::type_index(typeid(std::vector<T>)),
                         1, const_cast<std::vector<T>*>(&local)});
    std::vector<T> result;
    for (int j = 0; j < ctx.pes(); ++j) {
        const auto& part = round.peer<std::vector<T>>(j);
        result.insert(result.end(), part.begin(), part.end());
        if (j != ctx.rank()) {
            ctx.comm().records_received += part.size();
            ctx.comm().records_sent += local.size();
        }
    }
    return result;
}

template <typename T>
T broadcast(PeContext& ctx, int root, const T& local) {
    detail::Round round(ctx.hub(), ctx.rank(),
                        {detail::CollectiveOp::broadcast, std::type_index(typeid(T)),
                         static_cast<std::uint64_t>(root), const_cast<T*>(&local)});
    if (ctx.rank() == root)
        ctx.comm().records_sent += ctx.pes() - 1;
    else
        ctx.comm().records_received += 1;
    return round.peer<T>(root);
}

//! Sends `to_prev` to rank-1 and `to_next` to rank+1; returns what the
//! neighbors sent here. Missing neighbors (at rank 0 / p-1) yield nullopt.
template <typename T>
std::pair<std::optional<T>, std::optional<T>> neighbor_exchange(PeContext& ctx, const T& to_prev,
                                                                const T& to_next) {
    struct Payload {
        const T* to_prev;
        const T* to_next;
    } payload{&to_prev, &to_next};
    detail::Round round(ctx.hub(), ctx.rank(),
                        {detail::CollectiveOp::neighbor_exchange, std::type_index(typeid(T)), 0, &payload});
    std::pair<std::optional<T>, std::optional<T>> result;
    if (ctx.rank() > 0) {
        result.first = *round.peer<Payload>(ctx.rank() - 1).to_next;
        ctx.comm().records_sent += 1;
        ctx.comm().records_received += 1;
    }
    if (ctx.rank() + 1 < ctx.pes()) {
        result.second = *round.peer<Payload>(ctx.rank() + 1).to_prev;
        ctx.comm().records_sent += 1;
        ctx.comm().records_received += 1;
    }
    return result;
}

//! Runs `program` on all p PEs to completion and returns the per-rank
//! results. The outcome is a pure function of (topology, program inputs);
//! physical thread scheduling cannot influence it because every value a PE
//! observes flows through rank-ordered collective rounds.
template <typename F>
auto spawn(const Topology& topo, F program) -> std::vector<std::invoke_result_t<F&, PeContext&>> {
    using R = std::invoke_result_t<F&, PeContext&>;
    static_assert(!std::is_void_v<R>, "PE programs must return a value (use a placeholder if unneeded)");
    if (topo.pes < 1) throw std::invalid_argument("spawn: need at least one PE");

    detail::CollectiveHub hub(topo.pes);
    std::vector<std::optional<R>> results(topo.pes);
    std::vector<std::exception_ptr> errors(topo.pes);

    std::vector<std::thread> threads;
    threads.reserve(topo.pes);
    for (int rank = 0; rank < topo.pes; ++rank) {
        threads.emplace_back([&, rank] {
            PeContext ctx(&hub, rank, topo);
            try {
                results[rank].emplace(program(ctx));
            } catch (...) {
                errors[rank] = std::current_exception();
            }
            hub.finish(rank);
        });
    }
    for (auto& t : threads) t.join();

    // Prefer the root cause over secondary mismatch reports.
    std::exception_ptr mismatch;
    for (int rank = 0; rank < topo.pes; ++rank) {
        if (!errors[rank]) continue;
        try {
            std::rethrow_exception(errors[rank]);
        } catch (const CollectiveMismatchError&) {
            if (!mismatch) mismatch = errors[rank];
        } catch (...) {
            std::rethrow_exception(errors[rank]);
        }
    }
    if (mismatch) std::rethrow_exception(mismatch);

    std::vector<R> out;
    out.reserve(topo.pes);
    for (auto& r : results) out.push_back(std::move(*r));
    return out;
}

} // namespace ddcx

#endif // DDCX_RUNTIME_HPP
