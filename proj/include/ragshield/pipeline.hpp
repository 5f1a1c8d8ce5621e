#pragma once

#include <chrono>
#include <cstddef>
#include <vector>

#include "ragshield/core.hpp"
#include "ragshield/grouping.hpp"
#include "ragshield/identify.hpp"

namespace ragshield {

struct DefenseReport {
    FilterOutcome outcome;
    Strategy strategy_used = Strategy::clustering;
    StageMode stage_mode_used = StageMode::both;
    std::chrono::nanoseconds elapsed{0};
};

/// Two-stage filter: estimate how many passages are adversarial, then pick
/// that many by pairwise-similarity frequency. Sets with fewer than two
/// passages come back untouched. The configuration must be valid.
DefenseReport defend(const RetrievedSet& set, const DefenseConfig& config);

/// Element-wise defend on up to `jobs` threads (0 = hardware concurrency).
/// Results are in input order and identical to a sequential loop.
std::vector<DefenseReport> defend_batch(const std::vector<RetrievedSet>& sets,
                                        const DefenseConfig& config, std::size_t jobs = 1);

/// Runs `fn(i)` for i in [0, n) across worker threads. `fn` must only write
/// to per-index state.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn);

std::size_t resolve_jobs(std::size_t jobs);

}  // namespace ragshield

#include <atomic>
#include <exception>
#include <thread>

namespace ragshield {

template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
    jobs = std::min(resolve_jobs(jobs), n);
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n && !failed; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace ragshield
