#ifndef BCOPS_PARALLEL_HPP_
#define BCOPS_PARALLEL_HPP_
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bcops {

/// Worker count used when the caller passes 0.
inline std::size_t default_thread_count() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/**
 * Runs `body(i)` for every i in [0, count) on up to `threads` workers.
 *
 * Indices are handed out dynamically, so `body` must not depend on execution
 * order. The first exception thrown by any task is rethrown after all workers
 * have joined; remaining indices are abandoned.
 */
template <typename Body>
void parallel_for(const std::size_t count, std::size_t threads, Body &&body) {
    if (threads == 0) {
        threads = default_thread_count();
    }
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }

    std::atomic<std::size_t> next{ 0 };
    std::atomic<bool> failed{ false };
    std::exception_ptr first_error;
    std::mutex error_mutex;

    const auto worker = [&]() {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) {
                return;
            }
            try {
                body(i);
            } catch (...) {
                const std::lock_guard lock{ error_mutex };
                if (!first_error) {
                    first_error = std::current_exception();
                }
                failed.store(true, std::memory_order_relaxed);
            }
        }
    };

    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

}  // namespace bcops

#endif  // BCOPS_PARALLEL_HPP_
