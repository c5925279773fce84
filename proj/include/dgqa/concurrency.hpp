#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dgqa {

/// Applies `fn(item)` over `items` with at most `limit` worker threads.
/// Results land at their input index, so output order is input order
/// regardless of completion order. The first exception thrown by any
/// worker is rethrown after all workers join.
template <typename In, typename F>
auto parallel_map(const std::vector<In>& items, std::size_t limit, F&& fn)
    -> std::vector<decltype(fn(items.front()))> {
    using Out = decltype(fn(items.front()));
    std::vector<Out> results(items.size());
    if (items.empty()) return results;

    const std::size_t workers = std::min(limit == 0 ? std::size_t{1} : limit, items.size());
    if (workers == 1) {
        for (std::size_t i = 0; i < items.size(); ++i) results[i] = fn(items[i]);
        return results;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1);
            if (i >= items.size()) break;
            try {
                results[i] = fn(items[i]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    if (first_error) std::rethrow_exception(first_error);
    return results;
}

}  // namespace dgqa
