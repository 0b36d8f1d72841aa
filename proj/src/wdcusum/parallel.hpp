#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace wdcusum {

inline unsigned resolve_workers(unsigned requested) {
    if (requested != 0) {
        return requested;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Calls fn(i) for i in [begin, end) across `workers` threads using contiguous
// blocks. fn must only write state owned by index i; callers aggregate
// afterwards in index order so results do not depend on the worker count.
template <class Fn>
void parallel_for(std::size_t begin, std::size_t end, unsigned workers, Fn &&fn) {
    const std::size_t count = end > begin ? end - begin : 0;
    const std::size_t threads = std::min<std::size_t>(resolve_workers(workers), count);
    if (threads <= 1) {
        for (std::size_t i = begin; i < end; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t block = (count + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t lo = begin + t * block;
        const std::size_t hi = std::min(end, lo + block);
        pool.emplace_back([&, t, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) {
                    fn(i);
                }
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto &th : pool) {
        th.join();
    }
    for (auto &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

// Neumaier-compensated sum in index order.
template <class Range>
double compensated_sum(const Range &values) {
    double sum = 0.0;
    double carry = 0.0;
    for (const double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    return sum + carry;
}

} // namespace wdcusum
