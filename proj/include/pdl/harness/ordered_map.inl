#pragma once

#include <atomic>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <typeinfo>

namespace pdl::harness {

namespace detail {

template <class R, class Work>
bool run_one(Work& work, std::size_t i, std::optional<R>& out, std::string& error) {
    try {
        out.emplace(work(i));
        return true;
    } catch (const std::exception& e) {
        error = e.what();
        if (error.empty()) error = typeid(e).name();
        return false;
    }
}

} // namespace detail

template <class R, class Work, class Emit>
void ordered_map(std::size_t n, std::size_t threads, Work&& work, Emit&& emit) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            std::optional<R> r;
            std::string err;
            detail::run_one<R>(work, i, r, err);
            emit(i, std::move(r), err);
        }
        return;
    }
    std::vector<std::optional<R>> results(n);
    std::vector<std::string> errors(n);
    std::vector<char> done(n, 0);
    std::mutex mu;
    std::condition_variable cv;
    std::atomic<std::size_t> next{0};
    // Bounded look-ahead keeps memory flat when emission is slow.
    const std::size_t window = 4 * threads + 16;
    std::size_t emitted = 0;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            {
                std::unique_lock lk(mu);
                cv.wait(lk, [&] { return i < emitted + window; });
            }
            std::optional<R> r;
            std::string err;
            detail::run_one<R>(work, i, r, err);
            {
                std::lock_guard lk(mu);
                results[i] = std::move(r);
                errors[i] = std::move(err);
                done[i] = 1;
            }
            cv.notify_all();
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    try {
        for (std::size_t i = 0; i < n; ++i) {
            std::optional<R> r;
            std::string err;
            {
                std::unique_lock lk(mu);
                cv.wait(lk, [&] { return done[i] != 0; });
                r = std::move(results[i]);
                err = std::move(errors[i]);
            }
            emit(i, std::move(r), err);
            {
                std::lock_guard lk(mu);
                emitted = i + 1;
            }
            cv.notify_all();
        }
    } catch (...) {
        next.store(n);
        {
            std::lock_guard lk(mu);
            emitted = n;
        }
        cv.notify_all();
        for (auto& th : pool) th.join();
        throw;
    }
    for (auto& th : pool) th.join();
}

} // namespace pdl::harness
