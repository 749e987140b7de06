// Test-side runner: one thread per endpoint id, first failure rethrown on the
// caller's thread so doctest sees it.
#pragma once

#include <exception>
#include <functional>
#include <thread>
#include <vector>

inline void run_endpoints(int count, const std::function<void(int)>& body) {
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errs(count);
    threads.reserve(count);
    for (int id = 0; id < count; ++id)
        threads.emplace_back([&, id] {
            try {
                body(id);
            } catch (...) {
                errs[id] = std::current_exception();
            }
        });
    for (auto& t : threads) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}
