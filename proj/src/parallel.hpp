// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace atris::detail
{

/// Calls fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first
/// exception after all workers have joined.
template <typename Fn>
void parallel_for(int n, int jobs, Fn&& fn)
{
    auto const workers = std::clamp(jobs, 1, std::max(n, 1));
    if (workers == 1)
    {
        for (int i = 0; i < n; ++i)
            fn(i);
        return;
    }
    auto next = std::atomic<int> {0};
    auto errors = std::vector<std::exception_ptr>(static_cast<std::size_t>(n));
    auto threads = std::vector<std::thread> {};
    for (int w = 0; w < workers; ++w)
    {
        threads.emplace_back([&] {
            for (auto i = next.fetch_add(1); i < n; i = next.fetch_add(1))
            {
                try
                {
                    fn(i);
                }
                catch (...)
                {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        });
    }
    for (auto& t: threads)
        t.join();
    for (auto& e: errors)
    {
        if (e)
            std::rethrow_exception(e);
    }
}

} // namespace atris::detail
