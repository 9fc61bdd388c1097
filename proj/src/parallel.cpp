#include "assetgen/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace assetgen
{
    namespace
    {
        std::atomic<unsigned> g_thread_count{0};
    }

    void set_thread_count(unsigned count)
    {
        g_thread_count = count;
    }

    unsigned thread_count()
    {
        const unsigned requested = g_thread_count.load();
        if (requested != 0)
        {
            return requested;
        }
        return std::max(1u, std::thread::hardware_concurrency());
    }

    void parallel_for(size_t n, const std::function<void(size_t)>& body)
    {
        const size_t workers = std::min<size_t>(thread_count(), n);
        if (workers <= 1)
        {
            for (size_t i = 0; i < n; ++i)
            {
                body(i);
            }
            return;
        }

        std::vector<std::exception_ptr> errors(workers);
        {
            std::vector<std::jthread> threads;
            threads.reserve(workers);
            for (size_t w = 0; w < workers; ++w)
            {
                const size_t begin = n * w / workers;
                const size_t end = n * (w + 1) / workers;
                threads.emplace_back([&, w, begin, end] {
                    try
                    {
                        for (size_t i = begin; i < end; ++i)
                        {
                            body(i);
                        }
                    }
                    catch (...)
                    {
                        errors[w] = std::current_exception();
                    }
                });
            }
        }
        for (const auto& e : errors)
        {
            if (e)
            {
                std::rethrow_exception(e);
            }
        }
    }
} // namespace assetgen
