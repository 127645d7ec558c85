#pragma once

// Static-partition parallel loop. Work items write into their own slot, so the
// result never depends on the number of workers.

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace formkac {

/// Worker count: explicit value if > 0, else FORMKAC_THREADS, else the
/// hardware concurrency.
int resolve_threads(int requested);

/// Runs fn(i) for i in [0, count) on `threads` workers. The first exception
/// thrown by any item is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn)
{
    threads = resolve_threads(threads);
    if (threads <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += workers) {
                    fn(i);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

/// Compensated summation.
class KahanSum {
public:
    void add(double v)
    {
        const double y = v - c_;
        const double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

}  // namespace formkac
