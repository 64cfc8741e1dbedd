#include "rap/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <thread>

namespace rap {

namespace {

int g_threads = 0;

int effective_threads() {
    if (g_threads > 0) return g_threads;
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

thread_local bool t_in_worker = false;

// Minimal persistent pool. Jobs are (begin, end) ranges pulled from an atomic
// cursor; run() blocks the caller until the whole range is done. Every worker
// participates in every epoch, so the pending count is exact.
class Pool {
public:
    void run(std::size_t n, std::size_t grain, const std::function<void(std::size_t, std::size_t)>& body) {
        std::lock_guard<std::mutex> guard(run_mutex_);
        {
            std::lock_guard<std::mutex> lk(m_);
            int extra = effective_threads() - 1;
            while (static_cast<int>(workers_.size()) < extra) {
                workers_.emplace_back([this] { worker_loop(); });
            }
            body_ = &body;
            total_ = n;
            grain_ = grain;
            cursor_.store(0, std::memory_order_relaxed);
            pending_ = workers_.size() + 1;
            ++epoch_;
            cv_start_.notify_all();
        }

        work();  // caller participates

        std::unique_lock<std::mutex> lk(m_);
        cv_done_.wait(lk, [&] { return pending_ == 0; });
        body_ = nullptr;
    }

private:
    void worker_loop() {
        t_in_worker = true;
        std::uint64_t seen;
        {
            std::lock_guard<std::mutex> lk(m_);
            seen = epoch_;
        }
        for (;;) {
            {
                std::unique_lock<std::mutex> lk(m_);
                cv_start_.wait(lk, [&] { return epoch_ != seen; });
                seen = epoch_;
            }
            work();
        }
    }

    void work() {
        const auto* body = body_;
        for (;;) {
            std::size_t b = cursor_.fetch_add(grain_, std::memory_order_relaxed);
            if (b >= total_) break;
            std::size_t e = std::min(total_, b + grain_);
            (*body)(b, e);
        }
        std::lock_guard<std::mutex> lk(m_);
        if (--pending_ == 0) cv_done_.notify_all();
    }

    std::mutex run_mutex_;
    std::mutex m_;
    std::condition_variable cv_start_, cv_done_;
    std::vector<std::thread> workers_;
    const std::function<void(std::size_t, std::size_t)>* body_ = nullptr;
    std::atomic<std::size_t> cursor_{0};
    std::size_t total_ = 0, grain_ = 1, pending_ = 0;
    std::uint64_t epoch_ = 0;
};

Pool& pool() {
    static Pool* p = new Pool();  // never destroyed; workers are reaped at process exit
    return *p;
}

}  // namespace

void set_threads(int n) { g_threads = n < 0 ? 0 : n; }

int thread_count() { return effective_threads(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
    if (n == 0) return;
    if (effective_threads() <= 1 || t_in_worker || n == 1) {
        body(0, n);
        return;
    }
    std::size_t grain = std::max<std::size_t>(1, n / (static_cast<std::size_t>(effective_threads()) * 8));
    pool().run(n, grain, body);
}

std::size_t reduce_chunk_count(std::size_t n) { return (n + kReduceChunk - 1) / kReduceChunk; }

double deterministic_sum(std::size_t n, const std::function<double(std::size_t)>& term) {
    if (n == 0) return 0.0;
    std::size_t chunks = reduce_chunk_count(n);
    std::vector<double> partial(chunks, 0.0);
    parallel_for(chunks, [&](std::size_t cb, std::size_t ce) {
        for (std::size_t c = cb; c < ce; ++c) {
            std::size_t lo = c * kReduceChunk;
            std::size_t hi = std::min(n, lo + kReduceChunk);
            double s = 0.0;
            for (std::size_t i = lo; i < hi; ++i) s += term(i);
            partial[c] = s;
        }
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

void chunked_reduce(std::size_t n,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& map,
                    const std::function<void(std::size_t)>& combine) {
    if (n == 0) return;
    std::size_t chunks = reduce_chunk_count(n);
    parallel_for(chunks, [&](std::size_t cb, std::size_t ce) {
        for (std::size_t c = cb; c < ce; ++c) {
            std::size_t lo = c * kReduceChunk;
            std::size_t hi = std::min(n, lo + kReduceChunk);
            map(c, lo, hi);
        }
    });
    for (std::size_t c = 0; c < chunks; ++c) combine(c);
}

}  // namespace rap
