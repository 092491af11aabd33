#ifndef HYPOLAB_MC_HPP
#define HYPOLAB_MC_HPP

// Monte Carlo plumbing: a chunked work scheduler whose reductions are
// bit-identical for any worker count.  Work is split into fixed-size chunks;
// per-chunk partials are stored by chunk index and combined in order with
// compensated summation.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "hypolab/algebra.hpp"

namespace hypolab {

constexpr long kMcChunk = 1024;

inline int worker_count() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("HYPOLAB_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1 && cap < static_cast<long>(hw)) hw = static_cast<unsigned>(cap);
  }
  return static_cast<int>(hw);
}

// Neumaier compensated accumulator.
struct Kahan {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    comp += (std::abs(sum) >= std::abs(x)) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double get() const { return sum + comp; }
};

// Runs body(begin, end, chunk_index) over [0, N) in fixed chunks, possibly
// on several threads.  Chunk indices are dense; combine per-chunk results in
// index order for determinism.
template <class Body>
void run_chunked(long N, Body&& body) {
  const long chunks = (N + kMcChunk - 1) / kMcChunk;
  const int workers = std::min<long>(worker_count(), std::max<long>(chunks, 1));
  if (workers <= 1 || chunks <= 1) {
    for (long c = 0; c < chunks; ++c)
      body(c * kMcChunk, std::min(N, (c + 1) * kMcChunk), c);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (int wkr = 0; wkr < workers; ++wkr) {
    pool.emplace_back([&, wkr] {
      try {
        for (;;) {
          const long c = next.fetch_add(1);
          if (c >= chunks) break;
          body(c * kMcChunk, std::min(N, (c + 1) * kMcChunk), c);
        }
      } catch (...) {
        errors[wkr] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Mean and 95% half-width of per-sample rows of width m produced by
// eval(index, out_row).  Partials are per-chunk and combined in chunk order.
template <class Eval>
void mc_moments(long N, int m, Eval&& eval, Vec& mean, Vec& half_width, Mat* store = nullptr) {
  if (N < 1) throw std::invalid_argument("mc: need at least one sample");
  const long chunks = (N + kMcChunk - 1) / kMcChunk;
  Mat chunk_sum = Mat::Zero(m, chunks);
  Mat chunk_sumsq = Mat::Zero(m, chunks);
  if (store) store->resize(m, N);
  run_chunked(N, [&](long begin, long end, long chunk) {
    std::vector<Kahan> s(m), s2(m);
    std::vector<double> row(m);
    for (long j = begin; j < end; ++j) {
      eval(j, row.data());
      for (int c = 0; c < m; ++c) {
        s[c].add(row[c]);
        s2[c].add(row[c] * row[c]);
        if (store) (*store)(c, j) = row[c];
      }
    }
    for (int c = 0; c < m; ++c) {
      chunk_sum(c, chunk) = s[c].get();
      chunk_sumsq(c, chunk) = s2[c].get();
    }
  });
  mean.resize(m);
  half_width.resize(m);
  for (int c = 0; c < m; ++c) {
    Kahan s, s2;
    for (long ch = 0; ch < chunks; ++ch) {
      s.add(chunk_sum(c, ch));
      s2.add(chunk_sumsq(c, ch));
    }
    const double mu = s.get() / N;
    const double var = std::max(0.0, s2.get() / N - mu * mu);
    mean[c] = mu;
    half_width[c] = 1.96 * std::sqrt(var / N);
  }
}

// Chunk-ordered mean/CI of an already materialized sample matrix (m×N).
inline void column_moments(const Mat& samples, Vec& mean, Vec& half_width) {
  const int m = static_cast<int>(samples.rows());
  const long N = samples.cols();
  mc_moments(
      N, m,
      [&](long j, double* out) {
        for (int c = 0; c < m; ++c) out[c] = samples(c, j);
      },
      mean, half_width);
}

}  // namespace hypolab

#endif  // HYPOLAB_MC_HPP
