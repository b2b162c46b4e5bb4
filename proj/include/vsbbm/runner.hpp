#pragma once

#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "vsbbm/config.hpp"
#include "vsbbm/records.hpp"

namespace vsbbm {

/// Explicit request, else VSBBM_THREADS, else hardware concurrency.
unsigned resolve_threads(std::optional<unsigned> requested);

/// Runs produce(i) for i in [0, n) on `threads` workers and hands results to
/// consume(i, value) on the calling thread in index order. The first failure
/// stops the run and is rethrown from here.
template <class T>
void ordered_parallel(std::size_t n, unsigned threads, const std::function<T(std::size_t)>& produce,
                      const std::function<void(std::size_t, T&&)>& consume) {
  if (n == 0) return;
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  std::mutex mu;
  std::condition_variable cv;
  std::map<std::size_t, T> ready;
  std::size_t next_task = 0;
  std::size_t next_emit = 0;
  std::exception_ptr failure;
  // Bound the lookahead so memory stays proportional to the worker count.
  const std::size_t window = 4 * static_cast<std::size_t>(threads) + 4;

  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return failure || next_task >= n || next_task < next_emit + window; });
        if (failure || next_task >= n) return;
        i = next_task++;
      }
      try {
        T value = produce(i);
        std::lock_guard lock(mu);
        ready.emplace(i, std::move(value));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
      cv.notify_all();
    }
  };

  std::vector<std::thread> pool;
  for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
  while (next_emit < n) {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return failure || ready.count(next_emit); });
    if (failure) break;
    T value = std::move(ready.at(next_emit));
    ready.erase(next_emit);
    lock.unlock();
    try {
      consume(next_emit, std::move(value));
    } catch (...) {
      lock.lock();
      failure = std::current_exception();
      lock.unlock();
      cv.notify_all();
      break;
    }
    lock.lock();
    ++next_emit;
    lock.unlock();
    cv.notify_all();
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// A replicate failed; carries its index.
class ReplicateError : public std::runtime_error {
 public:
  ReplicateError(std::uint64_t replicate, const std::string& what, bool cap_exceeded = false);
  std::uint64_t replicate;
  bool cap_exceeded;
};

struct ReplicateSpec {
  SpeedProfile profile;
  BranchingLaw law;
  std::vector<double> checkpoints;
  PruneSetting prune;
  std::size_t population_cap = 50'000'000;
  double retention_depth = 10.0;
  std::vector<double> mckean_sigmas;
  PathWindowParams window;
  std::uint64_t seed = 1;

  static ReplicateSpec from_config(const ExperimentConfig& config, double horizon);
};

/// Simulates one replicate and reduces it to a record. Extinct runs are
/// repeated with doubled prune depth.
ReplicateRecord simulate_replicate(const ReplicateSpec& spec, std::uint64_t replicate);

/// All replicates for one spec, in index order, computed in parallel.
std::vector<ReplicateRecord> simulate_batch(const ReplicateSpec& spec, std::uint64_t first, std::size_t count,
                                            unsigned threads);

struct RecordFile {
  nlohmann::json header;
  std::vector<ReplicateRecord> records;
  std::size_t lines = 0;
  std::size_t corrupt = 0;
};

RecordFile read_records(std::istream& in);
RecordFile read_records(const std::string& path);

struct CommandOptions {
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  std::optional<unsigned> threads;
  /// Draw maxima from the fitted model law with this constant instead of
  /// simulating (self-test corpus).
  std::optional<double> synthetic_c;
};

/// Exit codes: 0 ok, 2 usage/config, 3 corrupt input, 4 numerical failure, 5 resource cap.
int cmd_fkpp_front(const ExperimentConfig& config, const CommandOptions& options, std::ostream& log);
int cmd_bbm_sample(const ExperimentConfig& config, const CommandOptions& options, std::ostream& log);
int cmd_analyze(const std::string& records_path, const ExperimentConfig& config, const CommandOptions& options,
                std::ostream& log);

/// Synthetic corpus: maxima drawn from exp(-c Z e^{-sqrt2 y}) around m(t), Z
/// log-normal, recorded at checkpoint `checkpoint`.
std::vector<ReplicateRecord> synthetic_records(const ExperimentConfig& config, double horizon, double c,
                                               std::size_t count, std::uint64_t seed, double checkpoint);

}  // namespace vsbbm
