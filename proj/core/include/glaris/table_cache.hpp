#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "glaris/entropy_coder.hpp"
#include "glaris/hyperprior.hpp"

namespace glaris {

// Entropy-coding tables of one model keyed by side information and rate
// index, with first-in first-out eviction. Safe to share between threads.
class TableCache {
 public:
  explicit TableCache(const CodecModel& model, std::size_t capacity = 512);

  std::shared_ptr<const CdfTable> get(const SideInfo& z, int q_lambda);

  const CodecModel& model() const noexcept { return model_; }
  std::size_t hits() const;
  std::size_t misses() const;

 private:
  using Key = std::tuple<int, std::vector<std::uint16_t>, std::vector<bool>>;

  const CodecModel& model_;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::map<Key, std::shared_ptr<const CdfTable>> tables_;
  std::deque<Key> order_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

}  // namespace glaris
