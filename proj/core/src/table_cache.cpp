#include "glaris/table_cache.hpp"

#include "glaris/transform_codec.hpp"

namespace glaris {

TableCache::TableCache(const CodecModel& model, std::size_t capacity)
    : model_(model), capacity_(capacity == 0 ? 1 : capacity) {}

std::shared_ptr<const CdfTable> TableCache::get(const SideInfo& z, int q_lambda) {
  Key key{q_lambda, z.indices, z.masked};
  {
    std::lock_guard lock(mutex_);
    if (auto it = tables_.find(key); it != tables_.end()) {
      ++hits_;
      return it->second;
    }
    ++misses_;
  }
  const auto theta = hyper_synthesis(model_, decode_side_info(model_, z), nullptr, false);
  auto table = std::make_shared<const CdfTable>(build_cdf(theta, step_for_q(q_lambda)));

  std::lock_guard lock(mutex_);
  const auto [it, inserted] = tables_.try_emplace(key, table);
  if (inserted) {
    order_.push_back(std::move(key));
    while (order_.size() > capacity_) {
      tables_.erase(order_.front());
      order_.pop_front();
    }
  }
  return it->second;
}

std::size_t TableCache::hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::size_t TableCache::misses() const {
  std::lock_guard lock(mutex_);
  return misses_;
}

}  // namespace glaris
