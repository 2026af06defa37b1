#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "hhrl/rng.hpp"

namespace hhrl {

// Fixed-capacity ring buffer with uniform without-replacement batch
// sampling. Owns its RNG stream so sampling is reproducible.
template <typename T>
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed)
      : capacity_(capacity), rng_(seed) {
    if (capacity == 0) throw std::invalid_argument("replay: capacity must be positive");
    items_.reserve(capacity);
  }

  void push(T item) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
    } else {
      items_[cursor_] = std::move(item);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool ready(std::size_t batch_size) const { return items_.size() >= batch_size; }
  const T& at(std::size_t i) const { return items_[i]; }

  // Empty optional when fewer than batch_size items are stored (not ready).
  std::optional<std::vector<T>> sample(std::size_t batch_size) {
    if (!ready(batch_size)) return std::nullopt;
    // Partial Fisher-Yates over an index vector: uniform, no replacement.
    indices_.resize(items_.size());
    for (std::size_t i = 0; i < indices_.size(); ++i) indices_[i] = i;
    std::vector<T> batch;
    batch.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
      std::size_t j = i + static_cast<std::size_t>(
                              uniform_int(rng_, static_cast<int>(indices_.size() - i)));
      std::swap(indices_[i], indices_[j]);
      batch.push_back(items_[indices_[i]]);
    }
    return batch;
  }

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<T> items_;
  std::vector<std::size_t> indices_;
  std::mt19937_64 rng_;
};

}  // namespace hhrl
