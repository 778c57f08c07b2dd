#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace topicdpr {

/// Keeps the `k` best items seen so far under the strict order `Better`.
/// The heap root is the worst retained item, so each push is O(log k).
template <typename Item, typename Better>
class BoundedTopK {
 public:
  BoundedTopK(std::size_t k, Better better = Better{}) : k_(k), better_(std::move(better)) {
    heap_.reserve(k);
  }

  /// True iff `item` would be retained.
  bool would_enter(const Item& item) const {
    return heap_.size() < k_ || (k_ > 0 && better_(item, heap_.front()));
  }

  void push(Item item) {
    if (k_ == 0) return;
    if (heap_.size() < k_) {
      heap_.push_back(std::move(item));
      std::push_heap(heap_.begin(), heap_.end(), better_);
    } else if (better_(item, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), better_);
      heap_.back() = std::move(item);
      std::push_heap(heap_.begin(), heap_.end(), better_);
    }
  }

  std::size_t size() const noexcept { return heap_.size(); }
  bool full() const noexcept { return heap_.size() >= k_; }
  /// Worst retained item; only valid when size() > 0.
  const Item& worst() const { return heap_.front(); }

  /// Best first.
  std::vector<Item> take_sorted() && {
    std::sort_heap(heap_.begin(), heap_.end(), better_);
    return std::move(heap_);
  }

 private:
  std::size_t k_;
  Better better_;
  // With `better_` as the heap comparator the front is the worst element.
  std::vector<Item> heap_;
};

}  // namespace topicdpr
