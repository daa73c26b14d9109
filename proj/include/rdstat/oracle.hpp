#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include "rdstat/error.hpp"
#include "rdstat/histogram.hpp"
#include "rdstat/loopnest.hpp"

// Exact reuse-distance engines. The distance of an access is the number of
// distinct locations touched since the previous access to the same location;
// first touches are cold (-1). Two independent engines compute it:
//
//   LruStackScan  - the definition made literal: an LRU stack, linear scan
//                   per access, O(n*m). Reference implementation.
//   OlkenEngine   - a size-augmented balanced tree over last-access times,
//                   O(n log m). Production implementation.
//
// They must agree bit for bit; the test suite holds them to that.

namespace rdstat {

struct Touch {
  std::int64_t distance = -1; // -1 = cold
  std::int64_t producer = -1; // seq of the previous access to this location
};

class LruStackScan {
 public:
  Touch access(std::uint64_t loc) {
    std::uint64_t now = clock_++;
    Touch t;
    auto it = last_seq_.find(loc);
    if (it != last_seq_.end()) {
      t.producer = static_cast<std::int64_t>(it->second);
      it->second = now;
    } else {
      last_seq_.emplace(loc, now);
    }
    for (std::size_t k = stack_.size(); k-- > 0;) {
      if (stack_[k] == loc) {
        t.distance = static_cast<std::int64_t>(stack_.size() - 1 - k);
        stack_.erase(stack_.begin() + static_cast<std::ptrdiff_t>(k));
        break;
      }
    }
    stack_.push_back(loc);
    return t;
  }

  std::int64_t distinct() const { return static_cast<std::int64_t>(stack_.size()); }

 private:
  std::vector<std::uint64_t> stack_; // most recent at the back
  std::unordered_map<std::uint64_t, std::uint64_t> last_seq_;
  std::uint64_t clock_ = 0;
};

namespace detail {

// Order-statistic AVL keyed by access time. Supports insert, erase and
// "how many keys exceed k", each logarithmic. Nodes live in an arena with a
// free list since the engine erases one key per reuse.
class OrderStatTree {
 public:
  void insert(std::uint64_t key) { root_ = insert_at(root_, key); }
  void erase(std::uint64_t key) { root_ = erase_at(root_, key); }

  std::int64_t count_greater(std::uint64_t key) const {
    std::int64_t count = 0;
    std::int32_t i = root_;
    while (i >= 0) {
      const Node& n = nodes_[static_cast<std::size_t>(i)];
      if (key < n.key) {
        count += subtree_size(n.right) + 1;
        i = n.left;
      } else if (key == n.key) {
        count += subtree_size(n.right);
        return count;
      } else {
        i = n.right;
      }
    }
    return count;
  }

  std::int64_t size() const { return subtree_size(root_); }

 private:
  struct Node {
    std::uint64_t key = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int32_t height = 1;
    std::int64_t size = 1;
  };

  std::int64_t subtree_size(std::int32_t i) const {
    return i < 0 ? 0 : nodes_[static_cast<std::size_t>(i)].size;
  }
  std::int32_t height(std::int32_t i) const {
    return i < 0 ? 0 : nodes_[static_cast<std::size_t>(i)].height;
  }

  Node& at(std::int32_t i) { return nodes_[static_cast<std::size_t>(i)]; }

  void pull(std::int32_t i) {
    Node& n = at(i);
    n.height = 1 + std::max(height(n.left), height(n.right));
    n.size = 1 + subtree_size(n.left) + subtree_size(n.right);
  }

  std::int32_t rotate_right(std::int32_t i) {
    std::int32_t l = at(i).left;
    at(i).left = at(l).right;
    at(l).right = i;
    pull(i);
    pull(l);
    return l;
  }

  std::int32_t rotate_left(std::int32_t i) {
    std::int32_t r = at(i).right;
    at(i).right = at(r).left;
    at(r).left = i;
    pull(i);
    pull(r);
    return r;
  }

  std::int32_t rebalance(std::int32_t i) {
    pull(i);
    int bf = height(at(i).left) - height(at(i).right);
    if (bf > 1) {
      if (height(at(at(i).left).left) < height(at(at(i).left).right))
        at(i).left = rotate_left(at(i).left);
      return rotate_right(i);
    }
    if (bf < -1) {
      if (height(at(at(i).right).right) < height(at(at(i).right).left))
        at(i).right = rotate_right(at(i).right);
      return rotate_left(i);
    }
    return i;
  }

  std::int32_t make_node(std::uint64_t key) {
    if (free_ >= 0) {
      std::int32_t i = free_;
      free_ = at(i).left;
      at(i) = Node{key, -1, -1, 1, 1};
      return i;
    }
    nodes_.push_back(Node{key, -1, -1, 1, 1});
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  void recycle(std::int32_t i) {
    at(i).left = free_;
    free_ = i;
  }

  std::int32_t insert_at(std::int32_t i, std::uint64_t key) {
    if (i < 0) return make_node(key);
    if (key < at(i).key)
      at(i).left = insert_at(at(i).left, key);
    else
      at(i).right = insert_at(at(i).right, key);
    return rebalance(i);
  }

  // Detach the minimum node of subtree i; out gets its index.
  std::int32_t detach_min(std::int32_t i, std::int32_t& out) {
    if (at(i).left < 0) {
      out = i;
      return at(i).right;
    }
    at(i).left = detach_min(at(i).left, out);
    return rebalance(i);
  }

  std::int32_t erase_at(std::int32_t i, std::uint64_t key) {
    if (i < 0) fail(Fault::Internal, "order-statistic tree erase of a missing key");
    if (key < at(i).key) {
      at(i).left = erase_at(at(i).left, key);
    } else if (key > at(i).key) {
      at(i).right = erase_at(at(i).right, key);
    } else {
      std::int32_t l = at(i).left, r = at(i).right;
      recycle(i);
      if (r < 0) return l; // may be -1 too
      std::int32_t succ = -1;
      r = detach_min(r, succ);
      at(succ).left = l;
      at(succ).right = r;
      return rebalance(succ);
    }
    return rebalance(i);
  }

  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
  std::int32_t free_ = -1;
};

} // namespace detail

class OlkenEngine {
 public:
  Touch access(std::uint64_t loc) {
    std::uint64_t now = clock_++;
    Touch t;
    auto it = last_seq_.find(loc);
    if (it == last_seq_.end()) {
      last_seq_.emplace(loc, now);
      tree_.insert(now);
      return t; // cold
    }
    std::uint64_t prev = it->second;
    t.producer = static_cast<std::int64_t>(prev);
    t.distance = tree_.count_greater(prev);
    tree_.erase(prev);
    tree_.insert(now);
    it->second = now;
    return t;
  }

  std::int64_t distinct() const { return static_cast<std::int64_t>(last_seq_.size()); }

  void reserve(std::size_t n) { last_seq_.reserve(n); }

 private:
  detail::OrderStatTree tree_;
  std::unordered_map<std::uint64_t, std::uint64_t> last_seq_;
  std::uint64_t clock_ = 0;
};

// ---------------------------------------------------------------------------

struct RdResult {
  ReuseHistogram hist;
  std::vector<std::int64_t> distances; // per event, -1 for cold
};

template <typename Engine>
RdResult rd_with(std::span<const AccessEvent> stream) {
  Engine engine;
  RdResult result;
  result.distances.reserve(stream.size());
  for (const AccessEvent& ev : stream) {
    Touch t = engine.access(ev.loc);
    result.hist.add(t.distance < 0 ? kColdKey : t.distance);
    result.distances.push_back(t.distance);
  }
  return result;
}

inline RdResult rd_naive(std::span<const AccessEvent> stream) {
  return rd_with<LruStackScan>(stream);
}

inline RdResult rd_tree(std::span<const AccessEvent> stream) {
  return rd_with<OlkenEngine>(stream);
}

// ---------------------------------------------------------------------------
// Classed reuse: partition the non-cold accesses by a caller-defined key
// (location, static site pair, loop carry level, whatever the caller closes
// over) and list each class's distances in ascending order with counts. The
// list index is the class's distance rank.

struct DistCount {
  std::int64_t distance = 0;
  std::int64_t count = 0;
  bool operator==(const DistCount&) const = default;
};

template <typename KeyFn>
auto rd_by_class(std::span<const AccessEvent> stream, KeyFn&& key_of)
    -> std::map<std::decay_t<std::invoke_result_t<KeyFn&, std::size_t, std::size_t>>,
                std::vector<DistCount>> {
  using Key = std::decay_t<std::invoke_result_t<KeyFn&, std::size_t, std::size_t>>;
  std::map<Key, std::map<std::int64_t, std::int64_t>> grouped;
  OlkenEngine engine;
  for (std::size_t seq = 0; seq < stream.size(); ++seq) {
    Touch t = engine.access(stream[seq].loc);
    if (t.distance < 0) continue;
    Key key = key_of(seq, static_cast<std::size_t>(t.producer));
    grouped[key][t.distance] += 1;
  }
  std::map<Key, std::vector<DistCount>> out;
  for (auto& [key, dists] : grouped) {
    std::vector<DistCount>& list = out[key];
    for (const auto& [d, n] : dists) list.push_back({d, n});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Small convenience for feeding literal streams (test fixtures, plain block
// token runs) to the engines.

class LocationInterner {
 public:
  std::uint64_t id_of(const std::string& name) {
    auto [it, fresh] = ids_.emplace(name, names_.size());
    if (fresh) names_.push_back(name);
    return it->second;
  }
  const std::string& name_of(std::uint64_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }

 private:
  std::map<std::string, std::uint64_t> ids_;
  std::vector<std::string> names_;
};

inline std::vector<AccessEvent> events_from_names(const std::vector<std::string>& names,
                                                  LocationInterner& interner) {
  std::vector<AccessEvent> events;
  events.reserve(names.size());
  for (std::size_t i = 0; i < names.size(); ++i)
    events.push_back({interner.id_of(names[i]), static_cast<std::int32_t>(i)});
  return events;
}

} // namespace rdstat
