#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace consentlog {

/// Fixed-width dynamic bitset used for class-extension sets. Taxonomies are
/// small (tens to a few thousand classes), so subset tests on word blocks are
/// the fast path of the reasoner.
class Bitset {
 public:
  Bitset() = default;
  explicit Bitset(std::size_t bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

  std::size_t size() const noexcept { return bits_; }

  void set(std::size_t i) { words_[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
  void reset(std::size_t i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }

  bool test(std::size_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }

  Bitset& operator|=(const Bitset& o) {
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= o.words_[w];
    return *this;
  }

  Bitset& operator&=(const Bitset& o) {
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] &= o.words_[w];
    return *this;
  }

  bool is_subset_of(const Bitset& o) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      if (words_[w] & ~o.words_[w]) return false;
    }
    return true;
  }

  bool any() const noexcept {
    for (auto w : words_) {
      if (w) return true;
    }
    return false;
  }

  bool none() const noexcept { return !any(); }

  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(__builtin_popcountll(w));
    return n;
  }

  bool operator==(const Bitset& o) const = default;

  /// Calls fn(index) for every set bit, ascending.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t word = words_[w];
      while (word) {
        const int bit = __builtin_ctzll(word);
        fn(w * 64 + static_cast<std::size_t>(bit));
        word &= word - 1;
      }
    }
  }

 private:
  std::size_t bits_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace consentlog
