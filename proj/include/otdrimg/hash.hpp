#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace otdrimg {

/// 64-bit FNV-1a. Used for PNG checksums in the manifest and for config digests.
class Fnv1a64 {
 public:
  void update(std::span<const std::uint8_t> bytes) noexcept {
    for (std::uint8_t b : bytes) {
      state_ ^= b;
      state_ *= 0x100000001B3ULL;
    }
  }

  void update(std::string_view text) noexcept {
    update(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()),
                                         text.size()));
  }

  [[nodiscard]] std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xCBF29CE484222325ULL;
};

[[nodiscard]] inline std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) noexcept {
  Fnv1a64 h;
  h.update(bytes);
  return h.digest();
}

[[nodiscard]] inline std::uint64_t fnv1a64(std::string_view text) noexcept {
  Fnv1a64 h;
  h.update(text);
  return h.digest();
}

/// 16 lowercase hex digits.
[[nodiscard]] inline std::string to_hex(std::uint64_t value) {
  static constexpr std::array<char, 16> kDigits = {'0', '1', '2', '3', '4', '5', '6', '7',
                                                   '8', '9', 'a', 'b', 'c', 'd', 'e', 'f'};
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xFU];
    value >>= 4U;
  }
  return out;
}

}  // namespace otdrimg
