#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace dadaquant {

// MSB-first bit accumulator; the final byte is zero-padded.
class BitWriter {
 public:
  void push_bit(bool b) {
    if ((bit_len_ & 7u) == 0) bytes_.push_back(0);
    if (b) bytes_[bit_len_ >> 3] |= static_cast<std::uint8_t>(0x80u >> (bit_len_ & 7u));
    ++bit_len_;
  }

  /// Writes the low `width` bits of value, most significant first.
  void push_bits(std::uint64_t value, unsigned width) {
    for (unsigned i = width; i-- > 0;) push_bit((value >> i) & 1u);
  }

  std::size_t bit_length() const { return bit_len_; }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t bit_len_ = 0;
};

class BitReader {
 public:
  BitReader(std::span<const std::uint8_t> bytes, std::size_t bit_count)
      : bytes_(bytes), bit_end_(bit_count) {
    if (bit_count > bytes.size() * 8) {
      throw std::invalid_argument("BitReader: bit count exceeds buffer");
    }
  }

  bool read_bit() {
    if (pos_ >= bit_end_) throw std::out_of_range("BitReader: read past end of stream");
    const bool b = (bytes_[pos_ >> 3] >> (7 - (pos_ & 7u))) & 1u;
    ++pos_;
    return b;
  }

  std::uint64_t read_bits(unsigned width) {
    if (width > 64) throw std::out_of_range("BitReader: width exceeds 64 bits");
    std::uint64_t v = 0;
    for (unsigned i = 0; i < width; ++i) v = (v << 1) | (read_bit() ? 1u : 0u);
    return v;
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bit_end_ - pos_; }
  void seek(std::size_t bit_pos) {
    if (bit_pos > bit_end_) throw std::out_of_range("BitReader: seek past end");
    pos_ = bit_pos;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::size_t bit_end_;
};

}  // namespace dadaquant
