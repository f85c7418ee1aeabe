#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dadaquant/bitstream.hpp"
#include "dadaquant/quantize.hpp"

namespace dadaquant {

/// Positive integers only; Elias omega has no code for 0.
struct TokenStream {
  std::vector<std::uint64_t> tokens;
  bool operator==(const TokenStream&) const = default;
};

/// A compressed uplink message. bit_length counts payload bits before the
/// final byte is zero-padded, so bytes.size() == ceil(bit_length / 8).
struct EncodedBlob {
  std::vector<std::uint8_t> bytes;
  std::size_t bit_length = 0;
};

// --- zero run-length encoding ---------------------------------------------
//
// For each nonzero bin in order, the pair (gap+1, magnitude) where gap is
// the number of zeros since the previous nonzero (or since the start). A
// terminator token 1 followed by (trailing_zero_count + 1) closes the
// stream. All tokens are >= 1 by construction.

TokenStream rle_encode(std::span<const std::uint32_t> bins);
std::vector<std::uint32_t> rle_decode(const TokenStream& t, std::size_t expected_dim);

// --- Elias omega coding ----------------------------------------------------

void elias_append(BitWriter& w, std::uint64_t value);
std::uint64_t elias_read(BitReader& r);
EncodedBlob elias_encode(const TokenStream& t);
/// Greedy decode to the end of the bit range. Note that zero padding bits
/// decode as extra tokens of value 1; callers that append padding must
/// delimit the stream themselves.
TokenStream elias_decode(std::span<const std::uint8_t> bytes, std::size_t bit_count);

// --- uplink wire format ----------------------------------------------------
//
// Bit-exact layout, MSB-first within bytes:
//   [norm: IEEE-754 binary32, little-endian]
//   [omega(dim + 1)]
//   [omega(q)]
//   [sign bits, 1 per nonzero bin in coordinate order, 1 = negative]
//   [omega codes of rle_encode(bins)]
// zero-padded to a whole byte.

EncodedBlob pack_update(const QuantizedUpdate& u);
QuantizedUpdate unpack_update(const EncodedBlob& blob);

// --- fixed-width baseline formats -------------------------------------------
//
// Raw layout: [norm binary32 LE][dim u32 LE][q u32 LE] then one signed bin
// per coordinate in the minimal whole-byte width for the range [-q, q].
// fedpaq_pack is this layout as-is; deflate_pack runs it through DEFLATE
// (RFC 1951, no container header).

EncodedBlob fedpaq_pack(const QuantizedUpdate& u);
QuantizedUpdate fedpaq_unpack(const EncodedBlob& blob);
EncodedBlob deflate_pack(const QuantizedUpdate& u);
QuantizedUpdate deflate_unpack(const EncodedBlob& blob);

/// Width in bytes of one signed coordinate for the range [-q, q].
unsigned fedpaq_coord_width(std::uint32_t q);

}  // namespace dadaquant
