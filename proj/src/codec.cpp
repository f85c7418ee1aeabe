#include "dadaquant/codec.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace dadaquant {

namespace {

void validate_update(const QuantizedUpdate& u, const char* who) {
  if (u.level == 0) throw std::invalid_argument(std::string(who) + ": level must be >= 1");
  if (u.bins.empty()) throw std::invalid_argument(std::string(who) + ": empty update");
  if (u.signs.size() != u.bins.size()) {
    throw std::invalid_argument(std::string(who) + ": sign/bin size mismatch");
  }
  if (!(u.norm >= 0.0f)) {
    throw std::invalid_argument(std::string(who) + ": norm must be finite and nonnegative");
  }
  for (std::size_t i = 0; i < u.bins.size(); ++i) {
    if (u.bins[i] > u.level) {
      throw std::invalid_argument(std::string(who) + ": bin exceeds level");
    }
    if (u.norm == 0.0f && u.bins[i] != 0) {
      throw std::invalid_argument(std::string(who) + ": nonzero bin with zero norm");
    }
    if (u.signs[i] != 1 && u.signs[i] != -1) {
      throw std::invalid_argument(std::string(who) + ": signs must be +1 or -1");
    }
    if (u.bins[i] == 0 && u.signs[i] != 1) {
      throw std::invalid_argument(std::string(who) + ": zero bins must carry sign +1");
    }
  }
}

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

std::uint32_t get_u32_le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

float get_norm(const std::uint8_t* p) {
  const float norm = std::bit_cast<float>(get_u32_le(p));
  if (!(norm >= 0.0f) || !std::isfinite(norm)) {
    throw std::invalid_argument("unpack: corrupt norm field");
  }
  return norm;
}

}  // namespace

TokenStream rle_encode(std::span<const std::uint32_t> bins) {
  TokenStream t;
  std::uint64_t gap = 0;
  for (std::uint32_t b : bins) {
    if (b == 0) {
      ++gap;
    } else {
      t.tokens.push_back(gap + 1);
      t.tokens.push_back(b);
      gap = 0;
    }
  }
  t.tokens.push_back(1);
  t.tokens.push_back(gap + 1);
  return t;
}

std::vector<std::uint32_t> rle_decode(const TokenStream& t, std::size_t expected_dim) {
  if (t.tokens.size() < 2 || t.tokens.size() % 2 != 0) {
    throw std::invalid_argument("rle_decode: truncated token stream");
  }
  std::vector<std::uint32_t> bins(expected_dim, 0);
  std::size_t pos = 0;
  const std::size_t pairs = t.tokens.size() / 2 - 1;
  for (std::size_t i = 0; i < pairs; ++i) {
    const std::uint64_t gap1 = t.tokens[2 * i];
    const std::uint64_t mag = t.tokens[2 * i + 1];
    if (gap1 == 0 || mag == 0) throw std::invalid_argument("rle_decode: zero token");
    if (mag > 0xFFFFFFFFull) throw std::invalid_argument("rle_decode: magnitude overflow");
    pos += gap1;
    if (pos > expected_dim) {
      throw std::invalid_argument("rle_decode: dimension mismatch (stream too long)");
    }
    bins[pos - 1] = static_cast<std::uint32_t>(mag);
  }
  if (t.tokens[2 * pairs] != 1) {
    throw std::invalid_argument("rle_decode: malformed terminator");
  }
  const std::uint64_t trailing = t.tokens[2 * pairs + 1] - 1;
  if (pos + trailing != expected_dim) {
    throw std::invalid_argument("rle_decode: dimension mismatch (expected " +
                                std::to_string(expected_dim) + ", got " +
                                std::to_string(pos + trailing) + ")");
  }
  return bins;
}

void elias_append(BitWriter& w, std::uint64_t value) {
  if (value == 0) throw std::invalid_argument("elias omega: tokens must be positive");
  std::uint64_t groups[8];
  int depth = 0;
  while (value > 1) {
    groups[depth++] = value;
    value = static_cast<std::uint64_t>(std::bit_width(value)) - 1;
  }
  while (depth-- > 0) {
    w.push_bits(groups[depth], static_cast<unsigned>(std::bit_width(groups[depth])));
  }
  w.push_bit(false);
}

std::uint64_t elias_read(BitReader& r) {
  std::uint64_t n = 1;
  for (;;) {
    if (!r.read_bit()) return n;
    if (n > 63) throw std::runtime_error("elias omega: code word overruns 64 bits");
    n = (std::uint64_t{1} << n) | r.read_bits(static_cast<unsigned>(n));
  }
}

EncodedBlob elias_encode(const TokenStream& t) {
  BitWriter w;
  for (std::uint64_t tok : t.tokens) elias_append(w, tok);
  EncodedBlob b;
  b.bit_length = w.bit_length();
  b.bytes = w.take();
  return b;
}

TokenStream elias_decode(std::span<const std::uint8_t> bytes, std::size_t bit_count) {
  BitReader r(bytes, bit_count);
  TokenStream t;
  while (r.remaining() > 0) t.tokens.push_back(elias_read(r));
  return t;
}

EncodedBlob pack_update(const QuantizedUpdate& u) {
  validate_update(u, "pack_update");
  BitWriter w;
  elias_append(w, static_cast<std::uint64_t>(u.dim()) + 1);
  elias_append(w, u.level);
  for (std::size_t i = 0; i < u.bins.size(); ++i) {
    if (u.bins[i] != 0) w.push_bit(u.signs[i] < 0);
  }
  const TokenStream tokens = rle_encode(u.bins);
  for (std::uint64_t tok : tokens.tokens) elias_append(w, tok);

  EncodedBlob b;
  b.bit_length = 32 + w.bit_length();
  b.bytes.reserve(4 + w.bytes().size());
  put_u32_le(b.bytes, std::bit_cast<std::uint32_t>(u.norm));
  const auto& body = w.bytes();
  b.bytes.insert(b.bytes.end(), body.begin(), body.end());
  return b;
}

namespace {

// Non-throwing bit cursor for the candidate search in unpack_update.
struct Cursor {
  const std::uint8_t* data;
  std::size_t pos;
  std::size_t end;

  bool read_bit(bool& b) {
    if (pos >= end) return false;
    b = (data[pos >> 3] >> (7 - (pos & 7u))) & 1u;
    ++pos;
    return true;
  }

  bool read_omega(std::uint64_t& out) {
    std::uint64_t n = 1;
    for (;;) {
      bool b;
      if (!read_bit(b)) return false;
      if (!b) {
        out = n;
        return true;
      }
      if (n > 63) return false;
      std::uint64_t v = 1;
      for (std::uint64_t i = 0; i < n; ++i) {
        bool g;
        if (!read_bit(g)) return false;
        v = (v << 1) | (g ? 1u : 0u);
      }
      n = v;
    }
  }
};

// Attempts to parse the [signs][tokens][padding] region assuming `nnz`
// nonzero bins. The token stream must contain exactly nnz pairs plus the
// terminator, reconstruct exactly `dim` coordinates, keep magnitudes
// within q, and leave fewer than 8 zero bits of padding.
bool try_parse_region(const std::uint8_t* data, std::size_t bits_total,
                      std::size_t region_start, std::uint64_t dim, std::uint64_t q,
                      std::size_t nnz, std::vector<std::uint32_t>& bins,
                      std::size_t& end_pos) {
  Cursor cur{data, region_start + nnz, bits_total};
  bins.assign(static_cast<std::size_t>(dim), 0);
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < nnz; ++i) {
    std::uint64_t gap1, mag;
    if (!cur.read_omega(gap1) || !cur.read_omega(mag)) return false;
    if (mag > q) return false;
    pos += gap1;
    // every remaining pair consumes at least one coordinate
    if (pos + (nnz - 1 - i) > dim) return false;
    bins[static_cast<std::size_t>(pos - 1)] = static_cast<std::uint32_t>(mag);
  }
  std::uint64_t term, tr1;
  if (!cur.read_omega(term) || term != 1) return false;
  if (!cur.read_omega(tr1)) return false;
  if (pos + (tr1 - 1) != dim) return false;
  if (bits_total - cur.pos >= 8) return false;
  end_pos = cur.pos;
  while (cur.pos < bits_total) {
    bool b;
    cur.read_bit(b);
    if (b) return false;
  }
  return true;
}

}  // namespace

QuantizedUpdate unpack_update(const EncodedBlob& blob) {
  if (blob.bytes.size() != (blob.bit_length + 7) / 8) {
    throw std::invalid_argument("unpack_update: byte count does not match bit length");
  }
  if (blob.bytes.size() < 5) throw std::invalid_argument("unpack_update: blob too short");
  const float norm = get_norm(blob.bytes.data());

  const std::uint8_t* body = blob.bytes.data() + 4;
  const std::size_t body_bits = (blob.bytes.size() - 4) * 8;
  BitReader header(std::span<const std::uint8_t>(body, blob.bytes.size() - 4), body_bits);
  std::uint64_t dimp1, q;
  try {
    dimp1 = elias_read(header);
    q = elias_read(header);
  } catch (const std::exception&) {
    throw std::invalid_argument("unpack_update: truncated header");
  }
  if (dimp1 < 2) throw std::invalid_argument("unpack_update: dimension must be >= 1");
  const std::uint64_t dim = dimp1 - 1;
  if (dim > (1u << 28) || q == 0 || q > 0xFFFFFFFFull) {
    throw std::invalid_argument("unpack_update: implausible header");
  }
  const std::size_t region_start = header.position();
  if (region_start > body_bits) throw std::invalid_argument("unpack_update: truncated blob");

  // The sign-bit count equals the number of nonzero bins, which is only
  // pinned down by the token stream that follows the signs. Scan candidate
  // counts; the layout admits exactly one consistent parse.
  const std::size_t max_nnz =
      static_cast<std::size_t>(std::min<std::uint64_t>(dim, body_bits - region_start));
  std::vector<std::uint32_t> bins;
  for (std::size_t nnz = 0; nnz <= max_nnz; ++nnz) {
    std::size_t end_pos = 0;
    if (!try_parse_region(body, body_bits, region_start, dim, q, nnz, bins, end_pos)) {
      continue;
    }
    if (32 + end_pos != blob.bit_length) {
      throw std::invalid_argument("unpack_update: bit length field mismatch");
    }
    QuantizedUpdate u;
    u.level = static_cast<std::uint32_t>(q);
    u.norm = norm;
    u.bins = bins;
    u.signs.assign(bins.size(), 1);
    if (norm == 0.0f && nnz != 0) {
      throw std::invalid_argument("unpack_update: nonzero bin with zero norm");
    }
    BitReader signs(std::span<const std::uint8_t>(body, blob.bytes.size() - 4), body_bits);
    signs.seek(region_start);
    for (std::size_t i = 0; i < bins.size(); ++i) {
      if (bins[i] != 0 && signs.read_bit()) u.signs[i] = -1;
    }
    return u;
  }
  throw std::invalid_argument("unpack_update: no consistent parse, blob is corrupt");
}

unsigned fedpaq_coord_width(std::uint32_t q) {
  unsigned w = 1;
  while ((std::uint64_t{1} << (8 * w)) < 2ull * q + 1) ++w;
  return w;
}

EncodedBlob fedpaq_pack(const QuantizedUpdate& u) {
  validate_update(u, "fedpaq_pack");
  const unsigned width = fedpaq_coord_width(u.level);
  EncodedBlob b;
  b.bytes.reserve(12 + u.dim() * width);
  put_u32_le(b.bytes, std::bit_cast<std::uint32_t>(u.norm));
  put_u32_le(b.bytes, static_cast<std::uint32_t>(u.dim()));
  put_u32_le(b.bytes, u.level);
  for (std::size_t i = 0; i < u.bins.size(); ++i) {
    const std::int64_t v = static_cast<std::int64_t>(u.signs[i]) * u.bins[i];
    const std::uint64_t enc = static_cast<std::uint64_t>(v);
    for (unsigned byte = 0; byte < width; ++byte) {
      b.bytes.push_back(static_cast<std::uint8_t>(enc >> (8 * byte)));
    }
  }
  b.bit_length = b.bytes.size() * 8;
  return b;
}

namespace {

QuantizedUpdate parse_fixed_width(const std::vector<std::uint8_t>& raw, const char* who) {
  if (raw.size() < 12) throw std::invalid_argument(std::string(who) + ": header truncated");
  QuantizedUpdate u;
  u.norm = get_norm(raw.data());
  const std::uint32_t dim = get_u32_le(raw.data() + 4);
  u.level = get_u32_le(raw.data() + 8);
  if (dim == 0 || u.level == 0) {
    throw std::invalid_argument(std::string(who) + ": corrupt header");
  }
  const unsigned width = fedpaq_coord_width(u.level);
  if (raw.size() != 12 + static_cast<std::size_t>(dim) * width) {
    throw std::invalid_argument(std::string(who) + ": payload size mismatch");
  }
  u.bins.resize(dim);
  u.signs.assign(dim, 1);
  for (std::uint32_t i = 0; i < dim; ++i) {
    std::uint64_t enc = 0;
    for (unsigned byte = 0; byte < width; ++byte) {
      enc |= static_cast<std::uint64_t>(raw[12 + i * width + byte]) << (8 * byte);
    }
    // sign-extend from the coordinate width
    const unsigned bits = 8 * width;
    std::int64_t v = static_cast<std::int64_t>(enc << (64 - bits)) >> (64 - bits);
    if (v < 0) {
      u.signs[i] = -1;
      v = -v;
    }
    if (static_cast<std::uint64_t>(v) > u.level) {
      throw std::invalid_argument(std::string(who) + ": bin exceeds level");
    }
    u.bins[i] = static_cast<std::uint32_t>(v);
    if (u.norm == 0.0f && u.bins[i] != 0) {
      throw std::invalid_argument(std::string(who) + ": nonzero bin with zero norm");
    }
  }
  return u;
}

}  // namespace

QuantizedUpdate fedpaq_unpack(const EncodedBlob& blob) {
  if (blob.bit_length != blob.bytes.size() * 8) {
    throw std::invalid_argument("fedpaq_unpack: byte-aligned blob expected");
  }
  return parse_fixed_width(blob.bytes, "fedpaq_unpack");
}

EncodedBlob deflate_pack(const QuantizedUpdate& u) {
  const EncodedBlob raw = fedpaq_pack(u);

  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw std::runtime_error("deflate_pack: deflateInit2 failed");
  }
  EncodedBlob out;
  out.bytes.resize(deflateBound(&zs, static_cast<uLong>(raw.bytes.size())));
  zs.next_in = const_cast<Bytef*>(raw.bytes.data());
  zs.avail_in = static_cast<uInt>(raw.bytes.size());
  zs.next_out = out.bytes.data();
  zs.avail_out = static_cast<uInt>(out.bytes.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw std::runtime_error("deflate_pack: deflate failed");
  out.bytes.resize(zs.total_out);
  out.bit_length = out.bytes.size() * 8;
  return out;
}

QuantizedUpdate deflate_unpack(const EncodedBlob& blob) {
  if (blob.bit_length != blob.bytes.size() * 8) {
    throw std::invalid_argument("deflate_unpack: byte-aligned blob expected");
  }
  z_stream zs{};
  if (inflateInit2(&zs, -15) != Z_OK) {
    throw std::runtime_error("deflate_unpack: inflateInit2 failed");
  }
  std::vector<std::uint8_t> raw(1024);
  zs.next_in = const_cast<Bytef*>(blob.bytes.data());
  zs.avail_in = static_cast<uInt>(blob.bytes.size());
  zs.next_out = raw.data();
  zs.avail_out = static_cast<uInt>(raw.size());
  int rc;
  for (;;) {
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc == Z_STREAM_END) break;
    if (rc == Z_OK || rc == Z_BUF_ERROR) {
      if (zs.avail_out == 0) {
        const std::size_t used = raw.size();
        raw.resize(raw.size() * 2);
        zs.next_out = raw.data() + used;
        zs.avail_out = static_cast<uInt>(raw.size() - used);
        continue;
      }
      if (rc == Z_BUF_ERROR || zs.avail_in == 0) {
        inflateEnd(&zs);
        throw std::invalid_argument("deflate_unpack: truncated DEFLATE stream");
      }
      continue;
    }
    inflateEnd(&zs);
    throw std::invalid_argument("deflate_unpack: corrupt DEFLATE stream");
  }
  const bool trailing = zs.avail_in != 0;
  raw.resize(zs.total_out);
  inflateEnd(&zs);
  if (trailing) throw std::invalid_argument("deflate_unpack: trailing bytes after stream");
  return parse_fixed_width(raw, "deflate_unpack");
}

}  // namespace dadaquant
