#include "oed/gram_io.hpp"

#include "oed/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace oed {

namespace {

constexpr std::array<char, 4> kMagic = {'O', 'E', 'D', 'G'};

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
bool get_le(std::istream& in, T& value) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) return false;
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  std::memcpy(&value, bytes.data(), sizeof(T));
  return true;
}

}  // namespace

void write_gram(const GramMatrix& gram, std::ostream& out) {
  const Index m = gram.size();
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m));
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) put_le<double>(out, gram(i, j));
  if (!out) throw Error("failed to write Gram matrix");
}

void save_gram(const GramMatrix& gram, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_gram(gram, out);
}

GramMatrix read_gram(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw FormatError("bad magic bytes, expected OEDG");
  std::uint32_t m = 0;
  if (!get_le(in, m)) throw FormatError("truncated Gram header");
  if (m == 0) throw FormatError("Gram dimension must be positive");
  Matrix data(m, m);
  for (Index i = 0; i < static_cast<Index>(m); ++i) {
    for (Index j = 0; j < static_cast<Index>(m); ++j) {
      double v = 0.0;
      if (!get_le(in, v)) {
        std::ostringstream msg;
        msg << "truncated Gram payload at entry (" << i << ", " << j << ") of " << m << "x" << m;
        throw FormatError(msg.str());
      }
      data(i, j) = v;
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after Gram payload");
  try {
    return GramMatrix(std::move(data));
  } catch (const InputError& e) {
    throw FormatError(e.what());
  }
}

GramMatrix load_gram(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open Gram file '" + path + "'");
  return read_gram(in);
}

std::uint64_t matrix_checksum(const Matrix& m) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      const auto bits = std::bit_cast<std::uint64_t>(m(i, j));
      for (int b = 0; b < 8; ++b) {
        hash ^= (bits >> (8 * b)) & 0xffU;
        hash *= 0x100000001b3ULL;
      }
    }
  }
  return hash;
}

std::string checksum_hex(std::uint64_t value) {
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << value;
  return out.str();
}

}  // namespace oed
