#pragma once

#include "oed/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace oed {

// Binary Gram layout, all little-endian:
//   "OEDG" | uint32 m | m*m float64, row-major

void save_gram(const GramMatrix& gram, const std::string& path);
void write_gram(const GramMatrix& gram, std::ostream& out);

/// Throws FormatError on bad magic, truncation, trailing bytes or asymmetry.
GramMatrix load_gram(const std::string& path);
GramMatrix read_gram(std::istream& in);

/// FNV-1a 64 over the row-major little-endian bytes of a matrix.
std::uint64_t matrix_checksum(const Matrix& m);
std::string checksum_hex(std::uint64_t value);

}  // namespace oed
