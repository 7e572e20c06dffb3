#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>

#include "fracwalk/sequence.hpp"

namespace fracwalk {

// Binary layout, little-endian:
//   bytes 0..3   magic "FWSQ"
//   byte  4      version (1)
//   byte  5      flags: bit 0 set = integer body, clear = bit-packed body
//   bytes 6..7   zero
//   bytes 8..15  length (uint64)
//   body         bit-packed: ceil(n/8) bytes, entry i in bit (i % 8) of
//                byte i / 8, set bit = +1.
//                integer: one zigzag LEB128 varint per entry.
inline constexpr char kSequenceMagic[4] = {'F', 'W', 'S', 'Q'};
inline constexpr std::uint8_t kSequenceVersion = 1;

using AnySequence = std::variant<BitSequence, IntSequence>;

void write_binary(std::ostream& os, const BitSequence& seq);
void write_binary(std::ostream& os, const IntSequence& seq);
AnySequence read_binary(std::istream& is);

/// One value per line, no header.
void write_csv(std::ostream& os, const BitSequence& seq);
void write_csv(std::ostream& os, const IntSequence& seq);
/// Returns a BitSequence when every value is +-1, otherwise an IntSequence.
AnySequence read_csv(std::istream& is);

/// Reads either format, deciding by the magic bytes.
AnySequence read_sequence_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace fracwalk
