#include "fracwalk/serialization.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <unistd.h>

namespace fracwalk {

namespace {

void write_header(std::ostream& os, bool integer_body, std::uint64_t n)
{
    std::array<unsigned char, 16> h{};
    std::memcpy(h.data(), kSequenceMagic, 4);
    h[4] = kSequenceVersion;
    h[5] = integer_body ? 1 : 0;
    for (int i = 0; i < 8; ++i) {
        h[8 + i] = static_cast<unsigned char>(n >> (8 * i));
    }
    os.write(reinterpret_cast<const char*>(h.data()), h.size());
}

void put_varint(std::ostream& os, std::int64_t v)
{
    auto z = (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
    do {
        auto byte = static_cast<unsigned char>(z & 0x7f);
        z >>= 7;
        if (z != 0) {
            byte |= 0x80;
        }
        os.put(static_cast<char>(byte));
    } while (z != 0);
}

std::int64_t get_varint(std::istream& is)
{
    std::uint64_t z = 0;
    for (int shift = 0; shift < 64; shift += 7) {
        const int c = is.get();
        if (c == std::char_traits<char>::eof()) {
            throw FormatError("truncated varint body");
        }
        z |= static_cast<std::uint64_t>(c & 0x7f) << shift;
        if ((c & 0x80) == 0) {
            return static_cast<std::int64_t>(z >> 1) ^ -static_cast<std::int64_t>(z & 1);
        }
    }
    throw FormatError("varint longer than 64 bits");
}

}  // namespace

void write_binary(std::ostream& os, const BitSequence& seq)
{
    write_header(os, false, seq.size());
    std::string body((seq.size() + 7) / 8, '\0');
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (seq[i] > 0) {
            body[i / 8] = static_cast<char>(body[i / 8] | (1 << (i % 8)));
        }
    }
    os.write(body.data(), static_cast<std::streamsize>(body.size()));
}

void write_binary(std::ostream& os, const IntSequence& seq)
{
    write_header(os, true, seq.size());
    for (auto v : seq.values()) {
        put_varint(os, v);
    }
}

AnySequence read_binary(std::istream& is)
{
    std::array<unsigned char, 16> h{};
    if (!is.read(reinterpret_cast<char*>(h.data()), h.size())) {
        throw FormatError("sequence header truncated");
    }
    if (std::memcmp(h.data(), kSequenceMagic, 4) != 0) {
        throw FormatError("bad sequence magic");
    }
    if (h[4] != kSequenceVersion) {
        throw FormatError("unsupported sequence version " + std::to_string(h[4]));
    }
    std::uint64_t n = 0;
    for (int i = 0; i < 8; ++i) {
        n |= static_cast<std::uint64_t>(h[8 + i]) << (8 * i);
    }
    if (h[5] & 1) {
        std::vector<std::int32_t> values(n);
        for (auto& v : values) {
            v = static_cast<std::int32_t>(get_varint(is));
        }
        return IntSequence(std::move(values));
    }
    std::string body((n + 7) / 8, '\0');
    if (!is.read(body.data(), static_cast<std::streamsize>(body.size()))) {
        throw FormatError("bit-packed body truncated");
    }
    std::vector<std::int8_t> bits(n);
    for (std::size_t i = 0; i < n; ++i) {
        bits[i] = (static_cast<unsigned char>(body[i / 8]) >> (i % 8)) & 1 ? 1 : -1;
    }
    return BitSequence(std::move(bits));
}

void write_csv(std::ostream& os, const BitSequence& seq)
{
    for (auto b : seq.values()) {
        os << static_cast<int>(b) << '\n';
    }
}

void write_csv(std::ostream& os, const IntSequence& seq)
{
    for (auto v : seq.values()) {
        os << v << '\n';
    }
}

AnySequence read_csv(std::istream& is)
{
    std::vector<std::int32_t> values;
    std::string line;
    bool binary = true;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") {
            continue;
        }
        std::size_t used = 0;
        long v = 0;
        try {
            v = std::stol(line, &used);
        } catch (const std::exception&) {
            throw FormatError("non-integer CSV row: " + line);
        }
        values.push_back(static_cast<std::int32_t>(v));
        binary = binary && (v == 1 || v == -1);
    }
    if (binary) {
        std::vector<std::int8_t> bits(values.begin(), values.end());
        return BitSequence(std::move(bits));
    }
    return IntSequence(std::move(values));
}

AnySequence read_sequence_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    char magic[4] = {};
    in.read(magic, 4);
    in.clear();
    in.seekg(0);
    if (std::memcmp(magic, kSequenceMagic, 4) == 0) {
        return read_binary(in);
    }
    return read_csv(in);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw FormatError("cannot write " + tmp.string());
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            throw FormatError("short write to " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace fracwalk
