#include "anomap/serialize.hpp"

#include <bit>
#include <cstring>
#include <limits>

#include "anomap/error.hpp"

namespace anomap {

BinaryWriter::BinaryWriter(const std::string& path)
    : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw IoError("cannot open for writing: " + path);
}

void BinaryWriter::bytes(const unsigned char* p, std::size_t n) {
    out_.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void BinaryWriter::magic(const char tag[4]) {
    bytes(reinterpret_cast<const unsigned char*>(tag), 4);
}

void BinaryWriter::u32(uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 4);
}

void BinaryWriter::u64(uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<uint64_t>(v)); }

void BinaryWriter::str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    bytes(reinterpret_cast<const unsigned char*>(s.data()), s.size());
}

void BinaryWriter::tensor(const Tensor& t) {
    u32(static_cast<uint32_t>(t.rank()));
    for (int d : t.shape) u32(static_cast<uint32_t>(d));
    for (double v : t.data) f64(v);
}

void BinaryWriter::doubles(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
}

void BinaryWriter::close() {
    if (closed_) return;
    closed_ = true;
    out_.flush();
    if (!out_) throw IoError("write failed: " + path_);
    out_.close();
}

BinaryWriter::~BinaryWriter() {
    if (!closed_) out_.close();
}

BinaryReader::BinaryReader(const std::string& path)
    : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError("cannot open: " + path);
}

void BinaryReader::bytes(unsigned char* p, std::size_t n) {
    in_.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
        throw DataError("truncated file: " + path_);
}

void BinaryReader::expect_magic(const char tag[4]) {
    unsigned char b[4];
    bytes(b, 4);
    if (std::memcmp(b, tag, 4) != 0)
        throw VersionError("unrecognized container: " + path_);
}

uint32_t BinaryReader::u32() {
    unsigned char b[4];
    bytes(b, 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

uint64_t BinaryReader::u64() {
    unsigned char b[8];
    bytes(b, 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

std::string BinaryReader::str() {
    uint32_t n = u32();
    std::string s(n, '\0');
    if (n > 0) bytes(reinterpret_cast<unsigned char*>(s.data()), n);
    return s;
}

Tensor BinaryReader::tensor() {
    uint32_t rank = u32();
    if (rank > 8) throw DataError("implausible tensor rank in " + path_);
    std::vector<int> shape;
    std::size_t n = 1;
    for (uint32_t i = 0; i < rank; ++i) {
        uint32_t d = u32();
        if (d == 0 || d > (1u << 24)) throw DataError("implausible tensor dim in " + path_);
        shape.push_back(static_cast<int>(d));
        n *= d;
    }
    Tensor t(shape);
    for (std::size_t i = 0; i < n; ++i) t.data[i] = f64();
    return t;
}

std::vector<double> BinaryReader::doubles() {
    uint64_t n = u64();
    if (n > (1ull << 32)) throw DataError("implausible array length in " + path_);
    std::vector<double> v(n);
    for (uint64_t i = 0; i < n; ++i) v[i] = f64();
    return v;
}

bool BinaryReader::at_eof() { return in_.peek() == std::char_traits<char>::eof(); }

}  // namespace anomap
