#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "anomap/tensor.hpp"

namespace anomap {

// Little-endian binary containers, written byte-by-byte so files are
// portable across hosts. Readers throw DataError on truncation and never
// hand back partial objects.
class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path);

    void magic(const char tag[4]);
    void u32(uint32_t v);
    void u64(uint64_t v);
    void f64(double v);
    void str(const std::string& s);
    void tensor(const Tensor& t);
    void doubles(const std::vector<double>& v);

    // Flushes and verifies the stream; called by the destructor too, but
    // only an explicit close can report failure.
    void close();
    ~BinaryWriter();

private:
    void bytes(const unsigned char* p, std::size_t n);
    std::ofstream out_;
    std::string path_;
    bool closed_ = false;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path);

    // Reads 4 bytes and checks them; mismatch -> VersionError.
    void expect_magic(const char tag[4]);
    uint32_t u32();
    uint64_t u64();
    double f64();
    std::string str();
    Tensor tensor();
    std::vector<double> doubles();

    bool at_eof();

private:
    void bytes(unsigned char* p, std::size_t n);
    std::ifstream in_;
    std::string path_;
};

}  // namespace anomap
