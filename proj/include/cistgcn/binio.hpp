#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "cistgcn/common.hpp"
#include "cistgcn/tensor.hpp"

namespace cistgcn::io {

// Little-endian binary writer/reader; the build targets LE hosts only.
class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw FormatError("cannot open '" + path + "' for writing");
    }
    void u32(uint32_t v) { raw(&v, 4); }
    void u64(uint64_t v) { raw(&v, 8); }
    void f32(float v) { raw(&v, 4); }
    void f64(double v) { raw(&v, 8); }
    void bytes(const void* p, size_t n) { raw(p, n); }
    void str_u32(const std::string& s) {
        u32(static_cast<uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    void close() {
        out_.close();
        if (!out_) throw FormatError("write error on '" + path_ + "'");
    }

private:
    void raw(const void* p, size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out_) throw FormatError("write error on '" + path_ + "'");
    }
    std::string path_;
    std::ofstream out_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw FormatError("cannot open '" + path + "' for reading");
    }
    uint32_t u32() {
        uint32_t v;
        raw(&v, 4);
        return v;
    }
    uint64_t u64() {
        uint64_t v;
        raw(&v, 8);
        return v;
    }
    float f32() {
        float v;
        raw(&v, 4);
        return v;
    }
    double f64() {
        double v;
        raw(&v, 8);
        return v;
    }
    void bytes(void* p, size_t n) { raw(p, n); }
    std::string str_u32(size_t max_len = 1 << 20) {
        uint32_t n = u32();
        if (n > max_len) throw FormatError("string length " + std::to_string(n) +
                                           " out of range in '" + path_ + "'");
        std::string s(n, '\0');
        raw(s.data(), n);
        return s;
    }
    void expect_magic(const char magic[4], const char* what) {
        char buf[4];
        raw(buf, 4);
        if (std::memcmp(buf, magic, 4) != 0)
            throw FormatError(std::string("bad magic for ") + what + " in '" + path_ + "'");
    }
    bool at_eof() {
        in_.peek();
        return in_.eof();
    }

private:
    void raw(void* p, size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<size_t>(in_.gcount()) != n)
            throw FormatError("truncated payload in '" + path_ + "'");
    }
    std::string path_;
    std::ifstream in_;
};

// TNSR debug dump: 16-byte header {magic "TNSR", dtype u32 (0=f32,1=f64),
// ndim u32, reserved u32}, then ndim x u32 dims, then LE payload.
void tnsr_write(const std::string& path, const Shape& shape, const std::vector<double>& values);
void tnsr_write(const std::string& path, const Tensor<float>& t);
void tnsr_write(const std::string& path, const Tensor<double>& t);
std::pair<Shape, std::vector<double>> tnsr_read(const std::string& path);

}  // namespace cistgcn::io
