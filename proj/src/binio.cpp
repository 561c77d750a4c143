#include "cistgcn/binio.hpp"

namespace cistgcn::io {

namespace {

void tnsr_write_impl(const std::string& path, const Shape& shape, const float* f,
                     const double* d, size_t n) {
    BinaryWriter w(path);
    w.bytes("TNSR", 4);
    w.u32(f ? 0u : 1u);  // dtype code: 0=f32, 1=f64
    w.u32(static_cast<uint32_t>(shape.size()));
    w.u32(0);  // reserved, pads the header to 16 bytes
    for (int64_t dim : shape) w.u32(static_cast<uint32_t>(dim));
    if (f)
        w.bytes(f, n * sizeof(float));
    else
        w.bytes(d, n * sizeof(double));
    w.close();
}

}  // namespace

void tnsr_write(const std::string& path, const Shape& shape, const std::vector<double>& values) {
    if (numel_of(shape) != static_cast<int64_t>(values.size()))
        throw FormatError("tnsr_write: shape/value size mismatch");
    tnsr_write_impl(path, shape, nullptr, values.data(), values.size());
}

void tnsr_write(const std::string& path, const Tensor<float>& t) {
    tnsr_write_impl(path, t.shape(), t.values().data(), nullptr,
                    static_cast<size_t>(t.numel()));
}

void tnsr_write(const std::string& path, const Tensor<double>& t) {
    tnsr_write_impl(path, t.shape(), nullptr, t.values().data(),
                    static_cast<size_t>(t.numel()));
}

std::pair<Shape, std::vector<double>> tnsr_read(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic("TNSR", "tensor dump");
    uint32_t dtype = r.u32();
    if (dtype > 1) throw FormatError("tnsr_read: unknown dtype code " + std::to_string(dtype));
    uint32_t ndim = r.u32();
    if (ndim > 8) throw FormatError("tnsr_read: implausible rank " + std::to_string(ndim));
    r.u32();  // reserved
    Shape shape(ndim);
    for (auto& d : shape) d = r.u32();
    size_t n = static_cast<size_t>(numel_of(shape));
    std::vector<double> values(n);
    if (dtype == 0) {
        std::vector<float> tmp(n);
        r.bytes(tmp.data(), n * sizeof(float));
        for (size_t i = 0; i < n; ++i) values[i] = tmp[i];
    } else {
        r.bytes(values.data(), n * sizeof(double));
    }
    return {shape, values};
}

}  // namespace cistgcn::io
