#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace cistgcn {

// Error categories map to CLI exit codes: usage=2, data=3, numeric=4, verify=5.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& msg)
        : std::runtime_error(msg), category_(std::move(category)) {}
    const std::string& category() const { return category_; }

private:
    std::string category_;
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error("data", msg) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error("numeric", msg) {}
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& msg) : Error("data", msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error("usage", msg) {}
};

using Shape = std::vector<int64_t>;

inline int64_t numel_of(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

// Row-major strides.
inline Shape strides_of(const Shape& s) {
    Shape st(s.size(), 1);
    for (int i = static_cast<int>(s.size()) - 2; i >= 0; --i)
        st[i] = st[i + 1] * s[i + 1];
    return st;
}

}  // namespace cistgcn
