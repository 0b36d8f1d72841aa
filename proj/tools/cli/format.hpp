#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace wdcli {

// Shortest decimal form that reads back to the same double.
inline std::string fmt(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string fmt(std::uint64_t v) { return std::to_string(v); }

template <class T>
std::string join(const std::vector<T> &values, char sep) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) {
            out += sep;
        }
        out += fmt(values[i]);
    }
    return out;
}

// Appends fields to a CSV line.
class Row {
public:
    Row &add(const std::string &field) {
        if (started_) {
            line_ += ',';
        }
        started_ = true;
        line_ += field;
        return *this;
    }
    Row &add(double v) { return add(fmt(v)); }
    Row &add(std::uint64_t v) { return add(fmt(v)); }
    Row &empty() { return add(std::string()); }
    std::string str() const { return line_ + '\n'; }

private:
    std::string line_;
    bool started_ = false;
};

} // namespace wdcli
