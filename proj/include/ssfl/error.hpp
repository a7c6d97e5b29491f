#pragma once

#include <stdexcept>
#include <string>

namespace ssfl {

// Invalid arguments handed to an operation (shape mismatch, bad range,
// non-finite values). Maps to CLI exit code 2.
class input_error : public std::invalid_argument {
public:
    explicit input_error(const std::string& what) : std::invalid_argument(what) {}
};

// Unreadable or malformed external data (files, checkpoints). CLI exit code 2.
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw input_error(what);
}

}  // namespace ssfl
