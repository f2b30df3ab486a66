#pragma once

#include <stdexcept>
#include <string>

namespace adaptsense {

/// Broken precondition of a library call (dimension mismatch, bad index...).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A configuration value is out of its documented range.
class InvalidConfig : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Reading or writing an artifact failed, or its content is malformed.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A quantity is undefined for the given input (empty index set, all-zero data).
class UndefinedQuantity : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ContractViolation(what);
}

inline void requireConfig(bool cond, const std::string& what) {
    if (!cond) throw InvalidConfig(what);
}

} // namespace adaptsense
