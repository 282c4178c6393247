#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace pinn {

// Violated precondition of an operation (wrong sizes, bad arguments, ...).
class contract_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// A graph node or network could not be constructed as requested.
class construction_error : public contract_error {
public:
    using contract_error::contract_error;
};

// Evaluation was attempted with missing bindings or uninitialized state.
class evaluation_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A NaN or infinity showed up where a finite number is required.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what, std::optional<std::size_t> node = std::nullopt)
        : std::runtime_error(what), node_(node) {}

    std::optional<std::size_t> node() const { return node_; }

private:
    std::optional<std::size_t> node_;
};

// Malformed input text (data files, configs, model files).
class parse_error : public std::runtime_error {
public:
    explicit parse_error(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

}  // namespace pinn
