#ifndef BCOPS_ERROR_HPP_
#define BCOPS_ERROR_HPP_
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bcops {

/// Base exception for every failure raised by the library.
class error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Raised while decoding an IDX container; carries the offending byte offset.
class idx_parse_error : public error {
  public:
    idx_parse_error(const std::string &what, std::size_t offset) :
        error{ what + " (at byte offset " + std::to_string(offset) + ")" },
        message_{ what },
        offset_{ offset } {}

    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }
    /// Description without the offset suffix.
    [[nodiscard]] const std::string &message() const noexcept { return message_; }

  private:
    std::string message_;
    std::size_t offset_;
};

}  // namespace bcops

#endif  // BCOPS_ERROR_HPP_
