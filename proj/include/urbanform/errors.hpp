#ifndef URBANFORM_ERRORS_HPP
#define URBANFORM_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace urbanform {

// Caller supplied something outside an operation's precondition.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input document. byte_offset() points at the failure when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what + " (at byte " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}

  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

// Artifact written by another stage (or another version) that this build
// refuses to consume.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace urbanform

#endif  // URBANFORM_ERRORS_HPP
