#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace padv {

/// Invalid configuration or precondition on user input. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
  explicit ConfigError(std::vector<std::string> problems);

  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Point outside the unit cube handed to an analytic field.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Point outside a block's ghost-expanded extent.
class OutOfBlockError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Broken internal invariant (containability, conservation, mailbox discipline). Exit code 3.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The round loop hit its hard cap. Exit code 4.
class RoundCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace padv
