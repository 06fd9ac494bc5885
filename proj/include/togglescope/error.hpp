#pragma once

#include <stdexcept>
#include <string>

namespace togglescope {

// Bad user input: config values, CLI arguments, malformed input files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Environment failures: unreadable repository, missing branch, IO errors.
class RepoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A metric was asked for outside its mathematical domain (T <= 0, L <= 0 ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace togglescope
