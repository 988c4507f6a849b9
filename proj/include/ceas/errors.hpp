#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ceas {

// Violated precondition of a public operation (dimension mismatch, infeasible
// caps, empty elite set, ...).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed configuration document or override. The CLI maps this to exit
// code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exhaustive enumeration refused because J^I exceeds the budget.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(std::size_t user, const std::string& what)
      : std::runtime_error(what), user_(user) {}

  std::size_t user() const noexcept { return user_; }

 private:
  std::size_t user_;
};

}  // namespace ceas
