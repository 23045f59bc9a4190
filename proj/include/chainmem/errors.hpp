#pragma once

#include <stdexcept>
#include <string>

namespace chainmem {

// Combinatorial term-count or step budget exceeded (memory kernel).
class BudgetError : public std::runtime_error {
 public:
  explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

// Size/use-count guard exceeded (exact many-body simulation, direct sums).
class GuardError : public std::runtime_error {
 public:
  explicit GuardError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace chainmem
