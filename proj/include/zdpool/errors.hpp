#pragma once

#include <stdexcept>
#include <string>

namespace zdpool {

// A mathematically invalid request: infeasible target, singular payoff
// spread, degenerate ZD coefficients. Invalid parameters use
// std::invalid_argument instead.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace zdpool
