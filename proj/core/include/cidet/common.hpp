#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cidet {

// Computation cannot proceed for numerical reasons: eigensolver
// non-convergence, ill-conditioning, divergent recursion.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration or incompatible options.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One named validation check plus the quantity that decided it.
struct CheckItem {
  std::string name;
  bool pass = false;
  double value = 0.0;
  std::string detail;
};

struct Checklist {
  std::vector<CheckItem> items;

  bool all_pass() const;
  const CheckItem* find(std::string_view name) const;
  // "name (value): detail" for every failed item, semicolon separated.
  std::string failure_summary() const;
};

}  // namespace cidet
