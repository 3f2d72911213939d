#include "cidet/common.hpp"

#include <sstream>

namespace cidet {

bool Checklist::all_pass() const {
  for (const auto& it : items) {
    if (!it.pass) return false;
  }
  return true;
}

const CheckItem* Checklist::find(std::string_view name) const {
  for (const auto& it : items) {
    if (it.name == name) return &it;
  }
  return nullptr;
}

std::string Checklist::failure_summary() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& it : items) {
    if (it.pass) continue;
    if (!first) os << "; ";
    first = false;
    os << it.name << " (" << it.value << ")";
    if (!it.detail.empty()) os << ": " << it.detail;
  }
  return os.str();
}

}  // namespace cidet
