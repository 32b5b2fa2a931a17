#pragma once

#include <stdexcept>
#include <string>

namespace afford {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(msg);
}

}  // namespace afford
