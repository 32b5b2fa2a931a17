#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "afford/tensor.hpp"

namespace afford::num {

// Named parameter tensors in a stable insertion order (initialization,
// serialization and Adam all iterate in this order).
class ParameterStore {
 public:
  Tensor& add(const std::string& name, Tensor init);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return values_.count(name) != 0; }
  const std::vector<std::string>& names() const { return order_; }
  std::size_t total_size() const;

 private:
  std::vector<std::string> order_;
  std::unordered_map<std::string, Tensor> values_;
};

using GradientMap = std::map<std::string, Tensor>;

}  // namespace afford::num
