#pragma once

#include <map>
#include <string>

#include "vadd/tensor.hpp"

namespace vadd::ad {

// Named trainable tensors. std::map keeps iteration in lexicographic name
// order, which fixes the reduction/update order for determinism. Parameters
// shared between model parts live under a single name; both sites hold the
// same Tensor handle.
class ParamStore {
public:
    Tensor& create(const std::string& name, Shape shape, std::vector<double> values);
    void insert(const std::string& name, Tensor t);

    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    bool contains(const std::string& name) const { return entries_.count(name) > 0; }

    size_t size() const { return entries_.size(); }
    int64_t total_elements() const;
    void zero_grads();

    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

private:
    std::map<std::string, Tensor> entries_;
};

} // namespace vadd::ad
