#include "vadd/param_store.hpp"

namespace vadd::ad {

Tensor& ParamStore::create(const std::string& name, Shape shape, std::vector<double> values) {
    if (entries_.count(name))
        fail("param store: duplicate parameter name '", name, "'");
    Tensor t = Tensor::param(std::move(shape), std::move(values));
    auto [it, ok] = entries_.emplace(name, std::move(t));
    (void)ok;
    return it->second;
}

void ParamStore::insert(const std::string& name, Tensor t) {
    if (entries_.count(name))
        fail("param store: duplicate parameter name '", name, "'");
    entries_.emplace(name, std::move(t));
}

Tensor& ParamStore::at(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) fail("param store: no parameter named '", name, "'");
    return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) fail("param store: no parameter named '", name, "'");
    return it->second;
}

int64_t ParamStore::total_elements() const {
    int64_t n = 0;
    for (const auto& [name, t] : entries_) n += t.numel();
    return n;
}

void ParamStore::zero_grads() {
    for (auto& [name, t] : entries_) t.zero_grad();
}

} // namespace vadd::ad
