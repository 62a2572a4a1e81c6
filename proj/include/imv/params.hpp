#ifndef IMV_PARAMS_HPP
#define IMV_PARAMS_HPP

#include <string>
#include <utility>
#include <vector>

#include "imv/errors.hpp"
#include "imv/ndarray.hpp"

namespace imv {

/// Ordered collection of named tensors. Insertion order is canonical: the
/// optimizer walks it deterministically and checkpoints serialize it.
struct Parameters {
    std::vector<std::pair<std::string, NdArray>> items;

    NdArray& add(const std::string& name, NdArray value) {
        items.emplace_back(name, std::move(value));
        return items.back().second;
    }

    bool has(const std::string& name) const {
        for (const auto& [n, v] : items)
            if (n == name) return true;
        return false;
    }

    NdArray& at(const std::string& name) {
        for (auto& [n, v] : items)
            if (n == name) return v;
        throw ContractError("Parameters: no tensor named '" + name + "'");
    }

    const NdArray& at(const std::string& name) const {
        for (const auto& [n, v] : items)
            if (n == name) return v;
        throw ContractError("Parameters: no tensor named '" + name + "'");
    }

    std::size_t total_elements() const {
        std::size_t n = 0;
        for (const auto& [name, v] : items) n += v.numel();
        return n;
    }
};

}  // namespace imv

#endif  // IMV_PARAMS_HPP
