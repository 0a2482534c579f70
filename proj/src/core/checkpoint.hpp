#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/tensor.hpp"

namespace trimix {

// Ordered name -> tensor map. Insertion order is the serialization order,
// so identical construction sequences yield byte-identical checkpoints.
template <typename T>
class DictT {
public:
    void put(const std::string& name, TensorT<T> t) {
        auto it = index_.find(name);
        if (it != index_.end()) {
            items_[it->second].second = std::move(t);
            return;
        }
        index_.emplace(name, items_.size());
        items_.emplace_back(name, std::move(t));
    }

    bool contains(const std::string& name) const { return index_.count(name) > 0; }

    TensorT<T>& at(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw ContractError("missing tensor entry: " + name);
        return items_[it->second].second;
    }
    const TensorT<T>& at(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ContractError("missing tensor entry: " + name);
        return items_[it->second].second;
    }

    size_t size() const { return items_.size(); }
    auto begin() { return items_.begin(); }
    auto end() { return items_.end(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

private:
    std::vector<std::pair<std::string, TensorT<T>>> items_;
    std::unordered_map<std::string, size_t> index_;
};

using TensorDict = DictT<float>;
using TensorDict64 = DictT<double>;

// ============================================================
// TMX1 checkpoint container
// ============================================================
//
// Little-endian byte layout:
//   magic "TMX1"
//   u32 entry count
//   per entry: u32 name length, UTF-8 name bytes,
//              u32 rank, u32 dims[rank],
//              raw IEEE-754 binary32 data (bit-preserving)
// String entries (config JSON) are rank-1 arrays whose floats hold the
// byte values 0..255; every byte value is exactly representable.

std::vector<uint8_t> serialize_dict(const TensorDict& d);
TensorDict deserialize_dict(const std::vector<uint8_t>& bytes);

void save_checkpoint(const std::string& path, const TensorDict& d);
TensorDict load_checkpoint(const std::string& path);

void put_string_entry(TensorDict& d, const std::string& name, const std::string& value);
std::string get_string_entry(const TensorDict& d, const std::string& name);

uint64_t fnv1a64(const uint8_t* data, size_t len);
// Checksum over the serialized byte stream; the freeze contract compares it
// before and after mixing-weight training.
uint64_t dict_checksum(const TensorDict& d);

TensorDict64 widen_dict(const TensorDict& d);

} // namespace trimix
