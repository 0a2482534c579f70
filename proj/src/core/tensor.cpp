#include "core/tensor.hpp"

#include <cstring>

namespace trimix {

int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); i++) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

Tensor64 widen(const Tensor& t) {
    auto out = Tensor64::zeros(t.shape());
    for (int64_t i = 0; i < t.numel(); i++) out.data()[i] = static_cast<double>(t.data()[i]);
    return out;
}

Tensor narrow(const Tensor64& t) {
    auto out = Tensor::zeros(t.shape());
    for (int64_t i = 0; i < t.numel(); i++) out.data()[i] = static_cast<float>(t.data()[i]);
    return out;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) return false;
    return std::memcmp(a.data(), b.data(), sizeof(float) * static_cast<size_t>(a.numel())) == 0;
}

} // namespace trimix
