#include "core/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace trimix {

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 24) & 0xff));
}

struct Reader {
    const std::vector<uint8_t>& b;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > b.size()) throw FormatError("checkpoint truncated");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = static_cast<uint32_t>(b[pos]) | (static_cast<uint32_t>(b[pos + 1]) << 8) |
                     (static_cast<uint32_t>(b[pos + 2]) << 16) |
                     (static_cast<uint32_t>(b[pos + 3]) << 24);
        pos += 4;
        return v;
    }
    std::string str(size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(b.data() + pos), n);
        pos += n;
        return s;
    }
    void floats(float* dst, size_t n) {
        need(n * 4);
        std::memcpy(dst, b.data() + pos, n * 4);
        pos += n * 4;
    }
};

} // namespace

std::vector<uint8_t> serialize_dict(const TensorDict& d) {
    std::vector<uint8_t> out;
    out.push_back('T');
    out.push_back('M');
    out.push_back('X');
    out.push_back('1');
    put_u32(out, static_cast<uint32_t>(d.size()));
    for (const auto& [name, t] : d) {
        put_u32(out, static_cast<uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        put_u32(out, static_cast<uint32_t>(t.rank()));
        for (int i = 0; i < t.rank(); i++) put_u32(out, static_cast<uint32_t>(t.dim(i)));
        const size_t bytes = static_cast<size_t>(t.numel()) * 4;
        const size_t off = out.size();
        out.resize(off + bytes);
        static_assert(sizeof(float) == 4);
        std::memcpy(out.data() + off, t.data(), bytes); // little-endian host assumed
    }
    return out;
}

TensorDict deserialize_dict(const std::vector<uint8_t>& bytes) {
    Reader r{bytes};
    const std::string magic = r.str(4);
    if (magic != "TMX1") throw FormatError("bad checkpoint magic '" + magic + "'");
    const uint32_t count = r.u32();
    TensorDict d;
    for (uint32_t i = 0; i < count; i++) {
        const uint32_t name_len = r.u32();
        std::string name = r.str(name_len);
        const uint32_t rank = r.u32();
        if (rank > 8) throw FormatError("implausible rank " + std::to_string(rank));
        Shape shape(rank);
        int64_t n = 1;
        for (uint32_t k = 0; k < rank; k++) {
            const uint32_t dim = r.u32();
            if (dim == 0 || dim > (1u << 28)) throw FormatError("implausible dim");
            shape[k] = static_cast<int>(dim);
            n *= dim;
        }
        auto t = Tensor::zeros(shape);
        r.floats(t.data(), static_cast<size_t>(n));
        d.put(name, std::move(t));
    }
    if (r.pos != bytes.size()) throw FormatError("trailing bytes in checkpoint");
    return d;
}

void save_checkpoint(const std::string& path, const TensorDict& d) {
    const auto bytes = serialize_dict(d);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for write: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + path);
}

TensorDict load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw IoError("cannot open: " + path);
    const auto size = f.tellg();
    f.seekg(0);
    std::vector<uint8_t> bytes(static_cast<size_t>(size));
    f.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!f) throw IoError("read failed: " + path);
    return deserialize_dict(bytes);
}

void put_string_entry(TensorDict& d, const std::string& name, const std::string& value) {
    if (value.empty()) throw InvalidArgError("string entry '" + name + "' must be non-empty");
    auto t = Tensor::zeros({static_cast<int>(value.size())});
    for (size_t i = 0; i < value.size(); i++)
        t.data()[i] = static_cast<float>(static_cast<uint8_t>(value[i]));
    d.put(name, std::move(t));
}

std::string get_string_entry(const TensorDict& d, const std::string& name) {
    const auto& t = d.at(name);
    std::string s;
    s.reserve(static_cast<size_t>(t.numel()));
    for (int64_t i = 0; i < t.numel(); i++) {
        const float v = t.data()[i];
        if (v < 0.f || v > 255.f || v != static_cast<float>(static_cast<uint8_t>(v)))
            throw FormatError("entry '" + name + "' is not a string entry");
        s.push_back(static_cast<char>(static_cast<uint8_t>(v)));
    }
    return s;
}

uint64_t fnv1a64(const uint8_t* data, size_t len) {
    uint64_t h = 1469598103934665603ull;
    for (size_t i = 0; i < len; i++) {
        h ^= data[i];
        h *= 1099511628211ull;
    }
    return h;
}

uint64_t dict_checksum(const TensorDict& d) {
    const auto bytes = serialize_dict(d);
    return fnv1a64(bytes.data(), bytes.size());
}

TensorDict64 widen_dict(const TensorDict& d) {
    TensorDict64 out;
    for (const auto& [name, t] : d) out.put(name, widen(t));
    return out;
}

} // namespace trimix
