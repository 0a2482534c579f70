#include "model/arch.hpp"

#include "core/error.hpp"

namespace trimix {

void ArchConfig::validate() const {
    if (resolution < 8 || resolution % 4 != 0)
        throw InvalidArgError("resolution must be a multiple of 4, at least 8");
    if (base_channels < groups || base_channels % groups != 0)
        throw InvalidArgError("base_channels must be a positive multiple of groups");
    if (sin_dim % 2 != 0 || sin_dim <= 0) throw InvalidArgError("sin_dim must be even");
    if (emb_dim <= 0 || time_dim <= 0) throw InvalidArgError("embedding dims must be positive");
    if (camera_slots < 1) throw InvalidArgError("camera_slots must be positive");
    if (T < 1) throw InvalidArgError("T must be positive");
}

const char* ArchConfig::attn_name(int layer) {
    static const char* names[kAttnLayers] = {"enc2.attn", "enc3.attn", "mid.attn", "dec3.attn",
                                             "dec2.attn"};
    if (layer < 0 || layer >= kAttnLayers) throw InvalidArgError("attention layer out of range");
    return names[layer];
}

nlohmann::json to_json(const ArchConfig& a) {
    return nlohmann::json{{"resolution", a.resolution},
                          {"base_channels", a.base_channels},
                          {"emb_dim", a.emb_dim},
                          {"time_dim", a.time_dim},
                          {"sin_dim", a.sin_dim},
                          {"groups", a.groups},
                          {"camera_slots", a.camera_slots},
                          {"T", a.T},
                          {"beta_start", a.beta_start},
                          {"beta_end", a.beta_end}};
}

ArchConfig arch_from_json(const nlohmann::json& j) {
    ArchConfig a;
    try {
        a.resolution = j.at("resolution").get<int>();
        a.base_channels = j.at("base_channels").get<int>();
        a.emb_dim = j.at("emb_dim").get<int>();
        a.time_dim = j.at("time_dim").get<int>();
        a.sin_dim = j.at("sin_dim").get<int>();
        a.groups = j.at("groups").get<int>();
        a.camera_slots = j.at("camera_slots").get<int>();
        a.T = j.at("T").get<int>();
        a.beta_start = j.at("beta_start").get<double>();
        a.beta_end = j.at("beta_end").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("arch config: ") + e.what());
    }
    a.validate();
    return a;
}

void put_arch(TensorDict& d, const ArchConfig& a) {
    put_string_entry(d, "__arch__", to_json(a).dump());
}

ArchConfig get_arch(const TensorDict& d) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(get_string_entry(d, "__arch__"));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("embedded arch config is not valid json: ") + e.what());
    }
    return arch_from_json(j);
}

} // namespace trimix
