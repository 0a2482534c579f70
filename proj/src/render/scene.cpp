#include "render/scene.hpp"

#include <cmath>

#include "core/error.hpp"

namespace trimix {

namespace {

float clamp01(float v) { return std::min(1.f, std::max(0.f, v)); }

Vec3 clamp01(const Vec3& v) { return {clamp01(v[0]), clamp01(v[1]), clamp01(v[2])}; }

Json vec_json(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

Vec3 vec_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 3) throw FormatError("expected a 3-vector");
    return {j[0].get<float>(), j[1].get<float>(), j[2].get<float>()};
}

} // namespace

MaterialSpec MaterialSpec::validated() const {
    MaterialSpec m = *this;
    m.albedo = clamp01(m.albedo);
    m.checker_albedo2 = clamp01(m.checker_albedo2);
    m.checker_scale = std::max(0.f, m.checker_scale);
    m.specular_strength = clamp01(m.specular_strength);
    m.shininess = std::max(1.f, m.shininess);
    m.metallic = clamp01(m.metallic);
    return m;
}

std::string shape_kind_name(ShapeKind k) {
    switch (k) {
        case ShapeKind::sphere: return "sphere";
        case ShapeKind::cube: return "cube";
        case ShapeKind::torus: return "torus";
        case ShapeKind::capsule: return "capsule";
    }
    throw InvalidArgError("unknown shape kind");
}

ShapeKind shape_kind_from_name(const std::string& s) {
    if (s == "sphere") return ShapeKind::sphere;
    if (s == "cube") return ShapeKind::cube;
    if (s == "torus") return ShapeKind::torus;
    if (s == "capsule") return ShapeKind::capsule;
    throw FormatError("unknown shape kind: " + s);
}

void ShapeSpec::validate() const {
    const size_t want = kind == ShapeKind::sphere ? 1 : kind == ShapeKind::cube ? 3 : 2;
    if (params.size() != want)
        throw InvalidArgError(shape_kind_name(kind) + " needs " + std::to_string(want) +
                              " size parameters, got " + std::to_string(params.size()));
    for (float p : params)
        if (!(p > 0.f)) throw InvalidArgError("shape size parameters must be positive");
}

float ShapeSpec::max_extent() const {
    switch (kind) {
        case ShapeKind::sphere: return params[0];
        case ShapeKind::cube:
            return std::sqrt(params[0] * params[0] + params[1] * params[1] +
                             params[2] * params[2]);
        case ShapeKind::torus: return params[0] + params[1];
        case ShapeKind::capsule: return params[0] + params[1];
    }
    throw InvalidArgError("unknown shape kind");
}

LightSpec LightSpec::normalized() const {
    LightSpec l = *this;
    const double n = std::sqrt(static_cast<double>(l.key_dir[0]) * l.key_dir[0] +
                               static_cast<double>(l.key_dir[1]) * l.key_dir[1] +
                               static_cast<double>(l.key_dir[2]) * l.key_dir[2]);
    if (n < 1e-6) throw InvalidArgError("light direction is near zero");
    for (int i = 0; i < 3; i++) l.key_dir[i] = static_cast<float>(l.key_dir[i] / n);
    return l;
}

Json to_json(const MaterialSpec& m) {
    return Json{{"name", m.name},
                {"albedo", vec_json(m.albedo)},
                {"checker_scale", m.checker_scale},
                {"checker_albedo2", vec_json(m.checker_albedo2)},
                {"specular_strength", m.specular_strength},
                {"shininess", m.shininess},
                {"metallic", m.metallic}};
}

MaterialSpec material_from_json(const Json& j) {
    MaterialSpec m;
    m.name = j.at("name").get<std::string>();
    m.albedo = vec_from_json(j.at("albedo"));
    m.checker_scale = j.at("checker_scale").get<float>();
    m.checker_albedo2 = vec_from_json(j.at("checker_albedo2"));
    m.specular_strength = j.at("specular_strength").get<float>();
    m.shininess = j.at("shininess").get<float>();
    m.metallic = j.at("metallic").get<float>();
    return m;
}

Json to_json(const ShapeSpec& s) {
    return Json{{"name", s.name},
                {"kind", shape_kind_name(s.kind)},
                {"params", s.params},
                {"yaw_deg", s.yaw_deg},
                {"pitch_deg", s.pitch_deg}};
}

ShapeSpec shape_from_json(const Json& j) {
    ShapeSpec s;
    s.name = j.at("name").get<std::string>();
    s.kind = shape_kind_from_name(j.at("kind").get<std::string>());
    s.params = j.at("params").get<std::vector<float>>();
    s.yaw_deg = j.at("yaw_deg").get<float>();
    s.pitch_deg = j.at("pitch_deg").get<float>();
    return s;
}

Json to_json(const CameraSpec& c) {
    return Json{{"azimuth_deg", c.azimuth_deg},
                {"elevation_deg", c.elevation_deg},
                {"radius", c.radius},
                {"fov_deg", c.fov_deg}};
}

CameraSpec camera_from_json(const Json& j) {
    CameraSpec c;
    c.azimuth_deg = j.at("azimuth_deg").get<float>();
    c.elevation_deg = j.at("elevation_deg").get<float>();
    c.radius = j.at("radius").get<float>();
    c.fov_deg = j.at("fov_deg").get<float>();
    return c;
}

Json to_json(const LightSpec& l) {
    return Json{{"key_dir", vec_json(l.key_dir)},
                {"key_intensity", l.key_intensity},
                {"ambient", l.ambient}};
}

LightSpec light_from_json(const Json& j) {
    LightSpec l;
    l.key_dir = vec_from_json(j.at("key_dir"));
    l.key_intensity = j.at("key_intensity").get<float>();
    l.ambient = j.at("ambient").get<float>();
    return l;
}

} // namespace trimix
