#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

namespace trimix {

using Json = nlohmann::json;

using Vec3 = std::array<float, 3>;

// ============================================================
// Scene specification types
// ============================================================

struct MaterialSpec {
    std::string name;
    Vec3 albedo = {0.5f, 0.5f, 0.5f};
    float checker_scale = 0.f; // 0 = solid color
    Vec3 checker_albedo2 = {0.5f, 0.5f, 0.5f};
    float specular_strength = 0.f;
    float shininess = 1.f; // exponent, >= 1
    float metallic = 0.f;  // tints specular toward albedo

    // Clamps channels/strengths to [0,1] and shininess to >= 1.
    MaterialSpec validated() const;
};

enum class ShapeKind { sphere, cube, torus, capsule };

std::string shape_kind_name(ShapeKind k);
ShapeKind shape_kind_from_name(const std::string& s);

struct ShapeSpec {
    std::string name;
    ShapeKind kind = ShapeKind::sphere;
    // sphere: params[0] = radius
    // cube: params[0..2] = half extents
    // torus: params[0] = major radius, params[1] = tube radius
    // capsule: params[0] = half height of the core segment, params[1] = radius
    std::vector<float> params = {1.f};
    float yaw_deg = 0.f;   // about +y
    float pitch_deg = 0.f; // about +x

    // Throws InvalidArgError on non-positive parameters or wrong counts.
    void validate() const;
    float max_extent() const;
};

struct CameraSpec {
    float azimuth_deg = 0.f;
    float elevation_deg = 20.f;
    float radius = 3.f;
    float fov_deg = 40.f; // vertical field of view
};

struct LightSpec {
    Vec3 key_dir = {0.35f, 0.8f, 0.5f}; // points from surface toward the light
    float key_intensity = 0.7f;
    float ambient = 0.25f;

    // Normalizes key_dir; throws InvalidArgError on a near-zero vector.
    LightSpec normalized() const;
};

// Json round-trips for every spec (lossless: floats serialized exactly).
Json to_json(const MaterialSpec& m);
MaterialSpec material_from_json(const Json& j);
Json to_json(const ShapeSpec& s);
ShapeSpec shape_from_json(const Json& j);
Json to_json(const CameraSpec& c);
CameraSpec camera_from_json(const Json& j);
Json to_json(const LightSpec& l);
LightSpec light_from_json(const Json& j);

} // namespace trimix
