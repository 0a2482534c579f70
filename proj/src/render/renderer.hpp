#pragma once

#include <vector>

#include "render/image.hpp"
#include "render/scene.hpp"

namespace trimix {

struct RenderResult {
    Image image;
    Mask mask; // analytic hit mask from the ray march
};

// Signed distance from a world-space point to the shape surface.
float shape_sdf(const ShapeSpec& shape, const Vec3& p);

// Sphere-traced render against the magenta key background. Deterministic for
// fixed inputs. Throws ContractError if the camera starts inside the shape.
RenderResult render_view(const ShapeSpec& shape, const MaterialSpec& material,
                         const CameraSpec& camera, const LightSpec& light, int resolution);

// Orbit: azimuths k*360/F, shared elevation and radius.
std::vector<RenderResult> render_orbit(const ShapeSpec& shape, const MaterialSpec& material,
                                       const LightSpec& light, int view_count,
                                       float elevation_deg, float camera_radius,
                                       int resolution);

// Canonical material preview: unit sphere, front camera at the default orbit
// elevation, the same shading model.
RenderResult render_material_sphere(const MaterialSpec& material, const LightSpec& light,
                                    int resolution);

// Camera position on the orbit sphere (azimuth 0 looks down -z from +z).
Vec3 camera_position(const CameraSpec& camera);

} // namespace trimix
