#include "render/renderer.hpp"

#include <cmath>

#include "core/error.hpp"

namespace trimix {

namespace {

constexpr int kMaxMarchSteps = 128;
constexpr float kHitTol = 1e-3f;
constexpr float kNormalEps = 1e-4f;
constexpr float kPi = 3.14159265358979323846f;

float deg2rad(float d) { return d * (kPi / 180.f); }

Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 mul(const Vec3& a, float s) { return {a[0] * s, a[1] * s, a[2] * s}; }
float dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
float len(const Vec3& a) { return std::sqrt(dot(a, a)); }

Vec3 normalize(const Vec3& a) {
    const float n = len(a);
    return {a[0] / n, a[1] / n, a[2] / n};
}

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

// World -> object space: undo yaw about y, then pitch about x.
Vec3 to_object(const ShapeSpec& s, const Vec3& p) {
    const float cy = std::cos(deg2rad(-s.yaw_deg)), sy = std::sin(deg2rad(-s.yaw_deg));
    Vec3 q = {cy * p[0] + sy * p[2], p[1], -sy * p[0] + cy * p[2]};
    const float cx = std::cos(deg2rad(-s.pitch_deg)), sx = std::sin(deg2rad(-s.pitch_deg));
    return {q[0], cx * q[1] - sx * q[2], sx * q[1] + cx * q[2]};
}

float sdf_object_space(const ShapeSpec& s, const Vec3& p) {
    switch (s.kind) {
        case ShapeKind::sphere: return len(p) - s.params[0];
        case ShapeKind::cube: {
            const Vec3 q = {std::fabs(p[0]) - s.params[0], std::fabs(p[1]) - s.params[1],
                            std::fabs(p[2]) - s.params[2]};
            const Vec3 qp = {std::max(q[0], 0.f), std::max(q[1], 0.f), std::max(q[2], 0.f)};
            return len(qp) + std::min(std::max(q[0], std::max(q[1], q[2])), 0.f);
        }
        case ShapeKind::torus: {
            const float ring = std::sqrt(p[0] * p[0] + p[2] * p[2]) - s.params[0];
            return std::sqrt(ring * ring + p[1] * p[1]) - s.params[1];
        }
        case ShapeKind::capsule: {
            const float h = s.params[0];
            const float y = std::min(std::max(p[1], -h), h);
            const Vec3 q = {p[0], p[1] - y, p[2]};
            return len(q) - s.params[1];
        }
    }
    throw InvalidArgError("unknown shape kind");
}

Vec3 sdf_normal(const ShapeSpec& s, const Vec3& p) {
    const float e = kNormalEps;
    const float dx = shape_sdf(s, {p[0] + e, p[1], p[2]}) - shape_sdf(s, {p[0] - e, p[1], p[2]});
    const float dy = shape_sdf(s, {p[0], p[1] + e, p[2]}) - shape_sdf(s, {p[0], p[1] - e, p[2]});
    const float dz = shape_sdf(s, {p[0], p[1], p[2] + e}) - shape_sdf(s, {p[0], p[1], p[2] - e});
    return normalize({dx, dy, dz});
}

// 3D object-space checker: parity of summed cell indices. A zero scale keeps
// every index at floor(0) = 0, so the pattern degenerates to the base albedo.
Vec3 surface_albedo(const MaterialSpec& m, const ShapeSpec& s, const Vec3& world_p) {
    if (m.checker_scale <= 0.f) return m.albedo;
    const Vec3 p = to_object(s, world_p);
    long cells = 0;
    for (int i = 0; i < 3; i++)
        cells += static_cast<long>(std::floor(m.checker_scale * p[i]));
    return (cells & 1) ? m.checker_albedo2 : m.albedo;
}

Vec3 shade(const MaterialSpec& m, const ShapeSpec& s, const Vec3& p, const Vec3& n,
           const Vec3& view_dir, const LightSpec& light) {
    const Vec3 albedo = surface_albedo(m, s, p);
    const Vec3 l = light.key_dir;
    const float ndl = std::max(0.f, dot(n, l));
    // r = reflection of the incoming light direction about the normal
    const Vec3 r = normalize(sub(mul(n, 2.f * dot(n, l)), l));
    const float rv = std::max(0.f, dot(r, view_dir));
    const float spec = m.specular_strength * std::pow(rv, m.shininess);
    Vec3 out;
    for (int c = 0; c < 3; c++) {
        const float spec_tint = (1.f - m.metallic) * 1.f + m.metallic * albedo[c];
        float v = light.ambient * albedo[c] + light.key_intensity * ndl * albedo[c] +
                  spec * spec_tint;
        out[c] = std::min(1.f, std::max(0.f, v));
    }
    return out;
}

} // namespace

float shape_sdf(const ShapeSpec& shape, const Vec3& p) {
    return sdf_object_space(shape, to_object(shape, p));
}

Vec3 camera_position(const CameraSpec& camera) {
    const float az = deg2rad(camera.azimuth_deg), el = deg2rad(camera.elevation_deg);
    return {camera.radius * std::cos(el) * std::sin(az), camera.radius * std::sin(el),
            camera.radius * std::cos(el) * std::cos(az)};
}

RenderResult render_view(const ShapeSpec& shape, const MaterialSpec& material,
                         const CameraSpec& camera, const LightSpec& light, int resolution) {
    if (resolution <= 0) throw InvalidArgError("resolution must be positive");
    shape.validate();
    if (camera.elevation_deg < -89.f || camera.elevation_deg > 89.f)
        throw InvalidArgError("camera elevation outside [-89, 89]");
    const Vec3 ro = camera_position(camera);
    if (shape_sdf(shape, ro) <= 0.f) throw ContractError("camera starts inside the shape");
    if (!(camera.radius > shape.max_extent()))
        throw InvalidArgError("camera radius must exceed the shape extent");
    const MaterialSpec mat = material.validated();
    const LightSpec lit = light.normalized();

    const Vec3 forward = normalize(mul(ro, -1.f)); // look at the origin
    const Vec3 right = normalize(cross(forward, Vec3{0.f, 1.f, 0.f}));
    const Vec3 up = cross(right, forward);
    const float tan_half = std::tan(deg2rad(camera.fov_deg) * 0.5f);
    const float t_max = 3.f * camera.radius;

    RenderResult res;
    res.image = Image(resolution, resolution);
    res.mask = Mask(resolution, resolution);
    for (int y = 0; y < resolution; y++) {
        for (int x = 0; x < resolution; x++) {
            const float u = ((x + 0.5f) / resolution * 2.f - 1.f) * tan_half;
            const float v = (1.f - (y + 0.5f) / resolution * 2.f) * tan_half;
            const Vec3 rd = normalize(add(forward, add(mul(right, u), mul(up, v))));

            float t = 0.f;
            bool hit = false;
            for (int step = 0; step < kMaxMarchSteps; step++) {
                const Vec3 p = add(ro, mul(rd, t));
                const float d = shape_sdf(shape, p);
                if (d < kHitTol) {
                    hit = true;
                    break;
                }
                t += d;
                if (t > t_max) break;
            }

            float* px = res.image.px(y, x);
            if (hit) {
                const Vec3 p = add(ro, mul(rd, t));
                const Vec3 n = sdf_normal(shape, p);
                const Vec3 c = shade(mat, shape, p, n, mul(rd, -1.f), lit);
                px[0] = c[0];
                px[1] = c[1];
                px[2] = c[2];
                res.mask.at(y, x) = 1;
            } else {
                px[0] = kKeyR;
                px[1] = kKeyG;
                px[2] = kKeyB;
            }
        }
    }
    return res;
}

std::vector<RenderResult> render_orbit(const ShapeSpec& shape, const MaterialSpec& material,
                                       const LightSpec& light, int view_count,
                                       float elevation_deg, float camera_radius,
                                       int resolution) {
    if (view_count < 1) throw InvalidArgError("orbit needs at least one view");
    std::vector<RenderResult> out;
    out.reserve(static_cast<size_t>(view_count));
    for (int k = 0; k < view_count; k++) {
        CameraSpec cam;
        cam.azimuth_deg = static_cast<float>(k) * 360.f / static_cast<float>(view_count);
        cam.elevation_deg = elevation_deg;
        cam.radius = camera_radius;
        out.push_back(render_view(shape, material, cam, light, resolution));
    }
    return out;
}

RenderResult render_material_sphere(const MaterialSpec& material, const LightSpec& light,
                                    int resolution) {
    ShapeSpec sphere;
    sphere.name = "material_sphere";
    sphere.kind = ShapeKind::sphere;
    sphere.params = {1.f};
    CameraSpec cam; // defaults: front view, elevation 20, radius 3
    return render_view(sphere, material, cam, light, resolution);
}

} // namespace trimix
