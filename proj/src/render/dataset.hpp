#pragma once

#include <string>
#include <vector>

#include "render/renderer.hpp"
#include "render/scene.hpp"

namespace trimix {

// ============================================================
// Dataset: orbit renders + conditioning views + material refs
// ============================================================

struct DatasetConfig {
    int resolution = 32;
    int view_count = 4;
    float elevation_deg = 20.f;
    float camera_radius = 3.f;
    LightSpec light;
    // A (shape, material) pair whose flat index hits the stride midpoint is
    // held out; triplets targeting it are evaluation-only.
    int hold_out_stride = 7;
    std::vector<std::string> shape_names;    // empty = full catalog
    std::vector<std::string> material_names; // empty = full catalog
};

Json to_json(const DatasetConfig& c);
DatasetConfig dataset_config_from_json(const Json& j);

struct ManifestEntry {
    std::string role; // object | reference | target_view
    std::string file; // relative to the manifest directory
    CameraSpec camera;
    MaterialSpec material;
    ShapeSpec shape;
    std::string split; // train | held_out
};

struct Manifest {
    int version = 1;
    int resolution = 0;
    int view_count = 0;
    std::vector<ManifestEntry> entries;
    std::string dir; // directory the manifest was written to / loaded from

    const ManifestEntry& find(const std::string& role, const std::string& shape_name,
                              const std::string& material_name, int view_index) const;
};

// A transfer sample: object view of (shape, source material), the target
// material's reference sphere, and ground-truth orbit views in the target
// material. Files are manifest-relative.
struct TripletRef {
    std::string shape_name;
    std::string source_material;
    std::string target_material;
    std::string object_file;
    std::string reference_file;               // front view of the reference orbit
    std::vector<std::string> reference_files; // full reference-sphere orbit, F views
    std::vector<std::string> object_view_files; // source-material orbit, F views
    std::vector<std::string> target_files;
    std::vector<CameraSpec> target_cameras;
    CameraSpec object_camera;
    std::string split;
};

// Built-in catalogs. Albedos stay away from the magenta key color so the
// background mask recovers exactly from stored files.
std::vector<ShapeSpec> builtin_shapes();
std::vector<MaterialSpec> builtin_materials();
ShapeSpec find_shape(const std::string& name);
MaterialSpec find_material(const std::string& name);

// Renders every (shape, material) orbit set plus per-pair conditioning views
// and a per-material reference-sphere orbit (F views on the same orbit
// geometry); writes PNGs and manifest.json under out_dir and returns the
// manifest.
Manifest make_dataset(const std::vector<ShapeSpec>& shapes,
                      const std::vector<MaterialSpec>& materials, const DatasetConfig& config,
                      const std::string& out_dir);

void save_manifest(const Manifest& m, const std::string& path);
Manifest load_manifest(const std::string& path);

// All (shape, source -> target) pairings derivable from the manifest whose
// target pair carries the requested split ("" = all). Source differs from
// target unless include_identity is set.
std::vector<TripletRef> enumerate_triplets(const Manifest& m, const std::string& split,
                                           bool include_identity = false);

// Loads a manifest-relative PNG as a [3,H,W] tensor in [-1,1].
Tensor load_entry_tensor(const Manifest& m, const std::string& file);

// Stacks manifest-relative PNGs into one [F,3,H,W] tensor in [-1,1].
Tensor load_view_stack(const Manifest& m, const std::vector<std::string>& files);

// Fully loaded triplet tensors for adaptation and evaluation.
struct TripletData {
    Tensor object_views;    // [F,3,R,R] source-material orbit of the shape
    Tensor object_cond;     // [3,R,R] front view (conditioning image)
    Tensor reference_views; // [F,3,R,R] reference-sphere orbit
    Tensor reference_cond;  // [3,R,R] front reference view
    Tensor target_views;    // [F,3,R,R] ground-truth orbit in the target material
    TripletRef ref;
};

TripletData load_triplet(const Manifest& m, const TripletRef& t);

} // namespace trimix
