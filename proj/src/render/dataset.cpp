#include "render/dataset.hpp"

#include <filesystem>
#include <fstream>

#include "core/error.hpp"

namespace trimix {

namespace fs = std::filesystem;

Json to_json(const DatasetConfig& c) {
    return Json{{"resolution", c.resolution},
                {"view_count", c.view_count},
                {"elevation_deg", c.elevation_deg},
                {"camera_radius", c.camera_radius},
                {"light", to_json(c.light)},
                {"hold_out_stride", c.hold_out_stride},
                {"shape_names", c.shape_names},
                {"material_names", c.material_names}};
}

DatasetConfig dataset_config_from_json(const Json& j) {
    DatasetConfig c;
    c.resolution = j.at("resolution").get<int>();
    c.view_count = j.at("view_count").get<int>();
    c.elevation_deg = j.at("elevation_deg").get<float>();
    c.camera_radius = j.at("camera_radius").get<float>();
    c.light = light_from_json(j.at("light"));
    c.hold_out_stride = j.at("hold_out_stride").get<int>();
    c.shape_names = j.at("shape_names").get<std::vector<std::string>>();
    c.material_names = j.at("material_names").get<std::vector<std::string>>();
    return c;
}

std::vector<ShapeSpec> builtin_shapes() {
    std::vector<ShapeSpec> out;
    {
        ShapeSpec s;
        s.name = "sphere";
        s.kind = ShapeKind::sphere;
        s.params = {1.f};
        out.push_back(s);
    }
    {
        ShapeSpec s;
        s.name = "cube";
        s.kind = ShapeKind::cube;
        s.params = {0.75f, 0.75f, 0.75f};
        s.yaw_deg = 25.f;
        s.pitch_deg = 10.f;
        out.push_back(s);
    }
    {
        ShapeSpec s;
        s.name = "torus";
        s.kind = ShapeKind::torus;
        s.params = {0.75f, 0.3f};
        s.pitch_deg = 55.f;
        out.push_back(s);
    }
    {
        ShapeSpec s;
        s.name = "capsule";
        s.kind = ShapeKind::capsule;
        s.params = {0.55f, 0.45f};
        s.pitch_deg = 20.f;
        s.yaw_deg = 15.f;
        out.push_back(s);
    }
    return out;
}

std::vector<MaterialSpec> builtin_materials() {
    std::vector<MaterialSpec> out;
    {
        MaterialSpec m;
        m.name = "red";
        m.albedo = {0.80f, 0.10f, 0.10f};
        m.specular_strength = 0.30f;
        m.shininess = 16.f;
        out.push_back(m);
    }
    {
        MaterialSpec m;
        m.name = "gold";
        m.albedo = {0.85f, 0.68f, 0.12f};
        m.specular_strength = 0.60f;
        m.shininess = 28.f;
        m.metallic = 0.85f;
        out.push_back(m);
    }
    {
        MaterialSpec m;
        m.name = "green";
        m.albedo = {0.10f, 0.70f, 0.20f};
        m.specular_strength = 0.30f;
        m.shininess = 16.f;
        out.push_back(m);
    }
    {
        MaterialSpec m;
        m.name = "blue";
        m.albedo = {0.12f, 0.25f, 0.85f};
        m.specular_strength = 0.40f;
        m.shininess = 32.f;
        m.metallic = 0.20f;
        out.push_back(m);
    }
    {
        MaterialSpec m;
        m.name = "checker";
        m.albedo = {0.90f, 0.45f, 0.10f};
        m.checker_scale = 2.f;
        m.checker_albedo2 = {0.10f, 0.30f, 0.80f};
        m.specular_strength = 0.20f;
        m.shininess = 8.f;
        out.push_back(m);
    }
    return out;
}

ShapeSpec find_shape(const std::string& name) {
    for (const auto& s : builtin_shapes())
        if (s.name == name) return s;
    throw InvalidArgError("unknown shape: " + name);
}

MaterialSpec find_material(const std::string& name) {
    for (const auto& m : builtin_materials())
        if (m.name == name) return m;
    throw InvalidArgError("unknown material: " + name);
}

const ManifestEntry& Manifest::find(const std::string& role, const std::string& shape_name,
                                    const std::string& material_name, int view_index) const {
    int seen = 0;
    for (const auto& e : entries) {
        if (e.role != role || e.material.name != material_name) continue;
        if (role != "reference" && e.shape.name != shape_name) continue;
        if (seen == view_index) return e;
        seen++;
    }
    throw ContractError("manifest entry not found: " + role + "/" + shape_name + "/" +
                        material_name + "[" + std::to_string(view_index) + "]");
}

namespace {

std::vector<ShapeSpec> select_shapes(const DatasetConfig& c) {
    if (c.shape_names.empty()) return builtin_shapes();
    std::vector<ShapeSpec> out;
    for (const auto& n : c.shape_names) out.push_back(find_shape(n));
    return out;
}

std::vector<MaterialSpec> select_materials(const DatasetConfig& c) {
    if (c.material_names.empty()) return builtin_materials();
    std::vector<MaterialSpec> out;
    for (const auto& n : c.material_names) out.push_back(find_material(n));
    return out;
}

Json entry_json(const ManifestEntry& e) {
    return Json{{"role", e.role},          {"file", e.file},
                {"camera", to_json(e.camera)}, {"material", to_json(e.material)},
                {"shape", to_json(e.shape)},   {"split", e.split}};
}

ManifestEntry entry_from_json(const Json& j) {
    ManifestEntry e;
    e.role = j.at("role").get<std::string>();
    e.file = j.at("file").get<std::string>();
    e.camera = camera_from_json(j.at("camera"));
    e.material = material_from_json(j.at("material"));
    e.shape = shape_from_json(j.at("shape"));
    e.split = j.at("split").get<std::string>();
    return e;
}

ShapeSpec reference_sphere_spec() {
    ShapeSpec s;
    s.name = "material_sphere";
    s.kind = ShapeKind::sphere;
    s.params = {1.f};
    return s;
}

} // namespace

Manifest make_dataset(const std::vector<ShapeSpec>& shapes_in,
                      const std::vector<MaterialSpec>& materials_in,
                      const DatasetConfig& config, const std::string& out_dir) {
    const auto shapes = shapes_in.empty() ? select_shapes(config) : shapes_in;
    const auto materials = materials_in.empty() ? select_materials(config) : materials_in;
    if (shapes.empty() || materials.empty())
        throw InvalidArgError("dataset needs at least one shape and one material");

    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "views", ec);
    fs::create_directories(fs::path(out_dir) / "objects", ec);
    fs::create_directories(fs::path(out_dir) / "refs", ec);
    if (ec) throw IoError("cannot create dataset directories under " + out_dir);

    Manifest man;
    man.resolution = config.resolution;
    man.view_count = config.view_count;
    man.dir = out_dir;

    const int mat_count = static_cast<int>(materials.size());
    auto pair_split = [&](int shape_i, int mat_j) -> std::string {
        if (config.hold_out_stride <= 0) return "train";
        const int idx = shape_i * mat_count + mat_j;
        return (idx % config.hold_out_stride) == config.hold_out_stride / 2 ? "held_out"
                                                                            : "train";
    };

    CameraSpec front;
    front.elevation_deg = config.elevation_deg;
    front.radius = config.camera_radius;

    for (size_t si = 0; si < shapes.size(); si++) {
        for (size_t mj = 0; mj < materials.size(); mj++) {
            const auto& shp = shapes[si];
            const auto& mat = materials[mj];
            const std::string split = pair_split(static_cast<int>(si), static_cast<int>(mj));

            // Conditioning view: the front view of the pair.
            const auto obj = render_view(shp, mat, front, config.light, config.resolution);
            ManifestEntry oe;
            oe.role = "object";
            oe.file = "objects/" + shp.name + "_" + mat.name + ".png";
            oe.camera = front;
            oe.material = mat;
            oe.shape = shp;
            oe.split = split;
            write_png((fs::path(out_dir) / oe.file).string(), obj.image);
            man.entries.push_back(oe);

            const auto orbit = render_orbit(shp, mat, config.light, config.view_count,
                                            config.elevation_deg, config.camera_radius,
                                            config.resolution);
            for (int k = 0; k < config.view_count; k++) {
                ManifestEntry ve;
                ve.role = "target_view";
                ve.file = "views/" + shp.name + "_" + mat.name + "_v" + std::to_string(k) +
                          ".png";
                ve.camera = front;
                ve.camera.azimuth_deg =
                    static_cast<float>(k) * 360.f / static_cast<float>(config.view_count);
                ve.material = mat;
                ve.shape = shp;
                ve.split = split;
                write_png((fs::path(out_dir) / ve.file).string(), orbit[static_cast<size_t>(k)].image);
                man.entries.push_back(ve);
            }
        }
    }

    for (const auto& mat : materials) {
        const auto ref_orbit =
            render_orbit(reference_sphere_spec(), mat, config.light, config.view_count,
                         config.elevation_deg, config.camera_radius, config.resolution);
        for (int k = 0; k < config.view_count; k++) {
            ManifestEntry re;
            re.role = "reference";
            re.file = "refs/" + mat.name + "_v" + std::to_string(k) + ".png";
            re.camera = front;
            re.camera.azimuth_deg =
                static_cast<float>(k) * 360.f / static_cast<float>(config.view_count);
            re.material = mat;
            re.shape = reference_sphere_spec();
            re.split = "train";
            write_png((fs::path(out_dir) / re.file).string(),
                      ref_orbit[static_cast<size_t>(k)].image);
            man.entries.push_back(re);
        }
    }

    save_manifest(man, (fs::path(out_dir) / "manifest.json").string());
    return man;
}

void save_manifest(const Manifest& m, const std::string& path) {
    Json j;
    j["version"] = m.version;
    j["resolution"] = m.resolution;
    j["F"] = m.view_count;
    Json arr = Json::array();
    for (const auto& e : m.entries) arr.push_back(entry_json(e));
    j["entries"] = std::move(arr);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << j.dump(1) << "\n";
    if (!out) throw IoError("manifest write failed: " + path);
}

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read manifest: " + path);
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& e) {
        throw FormatError("manifest parse failed: " + path + ": " + e.what());
    }
    Manifest m;
    try {
        m.version = j.at("version").get<int>();
        m.resolution = j.at("resolution").get<int>();
        m.view_count = j.at("F").get<int>();
        for (const auto& ej : j.at("entries")) m.entries.push_back(entry_from_json(ej));
    } catch (const Json::exception& e) {
        throw FormatError("manifest schema mismatch: " + path + ": " + e.what());
    }
    m.dir = fs::path(path).parent_path().string();
    if (m.dir.empty()) m.dir = ".";
    return m;
}

std::vector<TripletRef> enumerate_triplets(const Manifest& m, const std::string& split,
                                           bool include_identity) {
    // Ordered unique (shape, material) pairs and material list as first seen.
    std::vector<std::pair<std::string, std::string>> pairs;
    std::vector<std::string> mats;
    for (const auto& e : m.entries) {
        if (e.role == "target_view") {
            std::pair<std::string, std::string> p{e.shape.name, e.material.name};
            bool seen = false;
            for (const auto& q : pairs) seen |= (q == p);
            if (!seen) pairs.push_back(p);
        }
        if (e.role == "reference") {
            bool seen = false;
            for (const auto& q : mats) seen |= (q == e.material.name);
            if (!seen) mats.push_back(e.material.name);
        }
    }

    std::vector<TripletRef> out;
    for (const auto& [shape_name, target_mat] : pairs) {
        const auto& t0 = m.find("target_view", shape_name, target_mat, 0);
        for (const auto& src_mat : mats) {
            if (!include_identity && src_mat == target_mat) continue;
            // Source object view must exist as a rendered pair.
            bool have_src = false;
            for (const auto& q : pairs) have_src |= (q.first == shape_name && q.second == src_mat);
            if (!have_src) continue;

            TripletRef t;
            t.shape_name = shape_name;
            t.source_material = src_mat;
            t.target_material = target_mat;
            t.split = t0.split;
            const auto& oe = m.find("object", shape_name, src_mat, 0);
            t.object_file = oe.file;
            t.object_camera = oe.camera;
            t.reference_file = m.find("reference", "", target_mat, 0).file;
            for (int k = 0; k < m.view_count; k++) {
                t.reference_files.push_back(m.find("reference", "", target_mat, k).file);
                t.object_view_files.push_back(
                    m.find("target_view", shape_name, src_mat, k).file);
                const auto& ve = m.find("target_view", shape_name, target_mat, k);
                t.target_files.push_back(ve.file);
                t.target_cameras.push_back(ve.camera);
            }
            if (split.empty() || t.split == split) out.push_back(std::move(t));
        }
    }
    return out;
}

Tensor load_entry_tensor(const Manifest& m, const std::string& file) {
    return image_to_tensor(read_png((fs::path(m.dir) / file).string()));
}

Tensor load_view_stack(const Manifest& m, const std::vector<std::string>& files) {
    if (files.empty()) throw InvalidArgError("load_view_stack: no files");
    const auto first = load_entry_tensor(m, files[0]);
    const int64_t C = first.dim(0), H = first.dim(1), W = first.dim(2);
    auto out = Tensor::zeros({int64_t(files.size()), C, H, W});
    const int64_t per = C * H * W;
    std::copy(first.data(), first.data() + per, out.data());
    for (size_t i = 1; i < files.size(); i++) {
        const auto t = load_entry_tensor(m, files[i]);
        if (t.shape() != first.shape())
            throw ContractError("load_view_stack: inconsistent view shapes");
        std::copy(t.data(), t.data() + per, out.data() + int64_t(i) * per);
    }
    return out;
}

TripletData load_triplet(const Manifest& m, const TripletRef& t) {
    if (t.reference_files.empty() || t.object_view_files.empty() || t.target_files.empty())
        throw ContractError("load_triplet: triplet is missing view lists");
    TripletData d;
    d.object_views = load_view_stack(m, t.object_view_files);
    d.object_cond = load_entry_tensor(m, t.object_file);
    d.reference_views = load_view_stack(m, t.reference_files);
    d.reference_cond = load_entry_tensor(m, t.reference_file);
    d.target_views = load_view_stack(m, t.target_files);
    d.ref = t;
    return d;
}

} // namespace trimix
