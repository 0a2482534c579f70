#include "eval/report.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "core/error.hpp"

namespace trimix {

namespace fs = std::filesystem;

namespace {

double mean_of(const std::vector<MetricRow>& rows, double MetricRow::* field) {
    if (rows.empty()) return 0.0;
    double s = 0;
    for (const auto& r : rows) s += r.*field;
    return s / double(rows.size());
}

// Shortest-exact double formatting for text tables.
std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // Prefer a shorter representation when it parses back exactly.
    for (int prec = 1; prec < 17; prec++) {
        char probe[40];
        std::snprintf(probe, sizeof probe, "%.*g", prec, v);
        if (std::strtod(probe, nullptr) == v || (std::isnan(v) && std::isnan(std::strtod(probe, nullptr)))) {
            return probe;
        }
    }
    return buf;
}

} // namespace

double EvalReport::mean_psnr() const { return mean_of(rows, &MetricRow::psnr); }
double EvalReport::mean_dist_reference() const {
    return mean_of(rows, &MetricRow::dist_reference);
}
double EvalReport::mean_dist_source() const { return mean_of(rows, &MetricRow::dist_source); }
double EvalReport::mean_iou() const { return mean_of(rows, &MetricRow::iou); }

void save_report_csv(const EvalReport& r, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write report: " + path);
    f << "id,view,psnr,dist_reference,dist_source,iou\n";
    for (const auto& row : r.rows) {
        if (row.id.find_first_of(",\n\"") != std::string::npos)
            throw InvalidArgError("report id must not contain CSV structure characters: " +
                                  row.id);
        f << row.id << ',' << row.view << ',' << fmt_double(row.psnr) << ','
          << fmt_double(row.dist_reference) << ',' << fmt_double(row.dist_source) << ','
          << fmt_double(row.iou) << '\n';
    }
    if (!f) throw IoError("failed writing report: " + path);
}

EvalReport load_report_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read report: " + path);
    std::string line;
    if (!std::getline(f, line) || line != "id,view,psnr,dist_reference,dist_source,iou")
        throw FormatError("report csv: unexpected header in " + path);
    EvalReport r;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        MetricRow row;
        std::string field;
        if (!std::getline(ss, row.id, ',')) throw FormatError("report csv: bad row: " + line);
        auto next = [&](const char* what) {
            if (!std::getline(ss, field, ','))
                throw FormatError(std::string("report csv: missing ") + what + ": " + line);
            return field;
        };
        row.view = std::stoi(next("view"));
        row.psnr = std::strtod(next("psnr").c_str(), nullptr);
        row.dist_reference = std::strtod(next("dist_reference").c_str(), nullptr);
        row.dist_source = std::strtod(next("dist_source").c_str(), nullptr);
        row.iou = std::strtod(next("iou").c_str(), nullptr);
        r.rows.push_back(std::move(row));
    }
    return r;
}

nlohmann::json json_num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

double num_from_json(const nlohmann::json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto& s = j.get_ref<const std::string&>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw FormatError("report json: expected a number, got " + j.dump());
}

nlohmann::json report_json(const EvalReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"id", row.id},
                        {"view", row.view},
                        {"psnr", json_num(row.psnr)},
                        {"dist_reference", json_num(row.dist_reference)},
                        {"dist_source", json_num(row.dist_source)},
                        {"iou", json_num(row.iou)}});
    return nlohmann::json{{"rows", rows},
                          {"mean_psnr", json_num(r.mean_psnr())},
                          {"mean_dist_reference", json_num(r.mean_dist_reference())},
                          {"mean_dist_source", json_num(r.mean_dist_source())},
                          {"mean_iou", json_num(r.mean_iou())}};
}

void save_report_json(const EvalReport& r, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write report: " + path);
    f << report_json(r).dump(2) << '\n';
    if (!f) throw IoError("failed writing report: " + path);
}

EvalReport load_report_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read report: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("report json: " + std::string(e.what()));
    }
    EvalReport r;
    for (const auto& row : j.at("rows")) {
        MetricRow m;
        m.id = row.at("id").get<std::string>();
        m.view = row.at("view").get<int>();
        m.psnr = num_from_json(row.at("psnr"));
        m.dist_reference = num_from_json(row.at("dist_reference"));
        m.dist_source = num_from_json(row.at("dist_source"));
        m.iou = num_from_json(row.at("iou"));
        r.rows.push_back(std::move(m));
    }
    return r;
}

namespace {

// One frame of a [F,3,R,R] stack as a [3,R,R] tensor (copy).
Tensor frame_of(const Tensor& views, int f) {
    const int C = int(views.dim(1)), H = int(views.dim(2)), W = int(views.dim(3));
    auto out = Tensor::zeros({C, H, W});
    const int64_t fs = int64_t(C) * H * W;
    std::copy(views.data() + f * fs, views.data() + (f + 1) * fs, out.data());
    return out;
}

} // namespace

EvalReport evaluate_transfer(const std::vector<TransferSample>& samples, float mask_tol) {
    EvalReport report;
    for (const auto& s : samples) {
        if (!s.main_views.defined() || s.main_views.rank() != 4 || s.main_views.dim(1) != 3)
            throw ContractError("evaluate_transfer: main views must be [F,3,R,R]");
        if (s.main_views.shape() != s.object_views.shape() ||
            s.main_views.shape() != s.target_views.shape())
            throw ContractError("evaluate_transfer: view stacks must share one shape");
        const int F = int(s.main_views.dim(0));
        for (int f = 0; f < F; f++) {
            const auto main_img = tensor_to_image(frame_of(s.main_views, f));
            const auto object_img = tensor_to_image(frame_of(s.object_views, f));
            const auto target_img = tensor_to_image(frame_of(s.target_views, f));
            const auto main_mask = near_key_mask(main_img, mask_tol);
            const auto object_mask = near_key_mask(object_img, mask_tol);

            MetricRow row;
            row.id = s.id;
            row.view = f;
            row.psnr = psnr(main_img, target_img);
            row.iou = silhouette_iou(main_mask, object_mask);
            if (main_mask.count() == 0) {
                // An all-background generation is maximally far from any
                // material; keep the row instead of aborting the report.
                row.dist_reference = std::numeric_limits<double>::infinity();
                row.dist_source = std::numeric_limits<double>::infinity();
            } else {
                row.dist_reference = appearance_distance(main_img, main_mask, s.reference_img);
                row.dist_source = appearance_distance(main_img, main_mask, s.source_img);
            }
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

TransferSample transfer_sample_inputs(const Manifest& man, const TripletRef& ref) {
    TransferSample s;
    s.id = ref.shape_name + ":" + ref.source_material + "->" + ref.target_material;
    s.target_views = load_view_stack(man, ref.target_files);
    s.reference_img = read_png((fs::path(man.dir) / ref.reference_file).string());
    const auto& src = man.find("reference", "", ref.source_material, 0);
    s.source_img = read_png((fs::path(man.dir) / src.file).string());
    return s;
}

std::vector<std::pair<std::string, double>> psnr_directories(const std::string& pred_dir,
                                                             const std::string& gt_dir) {
    auto list_pngs = [](const std::string& dir) {
        if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
        std::map<std::string, fs::path> files;
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file() && e.path().extension() == ".png")
                files.emplace(e.path().filename().string(), e.path());
        return files;
    };
    const auto pred = list_pngs(pred_dir);
    const auto gt = list_pngs(gt_dir);
    if (pred.empty()) throw InvalidArgError("no .png files in " + pred_dir);
    for (const auto& [name, p] : pred)
        if (!gt.count(name)) throw InvalidArgError("no ground-truth match for " + name);
    for (const auto& [name, p] : gt)
        if (!pred.count(name)) throw InvalidArgError("no prediction match for " + name);

    std::vector<std::pair<std::string, double>> rows;
    rows.reserve(pred.size());
    for (const auto& [name, p] : pred)
        rows.emplace_back(name, psnr(read_png(p.string()), read_png(gt.at(name).string())));
    return rows;
}

} // namespace trimix
