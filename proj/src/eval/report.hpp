#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "eval/metrics.hpp"
#include "render/dataset.hpp"

namespace trimix {

// ============================================================
// Metric tables: CSV for rows, JSON for run summaries
// ============================================================

// One evaluated view of one transfer sample.
struct MetricRow {
    std::string id; // sample identifier, e.g. "torus:red->gold"
    int view = 0;
    double psnr = 0;           // main stream vs ground-truth target view
    double dist_reference = 0; // foreground histogram distance to the target material
    double dist_source = 0;    // ... and to the object's source material
    double iou = 0;            // silhouette overlap with the object stream

    bool operator==(const MetricRow&) const = default;
};

struct EvalReport {
    std::vector<MetricRow> rows;

    double mean_psnr() const;
    double mean_dist_reference() const;
    double mean_dist_source() const;
    double mean_iou() const;

    bool operator==(const EvalReport&) const = default;
};

// JSON has no literal for non-finite numbers (the serializer would emit
// null), so these encode them as the strings "inf"/"-inf"/"nan" and back.
nlohmann::json json_num(double v);
double num_from_json(const nlohmann::json& j);

// Lossless text roundtrip: doubles are printed with enough digits to
// reconstruct the exact value.
void save_report_csv(const EvalReport& r, const std::string& path);
EvalReport load_report_csv(const std::string& path);

nlohmann::json report_json(const EvalReport& r); // rows plus aggregate means
void save_report_json(const EvalReport& r, const std::string& path);
EvalReport load_report_json(const std::string& path);

// ============================================================
// Transfer evaluation
// ============================================================

// Everything needed to score one transferred orbit. Views are model-range
// [-1,1] tensors [F,3,R,R]; the material spheres are dataset renders whose
// background key color recovers exactly.
struct TransferSample {
    std::string id;
    Tensor main_views;
    Tensor object_views;
    Tensor target_views;
    Image reference_img; // target-material sphere
    Image source_img;    // source-material sphere
};

// Per-view metric rows for each sample. Generated images are foregrounded by
// key-color proximity (`mask_tol`, max channel distance). A view whose
// generated foreground is empty scores infinite appearance distances and is
// otherwise kept, so one failed view cannot abort a whole evaluation.
EvalReport evaluate_transfer(const std::vector<TransferSample>& samples,
                             float mask_tol = 0.25f);

// Assembles a TransferSample's dataset-side inputs (GT views and the two
// material spheres) for one triplet.
TransferSample transfer_sample_inputs(const Manifest& man, const TripletRef& ref);

// PSNR per identically-named PNG between two directories (recursive over
// regular files directly inside each dir), sorted by name. Files present in
// only one directory are an error.
std::vector<std::pair<std::string, double>> psnr_directories(const std::string& pred_dir,
                                                             const std::string& gt_dir);

} // namespace trimix
