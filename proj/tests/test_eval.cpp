// Evaluation harness: image metrics, metric report I/O, mixing heatmaps,
// transfer scoring, and the seven-rung ablation ladder. Metric oracles are
// closed-form (hand-computed histograms, exact IoU fractions, PSNR of known
// MSE); the ladder smoke test checks artifact layout, weight sharing, and
// bitwise run-to-run determinism on a tiny dataset.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "eval/ablation.hpp"
#include "eval/heatmap.hpp"
#include "eval/metrics.hpp"
#include "eval/report.hpp"
#include "model/unet.hpp"
#include "render/dataset.hpp"
#include "tristream/mix.hpp"

using namespace trimix;
namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Image solid(int h, int w, float r, float g, float b) {
    Image img(h, w);
    for (int y = 0; y < h; y++)
        for (int x = 0; x < w; x++) {
            float* p = img.px(y, x);
            p[0] = r, p[1] = g, p[2] = b;
        }
    return img;
}

Mask rect_mask(int h, int w, int y0, int y1, int x0, int x1) {
    Mask m(h, w);
    for (int y = y0; y < y1; y++)
        for (int x = x0; x < x1; x++) m.at(y, x) = 1;
    return m;
}

// Key-color background with a solid-color center patch (rows/cols 2..5).
Image patch_on_key(int h, int w, float r, float g, float b) {
    Image img = solid(h, w, kKeyR, kKeyG, kKeyB);
    for (int y = 2; y < 6; y++)
        for (int x = 2; x < 6; x++) {
            float* p = img.px(y, x);
            p[0] = r, p[1] = g, p[2] = b;
        }
    return img;
}

// [F,3,R,R] stack in model range: key background, per-frame patch color.
Tensor patch_stack(int frames, int res, const std::vector<std::array<float, 3>>& colors) {
    auto t = Tensor::zeros({frames, 3, res, res});
    for (int f = 0; f < frames; f++)
        for (int c = 0; c < 3; c++)
            for (int y = 0; y < res; y++)
                for (int x = 0; x < res; x++) {
                    const bool fg = y >= 2 && y < 6 && x >= 2 && x < 6;
                    const float key[3] = {kKeyR, kKeyG, kKeyB};
                    const float v = fg ? colors[size_t(f)][size_t(c)] : key[c];
                    t.data()[((int64_t(f) * 3 + c) * res + y) * res + x] = 2.f * v - 1.f;
                }
    return t;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("trimix_eval_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

ArchConfig tiny_arch() {
    ArchConfig a;
    a.resolution = 8;
    a.base_channels = 8;
    a.emb_dim = 8;
    a.time_dim = 8;
    a.sin_dim = 4;
    a.groups = 8;
    a.camera_slots = 4;
    a.T = 50;
    return a;
}

void perturb_outputs(TensorDict& params, Rng& rng) {
    fill_normal(params.at("out.conv.w"), rng, 0.05);
    for (int l = 0; l < ArchConfig::kAttnLayers; l++)
        fill_normal(params.at(std::string(ArchConfig::attn_name(l)) + ".wo.w"), rng, 0.05);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

// ============================================================
// Scalar image metrics
// ============================================================

TEST_CASE("psnr: cap, known MSEs, and shape checking") {
    auto a = solid(4, 5, 0.2f, 0.4f, 0.6f);
    CHECK(psnr(a, a) == 60.0);

    // MSE 1 (all-zero vs all-one) is 0 dB; MSE 0.01 is 20 dB.
    auto zero = solid(4, 5, 0.f, 0.f, 0.f);
    auto one = solid(4, 5, 1.f, 1.f, 1.f);
    CHECK(psnr(zero, one) == doctest::Approx(0.0).epsilon(1e-12));
    auto tenth = solid(4, 5, 0.1f, 0.1f, 0.1f);
    CHECK(psnr(zero, tenth) == doctest::Approx(20.0).epsilon(1e-5));

    CHECK_THROWS_AS(psnr(a, solid(5, 4, 0.f, 0.f, 0.f)), ShapeError);
    CHECK_THROWS_AS(psnr(Image{}, Image{}), InvalidArgError);

    // Model-range convenience: identical tensors hit the cap.
    auto t = Tensor::zeros({3, 4, 4});
    CHECK(psnr_model_range(t, t) == 60.0);
}

TEST_CASE("silhouette_iou: exact overlap fractions") {
    auto a = rect_mask(4, 3, 0, 4, 0, 2); // cols 0-1
    auto b = rect_mask(4, 3, 0, 4, 1, 3); // cols 1-2
    CHECK(silhouette_iou(a, a) == 1.0);
    CHECK(silhouette_iou(a, b) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(silhouette_iou(b, a) == doctest::Approx(1.0 / 3).epsilon(1e-12));

    auto left = rect_mask(2, 4, 0, 2, 0, 2);
    auto right = rect_mask(2, 4, 0, 2, 2, 4);
    CHECK(silhouette_iou(left, right) == 0.0);

    Mask e1(3, 3), e2(3, 3);
    CHECK(silhouette_iou(e1, e2) == 1.0); // both empty: perfect agreement
    CHECK_THROWS_AS(silhouette_iou(Mask(2, 3), Mask(3, 2)), ShapeError);
}

TEST_CASE("foreground histograms and chi-square distance") {
    const int h = 6, w = 6;
    Mask full = rect_mask(h, w, 0, h, 0, w);

    auto red = foreground_histogram(solid(h, w, 1.f, 0.f, 0.f), full);
    // Channel-major: R saturates into its top bin, G and B sit in bin 0.
    CHECK(red[7] == 1.0);
    CHECK(red[8] == 1.0);
    CHECK(red[16] == 1.0);
    double sum = 0;
    for (double v : red) sum += v;
    CHECK(sum == doctest::Approx(3.0).epsilon(1e-12)); // one unit mass per channel

    auto blue = foreground_histogram(solid(h, w, 0.f, 0.f, 1.f), full);
    CHECK(chi_square(red, red) == 0.0);
    // Two channels move between disjoint bins, one is identical: 0.5*(2+0+2).
    CHECK(chi_square(red, blue) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(chi_square(red, blue) == chi_square(blue, red));

    CHECK_THROWS_AS(foreground_histogram(solid(h, w, 1.f, 0.f, 0.f), Mask(h, w)),
                    ContractError);

    // appearance_distance auto-masks the reference by its exact key background.
    auto img = solid(h, w, 1.f, 0.f, 0.f);
    auto ref_blue = patch_on_key(8, 8, 0.f, 0.f, 1.f);
    auto ref_red = patch_on_key(8, 8, 1.f, 0.f, 0.f);
    CHECK(appearance_distance(img, full, ref_blue) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(appearance_distance(img, full, ref_red) == 0.0);
}

TEST_CASE("dominant hue and the ordering key") {
    const int h = 4, w = 4;
    Mask full = rect_mask(h, w, 0, h, 0, w);
    CHECK(dominant_hue(solid(h, w, 1.f, 0.f, 0.f), full) == doctest::Approx(0.0));
    CHECK(dominant_hue(solid(h, w, 0.f, 1.f, 0.f), full) == doctest::Approx(120.0));
    CHECK(dominant_hue(solid(h, w, 0.f, 0.f, 1.f), full) == doctest::Approx(240.0));
    // Mixing in a little white shifts value, not hue.
    CHECK(dominant_hue(solid(h, w, 1.f, 0.25f, 0.25f), full) == doctest::Approx(0.0));

    CHECK_THROWS_AS(dominant_hue(solid(h, w, 1.f, 0.f, 0.f), Mask(h, w)), ContractError);
    CHECK_THROWS_AS(dominant_hue(solid(h, w, 0.5f, 0.5f, 0.5f), full), NumericError);

    // The circle is cut at the key color's hue (magenta, 300 degrees), so
    // red < green < blue under the ordering key.
    CHECK(hue_order_key(300.0) == doctest::Approx(0.0));
    CHECK(hue_order_key(0.0) == doctest::Approx(60.0));
    CHECK(hue_order_key(120.0) == doctest::Approx(180.0));
    CHECK(hue_order_key(240.0) == doctest::Approx(300.0));
    CHECK(hue_order_key(0.0) < hue_order_key(120.0));
    CHECK(hue_order_key(120.0) < hue_order_key(240.0));
}

// ============================================================
// Heatmaps
// ============================================================

TEST_CASE("heatmap_image: blend colors, cell geometry, and size checks") {
    // Uniform alphas blend the three stream colors equally.
    std::vector<std::array<double, 3>> table(6, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    auto img = heatmap_image(table, 2, 3, 4);
    CHECK(img.height == 8);
    CHECK(img.width == 12);
    const float* p = img.px(3, 7);
    CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(1.0 / 6).epsilon(1e-6));
    CHECK(p[2] == doctest::Approx(0.5).epsilon(1e-6));

    // All-main cells paint pure blue everywhere.
    std::vector<std::array<double, 3>> main_only(6, {0.0, 0.0, 1.0});
    auto blue = heatmap_image(main_only, 2, 3, 2);
    for (int y = 0; y < blue.height; y++)
        for (int x = 0; x < blue.width; x++) {
            CHECK(blue.px(y, x)[0] == 0.f);
            CHECK(blue.px(y, x)[2] == 1.f);
        }

    // One hot object cell lands in its own block only (layer 1, frame 2).
    std::vector<std::array<double, 3>> mixed(6, {0.0, 0.0, 1.0});
    mixed[1 * 3 + 2] = {1.0, 0.0, 0.0};
    auto two = heatmap_image(mixed, 2, 3, 2);
    CHECK(two.px(3, 5)[0] == 1.f); // inside the hot cell
    CHECK(two.px(3, 5)[2] == 0.f);
    CHECK(two.px(1, 5)[2] == 1.f); // row above still main-blue

    CHECK_THROWS_AS(heatmap_image(table, 3, 3, 4), ContractError);
    CHECK_THROWS_AS(heatmap_image(table, 0, 6, 4), InvalidArgError);
    CHECK_THROWS_AS(heatmap_image(table, 2, 3, 0), InvalidArgError);
}

TEST_CASE("mix_heatmap_png: argmax mode writes only pure stream colors") {
    TempDir td("heatmap");
    auto mw = init_mix_weights(5, 2, true);
    // Tilt each layer toward a different stream; leave layer 3 near-uniform.
    float* d = mw.logits.data();
    d[(0 * 2 + 0) * 3 + kStreamObject] = 3.f;
    d[(1 * 2 + 1) * 3 + kStreamReference] = 3.f;
    d[(2 * 2 + 0) * 3 + kStreamMain] = 3.f;
    d[(4 * 2 + 1) * 3 + kStreamObject] = 0.25f;

    const auto soft_path = (td.path / "soft.png").string();
    const auto hard_path = (td.path / "hard.png").string();
    mix_heatmap_png(mw, 2, soft_path, false, 4);
    mix_heatmap_png(mw, 2, hard_path, true, 4);

    auto hard = read_png(hard_path);
    CHECK(hard.height == 5 * 4);
    CHECK(hard.width == 2 * 4);
    int pure = 0;
    for (int y = 0; y < hard.height; y++)
        for (int x = 0; x < hard.width; x++) {
            const float* q = hard.px(y, x);
            const bool obj = q[0] > 0.99f && q[1] < 0.01f && q[2] < 0.01f;
            const bool ref = std::fabs(q[0] - 0.5f) < 0.01f && std::fabs(q[1] - 0.5f) < 0.01f &&
                             std::fabs(q[2] - 0.5f) < 0.01f;
            const bool mn = q[0] < 0.01f && q[1] < 0.01f && q[2] > 0.99f;
            pure += (obj || ref || mn) ? 1 : 0;
        }
    CHECK(pure == hard.height * hard.width);

    // The soft map blends, so at least the near-uniform cell is impure.
    auto soft = read_png(soft_path);
    const float* u = soft.px(4 * 4 + 2, 1 * 4 + 2);
    CHECK(u[1] > 0.05f); // green only arises from blending in the grey stream
}

// ============================================================
// Metric reports
// ============================================================

TEST_CASE("report CSV and JSON roundtrips are lossless, including infinities") {
    EvalReport r;
    r.rows.push_back({"torus:red->gold", 0, 27.123456789012345, 1.0 / 3.0, kInf, 0.75});
    r.rows.push_back({"cube:blue->red", 3, 60.0, 0.0, 2.0, 1.0});
    r.rows.push_back({"cone:red->blue", 1, 1e-17, 1.9999999999999998, 0.1, 0.5});

    TempDir td("report");
    const auto csv = (td.path / "r.csv").string();
    save_report_csv(r, csv);
    CHECK(load_report_csv(csv) == r);

    const auto js = (td.path / "r.json").string();
    save_report_json(r, js);
    CHECK(load_report_json(js) == r);

    // Aggregates: the infinite distance propagates into its mean.
    auto j = report_json(r);
    CHECK(j.at("mean_psnr").get<double>() ==
          doctest::Approx((27.123456789012345 + 60.0 + 1e-17) / 3));
    CHECK(j.at("mean_dist_source") == nlohmann::json("inf"));
    CHECK(num_from_json(j.at("mean_dist_source")) == kInf);
    CHECK(r.mean_iou() == doctest::Approx((0.75 + 1.0 + 0.5) / 3));

    // Ids embedding CSV structure are rejected rather than mangled.
    EvalReport bad;
    bad.rows.push_back({"a,b", 0, 1, 1, 1, 1});
    CHECK_THROWS_AS(save_report_csv(bad, (td.path / "bad.csv").string()), InvalidArgError);

    // Corrupt inputs fail loudly.
    {
        std::ofstream f(td.path / "short.csv");
        f << "id,view\nx,0\n";
    }
    CHECK_THROWS_AS(load_report_csv((td.path / "short.csv").string()), FormatError);
    {
        std::ofstream f(td.path / "broken.json");
        f << "{ not json";
    }
    CHECK_THROWS_AS(load_report_json((td.path / "broken.json").string()), FormatError);
    CHECK_THROWS_AS(load_report_csv((td.path / "absent.csv").string()), IoError);
}

TEST_CASE("evaluate_transfer: closed-form rows on synthetic stacks") {
    const int R = 8, F = 2;
    // Main output: red patch on key background, both frames.
    auto main_views = patch_stack(F, R, {{{1.f, 0.f, 0.f}}, {{1.f, 0.f, 0.f}}});
    TransferSample s;
    s.id = "synthetic:red->blue";
    s.main_views = main_views;
    s.target_views = main_views; // identical ground truth: PSNR caps
    s.object_views = patch_stack(F, R, {{{0.f, 1.f, 0.f}}, {{0.f, 1.f, 0.f}}});
    s.reference_img = patch_on_key(R, R, 0.f, 0.f, 1.f); // blue target material
    s.source_img = patch_on_key(R, R, 1.f, 0.f, 0.f);    // red source material

    auto rep = evaluate_transfer({s});
    REQUIRE(rep.rows.size() == size_t(F));
    for (int f = 0; f < F; f++) {
        const auto& row = rep.rows[size_t(f)];
        CHECK(row.id == "synthetic:red->blue");
        CHECK(row.view == f);
        CHECK(row.psnr == 60.0);
        CHECK(row.iou == 1.0); // object stream has the same silhouette
        // Red output: far from the blue reference, identical to the source.
        CHECK(row.dist_reference == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(row.dist_source == 0.0);
    }

    // An all-background generation keeps its row with infinite distances.
    TransferSample empty = s;
    auto key = patch_stack(F, R, {{{kKeyR, kKeyG, kKeyB}}, {{kKeyR, kKeyG, kKeyB}}});
    empty.main_views = key;
    auto rep2 = evaluate_transfer({empty});
    REQUIRE(rep2.rows.size() == size_t(F));
    CHECK(rep2.rows[0].dist_reference == kInf);
    CHECK(rep2.rows[0].dist_source == kInf);
    CHECK(rep2.rows[0].iou == 0.0);
    CHECK(rep2.rows[0].psnr < 60.0);

    // Stack shape violations are contract errors.
    TransferSample bad = s;
    bad.target_views = Tensor::zeros({1, 3, R, R});
    CHECK_THROWS_AS(evaluate_transfer({bad}), ContractError);
    bad = s;
    bad.main_views = Tensor::zeros({3, R, R});
    CHECK_THROWS_AS(evaluate_transfer({bad}), ContractError);
}

TEST_CASE("psnr_directories: name-matched scoring and mismatch detection") {
    TempDir td("psnrdir");
    fs::create_directories(td.path / "pred");
    fs::create_directories(td.path / "gt");
    auto a = patch_on_key(8, 8, 1.f, 0.f, 0.f);
    auto b = patch_on_key(8, 8, 0.f, 1.f, 0.f);
    write_png((td.path / "pred" / "v0.png").string(), a);
    write_png((td.path / "gt" / "v0.png").string(), a);
    write_png((td.path / "pred" / "v1.png").string(), b);
    write_png((td.path / "gt" / "v1.png").string(), b);

    auto rows = psnr_directories((td.path / "pred").string(), (td.path / "gt").string());
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].first == "v0.png");
    CHECK(rows[1].first == "v1.png");
    CHECK(rows[0].second == 60.0);
    CHECK(rows[1].second == 60.0);

    write_png((td.path / "pred" / "v2.png").string(), a);
    CHECK_THROWS_AS(psnr_directories((td.path / "pred").string(), (td.path / "gt").string()),
                    InvalidArgError);
    CHECK_THROWS_AS(psnr_directories((td.path / "nope").string(), (td.path / "gt").string()),
                    IoError);
}

// ============================================================
// Ablation ladder
// ============================================================

TEST_CASE("manual decoder weights: reference-on-decoder, main elsewhere") {
    CHECK(decoder_side_layers() == std::vector<int>{2, 3, 4});
    auto mw = manual_decoder_weights(3);
    CHECK_FALSE(mw.per_frame);
    CHECK(mw.frames == 3);
    CHECK(mw.logits.shape() == Shape{ArchConfig::kAttnLayers, 1, 3});
    for (int l = 0; l < ArchConfig::kAttnLayers; l++) {
        auto a = alphas_from_logits(mw, l, 0);
        const bool decoder_side = l >= 2;
        // Pinned logits underflow to exactly one-hot alphas.
        CHECK(a[kStreamObject] == 0.0);
        CHECK(a[kStreamReference] == (decoder_side ? 1.0 : 0.0));
        CHECK(a[kStreamMain] == (decoder_side ? 0.0 : 1.0));
    }
}

TEST_CASE("ablation config: JSON roundtrip and validation") {
    AblationConfig c;
    c.adapt.steps = 7;
    c.adapt.lr = 0.05;
    c.adapt.seed = 11;
    c.transfer.steps = 4;
    c.transfer.seed = 9;
    c.transfer.cfg_object = 1.5f;
    c.train_triplet = 1;
    c.eval_triplet = 2;
    c.mask_tol = 0.3f;
    auto j = to_json(c);
    auto back = ablation_config_from_json(j);
    CHECK(back.adapt.steps == 7);
    CHECK(back.adapt.lr == 0.05);
    CHECK(back.transfer.steps == 4);
    CHECK(back.transfer.cfg_object == 1.5f);
    CHECK(back.train_triplet == 1);
    CHECK(back.eval_triplet == 2);
    CHECK(back.mask_tol == 0.3f);

    AblationConfig bad = c;
    bad.mask_tol = 0.f;
    CHECK_THROWS_AS(bad.validate(), InvalidArgError);
    bad = c;
    bad.train_triplet = -1;
    CHECK_THROWS_AS(bad.validate(), InvalidArgError);
}

TEST_CASE("run_ablation: seven rungs, shared weights, bitwise determinism"
          * doctest::timeout(600)) {
    TempDir td("ablate");
    DatasetConfig dc;
    dc.resolution = 8;
    dc.view_count = 2;
    dc.shape_names = {"torus"};
    dc.material_names = {"red", "blue"};
    dc.hold_out_stride = 2; // (torus, blue) held out -> red->blue is the eval triplet
    auto man = make_dataset({}, {}, dc, (td.path / "data").string());
    REQUIRE(enumerate_triplets(man, "train").size() == 1);
    REQUIRE(enumerate_triplets(man, "held_out").size() == 1);

    Rng rng(7);
    auto base = init_denoiser_params(tiny_arch(), rng);
    perturb_outputs(base, rng);

    AblationConfig cfg;
    cfg.adapt.steps = 4;
    cfg.adapt.lr = 0.05;
    cfg.adapt.seed = 3;
    cfg.adapt.log_interval = 100;
    cfg.transfer.steps = 3;
    cfg.transfer.seed = 9;
    cfg.transfer.cfg_object = 1.f;
    cfg.transfer.cfg_reference = 1.f;

    const auto out1 = (td.path / "out1").string();
    auto res = run_ablation(man, base, cfg, out1);
    REQUIRE(res.rungs.size() == 7);
    CHECK(res.dir == out1);

    const char* names[] = {"manual-decoder-reference", "two-stream-trained",
                           "three-stream-trained",     "per-frame-mixing",
                           "unconditional-main",       "cfg-main-5",
                           "argmax-inference"};
    for (size_t i = 0; i < 7; i++) {
        CHECK(res.rungs[i].rung == int(i) + 1);
        CHECK(res.rungs[i].name == names[i]);
        REQUIRE(res.rungs[i].report.rows.size() == 2); // one row per view
        const auto dir = fs::path(out1) / ("rung" + std::to_string(i + 1) + "-" + names[i]);
        for (const char* f : {"heatmap.png", "report.csv", "report.json", "main_v0.png",
                              "main_v1.png"})
            CHECK(fs::exists(dir / f));
        // On-disk reports mirror the returned ones.
        CHECK(load_report_csv((dir / "report.csv").string()) == res.rungs[i].report);
    }

    // Rung 1 is the untrained hand-set baseline.
    CHECK(bitwise_equal(res.rungs[0].mw.logits, manual_decoder_weights(2).logits));

    // Rung 2's object column was pinned off and must stay at exactly zero
    // mass: its logit receives a zero gradient, so the optimizer never moves it.
    CHECK_FALSE(res.rungs[1].mw.per_frame);
    for (int l = 0; l < ArchConfig::kAttnLayers; l++)
        CHECK(alphas_from_logits(res.rungs[1].mw, l, 0)[kStreamObject] == 0.0);

    // Training moved the unpinned columns (rung 2 vs its init) and the
    // three-stream rung differs from the two-stream one.
    CHECK_FALSE(bitwise_equal(res.rungs[1].mw.logits, init_mix_weights(5, 2, false).logits));
    CHECK_FALSE(bitwise_equal(res.rungs[2].mw.logits, res.rungs[1].mw.logits));

    // Layouts: rungs 2-3 share one triple per layer, rung 4+ mix per frame.
    CHECK(res.rungs[2].mw.logits.shape() == Shape{5, 1, 3});
    CHECK(res.rungs[3].mw.logits.shape() == Shape{5, 2, 3});

    // Rungs 5-7 reuse rung 4's trained weights bitwise.
    CHECK(bitwise_equal(res.rungs[4].mw.logits, res.rungs[3].mw.logits));
    CHECK(bitwise_equal(res.rungs[5].mw.logits, res.rungs[3].mw.logits));
    CHECK(bitwise_equal(res.rungs[6].mw.logits, res.rungs[3].mw.logits));

    // Top-level artifacts parse and agree with the returned summary.
    CHECK(fs::exists(fs::path(out1) / "config.json"));
    auto summary = nlohmann::json::parse(slurp(fs::path(out1) / "summary.json"));
    REQUIRE(summary.at("rungs").size() == 7);
    CHECK(summary.at("rungs")[0].at("rung") == 1);
    CHECK(summary.at("rungs")[6].at("name") == "argmax-inference");
    CHECK(num_from_json(summary.at("rungs")[2].at("mean_psnr")) ==
          doctest::Approx(res.rungs[2].report.mean_psnr()));
    {
        std::ifstream f(fs::path(out1) / "config.json");
        nlohmann::json cj;
        f >> cj;
        auto back = ablation_config_from_json(cj);
        CHECK(back.adapt.steps == cfg.adapt.steps);
        CHECK(back.transfer.seed == cfg.transfer.seed);
    }

    // A second run from the same inputs is bitwise identical: weights,
    // reports, and the serialized summary.
    const auto out2 = (td.path / "out2").string();
    auto res2 = run_ablation(man, base, cfg, out2);
    for (size_t i = 0; i < 7; i++) {
        CHECK(bitwise_equal(res.rungs[i].mw.logits, res2.rungs[i].mw.logits));
        CHECK(res.rungs[i].report == res2.rungs[i].report);
    }
    CHECK(slurp(fs::path(out1) / "summary.json") == slurp(fs::path(out2) / "summary.json"));

    // Index and split validation.
    AblationConfig oob = cfg;
    oob.eval_triplet = 5;
    CHECK_THROWS_AS(run_ablation(man, base, oob, (td.path / "oob").string()),
                    InvalidArgError);

    DatasetConfig all_train = dc;
    all_train.hold_out_stride = 0;
    auto man2 = make_dataset({}, {}, all_train, (td.path / "data2").string());
    CHECK_THROWS_AS(run_ablation(man2, base, cfg, (td.path / "nohold").string()),
                    InvalidArgError);
}
