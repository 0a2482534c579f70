#include "tristream/mix.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

namespace trimix {

namespace op = ops;

void MixWeights::validate(const ArchConfig& arch) const {
    if (!logits.defined() || logits.rank() != 3 || logits.dim(2) != 3)
        throw ContractError("mix weights: logits must be [S,F,3]");
    if (int(logits.dim(0)) != ArchConfig::kAttnLayers)
        throw ContractError("mix weights: layer count " + std::to_string(logits.dim(0)) +
                            " does not match the model's attention registry (" +
                            std::to_string(ArchConfig::kAttnLayers) + ")");
    if (per_frame) {
        if (int(logits.dim(1)) != frames)
            throw ContractError("mix weights: frame dimension mismatch");
    } else {
        if (logits.dim(1) != 1)
            throw ContractError("mix weights: per-layer logits must have frame dim 1");
    }
    for (int64_t i = 0; i < logits.numel(); i++)
        if (!std::isfinite(double(logits.data()[i])))
            throw NumericError("mix weights: non-finite logit");
    (void)arch;
}

MixWeights init_mix_weights(int layers, int frames, bool per_frame) {
    if (layers < 1 || frames < 1) throw InvalidArgError("mix weights: positive dims required");
    MixWeights mw;
    mw.per_frame = per_frame;
    mw.frames = frames;
    mw.logits = Tensor::zeros({layers, per_frame ? frames : 1, 3});
    return mw;
}

static std::array<double, 3> softmax3(double a, double b, double c) {
    double m = std::max(a, std::max(b, c));
    double ea = std::exp(a - m), eb = std::exp(b - m), ec = std::exp(c - m);
    double z = ea + eb + ec;
    return {ea / z, eb / z, ec / z};
}

std::array<double, 3> alphas_from_logits(const MixWeights& mw, int layer, int frame) {
    if (layer < 0 || layer >= mw.layers())
        throw InvalidArgError("alphas_from_logits: layer out of range");
    if (frame < 0 || (mw.per_frame && frame >= int(mw.logits.dim(1))))
        throw InvalidArgError("alphas_from_logits: frame out of range");
    int fr = mw.per_frame ? frame : 0;
    const float* row = mw.logits.data() + (int64_t(layer) * mw.logits.dim(1) + fr) * 3;
    return softmax3(row[0], row[1], row[2]);
}

std::array<double, 3> argmax_select(const std::array<double, 3>& alphas) {
    // Priority main > object > reference on ties.
    if (alphas[kStreamMain] >= alphas[kStreamObject] &&
        alphas[kStreamMain] >= alphas[kStreamReference])
        return {0.0, 0.0, 1.0};
    if (alphas[kStreamObject] >= alphas[kStreamReference]) return {1.0, 0.0, 0.0};
    return {0.0, 1.0, 0.0};
}

template <typename T>
TensorT<T> mix_tokens(Tape<T>& tp, const TensorT<T>& t_obj, const TensorT<T>& t_ref,
                      const TensorT<T>& t_main, const TensorT<T>& alphas) {
    if (t_obj.shape() != t_ref.shape() || t_obj.shape() != t_main.shape())
        throw ContractError("mix_tokens: stream tensors must be shape-identical");
    if (alphas.rank() != 2 || alphas.dim(1) != 3)
        throw ContractError("mix_tokens: alphas must be [F,3] or [1,3]");
    const int64_t fa = alphas.dim(0);
    if (fa != 1 && fa != t_obj.dim(0))
        throw ContractError("mix_tokens: alpha frame dim must be 1 or F");

    // Exact one-hot paths: uniform selection hands back the chosen stream's
    // tensor untouched; per-frame one-hot selection assembles the output
    // from exact frame copies. Both are skipped only when gradients must
    // flow through the alphas.
    if (!(tp.recording() && alphas.requires_grad())) {
        std::vector<int> sel(size_t(fa), -1);
        bool onehot = true;
        for (int64_t f = 0; f < fa && onehot; f++) {
            const T* row = alphas.data() + f * 3;
            int s = -1;
            for (int j = 0; j < 3; j++) {
                if (row[j] == T(1)) s = j;
                else if (row[j] != T(0)) { onehot = false; break; }
            }
            if (s < 0) onehot = false;
            sel[size_t(f)] = s;
        }
        if (onehot) {
            auto pick = [&](int s) -> const TensorT<T>& {
                return s == kStreamObject ? t_obj : s == kStreamReference ? t_ref : t_main;
            };
            bool uniform = true;
            for (int64_t f = 1; f < fa; f++) uniform &= (sel[size_t(f)] == sel[0]);
            if (uniform) return pick(sel[0]);
            if (fa == t_obj.dim(0)) {
                TensorT<T> out;
                for (int64_t f = 0; f < fa; f++) {
                    auto fr = op::slice(tp, pick(sel[size_t(f)]), 0, int(f), 1);
                    out = f == 0 ? fr : op::concat(tp, out, fr, 0);
                }
                return out;
            }
        }
    }

    auto col = [&](int s) {
        auto c = op::slice(tp, alphas, 1, s, 1); // [F,1]
        return op::reshape(tp, c, {fa});
    };
    auto mixed = op::frame_scale(tp, t_obj, col(kStreamObject));
    mixed = op::add(tp, mixed, op::frame_scale(tp, t_ref, col(kStreamReference)));
    mixed = op::add(tp, mixed, op::frame_scale(tp, t_main, col(kStreamMain)));
    return mixed;
}

template <typename T>
TensorT<T> layer_alphas(Tape<T>& tp, const TensorT<T>& logits, int layer) {
    if (logits.rank() != 3 || logits.dim(2) != 3)
        throw ContractError("layer_alphas: logits must be [S,F,3]");
    if (layer < 0 || layer >= int(logits.dim(0)))
        throw InvalidArgError("layer_alphas: layer out of range");
    auto row = op::slice(tp, logits, 0, layer, 1);                  // [1,F,3]
    auto fl = op::reshape(tp, row, {logits.dim(1), int64_t(3)});    // [F,3]
    return op::softmax(tp, fl, 1);
}

std::vector<std::array<double, 3>> alpha_table(const MixWeights& mw, int frames) {
    std::vector<std::array<double, 3>> table;
    table.reserve(size_t(mw.layers()) * frames);
    for (int l = 0; l < mw.layers(); l++)
        for (int f = 0; f < frames; f++)
            table.push_back(alphas_from_logits(mw, l, mw.per_frame ? std::min(f, int(mw.logits.dim(1)) - 1) : 0));
    return table;
}

double layer_entropy(const MixWeights& mw, int layer, int frames) {
    double h = 0;
    for (int f = 0; f < frames; f++) {
        auto a = alphas_from_logits(mw, layer, mw.per_frame ? std::min(f, int(mw.logits.dim(1)) - 1) : 0);
        for (double p : a)
            if (p > 0) h -= p * std::log(p);
    }
    return h / frames;
}

using Json = nlohmann::json;

static constexpr const char* kMixMetaKey = "__mix__";

void save_mix_weights(const std::string& path, const MixWeights& mw) {
    TensorDict d;
    Json j{{"per_frame", mw.per_frame}, {"frames", mw.frames}, {"layers", mw.layers()}};
    put_string_entry(d, kMixMetaKey, j.dump());
    d.put("mix.logits", mw.logits);
    save_checkpoint(path, d);
}

MixWeights load_mix_weights(const std::string& path) {
    auto d = load_checkpoint(path);
    if (!d.contains("mix.logits"))
        throw FormatError("mix checkpoint: missing tensor entry: mix.logits");
    MixWeights mw;
    mw.logits = d.at("mix.logits");
    Json j = Json::parse(get_string_entry(d, kMixMetaKey));
    mw.per_frame = j.at("per_frame").get<bool>();
    mw.frames = j.at("frames").get<int>();
    if (mw.logits.rank() != 3 || mw.logits.dim(2) != 3 ||
        int(mw.logits.dim(0)) != j.at("layers").get<int>())
        throw FormatError("mix checkpoint: logits layout does not match its config entry");
    return mw;
}

std::string weight_report(const MixWeights& mw, int frames) {
    std::ostringstream os;
    os << "layer frame alpha_object alpha_reference alpha_main argmax\n";
    static const char* names[3] = {"object", "reference", "main"};
    for (int l = 0; l < mw.layers(); l++) {
        for (int f = 0; f < frames; f++) {
            auto a = alphas_from_logits(mw, l, mw.per_frame ? std::min(f, int(mw.logits.dim(1)) - 1) : 0);
            auto oh = argmax_select(a);
            int sel = oh[0] == 1.0 ? 0 : oh[1] == 1.0 ? 1 : 2;
            char buf[160];
            std::snprintf(buf, sizeof buf, "%5d %5d %12.6f %15.6f %10.6f %s\n", l, f, a[0],
                          a[1], a[2], names[sel]);
            os << buf;
        }
        char ebuf[64];
        std::snprintf(ebuf, sizeof ebuf, "layer %d entropy %.6f\n", l,
                      layer_entropy(mw, l, frames));
        os << ebuf;
    }
    return os.str();
}

template TensorT<float> mix_tokens(Tape<float>&, const TensorT<float>&, const TensorT<float>&,
                                   const TensorT<float>&, const TensorT<float>&);
template TensorT<double> mix_tokens(Tape<double>&, const TensorT<double>&, const TensorT<double>&,
                                    const TensorT<double>&, const TensorT<double>&);
template TensorT<float> layer_alphas(Tape<float>&, const TensorT<float>&, int);
template TensorT<double> layer_alphas(Tape<double>&, const TensorT<double>&, int);

} // namespace trimix
