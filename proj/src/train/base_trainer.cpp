#include "train/base_trainer.hpp"

#include <cmath>
#include <ostream>

#include "core/error.hpp"
#include "train/adam.hpp"

namespace trimix {

namespace op = trimix::ops;

void BaseTrainConfig::validate() const {
    if (!(lr > 0.0)) throw InvalidArgError("learning rate must be positive");
    if (steps < 1) throw InvalidArgError("step count must be positive");
    if (cond_dropout < 0.0 || cond_dropout >= 1.0)
        throw InvalidArgError("condition dropout must lie in [0, 1)");
    if (ckpt_interval < 1 || log_interval < 1)
        throw InvalidArgError("intervals must be positive");
}

Json to_json(const BaseTrainConfig& c) {
    return Json{{"lr", c.lr},
                {"steps", c.steps},
                {"seed", c.seed},
                {"cond_dropout", c.cond_dropout},
                {"ckpt_interval", c.ckpt_interval},
                {"log_interval", c.log_interval}};
}

BaseTrainConfig base_train_config_from_json(const Json& j) {
    BaseTrainConfig c;
    c.lr = j.at("lr").get<double>();
    c.steps = j.at("steps").get<int>();
    c.seed = j.at("seed").get<uint64_t>();
    c.cond_dropout = j.at("cond_dropout").get<double>();
    c.ckpt_interval = j.at("ckpt_interval").get<int>();
    c.log_interval = j.at("log_interval").get<int>();
    c.validate();
    return c;
}

std::vector<OrbitSet> load_orbit_sets(const Manifest& man) {
    // Ordered unique (shape, material) pairs as they appear.
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& e : man.entries) {
        if (e.role != "target_view") continue;
        std::pair<std::string, std::string> p{e.shape.name, e.material.name};
        bool seen = false;
        for (const auto& q : pairs) seen |= (q == p);
        if (!seen) pairs.push_back(p);
    }
    if (pairs.empty()) throw ContractError("manifest holds no orbit sets");

    std::vector<OrbitSet> out;
    for (const auto& [shape_name, mat_name] : pairs) {
        OrbitSet set;
        set.shape_name = shape_name;
        set.material_name = mat_name;
        const int F = man.view_count;
        const int R = man.resolution;
        set.views = Tensor::zeros({F, 3, R, R});
        for (int k = 0; k < F; k++) {
            const auto& e = man.find("target_view", shape_name, mat_name, k);
            set.split = e.split;
            auto t = load_entry_tensor(man, e.file);
            if (t.shape() != Shape{3, R, R})
                throw ContractError("view resolution mismatch for " + e.file);
            std::copy(t.data(), t.data() + t.numel(), set.views.data() + k * t.numel());
            set.slots.push_back(k);
        }
        set.cond = load_entry_tensor(man, man.find("object", shape_name, mat_name, 0).file);
        out.push_back(std::move(set));
    }
    return out;
}

BaseTrainResult train_base(const Manifest& man, const ArchConfig& arch,
                           const BaseTrainConfig& cfg, const std::string& ckpt_path,
                           std::ostream* log) {
    arch.validate();
    cfg.validate();
    if (man.resolution != arch.resolution)
        throw InvalidArgError("manifest resolution " + std::to_string(man.resolution) +
                              " does not match the architecture's " +
                              std::to_string(arch.resolution));
    const auto sets = load_orbit_sets(man);
    const auto ns = arch.schedule();

    Rng rng(cfg.seed);
    auto params = init_denoiser_params(arch, rng);
    for (auto& [name, t] : params)
        if (name.rfind("__", 0) != 0) t.set_requires_grad(true);

    Adam adam(cfg.lr);
    BaseTrainResult res;
    res.losses.reserve(static_cast<size_t>(cfg.steps));

    for (int step = 0; step < cfg.steps; step++) {
        const auto& set = sets[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(sets.size())))];
        const int t = static_cast<int>(rng.uniform_int(arch.T)); // [0, T)
        auto eps = randn<float>(set.views.shape(), rng);
        const bool drop = rng.uniform() < cfg.cond_dropout;

        auto x_t = forward_noise(ns, set.views, t, eps);
        float loss_value = 0.f;
        try {
            TapeF tp(true);
            Tensor cond, emb;
            if (!drop) {
                cond = set.cond;
                emb = encode_condition<float>(tp, params, arch, cond);
            }
            auto eps_hat = predict_eps<float>(tp, params, arch, x_t, t, cond, emb, set.slots);
            auto loss = op::mse(tp, eps_hat, eps);
            loss_value = loss.data()[0];
            if (!std::isfinite(loss_value)) throw NumericError("loss diverged");
            tp.backward(loss);
        } catch (const NumericError& e) {
            throw NumericError("step " + std::to_string(step) + ": " + e.what());
        }
        adam.step(params);
        adam.zero_grads(params);
        res.losses.push_back(loss_value);

        if (log && (step % cfg.log_interval == 0 || step + 1 == cfg.steps))
            (*log) << "step " << step << " loss " << loss_value << "\n";
        if (!ckpt_path.empty() &&
            ((step + 1) % cfg.ckpt_interval == 0 || step + 1 == cfg.steps))
            save_checkpoint(ckpt_path, params);
    }
    res.params = std::move(params);
    return res;
}

std::vector<float> window_means(const std::vector<float>& losses, int window) {
    if (window < 1) throw InvalidArgError("window must be positive");
    std::vector<float> out;
    for (size_t i = 0; i + static_cast<size_t>(window) <= losses.size();
         i += static_cast<size_t>(window)) {
        double s = 0.0;
        for (int k = 0; k < window; k++) s += losses[i + static_cast<size_t>(k)];
        out.push_back(static_cast<float>(s / window));
    }
    return out;
}

} // namespace trimix
