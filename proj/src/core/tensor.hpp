#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace trimix {

using Shape = std::vector<int>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// ============================================================
// Tensor: contiguous row-major value buffer + optional grad buffer
// ============================================================
//
// Handles share payloads (shallow copy). Values are written at construction
// and then only read; mutation after an op has consumed a tensor would
// invalidate recorded backward closures. Grad buffers accumulate across
// backward calls until zero_grad().
template <typename T>
class TensorT {
public:
    TensorT() = default;

    static TensorT zeros(Shape s) { return TensorT(std::move(s), T(0)); }
    static TensorT full(Shape s, T v) { return TensorT(std::move(s), v); }
    static TensorT scalar(T v) { return TensorT(Shape{1}, v); }

    static TensorT from_data(Shape s, std::vector<T> v) {
        TensorT t(std::move(s), T(0));
        if (static_cast<int64_t>(v.size()) != t.numel())
            throw ShapeError("from_data: " + std::to_string(v.size()) + " values for shape " +
                             shape_str(t.shape()));
        t.p_->data = std::move(v);
        return t;
    }

    bool defined() const { return static_cast<bool>(p_); }
    const Shape& shape() const { return p_->shape; }
    int rank() const { return static_cast<int>(p_->shape.size()); }
    int dim(int i) const { return p_->shape[static_cast<size_t>(i)]; }
    int64_t numel() const { return static_cast<int64_t>(p_->data.size()); }

    T* data() { return p_->data.data(); }
    const T* data() const { return p_->data.data(); }
    std::vector<T>& vec() { return p_->data; }
    const std::vector<T>& vec() const { return p_->data; }

    bool requires_grad() const { return p_ && p_->requires_grad; }
    void set_requires_grad(bool b) { p_->requires_grad = b; }

    // Lazily allocated, zero-filled on first touch. Const-qualified because a
    // handle copy (e.g. captured in a backward closure) mutates the shared
    // payload, not the handle.
    T* grad() const {
        ensure_grad();
        return p_->grad.data();
    }
    const std::vector<T>& grad_vec() const { return p_->grad; }
    bool has_grad() const { return !p_->grad.empty(); }
    void ensure_grad() const {
        if (p_->grad.empty()) p_->grad.assign(p_->data.size(), T(0));
    }
    void zero_grad() const {
        if (!p_->grad.empty()) std::fill(p_->grad.begin(), p_->grad.end(), T(0));
    }

    bool same_storage(const TensorT& o) const { return p_ == o.p_; }

private:
    struct Payload {
        Shape shape;
        std::vector<T> data;
        std::vector<T> grad;
        bool requires_grad = false;
    };

    TensorT(Shape s, T fill) : p_(std::make_shared<Payload>()) {
        p_->shape = std::move(s);
        for (int d : p_->shape)
            if (d <= 0) throw ShapeError("non-positive dim in shape " + shape_str(p_->shape));
        p_->data.assign(static_cast<size_t>(shape_numel(p_->shape)), fill);
    }

    std::shared_ptr<Payload> p_;
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

// ============================================================
// Tape: reverse-mode autodiff record
// ============================================================
//
// Ops append nodes in execution order, which is a topological order of the
// graph; backward() replays them once in reverse. Grads of op outputs are
// zeroed at the start of each backward, so repeated backward calls on one
// tape accumulate another full gradient into the leaves (the documented
// accumulation semantics; zero_grad on the leaves is the explicit reset).
// A non-recording tape runs the same op code without retaining anything,
// which is the sampling/no-grad mode.
template <typename T>
class Tape {
public:
    explicit Tape(bool recording = true) : recording_(recording) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const { return recording_; }

    void record(const TensorT<T>& out, std::function<void()> backward) {
        nodes_.push_back(Node{out, std::move(backward)});
    }

    size_t node_count() const { return nodes_.size(); }

    void backward(TensorT<T> loss) {
        if (!recording_) throw ContractError("backward on a non-recording tape");
        if (loss.numel() != 1) throw ContractError("backward needs a scalar loss, got shape " +
                                                   shape_str(loss.shape()));
        if (!loss.requires_grad())
            throw ContractError("backward: loss does not depend on any requires_grad leaf");
        for (auto& n : nodes_) {
            n.out.ensure_grad();
            n.out.zero_grad();
        }
        loss.grad()[0] += T(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->back();
    }

private:
    struct Node {
        TensorT<T> out;
        std::function<void()> back;
    };

    std::vector<Node> nodes_;
    bool recording_;
};

using TapeF = Tape<float>;
using TapeD = Tape<double>;

// ---- fill helpers (leaf construction, not ops) ----

template <typename T>
void fill_normal(TensorT<T>& t, Rng& rng, double stddev = 1.0) {
    for (int64_t i = 0; i < t.numel(); i++) t.data()[i] = static_cast<T>(rng.normal() * stddev);
}

template <typename T>
void fill_uniform(TensorT<T>& t, Rng& rng, double lo, double hi) {
    for (int64_t i = 0; i < t.numel(); i++)
        t.data()[i] = static_cast<T>(lo + (hi - lo) * rng.uniform());
}

template <typename T>
TensorT<T> randn(Shape s, Rng& rng, double stddev = 1.0) {
    auto t = TensorT<T>::zeros(std::move(s));
    fill_normal(t, rng, stddev);
    return t;
}

// Precision casts for the 64-bit verification mode. Plain copies, not ops.
Tensor64 widen(const Tensor& t);
Tensor narrow(const Tensor64& t);

bool bitwise_equal(const Tensor& a, const Tensor& b);

} // namespace trimix
