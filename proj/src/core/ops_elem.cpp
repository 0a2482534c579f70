#include <cmath>
#include <cstring>

#include "core/ops.hpp"

namespace trimix::ops {

namespace {

template <typename T>
void require_same_shape(const char* op, const TensorT<T>& a, const TensorT<T>& b) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
}

inline int64_t outer_of(const Shape& s, int axis) {
    int64_t n = 1;
    for (int i = 0; i < axis; i++) n *= s[static_cast<size_t>(i)];
    return n;
}

inline int64_t inner_of(const Shape& s, int axis) {
    int64_t n = 1;
    for (size_t i = static_cast<size_t>(axis) + 1; i < s.size(); i++) n *= s[i];
    return n;
}

} // namespace

// ============================================================
// arithmetic
// ============================================================

template <typename T>
TensorT<T> add(Tape<T>& tp, const TensorT<T>& a, const TensorT<T>& b) {
    require_same_shape("add", a, b);
    auto out = TensorT<T>::zeros(a.shape());
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; i++) out.data()[i] = a.data()[i] + b.data()[i];
    if (tp.recording() && (a.requires_grad() || b.requires_grad())) {
        out.set_requires_grad(true);
        tp.record(out, [a, b, out]() mutable {
            const T* g = out.grad();
            const int64_t n2 = out.numel();
            if (a.requires_grad()) {
                T* ga = a.grad();
                for (int64_t i = 0; i < n2; i++) ga[i] += g[i];
            }
            if (b.requires_grad()) {
                T* gb = b.grad();
                for (int64_t i = 0; i < n2; i++) gb[i] += g[i];
            }
        });
    }
    return out;
}

template <typename T>
TensorT<T> sub(Tape<T>& tp, const TensorT<T>& a, const TensorT<T>& b) {
    require_same_shape("sub", a, b);
    auto out = TensorT<T>::zeros(a.shape());
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; i++) out.data()[i] = a.data()[i] - b.data()[i];
    if (tp.recording() && (a.requires_grad() || b.requires_grad())) {
        out.set_requires_grad(true);
        tp.record(out, [a, b, out]() mutable {
            const T* g = out.grad();
            const int64_t n2 = out.numel();
            if (a.requires_grad()) {
                T* ga = a.grad();
                for (int64_t i = 0; i < n2; i++) ga[i] += g[i];
            }
            if (b.requires_grad()) {
                T* gb = b.grad();
                for (int64_t i = 0; i < n2; i++) gb[i] -= g[i];
            }
        });
    }
    return out;
}

template <typename T>
TensorT<T> mul(Tape<T>& tp, const TensorT<T>& a, const TensorT<T>& b) {
    require_same_shape("mul", a, b);
    auto out = TensorT<T>::zeros(a.shape());
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; i++) out.data()[i] = a.data()[i] * b.data()[i];
    if (tp.recording() && (a.requires_grad() || b.requires_grad())) {
        out.set_requires_grad(true);
        tp.record(out, [a, b, out]() mutable {
            const T* g = out.grad();
            const int64_t n2 = out.numel();
            if (a.requires_grad()) {
                T* ga = a.grad();
                for (int64_t i = 0; i < n2; i++) ga[i] += g[i] * b.data()[i];
            }
            if (b.requires_grad()) {
                T* gb = b.grad();
                for (int64_t i = 0; i < n2; i++) gb[i] += g[i] * a.data()[i];
            }
        });
    }
    return out;
}

template <typename T>
TensorT<T> scale(Tape<T>& tp, const TensorT<T>& a, T c) {
    auto out = TensorT<T>::zeros(a.shape());
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; i++) out.data()[i] = a.data()[i] * c;
    if (tp.recording() && a.requires_grad()) {
        out.set_requires_grad(true);
        tp.record(out, [a, out, c]() mutable {
            const T* g = out.grad();
            T* ga = a.grad();
            const int64_t n2 = out.numel();
            for (int64_t i = 0; i < n2; i++) ga[i] += g[i] * c;
        });
    }
    return out;
}

template <typename T>
TensorT<T> silu(Tape<T>& tp, const TensorT<T>& a) {
    auto out = TensorT<T>::zeros(a.shape());
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; i++) {
        T x = a.data()[i];
        T s = T(1) / (T(1) + std::exp(-x));
        out.data()[i] = x * s;
    }
    if (tp.recording() && a.requires_grad()) {
        out.set_requires_grad(true);
        tp.record(out, [a, out]() mutable {
            const T* g = out.grad();
            T* ga = a.grad();
            const int64_t n2 = out.numel();
            for (int64_t i = 0; i < n2; i++) {
                T x = a.data()[i];
                T s = T(1) / (T(1) + std::exp(-x));
                ga[i] += g[i] * s * (T(1) + x * (T(1) - s));
            }
        });
    }
    return out;
}

// ============================================================
// structural
// ============================================================

template <typename T>
TensorT<T> reshape(Tape<T>& tp, const TensorT<T>& a, Shape s) {
    if (shape_numel(s) != a.numel())
        throw ShapeError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(s) +
                         " changes element count");
    auto out = TensorT<T>::from_data(std::move(s), a.vec());
    if (tp.recording() && a.requires_grad()) {
        out.set_requires_grad(true);
        tp.record(out, [a, out]() mutable {
            const T* g = out.grad();
            T* ga = a.grad();
            const int64_t n = out.numel();
            for (int64_t i = 0; i < n; i++) ga[i] += g[i];
        });
    }
    return out;
}

namespace {

// offset mapping for permute: out linear index -> in linear index
template <typename T>
void permute_fill(const TensorT<T>& a, const std::vector<int>& axes, const Shape& oshape, T* dst,
                  const T* src) {
    const int r = a.rank();
    std::vector<int64_t> in_strides(static_cast<size_t>(r), 1);
    for (int i = r - 2; i >= 0; i--)
        in_strides[static_cast<size_t>(i)] =
            in_strides[static_cast<size_t>(i + 1)] * a.dim(i + 1);
    std::vector<int64_t> step(static_cast<size_t>(r)); // in-stride of each out axis
    for (int d = 0; d < r; d++)
        step[static_cast<size_t>(d)] = in_strides[static_cast<size_t>(axes[static_cast<size_t>(d)])];
    std::vector<int> idx(static_cast<size_t>(r), 0);
    const int64_t n = a.numel();
    int64_t src_off = 0;
    for (int64_t lin = 0; lin < n; lin++) {
        dst[lin] = src[src_off];
        for (int d = r - 1; d >= 0; d--) {
            idx[static_cast<size_t>(d)]++;
            src_off += step[static_cast<size_t>(d)];
            if (idx[static_cast<size_t>(d)] < oshape[static_cast<size_t>(d)]) break;
            src_off -= step[static_cast<size_t>(d)] * oshape[static_cast<size_t>(d)];
            idx[static_cast<size_t>(d)] = 0;
        }
    }
}

// same mapping, accumulating transposed grads back into the input
template <typename T>
void permute_accum(const TensorT<T>& a, const std::vector<int>& axes, const Shape& oshape,
                   const T* gsrc, T* gdst) {
    const int r = a.rank();
    std::vector<int64_t> in_strides(static_cast<size_t>(r), 1);
    for (int i = r - 2; i >= 0; i--)
        in_strides[static_cast<size_t>(i)] =
            in_strides[static_cast<size_t>(i + 1)] * a.dim(i + 1);
    std::vector<int64_t> step(static_cast<size_t>(r));
    for (int d = 0; d < r; d++)
        step[static_cast<size_t>(d)] = in_strides[static_cast<size_t>(axes[static_cast<size_t>(d)])];
    std::vector<int> idx(static_cast<size_t>(r), 0);
    const int64_t n = a.numel();
    int64_t src_off = 0;
    for (int64_t lin = 0; lin < n; lin++) {
        gdst[src_off] += gsrc[lin];
        for (int d = r - 1; d >= 0; d--) {
            idx[static_cast<size_t>(d)]++;
            src_off += step[static_cast<size_t>(d)];
            if (idx[static_cast<size_t>(d)] < oshape[static_cast<size_t>(d)]) break;
            src_off -= step[static_cast<size_t>(d)] * oshape[static_cast<size_t>(d)];
            idx[static_cast<size_t>(d)] = 0;
        }
    }
}

} // namespace

template <typename T>
TensorT<T> permute(Tape<T>& tp, const TensorT<T>& a, const std::vector<int>& axes) {
    const int r = a.rank();
    if (static_cast<int>(axes.size()) != r)
        throw ShapeError("permute: axes count " + std::to_string(axes.size()) + " vs rank " +
                         std::to_string(r));
    std::vector<bool> seen(static_cast<size_t>(r), false);
    Shape os(static_cast<size_t>(r));
    for (int d = 0; d < r; d++) {
        int ax = axes[static_cast<size_t>(d)];
        if (ax < 0 || ax >= r || seen[static_cast<size_t>(ax)])
            throw ShapeError("permute: invalid axes");
        seen[static_cast<size_t>(ax)] = true;
        os[static_cast<size_t>(d)] = a.dim(ax);
    }
    auto out = TensorT<T>::zeros(os);
    permute_fill(a, axes, os, out.data(), a.data());
    if (tp.recording() && a.requires_grad()) {
        out.set_requires_grad(true);
        auto os_copy = os;
        auto axes_copy = axes;
        tp.record(out, [a, out, axes_copy, os_copy]() mutable {
            permute_accum(a, axes_copy, os_copy, out.grad_vec().data(), a.grad());
        });
    }
    return out;
}

template <typename T>
TensorT<T> concat(Tape<T>& tp, const TensorT<T>& a, const TensorT<T>& b, int axis) {
    if (a.rank() != b.rank()) throw ShapeError("concat: rank mismatch");
    if (axis < 0 || axis >= a.rank()) throw ShapeError("concat: bad axis");
    for (int d = 0; d < a.rank(); d++)
        if (d != axis && a.dim(d) != b.dim(d))
            throw ShapeError("concat: shape mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    Shape os = a.shape();
    os[static_cast<size_t>(axis)] += b.dim(axis);
    auto out = TensorT<T>::zeros(os);
    const int64_t outer = outer_of(a.shape(), axis);
    const int64_t inner = inner_of(a.shape(), axis);
    const int64_t an = a.dim(axis) * inner, bn = b.dim(axis) * inner;
    for (int64_t o = 0; o < outer; o++) {
        std::memcpy(out.data() + o * (an + bn), a.data() + o * an, sizeof(T) * static_cast<size_t>(an));
        std::memcpy(out.data() + o * (an + bn) + an, b.data() + o * bn,
                    sizeof(T) * static_cast<size_t>(bn));
    }
    if (tp.recording() && (a.requires_grad() || b.requires_grad())) {
        out.set_requires_grad(true);
        tp.record(out, [a, b, out, outer, inner, an, bn]() mutable {
            const T* g = out.grad();
            if (a.requires_grad()) {
                T* ga = a.grad();
                for (int64_t o = 0; o < outer; o++)
                    for (int64_t i = 0; i < an; i++) ga[o * an + i] += g[o * (an + bn) + i];
            }
            if (b.requires_grad()) {
                T* gb = b.grad();
                for (int64_t o = 0; o < outer; o++)
                    for (int64_t i = 0; i < bn; i++) gb[o * bn + i] += g[o * (an + bn) + an + i];
            }
        });
    }
    return out;
}

template <typename T>
TensorT<T> slice(Tape<T>& tp, const TensorT<T>& a, int axis, int start, int len) {
    if (axis < 0 || axis >= a.rank()) throw ShapeError("slice: bad axis");
    if (start < 0 || len <= 0 || start + len > a.dim(axis))
        throw ShapeError("slice: range [" + std::to_string(start) + "," +
                         std::to_string(start + len) + ") exceeds dim " +
                         std::to_string(a.dim(axis)));
    Shape os = a.shape();
    os[static_cast<size_t>(axis)] = len;
    auto out = TensorT<T>::zeros(os);
    const int64_t outer = outer_of(a.shape(), axis);
    const int64_t inner = inner_of(a.shape(), axis);
    const int64_t astride = a.dim(axis) * inner, ostride = len * inner;
    for (int64_t o = 0; o < outer; o++)
        std::memcpy(out.data() + o * ostride, a.data() + o * astride + start * inner,
                    sizeof(T) * static_cast<size_t>(ostride));
    if (tp.recording() && a.requires_grad()) {
        out.set_requires_grad(true);
        tp.record(out, [a, out, outer, inner, astride, ostride, start]() mutable {
            const T* g = out.grad();
            T* ga = a.grad();
            for (int64_t o = 0; o < outer; o++)
                for (int64_t i = 0; i < ostride; i++)
                    ga[o * astride + start * inner + i] += g[o * ostride + i];
        });
    }
    return out;
}

// ============================================================
// frame / channel helpers
// ============================================================

template <typename T>
TensorT<T> broadcast_frames(Tape<T>& tp, const TensorT<T>& chw, int frames) {
    if (chw.rank() != 3) throw ShapeError("broadcast_frames: want [C,H,W], got " +
                                          shape_str(chw.shape()));
    if (frames <= 0) throw ShapeError("broadcast_frames: frames must be positive");
    auto out = TensorT<T>::zeros({frames, chw.dim(0), chw.dim(1), chw.dim(2)});
    const int64_t n = chw.numel();
    for (int f = 0; f < frames; f++)
        std::memcpy(out.data() + f * n, chw.data(), sizeof(T) * static_cast<size_t>(n));
    if (tp.recording() && chw.requires_grad()) {
        out.set_requires_grad(true);
        tp.record(out, [chw, out, frames, n]() mutable {
            const T* g = out.grad();
            T* ga = chw.grad();
            for (int f = 0; f < frames; f++)
                for (int64_t i = 0; i < n; i++) ga[i] += g[f * n + i];
        });
    }
    return out;
}

template <typename T>
TensorT<T> add_channel_bias(Tape<T>& tp, const TensorT<T>& x, const TensorT<T>& v) {
    if (x.rank() != 4 || v.rank() != 1 || v.dim(0) != x.dim(1))
        throw ShapeError("add_channel_bias: x " + shape_str(x.shape()) + ", v " +
                         shape_str(v.shape()));
    auto out = TensorT<T>::zeros(x.shape());
    const int64_t N = x.dim(0), C = x.dim(1), HW = static_cast<int64_t>(x.dim(2)) * x.dim(3);
    for (int64_t n = 0; n < N; n++)
        for (int64_t c = 0; c < C; c++) {
            const T b = v.data()[c];
            const T* src = x.data() + (n * C + c) * HW;
            T* dst = out.data() + (n * C + c) * HW;
            for (int64_t i = 0; i < HW; i++) dst[i] = src[i] + b;
        }
    if (tp.recording() && (x.requires_grad() || v.requires_grad())) {
        out.set_requires_grad(true);
        tp.record(out, [x, v, out, N, C, HW]() mutable {
            const T* g = out.grad();
            if (x.requires_grad()) {
                T* gx = x.grad();
                const int64_t n2 = out.numel();
                for (int64_t i = 0; i < n2; i++) gx[i] += g[i];
            }
            if (v.requires_grad()) {
                T* gv = v.grad();
                for (int64_t n = 0; n < N; n++)
                    for (int64_t c = 0; c < C; c++) {
                        const T* gp = g + (n * C + c) * HW;
                        T acc = T(0);
                        for (int64_t i = 0; i < HW; i++) acc += gp[i];
                        gv[c] += acc;
                    }
            }
        });
    }
    return out;
}

template <typename T>
TensorT<T> add_token_bias(Tape<T>& tp, const TensorT<T>& x, const TensorT<T>& e) {
    if (x.rank() != 3 || e.rank() != 2 || e.dim(0) != x.dim(0) || e.dim(1) != x.dim(2))
        throw ShapeError("add_token_bias: x " + shape_str(x.shape()) + ", e " +
                         shape_str(e.shape()));
    auto out = TensorT<T>::zeros(x.shape());
    const int64_t F = x.dim(0), P = x.dim(1), C = x.dim(2);
    for (int64_t f = 0; f < F; f++) {
        const T* ef = e.data() + f * C;
        for (int64_t p = 0; p < P; p++) {
            const T* src = x.data() + (f * P + p) * C;
            T* dst = out.data() + (f * P + p) * C;
            for (int64_t c = 0; c < C; c++) dst[c] = src[c] + ef[c];
        }
    }
    if (tp.recording() && (x.requires_grad() || e.requires_grad())) {
        out.set_requires_grad(true);
        tp.record(out, [x, e, out, F, P, C]() mutable {
            const T* g = out.grad();
            if (x.requires_grad()) {
                T* gx = x.grad();
                const int64_t n2 = out.numel();
                for (int64_t i = 0; i < n2; i++) gx[i] += g[i];
            }
            if (e.requires_grad()) {
                T* ge = e.grad();
                for (int64_t f = 0; f < F; f++)
                    for (int64_t p = 0; p < P; p++) {
                        const T* gp = g + (f * P + p) * C;
                        for (int64_t c = 0; c < C; c++) ge[f * C + c] += gp[c];
                    }
            }
        });
    }
    return out;
}

template <typename T>
TensorT<T> gather_rows(Tape<T>& tp, const TensorT<T>& table, const std::vector<int>& idx) {
    if (table.rank() != 2) throw ShapeError("gather_rows: table must be rank 2");
    const int R = table.dim(0), C = table.dim(1);
    for (int i : idx)
        if (i < 0 || i >= R) throw ShapeError("gather_rows: index " + std::to_string(i) +
                                              " out of [0," + std::to_string(R) + ")");
    auto out = TensorT<T>::zeros({static_cast<int>(idx.size()), C});
    for (size_t i = 0; i < idx.size(); i++)
        std::memcpy(out.data() + static_cast<int64_t>(i) * C,
                    table.data() + static_cast<int64_t>(idx[i]) * C,
                    sizeof(T) * static_cast<size_t>(C));
    if (tp.recording() && table.requires_grad()) {
        out.set_requires_grad(true);
        auto idx_copy = idx;
        tp.record(out, [table, out, idx_copy, C]() mutable {
            const T* g = out.grad();
            T* gt = table.grad();
            for (size_t i = 0; i < idx_copy.size(); i++)
                for (int c = 0; c < C; c++)
                    gt[static_cast<int64_t>(idx_copy[i]) * C + c] +=
                        g[static_cast<int64_t>(i) * C + c];
        });
    }
    return out;
}

template <typename T>
TensorT<T> frame_scale(Tape<T>& tp, const TensorT<T>& x, const TensorT<T>& alpha) {
    if (x.rank() != 3) throw ShapeError("frame_scale: x must be [F,P,C]");
    const int64_t F = x.dim(0), PC = static_cast<int64_t>(x.dim(1)) * x.dim(2);
    const bool bcast = alpha.numel() == 1;
    if (alpha.rank() != 1 || (!bcast && alpha.dim(0) != x.dim(0)))
        throw ShapeError("frame_scale: alpha " + shape_str(alpha.shape()) + " for x " +
                         shape_str(x.shape()));
    auto out = TensorT<T>::zeros(x.shape());
    for (int64_t f = 0; f < F; f++) {
        const T a = alpha.data()[bcast ? 0 : f];
        const T* src = x.data() + f * PC;
        T* dst = out.data() + f * PC;
        for (int64_t i = 0; i < PC; i++) dst[i] = a * src[i];
    }
    if (tp.recording() && (x.requires_grad() || alpha.requires_grad())) {
        out.set_requires_grad(true);
        tp.record(out, [x, alpha, out, F, PC, bcast]() mutable {
            const T* g = out.grad();
            if (x.requires_grad()) {
                T* gx = x.grad();
                for (int64_t f = 0; f < F; f++) {
                    const T a = alpha.data()[bcast ? 0 : f];
                    for (int64_t i = 0; i < PC; i++) gx[f * PC + i] += a * g[f * PC + i];
                }
            }
            if (alpha.requires_grad()) {
                T* ga = alpha.grad();
                for (int64_t f = 0; f < F; f++) {
                    const T* xf = x.data() + f * PC;
                    const T* gf = g + f * PC;
                    T acc = T(0);
                    for (int64_t i = 0; i < PC; i++) acc += xf[i] * gf[i];
                    ga[bcast ? 0 : f] += acc;
                }
            }
        });
    }
    return out;
}

// ============================================================
// resampling / pooling / reductions
// ============================================================

template <typename T>
TensorT<T> nearest_upsample_2x(Tape<T>& tp, const TensorT<T>& x) {
    if (x.rank() != 4) throw ShapeError("nearest_upsample_2x: want [N,C,H,W]");
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    auto out = TensorT<T>::zeros({x.dim(0), x.dim(1), x.dim(2) * 2, x.dim(3) * 2});
    for (int64_t nc = 0; nc < N * C; nc++) {
        const T* src = x.data() + nc * H * W;
        T* dst = out.data() + nc * 4 * H * W;
        for (int64_t i = 0; i < H; i++)
            for (int64_t j = 0; j < W; j++) {
                T v = src[i * W + j];
                T* d = dst + (2 * i) * (2 * W) + 2 * j;
                d[0] = v;
                d[1] = v;
                d[2 * W] = v;
                d[2 * W + 1] = v;
            }
    }
    if (tp.recording() && x.requires_grad()) {
        out.set_requires_grad(true);
        tp.record(out, [x, out, N, C, H, W]() mutable {
            const T* g = out.grad();
            T* gx = x.grad();
            for (int64_t nc = 0; nc < N * C; nc++) {
                const T* gp = g + nc * 4 * H * W;
                T* gd = gx + nc * H * W;
                for (int64_t i = 0; i < H; i++)
                    for (int64_t j = 0; j < W; j++) {
                        const T* s = gp + (2 * i) * (2 * W) + 2 * j;
                        gd[i * W + j] += s[0] + s[1] + s[2 * W] + s[2 * W + 1];
                    }
            }
        });
    }
    return out;
}

template <typename T>
TensorT<T> global_avg_pool(Tape<T>& tp, const TensorT<T>& x) {
    if (x.rank() != 4) throw ShapeError("global_avg_pool: want [N,C,H,W]");
    const int64_t N = x.dim(0), C = x.dim(1), HW = static_cast<int64_t>(x.dim(2)) * x.dim(3);
    auto out = TensorT<T>::zeros({x.dim(0), x.dim(1)});
    for (int64_t nc = 0; nc < N * C; nc++) {
        const T* src = x.data() + nc * HW;
        T acc = T(0);
        for (int64_t i = 0; i < HW; i++) acc += src[i];
        out.data()[nc] = acc / static_cast<T>(HW);
    }
    if (tp.recording() && x.requires_grad()) {
        out.set_requires_grad(true);
        tp.record(out, [x, out, N, C, HW]() mutable {
            const T* g = out.grad();
            T* gx = x.grad();
            for (int64_t nc = 0; nc < N * C; nc++) {
                const T gv = g[nc] / static_cast<T>(HW);
                for (int64_t i = 0; i < HW; i++) gx[nc * HW + i] += gv;
            }
        });
    }
    return out;
}

template <typename T>
TensorT<T> mse(Tape<T>& tp, const TensorT<T>& a, const TensorT<T>& b) {
    require_same_shape("mse", a, b);
    const int64_t n = a.numel();
    T acc = T(0);
    for (int64_t i = 0; i < n; i++) {
        T d = a.data()[i] - b.data()[i];
        acc += d * d;
    }
    auto out = TensorT<T>::scalar(acc / static_cast<T>(n));
    if (tp.recording() && (a.requires_grad() || b.requires_grad())) {
        out.set_requires_grad(true);
        tp.record(out, [a, b, out, n]() mutable {
            const T g = out.grad_vec()[0];
            const T k = T(2) * g / static_cast<T>(n);
            if (a.requires_grad()) {
                T* ga = a.grad();
                for (int64_t i = 0; i < n; i++) ga[i] += k * (a.data()[i] - b.data()[i]);
            }
            if (b.requires_grad()) {
                T* gb = b.grad();
                for (int64_t i = 0; i < n; i++) gb[i] -= k * (a.data()[i] - b.data()[i]);
            }
        });
    }
    return out;
}

template <typename T>
TensorT<T> sum(Tape<T>& tp, const TensorT<T>& a) {
    const int64_t n = a.numel();
    T acc = T(0);
    for (int64_t i = 0; i < n; i++) acc += a.data()[i];
    auto out = TensorT<T>::scalar(acc);
    if (tp.recording() && a.requires_grad()) {
        out.set_requires_grad(true);
        tp.record(out, [a, out, n]() mutable {
            const T g = out.grad_vec()[0];
            T* ga = a.grad();
            for (int64_t i = 0; i < n; i++) ga[i] += g;
        });
    }
    return out;
}

template <typename T>
void check_finite(const TensorT<T>& x, const std::string& where) {
    const int64_t n = x.numel();
    for (int64_t i = 0; i < n; i++)
        if (!std::isfinite(x.data()[i]))
            throw NumericError("non-finite value in " + where);
}

// ---- explicit instantiations ----

#define TRIMIX_INST(T)                                                                        \
    template TensorT<T> add<T>(Tape<T>&, const TensorT<T>&, const TensorT<T>&);              \
    template TensorT<T> sub<T>(Tape<T>&, const TensorT<T>&, const TensorT<T>&);              \
    template TensorT<T> mul<T>(Tape<T>&, const TensorT<T>&, const TensorT<T>&);              \
    template TensorT<T> scale<T>(Tape<T>&, const TensorT<T>&, T);                            \
    template TensorT<T> silu<T>(Tape<T>&, const TensorT<T>&);                                \
    template TensorT<T> reshape<T>(Tape<T>&, const TensorT<T>&, Shape);                      \
    template TensorT<T> permute<T>(Tape<T>&, const TensorT<T>&, const std::vector<int>&);    \
    template TensorT<T> concat<T>(Tape<T>&, const TensorT<T>&, const TensorT<T>&, int);      \
    template TensorT<T> slice<T>(Tape<T>&, const TensorT<T>&, int, int, int);                \
    template TensorT<T> broadcast_frames<T>(Tape<T>&, const TensorT<T>&, int);               \
    template TensorT<T> add_channel_bias<T>(Tape<T>&, const TensorT<T>&, const TensorT<T>&); \
    template TensorT<T> add_token_bias<T>(Tape<T>&, const TensorT<T>&, const TensorT<T>&);   \
    template TensorT<T> gather_rows<T>(Tape<T>&, const TensorT<T>&, const std::vector<int>&);\
    template TensorT<T> frame_scale<T>(Tape<T>&, const TensorT<T>&, const TensorT<T>&);      \
    template TensorT<T> nearest_upsample_2x<T>(Tape<T>&, const TensorT<T>&);                 \
    template TensorT<T> global_avg_pool<T>(Tape<T>&, const TensorT<T>&);                     \
    template TensorT<T> mse<T>(Tape<T>&, const TensorT<T>&, const TensorT<T>&);              \
    template TensorT<T> sum<T>(Tape<T>&, const TensorT<T>&);                                 \
    template void check_finite<T>(const TensorT<T>&, const std::string&);

TRIMIX_INST(float)
TRIMIX_INST(double)
#undef TRIMIX_INST

} // namespace trimix::ops
