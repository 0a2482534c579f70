#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/ops.hpp"
#include "core/ops_common.hpp"

namespace trimix::ops {

using detail::gemm_acc;
using detail::gemm_at_acc;

// ============================================================
// softmax along one axis
// ============================================================

template <typename T>
TensorT<T> softmax(Tape<T>& tp, const TensorT<T>& x, int axis) {
    if (axis < 0 || axis >= x.rank()) throw ShapeError("softmax: bad axis");
    const int64_t ax = x.dim(axis);
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; i++) outer *= x.dim(i);
    for (int i = axis + 1; i < x.rank(); i++) inner *= x.dim(i);
    auto out = TensorT<T>::zeros(x.shape());
    for (int64_t o = 0; o < outer; o++)
        for (int64_t in = 0; in < inner; in++) {
            const int64_t base = o * ax * inner + in;
            T m = x.data()[base];
            for (int64_t j = 1; j < ax; j++) m = std::max(m, x.data()[base + j * inner]);
            T z = T(0);
            for (int64_t j = 0; j < ax; j++) {
                T e = std::exp(x.data()[base + j * inner] - m);
                out.data()[base + j * inner] = e;
                z += e;
            }
            for (int64_t j = 0; j < ax; j++) out.data()[base + j * inner] /= z;
        }
    if (tp.recording() && x.requires_grad()) {
        out.set_requires_grad(true);
        tp.record(out, [x, out, outer, inner, ax]() mutable {
            const T* g = out.grad();
            const T* y = out.data();
            T* gx = x.grad();
            for (int64_t o = 0; o < outer; o++)
                for (int64_t in = 0; in < inner; in++) {
                    const int64_t base = o * ax * inner + in;
                    T dot = T(0);
                    for (int64_t j = 0; j < ax; j++)
                        dot += g[base + j * inner] * y[base + j * inner];
                    for (int64_t j = 0; j < ax; j++)
                        gx[base + j * inner] +=
                            y[base + j * inner] * (g[base + j * inner] - dot);
                }
        });
    }
    return out;
}

// ============================================================
// group normalization
// ============================================================

template <typename T>
TensorT<T> group_norm(Tape<T>& tp, const TensorT<T>& x, const TensorT<T>& gamma,
                      const TensorT<T>& beta, int groups) {
    if (x.rank() != 4) throw ShapeError("group_norm: want [N,C,H,W]");
    const int64_t N = x.dim(0), C = x.dim(1), HW = static_cast<int64_t>(x.dim(2)) * x.dim(3);
    if (groups <= 0 || C % groups != 0)
        throw ShapeError("group_norm: groups " + std::to_string(groups) + " for C=" +
                         std::to_string(C));
    if (gamma.rank() != 1 || gamma.dim(0) != C || beta.rank() != 1 || beta.dim(0) != C)
        throw ShapeError("group_norm: gamma/beta must be [C]");
    const int64_t cg = C / groups;     // channels per group
    const int64_t m = cg * HW;         // elements per group
    const T eps = static_cast<T>(1e-5);

    auto out = TensorT<T>::zeros(x.shape());
    std::vector<T> mean(static_cast<size_t>(N * groups));
    std::vector<T> inv(static_cast<size_t>(N * groups));
    for (int64_t n = 0; n < N; n++)
        for (int64_t gi = 0; gi < groups; gi++) {
            const T* base = x.data() + (n * C + gi * cg) * HW;
            T mu = T(0);
            for (int64_t i = 0; i < m; i++) mu += base[i];
            mu /= static_cast<T>(m);
            T var = T(0);
            for (int64_t i = 0; i < m; i++) {
                T d = base[i] - mu;
                var += d * d;
            }
            var /= static_cast<T>(m);
            const T iv = T(1) / std::sqrt(var + eps);
            mean[static_cast<size_t>(n * groups + gi)] = mu;
            inv[static_cast<size_t>(n * groups + gi)] = iv;
            T* ob = out.data() + (n * C + gi * cg) * HW;
            for (int64_t c = 0; c < cg; c++) {
                const T ga = gamma.data()[gi * cg + c];
                const T be = beta.data()[gi * cg + c];
                for (int64_t i = 0; i < HW; i++)
                    ob[c * HW + i] = ga * (base[c * HW + i] - mu) * iv + be;
            }
        }

    const bool need = x.requires_grad() || gamma.requires_grad() || beta.requires_grad();
    if (tp.recording() && need) {
        out.set_requires_grad(true);
        tp.record(out, [x, gamma, beta, out, N, C, HW, cg, m, groups, mean, inv]() mutable {
            const T* g = out.grad();
            const int64_t G = groups;
            for (int64_t n = 0; n < N; n++)
                for (int64_t gi = 0; gi < G; gi++) {
                    const T mu = mean[static_cast<size_t>(n * G + gi)];
                    const T iv = inv[static_cast<size_t>(n * G + gi)];
                    const T* xb = x.data() + (n * C + gi * cg) * HW;
                    const T* gb = g + (n * C + gi * cg) * HW;
                    if (gamma.requires_grad() || beta.requires_grad()) {
                        for (int64_t c = 0; c < cg; c++) {
                            T sg = T(0), sb = T(0);
                            for (int64_t i = 0; i < HW; i++) {
                                const T xh = (xb[c * HW + i] - mu) * iv;
                                sg += gb[c * HW + i] * xh;
                                sb += gb[c * HW + i];
                            }
                            if (gamma.requires_grad()) gamma.grad()[gi * cg + c] += sg;
                            if (beta.requires_grad()) beta.grad()[gi * cg + c] += sb;
                        }
                    }
                    if (x.requires_grad()) {
                        // dx = iv*(dxh - (s1 + xh*s2)/m), dxh = dy*gamma
                        T s1 = T(0), s2 = T(0);
                        for (int64_t c = 0; c < cg; c++) {
                            const T ga = gamma.data()[gi * cg + c];
                            for (int64_t i = 0; i < HW; i++) {
                                const T dxh = gb[c * HW + i] * ga;
                                const T xh = (xb[c * HW + i] - mu) * iv;
                                s1 += dxh;
                                s2 += dxh * xh;
                            }
                        }
                        s1 /= static_cast<T>(m);
                        s2 /= static_cast<T>(m);
                        T* gx = x.grad() + (n * C + gi * cg) * HW;
                        for (int64_t c = 0; c < cg; c++) {
                            const T ga = gamma.data()[gi * cg + c];
                            for (int64_t i = 0; i < HW; i++) {
                                const T dxh = gb[c * HW + i] * ga;
                                const T xh = (xb[c * HW + i] - mu) * iv;
                                gx[c * HW + i] += iv * (dxh - s1 - xh * s2);
                            }
                        }
                    }
                }
        });
    }
    return out;
}

// ============================================================
// joint view-spatial attention
// ============================================================
//
// Tokens are the union of all frames' spatial positions. Softmax over keys
// uses max subtraction; the max is order-invariant, and the exp-sum plus the
// value accumulation walk frames ordered by (slot, frame index). Permuting
// frames together with their slots therefore reproduces the exact same
// floating-point sequence per query, which makes frame-permutation
// equivariance hold bitwise.

template <typename T>
TensorT<T> joint_attention(Tape<T>& tp, const TensorT<T>& q, const TensorT<T>& k,
                           const TensorT<T>& v, const std::vector<int>& slots) {
    if (q.rank() != 3 || k.rank() != 3 || v.rank() != 3)
        throw ShapeError("joint_attention: q/k/v must be [F,P,C]");
    const int F = q.dim(0), Pq = q.dim(1), C = q.dim(2);
    const int Pk = k.dim(1);
    if (k.dim(0) != F || v.dim(0) != F || v.dim(1) != Pk || k.dim(2) != C || v.dim(2) != C)
        throw ShapeError("joint_attention: q " + shape_str(q.shape()) + " k " +
                         shape_str(k.shape()) + " v " + shape_str(v.shape()));
    if (static_cast<int>(slots.size()) != F)
        throw ShapeError("joint_attention: slots size " + std::to_string(slots.size()) +
                         " vs F=" + std::to_string(F));
    const int64_t nq = static_cast<int64_t>(F) * Pq;
    const int64_t nk = static_cast<int64_t>(F) * Pk;
    const T sc = T(1) / std::sqrt(static_cast<T>(C));

    // frame visit order: by slot, ties by storage index (stable)
    std::vector<int> order(static_cast<size_t>(F));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return slots[static_cast<size_t>(a)] <
                                                slots[static_cast<size_t>(b)]; });

    // raw scores via GEMM against K^T, then exp in place
    std::vector<T> kt(static_cast<size_t>(C) * nk);
    for (int64_t j = 0; j < nk; j++)
        for (int64_t c = 0; c < C; c++) kt[c * nk + j] = k.data()[j * C + c];
    std::vector<T> e(static_cast<size_t>(nq) * nk, T(0));
    gemm_acc(q.data(), kt.data(), e.data(), nq, C, nk);

    std::vector<T> z(static_cast<size_t>(nq));
    auto out = TensorT<T>::zeros(q.shape());
    std::vector<T> acc(static_cast<size_t>(C));
    for (int64_t i = 0; i < nq; i++) {
        T* row = e.data() + i * nk;
        T m = row[0];
        for (int64_t j = 1; j < nk; j++) m = std::max(m, row[j]);
        for (int64_t j = 0; j < nk; j++) row[j] = std::exp(sc * (row[j] - m));
        T zi = T(0);
        std::fill(acc.begin(), acc.end(), T(0));
        for (int g : order) {
            const int64_t jb = static_cast<int64_t>(g) * Pk;
            for (int64_t p = 0; p < Pk; p++) {
                const T ev = row[jb + p];
                zi += ev;
                const T* vr = v.data() + (jb + p) * C;
                for (int64_t c = 0; c < C; c++) acc[static_cast<size_t>(c)] += ev * vr[c];
            }
        }
        z[static_cast<size_t>(i)] = zi;
        T* orow = out.data() + i * C;
        for (int64_t c = 0; c < C; c++) orow[c] = acc[static_cast<size_t>(c)] / zi;
    }

    const bool need = q.requires_grad() || k.requires_grad() || v.requires_grad();
    if (tp.recording() && need) {
        out.set_requires_grad(true);
        auto e_saved = std::make_shared<std::vector<T>>(std::move(e));
        auto z_saved = std::make_shared<std::vector<T>>(std::move(z));
        tp.record(out, [q, k, v, out, e_saved, z_saved, nq, nk, C, sc]() mutable {
            const T* g = out.grad();
            // p = e/z rowwise
            std::vector<T> p(static_cast<size_t>(nq) * nk);
            for (int64_t i = 0; i < nq; i++) {
                const T zi = (*z_saved)[static_cast<size_t>(i)];
                const T* er = e_saved->data() + i * nk;
                T* pr = p.data() + i * nk;
                for (int64_t j = 0; j < nk; j++) pr[j] = er[j] / zi;
            }
            if (v.requires_grad()) gemm_at_acc(p.data(), g, v.grad(), nq, nk, C);
            // dp = g * V^T (via transposed V for the fast GEMM order)
            std::vector<T> vt(static_cast<size_t>(C) * nk);
            for (int64_t j = 0; j < nk; j++)
                for (int64_t c = 0; c < C; c++) vt[c * nk + j] = v.data()[j * C + c];
            std::vector<T> dp(static_cast<size_t>(nq) * nk, T(0));
            gemm_acc(g, vt.data(), dp.data(), nq, C, nk);
            // ds = sc * p * (dp - rowdot(dp,p)); reuse dp as ds
            for (int64_t i = 0; i < nq; i++) {
                T* dpr = dp.data() + i * nk;
                const T* pr = p.data() + i * nk;
                T r = T(0);
                for (int64_t j = 0; j < nk; j++) r += dpr[j] * pr[j];
                for (int64_t j = 0; j < nk; j++) dpr[j] = sc * pr[j] * (dpr[j] - r);
            }
            if (q.requires_grad()) gemm_acc(dp.data(), k.data(), q.grad(), nq, nk, C);
            if (k.requires_grad()) gemm_at_acc(dp.data(), q.data(), k.grad(), nq, nk, C);
        });
    }
    return out;
}

template <typename T>
TensorT<T> scaled_dot_attention(Tape<T>& tp, const TensorT<T>& q, const TensorT<T>& k,
                                const TensorT<T>& v) {
    if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2)
        throw ShapeError("scaled_dot_attention: q/k/v must be rank 2");
    auto q3 = reshape(tp, q, {1, q.dim(0), q.dim(1)});
    auto k3 = reshape(tp, k, {1, k.dim(0), k.dim(1)});
    auto v3 = reshape(tp, v, {1, v.dim(0), v.dim(1)});
    auto o3 = joint_attention(tp, q3, k3, v3, {0});
    return reshape(tp, o3, {q.dim(0), v.dim(1)});
}

#define TRIMIX_INST(T)                                                                      \
    template TensorT<T> softmax<T>(Tape<T>&, const TensorT<T>&, int);                      \
    template TensorT<T> group_norm<T>(Tape<T>&, const TensorT<T>&, const TensorT<T>&,      \
                                      const TensorT<T>&, int);                             \
    template TensorT<T> joint_attention<T>(Tape<T>&, const TensorT<T>&, const TensorT<T>&, \
                                           const TensorT<T>&, const std::vector<int>&);    \
    template TensorT<T> scaled_dot_attention<T>(Tape<T>&, const TensorT<T>&,               \
                                                const TensorT<T>&, const TensorT<T>&);

TRIMIX_INST(float)
TRIMIX_INST(double)
#undef TRIMIX_INST

} // namespace trimix::ops
