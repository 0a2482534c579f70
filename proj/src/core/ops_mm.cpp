#include <cstring>

#include "core/ops.hpp"
#include "core/ops_common.hpp"

namespace trimix::ops {

using detail::gemm_acc;
using detail::gemm_at_acc;
using detail::gemm_bt_acc;

template <typename T>
TensorT<T> matmul(Tape<T>& tp, const TensorT<T>& a, const TensorT<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw ShapeError("matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    const int64_t M = a.dim(0), K = a.dim(1), N = b.dim(1);
    auto out = TensorT<T>::zeros({a.dim(0), b.dim(1)});
    gemm_acc(a.data(), b.data(), out.data(), M, K, N);
    if (tp.recording() && (a.requires_grad() || b.requires_grad())) {
        out.set_requires_grad(true);
        tp.record(out, [a, b, out, M, K, N]() mutable {
            const T* g = out.grad();
            if (a.requires_grad()) gemm_bt_acc(g, b.data(), a.grad(), M, K, N);
            if (b.requires_grad()) gemm_at_acc(a.data(), g, b.grad(), M, K, N);
        });
    }
    return out;
}

template <typename T>
TensorT<T> linear(Tape<T>& tp, const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b) {
    if (w.rank() != 2) throw ShapeError("linear: weight must be [K,N]");
    const int64_t K = w.dim(0), N = w.dim(1);
    if (x.rank() < 1 || x.dim(x.rank() - 1) != K)
        throw ShapeError("linear: x " + shape_str(x.shape()) + " vs w " + shape_str(w.shape()));
    if (b.defined() && (b.rank() != 1 || b.dim(0) != N))
        throw ShapeError("linear: bias " + shape_str(b.shape()) + " vs N=" + std::to_string(N));
    const int64_t M = x.numel() / K;
    Shape os = x.shape();
    os.back() = static_cast<int>(N);
    auto out = TensorT<T>::zeros(os);
    if (b.defined()) {
        for (int64_t m = 0; m < M; m++)
            std::memcpy(out.data() + m * N, b.data(), sizeof(T) * static_cast<size_t>(N));
    }
    gemm_acc(x.data(), w.data(), out.data(), M, K, N);
    const bool need = x.requires_grad() || w.requires_grad() || (b.defined() && b.requires_grad());
    if (tp.recording() && need) {
        out.set_requires_grad(true);
        tp.record(out, [x, w, b, out, M, K, N]() mutable {
            const T* g = out.grad();
            if (x.requires_grad()) gemm_bt_acc(g, w.data(), x.grad(), M, K, N);
            if (w.requires_grad()) gemm_at_acc(x.data(), g, w.grad(), M, K, N);
            if (b.defined() && b.requires_grad()) {
                T* gb = b.grad();
                for (int64_t m = 0; m < M; m++)
                    for (int64_t n = 0; n < N; n++) gb[n] += g[m * N + n];
            }
        });
    }
    return out;
}

// ============================================================
// conv2d: 3x3, zero pad 1, stride 1 or 2, via im2col + GEMM
// ============================================================

namespace {

// cols[P, Ci*9] for one sample; k index = (ci*3+ky)*3+kx
template <typename T>
void im2col(const T* x, int Ci, int H, int W, int stride, int Ho, int Wo, T* cols) {
    const int K9 = Ci * 9;
    for (int ho = 0; ho < Ho; ho++)
        for (int wo = 0; wo < Wo; wo++) {
            T* row = cols + (static_cast<int64_t>(ho) * Wo + wo) * K9;
            for (int ci = 0; ci < Ci; ci++) {
                const T* xc = x + static_cast<int64_t>(ci) * H * W;
                for (int ky = 0; ky < 3; ky++) {
                    const int iy = ho * stride + ky - 1;
                    for (int kx = 0; kx < 3; kx++) {
                        const int ix = wo * stride + kx - 1;
                        row[(ci * 3 + ky) * 3 + kx] =
                            (iy >= 0 && iy < H && ix >= 0 && ix < W) ? xc[iy * W + ix] : T(0);
                    }
                }
            }
        }
}

template <typename T>
void col2im_acc(const T* dcols, int Ci, int H, int W, int stride, int Ho, int Wo, T* dx) {
    const int K9 = Ci * 9;
    for (int ho = 0; ho < Ho; ho++)
        for (int wo = 0; wo < Wo; wo++) {
            const T* row = dcols + (static_cast<int64_t>(ho) * Wo + wo) * K9;
            for (int ci = 0; ci < Ci; ci++) {
                T* xc = dx + static_cast<int64_t>(ci) * H * W;
                for (int ky = 0; ky < 3; ky++) {
                    const int iy = ho * stride + ky - 1;
                    if (iy < 0 || iy >= H) continue;
                    for (int kx = 0; kx < 3; kx++) {
                        const int ix = wo * stride + kx - 1;
                        if (ix < 0 || ix >= W) continue;
                        xc[iy * W + ix] += row[(ci * 3 + ky) * 3 + kx];
                    }
                }
            }
        }
}

} // namespace

template <typename T>
TensorT<T> conv2d(Tape<T>& tp, const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b,
                  int stride) {
    if (stride != 1 && stride != 2) throw InvalidArgError("conv2d: stride must be 1 or 2");
    if (x.rank() != 4) throw ShapeError("conv2d: x must be [N,Ci,H,W]");
    if (w.rank() != 4 || w.dim(2) != 3 || w.dim(3) != 3)
        throw ShapeError("conv2d: weight must be [Co,Ci,3,3], got " + shape_str(w.shape()));
    if (w.dim(1) != x.dim(1))
        throw ShapeError("conv2d: channel mismatch x " + shape_str(x.shape()) + " w " +
                         shape_str(w.shape()));
    const int N = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3), Co = w.dim(0);
    if (b.defined() && (b.rank() != 1 || b.dim(0) != Co))
        throw ShapeError("conv2d: bias " + shape_str(b.shape()));
    const int Ho = (H - 1) / stride + 1, Wo = (W - 1) / stride + 1;
    const int64_t P = static_cast<int64_t>(Ho) * Wo;
    const int K9 = Ci * 9;

    auto out = TensorT<T>::zeros({N, Co, Ho, Wo});
    // wT[K9, Co] so the GEMM runs with the vectorizable ikj order
    std::vector<T> wT(static_cast<size_t>(K9) * Co);
    for (int co = 0; co < Co; co++)
        for (int k = 0; k < K9; k++) wT[static_cast<size_t>(k) * Co + co] = w.data()[co * K9 + k];

    std::vector<T> cols(static_cast<size_t>(P) * K9);
    std::vector<T> out2(static_cast<size_t>(P) * Co);
    for (int n = 0; n < N; n++) {
        im2col(x.data() + static_cast<int64_t>(n) * Ci * H * W, Ci, H, W, stride, Ho, Wo,
               cols.data());
        std::fill(out2.begin(), out2.end(), T(0));
        gemm_acc(cols.data(), wT.data(), out2.data(), P, K9, Co);
        T* on = out.data() + static_cast<int64_t>(n) * Co * P;
        for (int co = 0; co < Co; co++) {
            const T bias = b.defined() ? b.data()[co] : T(0);
            for (int64_t p = 0; p < P; p++) on[co * P + p] = out2[p * Co + co] + bias;
        }
    }

    const bool need = x.requires_grad() || w.requires_grad() || (b.defined() && b.requires_grad());
    if (tp.recording() && need) {
        out.set_requires_grad(true);
        tp.record(out, [x, w, b, out, stride, N, Ci, H, W, Co, Ho, Wo, P, K9]() mutable {
            const T* g = out.grad();
            std::vector<T> cols2(static_cast<size_t>(P) * K9);
            std::vector<T> gout2(static_cast<size_t>(P) * Co);
            std::vector<T> dwT(w.requires_grad() ? static_cast<size_t>(K9) * Co : 0, T(0));
            std::vector<T> dcols(x.requires_grad() ? static_cast<size_t>(P) * K9 : 0);
            for (int n = 0; n < N; n++) {
                const T* gn = g + static_cast<int64_t>(n) * Co * P;
                for (int co = 0; co < Co; co++)
                    for (int64_t p = 0; p < P; p++) gout2[p * Co + co] = gn[co * P + p];
                if (b.defined() && b.requires_grad()) {
                    T* gb = b.grad();
                    for (int co = 0; co < Co; co++) {
                        T acc = T(0);
                        for (int64_t p = 0; p < P; p++) acc += gn[co * P + p];
                        gb[co] += acc;
                    }
                }
                if (w.requires_grad()) {
                    im2col(x.data() + static_cast<int64_t>(n) * Ci * H * W, Ci, H, W, stride, Ho,
                           Wo, cols2.data());
                    // dwT[K9,Co] += cols^T * gout2
                    gemm_at_acc(cols2.data(), gout2.data(), dwT.data(), P, K9, Co);
                }
                if (x.requires_grad()) {
                    std::fill(dcols.begin(), dcols.end(), T(0));
                    // dcols[P,K9] += gout2[P,Co] * wflat[Co,K9]
                    gemm_acc(gout2.data(), w.data(), dcols.data(), P, Co, K9);
                    col2im_acc(dcols.data(), Ci, H, W, stride, Ho, Wo,
                               x.grad() + static_cast<int64_t>(n) * Ci * H * W);
                }
            }
            if (w.requires_grad()) {
                T* gw = w.grad();
                for (int co = 0; co < Co; co++)
                    for (int k = 0; k < K9; k++)
                        gw[co * K9 + k] += dwT[static_cast<size_t>(k) * Co + co];
            }
        });
    }
    return out;
}

#define TRIMIX_INST(T)                                                                       \
    template TensorT<T> matmul<T>(Tape<T>&, const TensorT<T>&, const TensorT<T>&);           \
    template TensorT<T> linear<T>(Tape<T>&, const TensorT<T>&, const TensorT<T>&,            \
                                  const TensorT<T>&);                                        \
    template TensorT<T> conv2d<T>(Tape<T>&, const TensorT<T>&, const TensorT<T>&,            \
                                  const TensorT<T>&, int);

TRIMIX_INST(float)
TRIMIX_INST(double)
#undef TRIMIX_INST

} // namespace trimix::ops
