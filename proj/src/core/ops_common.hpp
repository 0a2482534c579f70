#pragma once

#include <cstdint>

#include "core/tensor.hpp"

// Internal GEMM kernels shared by matmul/linear/conv2d/attention. Loop
// orders are fixed; the j-innermost forms vectorize without reassociating
// any reduction, so strict IEEE evaluation is preserved.
namespace trimix::ops::detail {

// C[M,N] += A[M,K] * B[K,N]
template <typename T>
inline void gemm_acc(const T* A, const T* B, T* C, int64_t M, int64_t K, int64_t N) {
    for (int64_t i = 0; i < M; i++) {
        T* c = C + i * N;
        const T* a = A + i * K;
        for (int64_t k = 0; k < K; k++) {
            T av = a[k];
            const T* b = B + k * N;
            for (int64_t j = 0; j < N; j++) c[j] += av * b[j];
        }
    }
}

// C[K,N] += A^T * B with A[M,K], B[M,N]
template <typename T>
inline void gemm_at_acc(const T* A, const T* B, T* C, int64_t M, int64_t K, int64_t N) {
    for (int64_t m = 0; m < M; m++) {
        const T* a = A + m * K;
        const T* b = B + m * N;
        for (int64_t k = 0; k < K; k++) {
            T av = a[k];
            T* c = C + k * N;
            for (int64_t j = 0; j < N; j++) c[j] += av * b[j];
        }
    }
}

// C[M,K] += A * B^T with A[M,N], B[K,N] (per-element dot over N)
template <typename T>
inline void gemm_bt_acc(const T* A, const T* B, T* C, int64_t M, int64_t K, int64_t N) {
    for (int64_t m = 0; m < M; m++) {
        const T* a = A + m * N;
        for (int64_t k = 0; k < K; k++) {
            const T* b = B + k * N;
            T acc = T(0);
            for (int64_t j = 0; j < N; j++) acc += a[j] * b[j];
            C[m * K + k] += acc;
        }
    }
}

} // namespace trimix::ops::detail
