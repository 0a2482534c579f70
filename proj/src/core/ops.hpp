#pragma once

#include <vector>

#include "core/tensor.hpp"

// Differentiable primitives. Every op computes its output eagerly and, when
// the tape is recording and any input requires grad, appends a backward
// closure. All loops run in a fixed order, so outputs and gradients are
// bitwise reproducible for identical inputs. No broadcasting anywhere except
// the documented scalar/vector cases (scale, frame_scale with a 1-element
// alpha, the bias adds).
namespace trimix::ops {

// ---- elementwise / structural ----

template <typename T> TensorT<T> add(Tape<T>& tp, const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> sub(Tape<T>& tp, const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> mul(Tape<T>& tp, const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> scale(Tape<T>& tp, const TensorT<T>& a, T c);
template <typename T> TensorT<T> silu(Tape<T>& tp, const TensorT<T>& a);

template <typename T> TensorT<T> reshape(Tape<T>& tp, const TensorT<T>& a, Shape s);
template <typename T>
TensorT<T> permute(Tape<T>& tp, const TensorT<T>& a, const std::vector<int>& axes);
template <typename T>
TensorT<T> concat(Tape<T>& tp, const TensorT<T>& a, const TensorT<T>& b, int axis);
template <typename T>
TensorT<T> slice(Tape<T>& tp, const TensorT<T>& a, int axis, int start, int len);

// [C,H,W] replicated to [F,C,H,W]; backward sums over frames.
template <typename T> TensorT<T> broadcast_frames(Tape<T>& tp, const TensorT<T>& chw, int frames);
// x: [N,C,H,W], v: [C]; adds v[c] at every (n,h,w).
template <typename T>
TensorT<T> add_channel_bias(Tape<T>& tp, const TensorT<T>& x, const TensorT<T>& v);
// x: [F,P,C], e: [F,C]; adds e[f,:] to every token of frame f.
template <typename T>
TensorT<T> add_token_bias(Tape<T>& tp, const TensorT<T>& x, const TensorT<T>& e);
// out[i,:] = table[idx[i],:]; backward scatter-adds rows in i order.
template <typename T>
TensorT<T> gather_rows(Tape<T>& tp, const TensorT<T>& table, const std::vector<int>& idx);
// x: [F,P,C], alpha: [F] or [1] (broadcast); y[f,p,c] = alpha[f]*x[f,p,c].
template <typename T>
TensorT<T> frame_scale(Tape<T>& tp, const TensorT<T>& x, const TensorT<T>& alpha);

template <typename T> TensorT<T> nearest_upsample_2x(Tape<T>& tp, const TensorT<T>& x);
// [N,C,H,W] -> [N,C] spatial mean.
template <typename T> TensorT<T> global_avg_pool(Tape<T>& tp, const TensorT<T>& x);

// Scalar outputs (shape [1]).
template <typename T> TensorT<T> mse(Tape<T>& tp, const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> sum(Tape<T>& tp, const TensorT<T>& a);

// ---- linear algebra ----

template <typename T> TensorT<T> matmul(Tape<T>& tp, const TensorT<T>& a, const TensorT<T>& b);
// x: [..., K] (leading dims collapse to rows), w: [K,N], b: [N] or undefined.
template <typename T>
TensorT<T> linear(Tape<T>& tp, const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b);
// 3x3 kernel, zero padding 1, stride 1 or 2. x: [N,Ci,H,W], w: [Co,Ci,3,3],
// b: [Co] or undefined.
template <typename T>
TensorT<T> conv2d(Tape<T>& tp, const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b,
                  int stride);

// ---- normalization / attention ----

template <typename T> TensorT<T> softmax(Tape<T>& tp, const TensorT<T>& x, int axis);
template <typename T>
TensorT<T> group_norm(Tape<T>& tp, const TensorT<T>& x, const TensorT<T>& gamma,
                      const TensorT<T>& beta, int groups);

// Joint view-spatial attention over the union of all frames' tokens.
// q: [F,Pq,C], k/v: [F,Pk,C], scale 1/sqrt(C), softmax over all F*Pk keys.
// Cross-frame reductions accumulate per-frame partials ordered by (slot,
// frame index), so permuting frames together with their slots permutes the
// output bitwise. slots.size() == F.
template <typename T>
TensorT<T> joint_attention(Tape<T>& tp, const TensorT<T>& q, const TensorT<T>& k,
                           const TensorT<T>& v, const std::vector<int>& slots);

// Rank-2 convenience form: q [n,d], k/v [m,d].
template <typename T>
TensorT<T> scaled_dot_attention(Tape<T>& tp, const TensorT<T>& q, const TensorT<T>& k,
                                const TensorT<T>& v);

// Throws NumericError naming `where` if any element is NaN/Inf.
template <typename T> void check_finite(const TensorT<T>& x, const std::string& where);

} // namespace trimix::ops
