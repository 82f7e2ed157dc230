#pragma once

// Straightforward single-threaded implementations used as test oracles and as
// the baseline in the kernel benchmark. They share no code with the optimised
// kernels beyond the Tensor container.

#include "ussci/core/ops.hpp"
#include "ussci/masking.hpp"
#include "ussci/net/attention.hpp"

namespace ussci::reference {

/// Direct loop over every output element and kernel tap.
template <typename T>
Tensor<T> conv3d(const Tensor<T>& input, const ConvSpec& spec, const Tensor<T>& weight, const Tensor<T>& bias);

/// Scatter form: every input element spreads weight-scaled copies into the output.
template <typename T>
Tensor<T> transposed_conv3d(const Tensor<T>& input, const ConvSpec& spec, const Tensor<T>& weight,
                            const Tensor<T>& bias);

/// [m,k] x [k,n].
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

/// Multi-head attention of a single token set [N,d], built from matmul and an
/// explicit exp/normalise softmax.
template <typename T>
Tensor<T> dense_attention(const Tensor<T>& tokens, const AttentionParams<T>& params);

/// Y[h,w] = sum_m X[m,h,w] M[m,h,w] with frames in ascending order.
template <typename T>
Tensor<T> encode(const Tensor<T>& video, const MaskSet& masks);

}  // namespace ussci::reference
