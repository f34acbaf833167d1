#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "recgpt/numerics/tensor.hpp"

// Hand-written forward/backward kernels for the fixed op set of the decoder.
// Backward functions accumulate into the gradient buffers they are given so
// that callers can sum contributions from several uses of one tensor.
namespace recgpt::numerics {

// C = A * B
template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);

// dA += dC * B^T, dB += A^T * dC. Either output may be null.
template <typename T>
void matmul_backward(const BasicTensor<T>& a, const BasicTensor<T>& b,
                     const BasicTensor<T>& d_c, BasicTensor<T>* d_a,
                     BasicTensor<T>* d_b);

// C = A * B^T
template <typename T>
BasicTensor<T> matmul_bt(const BasicTensor<T>& a, const BasicTensor<T>& b);

// dA += dC * B, dB += dC^T * A.
template <typename T>
void matmul_bt_backward(const BasicTensor<T>& a, const BasicTensor<T>& b,
                        const BasicTensor<T>& d_c, BasicTensor<T>* d_a,
                        BasicTensor<T>* d_b);

// Adds a bias row to every row of x in place.
template <typename T>
void add_row_bias(BasicTensor<T>& x, const BasicTensor<T>& bias);

// d_bias += column sums of d_out.
template <typename T>
void row_bias_backward(const BasicTensor<T>& d_out, BasicTensor<T>& d_bias);

// L x L mask: 0 on and below the diagonal, -inf above.
template <typename T>
BasicTensor<T> causal_mask(std::size_t length);

// Row-wise softmax(logits + mask). Rows are stabilized by their max over the
// allowed entries; masked entries come out exactly 0.
template <typename T>
BasicTensor<T> masked_softmax(const BasicTensor<T>& logits, const BasicTensor<T>& mask);

// Given probabilities P and upstream dP, returns dLogits = P * (dP - <dP, P>_row).
template <typename T>
BasicTensor<T> masked_softmax_backward(const BasicTensor<T>& probs,
                                       const BasicTensor<T>& d_probs);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x);

// Subgradient at 0 is 0.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& d_out);

template <typename T>
BasicTensor<T> embedding_lookup(const BasicTensor<T>& table,
                                std::span<const std::int32_t> ids);

// Scatter-adds row i of d_out into table_grad[ids[i]]; duplicates accumulate.
template <typename T>
void embedding_backward(std::span<const std::int32_t> ids, const BasicTensor<T>& d_out,
                        BasicTensor<T>& table_grad);

template <typename T>
struct BcePairResult {
  T loss{};
  T d_pos{};
  std::vector<T> d_neg;
};

// -log sigmoid(pos) - sum log(1 - sigmoid(neg)), evaluated through softplus.
template <typename T>
BcePairResult<T> bce_pair_loss(T pos_score, std::span<const T> neg_scores);

template <typename T>
struct CrossEntropyResult {
  T loss{};
  std::vector<T> d_logits;
};

// -log softmax(logits)[target] with log-sum-exp stabilization.
template <typename T>
CrossEntropyResult<T> cross_entropy(std::span<const T> logits, std::size_t target);

template <typename T>
T softplus(T x);

template <typename T>
T sigmoid(T x);

}  // namespace recgpt::numerics
