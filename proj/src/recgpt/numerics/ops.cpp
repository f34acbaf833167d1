#include "recgpt/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

namespace recgpt::numerics {
namespace {

template <typename T>
void require_rank2(const BasicTensor<T>& t, const char* what) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(what) + ": expected a matrix, got shape " +
                         BasicTensor<T>::shape_string(t.shape()));
  }
}

template <typename T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": shape mismatch " +
                         BasicTensor<T>::shape_string(a.shape()) + " vs " +
                         BasicTensor<T>::shape_string(b.shape()));
  }
}

// Sums are carried in at least double precision; float tensors only round on store.
template <typename T>
using AccOf = std::conditional_t<(sizeof(T) > sizeof(double)), T, double>;

std::string dims(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  using Acc = AccOf<T>;
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree (" + dims(a.rows(), a.cols()) +
                         " * " + dims(b.rows(), b.cols()) + ")");
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  auto c = BasicTensor<T>::matrix(n, m);
  std::vector<Acc> row(m);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(row.begin(), row.end(), Acc{0});
    for (std::size_t t = 0; t < k; ++t) {
      const Acc av = a(i, t);
      const T* bt = b.data() + t * m;
      for (std::size_t j = 0; j < m; ++j) row[j] += av * bt[j];
    }
    T* ci = c.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) ci[j] = static_cast<T>(row[j]);
  }
  return c;
}

template <typename T>
void matmul_backward(const BasicTensor<T>& a, const BasicTensor<T>& b,
                     const BasicTensor<T>& d_c, BasicTensor<T>* d_a,
                     BasicTensor<T>* d_b) {
  using Acc = AccOf<T>;
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  if (d_c.rows() != n || d_c.cols() != m) {
    throw DimensionError("matmul_backward: upstream gradient has wrong shape");
  }
  if (d_a) {
    require_same_shape(*d_a, a, "matmul_backward dA");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t t = 0; t < k; ++t) {
        const T* dci = d_c.data() + i * m;
        const T* bt = b.data() + t * m;
        Acc acc{0};
        for (std::size_t j = 0; j < m; ++j) acc += static_cast<Acc>(dci[j]) * bt[j];
        (*d_a)(i, t) += static_cast<T>(acc);
      }
    }
  }
  if (d_b) {
    require_same_shape(*d_b, b, "matmul_backward dB");
    std::vector<Acc> sums(k * m, Acc{0});
    for (std::size_t i = 0; i < n; ++i) {
      const T* dci = d_c.data() + i * m;
      for (std::size_t t = 0; t < k; ++t) {
        const Acc av = a(i, t);
        Acc* st = sums.data() + t * m;
        for (std::size_t j = 0; j < m; ++j) st[j] += av * dci[j];
      }
    }
    for (std::size_t x = 0; x < sums.size(); ++x) (*d_b)[x] += static_cast<T>(sums[x]);
  }
}

template <typename T>
BasicTensor<T> matmul_bt(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  using Acc = AccOf<T>;
  require_rank2(a, "matmul_bt");
  require_rank2(b, "matmul_bt");
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_bt: inner dimensions disagree (" + dims(a.rows(), a.cols()) +
                         " * (" + dims(b.rows(), b.cols()) + ")^T)");
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  auto c = BasicTensor<T>::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const T* ai = a.data() + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const T* bj = b.data() + j * k;
      Acc acc{0};
      for (std::size_t t = 0; t < k; ++t) acc += static_cast<Acc>(ai[t]) * bj[t];
      c(i, j) = static_cast<T>(acc);
    }
  }
  return c;
}

template <typename T>
void matmul_bt_backward(const BasicTensor<T>& a, const BasicTensor<T>& b,
                        const BasicTensor<T>& d_c, BasicTensor<T>* d_a,
                        BasicTensor<T>* d_b) {
  using Acc = AccOf<T>;
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  if (d_c.rows() != n || d_c.cols() != m) {
    throw DimensionError("matmul_bt_backward: upstream gradient has wrong shape");
  }
  if (d_a) {
    require_same_shape(*d_a, a, "matmul_bt_backward dA");
    std::vector<Acc> row(k);
    for (std::size_t i = 0; i < n; ++i) {
      std::fill(row.begin(), row.end(), Acc{0});
      for (std::size_t j = 0; j < m; ++j) {
        const Acc g = d_c(i, j);
        const T* bj = b.data() + j * k;
        for (std::size_t t = 0; t < k; ++t) row[t] += g * bj[t];
      }
      T* dai = d_a->data() + i * k;
      for (std::size_t t = 0; t < k; ++t) dai[t] += static_cast<T>(row[t]);
    }
  }
  if (d_b) {
    require_same_shape(*d_b, b, "matmul_bt_backward dB");
    std::vector<Acc> sums(m * k, Acc{0});
    for (std::size_t i = 0; i < n; ++i) {
      const T* ai = a.data() + i * k;
      for (std::size_t j = 0; j < m; ++j) {
        const Acc g = d_c(i, j);
        Acc* sj = sums.data() + j * k;
        for (std::size_t t = 0; t < k; ++t) sj[t] += g * ai[t];
      }
    }
    for (std::size_t x = 0; x < sums.size(); ++x) (*d_b)[x] += static_cast<T>(sums[x]);
  }
}

template <typename T>
void add_row_bias(BasicTensor<T>& x, const BasicTensor<T>& bias) {
  if (bias.size() != x.cols()) throw DimensionError("add_row_bias: bias width mismatch");
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias[j];
  }
}

template <typename T>
void row_bias_backward(const BasicTensor<T>& d_out, BasicTensor<T>& d_bias) {
  using Acc = AccOf<T>;
  if (d_bias.size() != d_out.cols()) throw DimensionError("row_bias_backward: width mismatch");
  for (std::size_t j = 0; j < d_out.cols(); ++j) {
    Acc s{0};
    for (std::size_t i = 0; i < d_out.rows(); ++i) s += d_out(i, j);
    d_bias[j] += static_cast<T>(s);
  }
}

template <typename T>
BasicTensor<T> causal_mask(std::size_t length) {
  auto m = BasicTensor<T>::matrix(length, length);
  for (std::size_t i = 0; i < length; ++i)
    for (std::size_t j = i + 1; j < length; ++j) m(i, j) = -std::numeric_limits<T>::infinity();
  return m;
}

template <typename T>
BasicTensor<T> masked_softmax(const BasicTensor<T>& logits, const BasicTensor<T>& mask) {
  using Acc = AccOf<T>;
  require_rank2(logits, "masked_softmax");
  require_same_shape(logits, mask, "masked_softmax");
  BasicTensor<T> out(logits.shape());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto in = logits.row(i);
    auto mk = mask.row(i);
    auto o = out.row(i);
    T row_max = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < in.size(); ++j) {
      if (std::isinf(mk[j]) && mk[j] < 0) continue;
      row_max = std::max(row_max, in[j] + mk[j]);
    }
    if (!std::isfinite(row_max)) {
      throw NumericalError("masked_softmax: row " + std::to_string(i) +
                           " has no attendable entry");
    }
    Acc sum{0};
    for (std::size_t j = 0; j < in.size(); ++j) {
      if (std::isinf(mk[j]) && mk[j] < 0) continue;
      sum += std::exp(static_cast<Acc>(in[j]) + mk[j] - row_max);
    }
    for (std::size_t j = 0; j < in.size(); ++j) {
      const bool masked = std::isinf(mk[j]) && mk[j] < 0;
      o[j] = masked ? T{0}
                    : static_cast<T>(std::exp(static_cast<Acc>(in[j]) + mk[j] - row_max) / sum);
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> masked_softmax_backward(const BasicTensor<T>& probs,
                                       const BasicTensor<T>& d_probs) {
  using Acc = AccOf<T>;
  require_same_shape(probs, d_probs, "masked_softmax_backward");
  BasicTensor<T> d_logits(probs.shape());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    auto p = probs.row(i);
    auto dp = d_probs.row(i);
    Acc dot{0};
    for (std::size_t j = 0; j < p.size(); ++j) dot += static_cast<Acc>(p[j]) * dp[j];
    auto dl = d_logits.row(i);
    for (std::size_t j = 0; j < p.size(); ++j) dl[j] = static_cast<T>(p[j] * (dp[j] - dot));
  }
  return d_logits;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  BasicTensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T{0} ? x[i] : T{0};
  return y;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& d_out) {
  require_same_shape(x, d_out, "relu_backward");
  BasicTensor<T> dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > T{0} ? d_out[i] : T{0};
  return dx;
}

template <typename T>
BasicTensor<T> embedding_lookup(const BasicTensor<T>& table,
                                std::span<const std::int32_t> ids) {
  require_rank2(table, "embedding_lookup");
  const std::size_t d = table.cols();
  auto out = BasicTensor<T>::matrix(ids.size(), d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= table.rows()) {
      throw IndexError("embedding_lookup: id " + std::to_string(ids[i]) +
                       " out of range for table with " + std::to_string(table.rows()) +
                       " rows");
    }
    auto src = table.row(static_cast<std::size_t>(ids[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

template <typename T>
void embedding_backward(std::span<const std::int32_t> ids, const BasicTensor<T>& d_out,
                        BasicTensor<T>& table_grad) {
  if (d_out.rows() != ids.size() || d_out.cols() != table_grad.cols()) {
    throw DimensionError("embedding_backward: upstream gradient has wrong shape");
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= table_grad.rows()) {
      throw IndexError("embedding_backward: id " + std::to_string(ids[i]) + " out of range");
    }
    auto dst = table_grad.row(static_cast<std::size_t>(ids[i]));
    auto src = d_out.row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
}

template <typename T>
T softplus(T x) {
  return std::max(x, T{0}) + std::log1p(std::exp(-std::abs(x)));
}

template <typename T>
T sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

template <typename T>
BcePairResult<T> bce_pair_loss(T pos_score, std::span<const T> neg_scores) {
  BcePairResult<T> r;
  // -log sigmoid(x) = softplus(-x); -log(1 - sigmoid(x)) = softplus(x)
  r.loss = softplus(-pos_score);
  r.d_pos = sigmoid(pos_score) - T{1};
  r.d_neg.resize(neg_scores.size());
  for (std::size_t i = 0; i < neg_scores.size(); ++i) {
    r.loss += softplus(neg_scores[i]);
    r.d_neg[i] = sigmoid(neg_scores[i]);
  }
  return r;
}

template <typename T>
CrossEntropyResult<T> cross_entropy(std::span<const T> logits, std::size_t target) {
  using Acc = AccOf<T>;
  if (target >= logits.size()) {
    throw IndexError("cross_entropy: target " + std::to_string(target) +
                     " out of range for " + std::to_string(logits.size()) + " classes");
  }
  T row_max = -std::numeric_limits<T>::infinity();
  for (T v : logits) row_max = std::max(row_max, v);
  Acc sum{0};
  CrossEntropyResult<T> r;
  r.d_logits.resize(logits.size());
  for (T v : logits) sum += std::exp(static_cast<Acc>(v) - row_max);
  const Acc log_z = row_max + std::log(sum);
  r.loss = static_cast<T>(log_z - logits[target]);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    Acc g = std::exp(static_cast<Acc>(logits[i]) - row_max) / sum;
    if (i == target) g -= 1.0;
    r.d_logits[i] = static_cast<T>(g);
  }
  return r;
}

#define RECGPT_INSTANTIATE_OPS(T)                                                        \
  template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);          \
  template void matmul_backward(const BasicTensor<T>&, const BasicTensor<T>&,            \
                                const BasicTensor<T>&, BasicTensor<T>*, BasicTensor<T>*); \
  template BasicTensor<T> matmul_bt(const BasicTensor<T>&, const BasicTensor<T>&);       \
  template void matmul_bt_backward(const BasicTensor<T>&, const BasicTensor<T>&,         \
                                   const BasicTensor<T>&, BasicTensor<T>*,               \
                                   BasicTensor<T>*);                                     \
  template void add_row_bias(BasicTensor<T>&, const BasicTensor<T>&);                    \
  template void row_bias_backward(const BasicTensor<T>&, BasicTensor<T>&);               \
  template BasicTensor<T> causal_mask<T>(std::size_t);                                   \
  template BasicTensor<T> masked_softmax(const BasicTensor<T>&, const BasicTensor<T>&);  \
  template BasicTensor<T> masked_softmax_backward(const BasicTensor<T>&,                 \
                                                  const BasicTensor<T>&);                \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                   \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);   \
  template BasicTensor<T> embedding_lookup(const BasicTensor<T>&,                        \
                                           std::span<const std::int32_t>);               \
  template void embedding_backward(std::span<const std::int32_t>, const BasicTensor<T>&, \
                                   BasicTensor<T>&);                                     \
  template BcePairResult<T> bce_pair_loss(T, std::span<const T>);                        \
  template CrossEntropyResult<T> cross_entropy(std::span<const T>, std::size_t);         \
  template T softplus(T);                                                                \
  template T sigmoid(T);

RECGPT_INSTANTIATE_OPS(float)
RECGPT_INSTANTIATE_OPS(double)
RECGPT_INSTANTIATE_OPS(long double)

#undef RECGPT_INSTANTIATE_OPS

}  // namespace recgpt::numerics
