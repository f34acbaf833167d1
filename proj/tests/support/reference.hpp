#pragma once

// Straight-line 64-bit reference implementation of the decoder, written with
// plain nested loops and no shared kernels, used as a test oracle.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "recgpt/model/params.hpp"
#include "recgpt/types.hpp"

namespace ref {

using Mat = std::vector<std::vector<double>>;

template <typename T>
Mat to_mat(const recgpt::numerics::BasicTensor<T>& t) {
  Mat m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = static_cast<double>(t(i, j));
  return m;
}

inline Mat mul(const Mat& a, const Mat& b) {
  Mat c(a.size(), std::vector<double>(b.empty() ? 0 : b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < c[i].size(); ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < b.size(); ++t) s += a[i][t] * b[t][j];
      c[i][j] = s;
    }
  return c;
}

template <typename T>
Mat embed(const recgpt::model::ModelParams<T>& p, recgpt::UserId user,
          const std::vector<recgpt::ItemId>& items, const std::vector<recgpt::Segment>& segs) {
  const std::size_t d = p.dims.d;
  Mat h(items.size(), std::vector<double>(d));
  for (std::size_t t = 0; t < items.size(); ++t)
    for (std::size_t j = 0; j < d; ++j)
      h[t][j] = static_cast<double>(p.user_emb.value(user, j)) +
                static_cast<double>(p.item_emb.value(items[t], j)) +
                static_cast<double>(p.pos_emb.value(t, j)) +
                static_cast<double>(p.seg_emb.value(static_cast<std::size_t>(segs[t]), j));
  return h;
}

template <typename T>
Mat block(const recgpt::model::ModelParams<T>& p, std::size_t l, const Mat& x) {
  const auto& lp = p.layers[l];
  const std::size_t L = x.size(), d = p.dims.d, m = p.dims.n_heads, dh = d / m;
  const Mat q = mul(x, to_mat(lp.wq.value));
  const Mat k = mul(x, to_mat(lp.wk.value));
  const Mat v = mul(x, to_mat(lp.wv.value));
  Mat heads(L, std::vector<double>(d, 0.0));
  for (std::size_t h = 0; h < m; ++h) {
    for (std::size_t i = 0; i < L; ++i) {
      std::vector<double> w(i + 1);
      for (std::size_t j = 0; j <= i; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) s += q[i][h * dh + c] * k[j][h * dh + c];
        w[j] = s / std::sqrt(static_cast<double>(d));
      }
      const double mx = *std::max_element(w.begin(), w.end());
      double z = 0.0;
      for (auto& e : w) z += (e = std::exp(e - mx));
      for (std::size_t j = 0; j <= i; ++j)
        for (std::size_t c = 0; c < dh; ++c) heads[i][h * dh + c] += w[j] / z * v[j][h * dh + c];
    }
  }
  const Mat s = mul(heads, to_mat(lp.ws.value));
  Mat a = mul(s, to_mat(lp.w1.value));
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j)
      a[i][j] = std::max(0.0, a[i][j] + static_cast<double>(lp.b1.value[j]));
  Mat out = mul(a, to_mat(lp.w2.value));
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i][j] += static_cast<double>(lp.b2.value[j]);
  return out;
}

template <typename T>
Mat forward(const recgpt::model::ModelParams<T>& p, recgpt::UserId user,
            const std::vector<recgpt::ItemId>& items, const std::vector<recgpt::Segment>& segs) {
  Mat h = embed(p, user, items, segs);
  for (std::size_t l = 0; l < p.layers.size(); ++l) h = block(p, l, h);
  return h;
}

template <typename T>
std::vector<double> logits(const recgpt::numerics::BasicTensor<T>& table,
                           const std::vector<double>& h) {
  std::vector<double> out(table.rows());
  for (std::size_t i = 0; i < table.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < h.size(); ++j) s += static_cast<double>(table(i, j)) * h[j];
    out[i] = s;
  }
  return out;
}

// Full sort by (score desc, id asc).
inline std::vector<recgpt::ItemId> ranking(const std::vector<double>& scores) {
  std::vector<recgpt::ItemId> ids(scores.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::stable_sort(ids.begin(), ids.end(),
                   [&](recgpt::ItemId a, recgpt::ItemId b) { return scores[a] > scores[b]; });
  return ids;
}

}  // namespace ref
