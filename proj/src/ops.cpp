// SPDX-License-Identifier: Apache-2.0
#include "xlsts/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "xlsts/errors.hpp"
#include "xlsts/rng.hpp"

namespace xlsts {

namespace {

using detail::Node;

// Gradient buffer of input i, or nullptr when that input takes no gradient.
double* input_grad(Node& self, std::size_t i) {
  Node& in = *self.inputs[i];
  return in.requires_grad ? in.grad_buffer().data() : nullptr;
}

const double* input_value(const Node& self, std::size_t i) { return self.inputs[i]->value.data(); }

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + " expects a rank-2 tensor, got " + shape_string(t.shape()));
  }
}

enum class Broadcast { same, scalar, row };

Broadcast broadcast_mode(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::same;
  if (b.numel() == 1) return Broadcast::scalar;
  if (a.rank() == 2 && b.numel() == a.cols() && (b.rank() == 1 || (b.rank() == 2 && b.rows() == 1))) {
    return Broadcast::row;
  }
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
                       shape_string(b.shape()));
}

inline std::size_t broadcast_index(Broadcast mode, std::size_t i, std::size_t cols) {
  switch (mode) {
    case Broadcast::same:
      return i;
    case Broadcast::scalar:
      return 0;
    case Broadcast::row:
      return i % cols;
  }
  return i;
}

template <typename Fn, typename Deriv>
Tensor unary(const Tensor& x, Fn fn, Deriv deriv) {
  const auto in = x.values();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fn(in[i]);
  return make_result(x.shape(), std::move(out), {x}, [deriv](Node& self) {
    double* gx = input_grad(self, 0);
    if (!gx) return;
    const double* xv = input_value(self, 0);
    for (std::size_t i = 0; i < self.value.size(); ++i) gx[i] += self.grad[i] * deriv(xv[i], self.value[i]);
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner dimensions differ: " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  std::vector<double> out(n * m, 0.0);
  const double* av = a.values().data();
  const double* bv = b.values().data();
  for (std::size_t i = 0; i < n; ++i) {
    double* row = out.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      const double* brow = bv + p * m;
      for (std::size_t j = 0; j < m; ++j) row[j] += aip * brow[j];
    }
  }
  return make_result({n, m}, std::move(out), {a, b}, [n, k, m](Node& self) {
    const double* g = self.grad.data();
    const double* av = input_value(self, 0);
    const double* bv = input_value(self, 1);
    if (double* ga = input_grad(self, 0)) {
      for (std::size_t i = 0; i < n; ++i) {
        const double* grow = g + i * m;
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = bv + p * m;
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (double* gb = input_grad(self, 1)) {
      for (std::size_t i = 0; i < n; ++i) {
        const double* grow = g + i * m;
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = av[i * k + p];
          double* gbrow = gb + p * m;
          for (std::size_t j = 0; j < m; ++j) gbrow[j] += aip * grow[j];
        }
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  const std::size_t n = a.rows(), m = a.cols();
  const auto av = a.values();
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[j * n + i] = av[i * m + j];
  return make_result({m, n}, std::move(out), {a}, [n, m](Node& self) {
    double* ga = input_grad(self, 0);
    if (!ga) return;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) ga[i * m + j] += self.grad[j * n + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  const auto mode = broadcast_mode(a, b, "add");
  const std::size_t cols = a.cols();
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[broadcast_index(mode, i, cols)];
  return make_result(a.shape(), std::move(out), {a, b}, [mode, cols](Node& self) {
    const auto& g = self.grad;
    if (double* ga = input_grad(self, 0))
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    if (double* gb = input_grad(self, 1))
      for (std::size_t i = 0; i < g.size(); ++i) gb[broadcast_index(mode, i, cols)] += g[i];
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const auto mode = broadcast_mode(a, b, "sub");
  const std::size_t cols = a.cols();
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[broadcast_index(mode, i, cols)];
  return make_result(a.shape(), std::move(out), {a, b}, [mode, cols](Node& self) {
    const auto& g = self.grad;
    if (double* ga = input_grad(self, 0))
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    if (double* gb = input_grad(self, 1))
      for (std::size_t i = 0; i < g.size(); ++i) gb[broadcast_index(mode, i, cols)] -= g[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const auto mode = broadcast_mode(a, b, "mul");
  const std::size_t cols = a.cols();
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[broadcast_index(mode, i, cols)];
  return make_result(a.shape(), std::move(out), {a, b}, [mode, cols](Node& self) {
    const auto& g = self.grad;
    const double* av = input_value(self, 0);
    const double* bv = input_value(self, 1);
    if (double* ga = input_grad(self, 0))
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[broadcast_index(mode, i, cols)];
    if (double* gb = input_grad(self, 1))
      for (std::size_t i = 0; i < g.size(); ++i) gb[broadcast_index(mode, i, cols)] += g[i] * av[i];
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Tensor tanh(const Tensor& x) {
  return unary(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor abs(const Tensor& x) {
  return unary(
      x, [](double v) { return std::fabs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor exp(const Tensor& x) {
  return unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  const auto& s = x.shape();
  if (s.empty() || s.size() > 2 || axis >= s.size()) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for " + shape_string(s));
  }
  // Groups are the slices along `axis`: `len` entries `stride` apart.
  std::size_t groups, len, stride, group_step;
  if (s.size() == 1) {
    groups = 1, len = s[0], stride = 1, group_step = 0;
  } else if (axis == 1) {
    groups = s[0], len = s[1], stride = 1, group_step = s[1];
  } else {
    groups = s[1], len = s[0], stride = s[1], group_step = 1;
  }
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t base = g * group_step;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < len; ++i) mx = std::max(mx, xv[base + i * stride]);
    double total = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double e = std::exp(xv[base + i * stride] - mx);
      out[base + i * stride] = e;
      total += e;
    }
    for (std::size_t i = 0; i < len; ++i) out[base + i * stride] /= total;
  }
  return make_result(s, std::move(out), {x}, [groups, len, stride, group_step](Node& self) {
    double* gx = input_grad(self, 0);
    if (!gx) return;
    const auto& y = self.value;
    const auto& g = self.grad;
    for (std::size_t grp = 0; grp < groups; ++grp) {
      const std::size_t base = grp * group_step;
      double dot = 0.0;
      for (std::size_t i = 0; i < len; ++i) dot += g[base + i * stride] * y[base + i * stride];
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t idx = base + i * stride;
        gx[idx] += y[idx] * (g[idx] - dot);
      }
    }
  });
}

Tensor sum(const Tensor& x) {
  const auto xv = x.values();
  const double total = std::accumulate(xv.begin(), xv.end(), 0.0);
  return make_result({}, {total}, {x}, [](Node& self) {
    double* gx = input_grad(self, 0);
    if (!gx) return;
    const std::size_t n = self.inputs[0]->value.size();
    for (std::size_t i = 0; i < n; ++i) gx[i] += self.grad[0];
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor mean_rows(const Tensor& x) {
  require_rank2(x, "mean_rows");
  const std::size_t n = x.rows(), m = x.cols();
  const auto xv = x.values();
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[j] += xv[i * m + j];
  for (auto& v : out) v /= static_cast<double>(n);
  return make_result({1, m}, std::move(out), {x}, [n, m](Node& self) {
    double* gx = input_grad(self, 0);
    if (!gx) return;
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) gx[i * m + j] += self.grad[j] * inv;
  });
}

Tensor max_rows(const Tensor& x) {
  require_rank2(x, "max_rows");
  const std::size_t n = x.rows(), m = x.cols();
  const auto xv = x.values();
  std::vector<double> out(m);
  std::vector<std::size_t> argmax(m, 0);
  for (std::size_t j = 0; j < m; ++j) {
    out[j] = xv[j];
    for (std::size_t i = 1; i < n; ++i) {
      if (xv[i * m + j] > out[j]) {
        out[j] = xv[i * m + j];
        argmax[j] = i;
      }
    }
  }
  return make_result({1, m}, std::move(out), {x}, [m, argmax = std::move(argmax)](Node& self) {
    double* gx = input_grad(self, 0);
    if (!gx) return;
    for (std::size_t j = 0; j < m; ++j) gx[argmax[j] * m + j] += self.grad[j];
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape " + shape_string(x.shape()) + " to " + shape_string(shape));
  }
  const auto xv = x.values();
  return make_result(std::move(shape), std::vector<double>(xv.begin(), xv.end()), {x}, [](Node& self) {
    double* gx = input_grad(self, 0);
    if (!gx) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols of nothing");
  const std::size_t n = parts.front().rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rank() > 2 || p.rows() != n) throw DimensionError("concat_cols: row counts differ");
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(n * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto pv = parts[k].values();
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(pv.data() + i * widths[k], widths[k], out.data() + i * total + offset);
    offset += widths[k];
  }
  return make_result({n, total}, std::move(out), parts, [n, total, widths](Node& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      if (double* gp = input_grad(self, k)) {
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < widths[k]; ++j) gp[i * widths[k] + j] += self.grad[i * total + offset + j];
      }
      offset += widths[k];
    }
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows of nothing");
  const std::size_t m = parts.front().cols();
  std::size_t n = 0;
  std::vector<double> out;
  for (const auto& p : parts) {
    if (p.rank() > 2 || p.cols() != m) throw DimensionError("concat_rows: column counts differ");
    n += p.rows();
    const auto pv = p.values();
    out.insert(out.end(), pv.begin(), pv.end());
  }
  return make_result({n, m}, std::move(out), parts, [](Node& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      const std::size_t count = self.inputs[k]->value.size();
      if (double* gp = input_grad(self, k))
        for (std::size_t i = 0; i < count; ++i) gp[i] += self.grad[offset + i];
      offset += count;
    }
  });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count) {
  require_rank2(x, "slice_rows");
  const std::size_t m = x.cols();
  if (count == 0 || begin + count > x.rows()) {
    throw DimensionError("slice_rows [" + std::to_string(begin) + ", +" + std::to_string(count) + ") of " +
                         shape_string(x.shape()));
  }
  const auto xv = x.values();
  std::vector<double> out(xv.begin() + static_cast<std::ptrdiff_t>(begin * m),
                          xv.begin() + static_cast<std::ptrdiff_t>((begin + count) * m));
  return make_result({count, m}, std::move(out), {x}, [begin, m](Node& self) {
    double* gx = input_grad(self, 0);
    if (!gx) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[begin * m + i] += self.grad[i];
  });
}

Tensor gather_rows(const Tensor& table, std::span<const int> ids) {
  require_rank2(table, "gather_rows");
  if (ids.empty()) throw DimensionError("gather_rows with no ids");
  const std::size_t vocab = table.rows(), m = table.cols();
  const auto tv = table.values();
  std::vector<double> out(ids.size() * m);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw DimensionError("gather_rows: id " + std::to_string(ids[i]) + " outside table of " +
                           std::to_string(vocab) + " rows");
    }
    std::copy_n(tv.data() + static_cast<std::size_t>(ids[i]) * m, m, out.data() + i * m);
  }
  return make_result({ids.size(), m}, std::move(out), {table},
                     [m, idx = std::vector<int>(ids.begin(), ids.end())](Node& self) {
                       double* gt = input_grad(self, 0);
                       if (!gt) return;
                       for (std::size_t i = 0; i < idx.size(); ++i) {
                         double* row = gt + static_cast<std::size_t>(idx[i]) * m;
                         for (std::size_t j = 0; j < m; ++j) row[j] += self.grad[i * m + j];
                       }
                     });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double epsilon) {
  require_rank2(x, "layer_norm");
  const std::size_t n = x.rows(), m = x.cols();
  if (gamma.numel() != m || beta.numel() != m) throw DimensionError("layer_norm: gain/bias width mismatch");
  const auto xv = x.values();
  const auto gv = gamma.values();
  const auto bv = beta.values();
  std::vector<double> out(n * m), xhat(n * m), inv_std(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = xv.data() + i * m;
    double mu = 0.0;
    for (std::size_t j = 0; j < m; ++j) mu += row[j];
    mu /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t j = 0; j < m; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(m);
    inv_std[i] = 1.0 / std::sqrt(var + epsilon);
    for (std::size_t j = 0; j < m; ++j) {
      xhat[i * m + j] = (row[j] - mu) * inv_std[i];
      out[i * m + j] = xhat[i * m + j] * gv[j] + bv[j];
    }
  }
  return make_result({n, m}, std::move(out), {x, gamma, beta},
                     [n, m, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                       const auto& g = self.grad;
                       const double* gv = input_value(self, 1);
                       double* gx = input_grad(self, 0);
                       double* ggamma = input_grad(self, 1);
                       double* gbeta = input_grad(self, 2);
                       for (std::size_t i = 0; i < n; ++i) {
                         const std::size_t base = i * m;
                         if (ggamma || gbeta) {
                           for (std::size_t j = 0; j < m; ++j) {
                             if (ggamma) ggamma[j] += g[base + j] * xhat[base + j];
                             if (gbeta) gbeta[j] += g[base + j];
                           }
                         }
                         if (gx) {
                           double mean_d = 0.0, mean_dx = 0.0;
                           for (std::size_t j = 0; j < m; ++j) {
                             const double d = g[base + j] * gv[j];
                             mean_d += d;
                             mean_dx += d * xhat[base + j];
                           }
                           mean_d /= static_cast<double>(m);
                           mean_dx /= static_cast<double>(m);
                           for (std::size_t j = 0; j < m; ++j) {
                             const double d = g[base + j] * gv[j];
                             gx[base + j] += inv_std[i] * (d - mean_d - xhat[base + j] * mean_dx);
                           }
                         }
                       }
                     });
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                 std::span<const std::size_t> q_lengths, std::span<const std::size_t> kv_lengths, bool causal) {
  require_rank2(q, "attention");
  require_rank2(k, "attention");
  require_rank2(v, "attention");
  const std::size_t d = q.cols();
  if (k.cols() != d || v.cols() != d) throw DimensionError("attention: q/k/v widths differ");
  if (heads == 0 || d % heads != 0) throw DimensionError("attention: width not divisible by head count");
  if (q_lengths.size() != kv_lengths.size()) throw DimensionError("attention: segment counts differ");
  std::size_t q_total = 0, kv_total = 0;
  for (std::size_t s = 0; s < q_lengths.size(); ++s) {
    if (q_lengths[s] == 0 || kv_lengths[s] == 0) throw DimensionError("attention: empty segment");
    if (causal && q_lengths[s] != kv_lengths[s]) throw DimensionError("attention: causal segments must be square");
    q_total += q_lengths[s];
    kv_total += kv_lengths[s];
  }
  if (q_total != q.rows() || kv_total != k.rows() || kv_total != v.rows()) {
    throw DimensionError("attention: segment lengths do not cover the packed rows");
  }

  const std::size_t dh = d / heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const double* qv = q.values().data();
  const double* kvals = k.values().data();
  const double* vv = v.values().data();

  // Saved attention probabilities, laid out segment by segment, head-major.
  std::vector<double> probs;
  std::vector<std::size_t> prob_offsets;
  std::vector<double> out(q_total * d, 0.0);
  std::size_t q0 = 0, k0 = 0;
  std::vector<double> row;
  for (std::size_t s = 0; s < q_lengths.size(); ++s) {
    const std::size_t nq = q_lengths[s], nk = kv_lengths[s];
    prob_offsets.push_back(probs.size());
    probs.resize(probs.size() + heads * nq * nk, 0.0);
    double* seg_probs = probs.data() + prob_offsets.back();
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t c0 = h * dh;
      for (std::size_t i = 0; i < nq; ++i) {
        const double* qi = qv + (q0 + i) * d + c0;
        const std::size_t visible = causal ? i + 1 : nk;
        row.assign(visible, 0.0);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < visible; ++j) {
          const double* kj = kvals + (k0 + j) * d + c0;
          double dot = 0.0;
          for (std::size_t c = 0; c < dh; ++c) dot += qi[c] * kj[c];
          row[j] = dot * inv_scale;
          mx = std::max(mx, row[j]);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < visible; ++j) {
          row[j] = std::exp(row[j] - mx);
          total += row[j];
        }
        double* p = seg_probs + (h * nq + i) * nk;
        double* o = out.data() + (q0 + i) * d + c0;
        for (std::size_t j = 0; j < visible; ++j) {
          p[j] = row[j] / total;
          const double* vj = vv + (k0 + j) * d + c0;
          for (std::size_t c = 0; c < dh; ++c) o[c] += p[j] * vj[c];
        }
      }
    }
    q0 += nq;
    k0 += nk;
  }

  return make_result(
      {q_total, d}, std::move(out), {q, k, v},
      [d, dh, heads, inv_scale, causal, probs = std::move(probs), prob_offsets = std::move(prob_offsets),
       q_lens = std::vector<std::size_t>(q_lengths.begin(), q_lengths.end()),
       kv_lens = std::vector<std::size_t>(kv_lengths.begin(), kv_lengths.end())](Node& self) {
        const double* qv = input_value(self, 0);
        const double* kvals = input_value(self, 1);
        const double* vv = input_value(self, 2);
        double* gq = input_grad(self, 0);
        double* gk = input_grad(self, 1);
        double* gv = input_grad(self, 2);
        const double* g = self.grad.data();
        std::vector<double> dp;
        std::size_t q0 = 0, k0 = 0;
        for (std::size_t s = 0; s < q_lens.size(); ++s) {
          const std::size_t nq = q_lens[s], nk = kv_lens[s];
          const double* seg_probs = probs.data() + prob_offsets[s];
          for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t c0 = h * dh;
            for (std::size_t i = 0; i < nq; ++i) {
              const std::size_t visible = causal ? i + 1 : nk;
              const double* p = seg_probs + (h * nq + i) * nk;
              const double* gi = g + (q0 + i) * d + c0;
              dp.assign(visible, 0.0);
              double dot = 0.0;
              for (std::size_t j = 0; j < visible; ++j) {
                const double* vj = vv + (k0 + j) * d + c0;
                double acc = 0.0;
                for (std::size_t c = 0; c < dh; ++c) acc += gi[c] * vj[c];
                dp[j] = acc;
                dot += acc * p[j];
                if (gv) {
                  double* gvj = gv + (k0 + j) * d + c0;
                  for (std::size_t c = 0; c < dh; ++c) gvj[c] += p[j] * gi[c];
                }
              }
              const double* qi = qv + (q0 + i) * d + c0;
              for (std::size_t j = 0; j < visible; ++j) {
                const double ds = p[j] * (dp[j] - dot) * inv_scale;
                if (ds == 0.0) continue;
                const double* kj = kvals + (k0 + j) * d + c0;
                if (gq) {
                  double* gqi = gq + (q0 + i) * d + c0;
                  for (std::size_t c = 0; c < dh; ++c) gqi[c] += ds * kj[c];
                }
                if (gk) {
                  double* gkj = gk + (k0 + j) * d + c0;
                  for (std::size_t c = 0; c < dh; ++c) gkj[c] += ds * qi[c];
                }
              }
            }
          }
          q0 += nq;
          k0 += nk;
        }
      });
}

Tensor row_projection(const Tensor& h, const Tensor& onto) {
  require_rank2(h, "row_projection");
  if (h.shape() != onto.shape()) throw DimensionError("row_projection: shapes differ");
  const std::size_t n = h.rows(), m = h.cols();
  const auto hv = h.values();
  const auto ov = onto.values();
  std::vector<double> out(n * m, 0.0);
  // Per row: coefficient c = t/s with t = h.o, s = o.o; NaN marks a degenerate row.
  std::vector<double> coef(n), norm_sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    double t = 0.0, s = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      t += hv[i * m + j] * ov[i * m + j];
      s += ov[i * m + j] * ov[i * m + j];
    }
    norm_sq[i] = s;
    if (std::sqrt(s) < 1e-12) {
      coef[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    coef[i] = t / s;
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = coef[i] * ov[i * m + j];
  }
  return make_result({n, m}, std::move(out), {h, onto},
                     [n, m, coef = std::move(coef), norm_sq = std::move(norm_sq)](Node& self) {
                       const double* hv = input_value(self, 0);
                       const double* ov = input_value(self, 1);
                       double* gh = input_grad(self, 0);
                       double* go = input_grad(self, 1);
                       for (std::size_t i = 0; i < n; ++i) {
                         if (std::isnan(coef[i])) continue;
                         const double* g = self.grad.data() + i * m;
                         double dc = 0.0;
                         for (std::size_t j = 0; j < m; ++j) dc += g[j] * ov[i * m + j];
                         const double ratio = dc / norm_sq[i];
                         if (gh)
                           for (std::size_t j = 0; j < m; ++j) gh[i * m + j] += ratio * ov[i * m + j];
                         if (go)
                           for (std::size_t j = 0; j < m; ++j)
                             go[i * m + j] += coef[i] * g[j] + ratio * (hv[i * m + j] - 2.0 * coef[i] * ov[i * m + j]);
                       }
                     });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> targets, double label_smoothing) {
  require_rank2(logits, "cross_entropy");
  const std::size_t n = logits.rows(), vocab = logits.cols();
  if (targets.size() != n) throw DimensionError("cross_entropy: one target per row required");
  if (label_smoothing < 0.0 || label_smoothing >= 1.0) throw ContractError("label smoothing outside [0, 1)");
  const auto lv = logits.values();
  std::vector<double> probs(n * vocab);
  double total = 0.0;
  const double off = label_smoothing / static_cast<double>(vocab);
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = targets[i];
    if (t < 0 || static_cast<std::size_t>(t) >= vocab) throw DimensionError("cross_entropy: target id out of range");
    const double* row = lv.data() + i * vocab;
    const double mx = *std::max_element(row, row + vocab);
    double z = 0.0;
    for (std::size_t j = 0; j < vocab; ++j) z += std::exp(row[j] - mx);
    const double log_z = mx + std::log(z);
    double loss = 0.0;
    for (std::size_t j = 0; j < vocab; ++j) {
      const double log_p = row[j] - log_z;
      probs[i * vocab + j] = std::exp(log_p);
      const double w = off + (static_cast<std::size_t>(t) == j ? 1.0 - label_smoothing : 0.0);
      if (w > 0.0) loss -= w * log_p;
    }
    total += loss;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  return make_result({}, {total * inv_n}, {logits},
                     [n, vocab, inv_n, off, label_smoothing, probs = std::move(probs),
                      tg = std::vector<int>(targets.begin(), targets.end())](Node& self) {
                       double* gl = input_grad(self, 0);
                       if (!gl) return;
                       const double g = self.grad[0] * inv_n;
                       for (std::size_t i = 0; i < n; ++i) {
                         for (std::size_t j = 0; j < vocab; ++j) {
                           const double w = off + (static_cast<std::size_t>(tg[i]) == j ? 1.0 - label_smoothing : 0.0);
                           gl[i * vocab + j] += g * (probs[i * vocab + j] - w);
                         }
                       }
                     });
}

Tensor kl_divergence(std::span<const double> target, const Tensor& predicted, double floor) {
  if (target.size() != predicted.numel()) throw DimensionError("kl_divergence: distribution sizes differ");
  const auto qv = predicted.values();
  double total = 0.0;
  for (std::size_t j = 0; j < target.size(); ++j) {
    if (target[j] <= 0.0) continue;
    total += target[j] * (std::log(target[j]) - std::log(std::max(qv[j], floor)));
  }
  return make_result({}, {total}, {predicted},
                     [floor, p = std::vector<double>(target.begin(), target.end())](Node& self) {
                       double* gq = input_grad(self, 0);
                       if (!gq) return;
                       const double* qv = input_value(self, 0);
                       for (std::size_t j = 0; j < p.size(); ++j) {
                         if (p[j] > 0.0 && qv[j] > floor) gq[j] -= self.grad[0] * p[j] / qv[j];
                       }
                     });
}

Tensor dropout(const Tensor& x, double probability, Rng& rng) {
  if (probability < 0.0 || probability >= 1.0) throw ContractError("dropout probability outside [0, 1)");
  if (probability == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - probability);
  std::vector<double> mask(x.numel());
  for (auto& m : mask) m = rng.uniform() < probability ? 0.0 : keep_scale;
  return mul(x, Tensor(x.shape(), std::move(mask)));
}

}  // namespace xlsts
