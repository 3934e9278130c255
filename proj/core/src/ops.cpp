#include "shotwright/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "shotwright/error.hpp"

namespace shotwright::ops {

namespace {

void require(bool ok, const std::string& op, const Tensor& a, const Tensor& b) {
  if (!ok) throw ShapeError(op + ": incompatible shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
}

void accumulate(Tensor& dst, std::span<const double> src) {
  auto d = dst.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[i];
}

// Row-wise softmax of `x` into `out` (same shape), max-subtracted.
void softmax_rows(const Tensor& x, Tensor& out) {
  const std::size_t n = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row(r);
    auto o = out.row(r);
    const double peak = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      o[j] = std::exp(in[j] - peak);
      total += o[j];
    }
    for (std::size_t j = 0; j < n; ++j) o[j] /= total;
  }
}

}  // namespace

Var matmul(Tape& t, Var a, Var b) {
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  require(bv.rank() == 2 && av.cols() == bv.rows(), "matmul", av, bv);
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out = Tensor::matrix(m, n);
  kernels::matmul_acc(av.data(), bv.data(), out.data(), m, k, n);
  return t.record(std::move(out), {a, b}, [a, b, m, k, n](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) kernels::matmul_bt_acc(g.data(), tp.value(b).data(), tp.grad_of(a).data(), m, n, k);
    if (tp.requires_grad(b)) kernels::matmul_at_acc(tp.value(a).data(), g.data(), tp.grad_of(b).data(), m, k, n);
  });
}

Var linear(Tape& t, Var x, Var weights, Var bias) {
  const auto& xv = t.value(x);
  const auto& wv = t.value(weights);
  const auto& bv = t.value(bias);
  require(wv.rank() == 2 && xv.cols() == wv.rows(), "linear (input vs weights)", xv, wv);
  require(bv.size() == wv.cols(), "linear (weights vs bias)", wv, bv);
  const std::size_t m = xv.rows(), k = xv.cols(), n = wv.cols();
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t r = 0; r < m; ++r) std::copy(bv.data().begin(), bv.data().end(), out.row(r).begin());
  kernels::matmul_acc(xv.data(), wv.data(), out.data(), m, k, n);
  return t.record(std::move(out), {x, weights, bias}, [x, weights, bias, m, k, n](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(x)) {
      kernels::matmul_bt_acc(g.data(), tp.value(weights).data(), tp.grad_of(x).data(), m, n, k);
    }
    if (tp.requires_grad(weights)) {
      kernels::matmul_at_acc(tp.value(x).data(), g.data(), tp.grad_of(weights).data(), m, k, n);
    }
    if (tp.requires_grad(bias)) {
      auto db = tp.grad_of(bias).data();
      for (std::size_t r = 0; r < m; ++r) {
        const auto gr = g.row(r);
        for (std::size_t j = 0; j < n; ++j) db[j] += gr[j];
      }
    }
  });
}

Var add(Tape& t, Var a, Var b) {
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  require(av.size() == bv.size(), "add", av, bv);
  Tensor out = av;
  accumulate(out, bv.data());
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) accumulate(tp.grad_of(a), g.data());
    if (tp.requires_grad(b)) accumulate(tp.grad_of(b), g.data());
  });
}

Var add_tiled(Tape& t, Var x, Var pattern) {
  const auto& xv = t.value(x);
  const auto& pv = t.value(pattern);
  require(pv.cols() == xv.cols() && pv.rows() > 0 && xv.rows() % pv.rows() == 0, "add_tiled", xv, pv);
  Tensor out = xv;
  const std::size_t pr = pv.rows();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto o = out.row(r);
    const auto p = pv.row(r % pr);
    for (std::size_t j = 0; j < o.size(); ++j) o[j] += p[j];
  }
  return t.record(std::move(out), {x, pattern}, [x, pattern, pr](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(x)) accumulate(tp.grad_of(x), g.data());
    if (tp.requires_grad(pattern)) {
      auto& dp = tp.grad_of(pattern);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto d = dp.row(r % pr);
        const auto gr = g.row(r);
        for (std::size_t j = 0; j < d.size(); ++j) d[j] += gr[j];
      }
    }
  });
}

Var scale(Tape& t, Var x, double factor) {
  Tensor out = t.value(x);
  for (auto& v : out.data()) v *= factor;
  return t.record(std::move(out), {x}, [x, factor](Tape& tp, const Tensor& g) {
    auto d = tp.grad_of(x).data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * g[i];
  });
}

Var gelu(Tape& t, Var x) {
  // tanh approximation
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double a = 0.044715;
  const auto& xv = t.value(x);
  Tensor out = Tensor::like(xv);
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double v = xv[i];
    out[i] = 0.5 * v * (1.0 + std::tanh(c * (v + a * v * v * v)));
  }
  return t.record(std::move(out), {x}, [x](Tape& tp, const Tensor& g) {
    const auto& xin = tp.value(x);
    auto d = tp.grad_of(x).data();
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double v = xin[i];
      const double th = std::tanh(c * (v + a * v * v * v));
      const double dv = 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * c * (1.0 + 3.0 * a * v * v);
      d[i] += g[i] * dv;
    }
  });
}

Var tanh(Tape& t, Var x) {
  Tensor out = t.value(x);
  for (auto& v : out.data()) v = std::tanh(v);
  const Var self = t.next();
  return t.record(std::move(out), {x}, [x, self](Tape& tp, const Tensor& g) {
    const auto& yv = tp.value(self);
    auto d = tp.grad_of(x).data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * (1.0 - yv[i] * yv[i]);
  });
}

Var layer_norm(Tape& t, Var x, Var gain, Var shift, double eps) {
  const auto& xv = t.value(x);
  const auto& gv = t.value(gain);
  const auto& sv = t.value(shift);
  const std::size_t d = xv.cols();
  if (d < 2) throw ShapeError("layer_norm needs at least 2 columns, got " + shape_string(xv.shape()));
  require(gv.size() == d && sv.size() == d, "layer_norm (input vs gain/shift)", xv, gv);
  Tensor normed = Tensor::like(xv);
  std::vector<double> inv_std(xv.rows());
  Tensor out = Tensor::like(xv);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    const auto in = xv.row(r);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    auto nr = normed.row(r);
    auto o = out.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      nr[j] = (in[j] - mean) * inv_std[r];
      o[j] = nr[j] * gv[j] + sv[j];
    }
  }
  return t.record(std::move(out), {x, gain, shift},
                  [x, gain, shift, d, normed = std::move(normed), inv_std = std::move(inv_std)](Tape& tp,
                                                                                               const Tensor& g) {
                    const auto& gv = tp.value(gain);
                    if (tp.requires_grad(gain) || tp.requires_grad(shift)) {
                      for (std::size_t r = 0; r < g.rows(); ++r) {
                        const auto gr = g.row(r);
                        const auto nr = normed.row(r);
                        if (tp.requires_grad(gain)) {
                          auto dg = tp.grad_of(gain).data();
                          for (std::size_t j = 0; j < d; ++j) dg[j] += gr[j] * nr[j];
                        }
                        if (tp.requires_grad(shift)) {
                          auto ds = tp.grad_of(shift).data();
                          for (std::size_t j = 0; j < d; ++j) ds[j] += gr[j];
                        }
                      }
                    }
                    if (!tp.requires_grad(x)) return;
                    auto& dx = tp.grad_of(x);
                    std::vector<double> dn(d);
                    for (std::size_t r = 0; r < g.rows(); ++r) {
                      const auto gr = g.row(r);
                      const auto nr = normed.row(r);
                      double mean_dn = 0.0, mean_dn_n = 0.0;
                      for (std::size_t j = 0; j < d; ++j) {
                        dn[j] = gr[j] * gv[j];
                        mean_dn += dn[j];
                        mean_dn_n += dn[j] * nr[j];
                      }
                      mean_dn /= static_cast<double>(d);
                      mean_dn_n /= static_cast<double>(d);
                      auto dr = dx.row(r);
                      for (std::size_t j = 0; j < d; ++j) dr[j] += inv_std[r] * (dn[j] - mean_dn - nr[j] * mean_dn_n);
                    }
                  });
}

Tensor attention_weights(const Tensor& q, const Tensor& k, std::size_t seq_len, std::size_t heads) {
  const std::size_t d = q.cols();
  if (heads == 0 || d % heads != 0) {
    throw ShapeError("attention: width " + std::to_string(d) + " not divisible by " + std::to_string(heads) + " heads");
  }
  if (seq_len == 0 || q.rows() % seq_len != 0) {
    throw ShapeError("attention: " + std::to_string(q.rows()) + " rows do not split into sequences of " +
                     std::to_string(seq_len));
  }
  require(k.rows() == q.rows() && k.cols() == d, "attention (q vs k)", q, k);
  const std::size_t groups = q.rows() / seq_len;
  const std::size_t dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  Tensor probs = Tensor::matrix(groups * heads * seq_len, seq_len);
  for (std::size_t gi = 0; gi < groups; ++gi) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < seq_len; ++i) {
        const double* qi = q.data().data() + (gi * seq_len + i) * d + h * dh;
        auto prow = probs.row((gi * heads + h) * seq_len + i);
        double peak = -INFINITY;
        for (std::size_t j = 0; j < seq_len; ++j) {
          const double* kj = k.data().data() + (gi * seq_len + j) * d + h * dh;
          double s = 0.0;
          for (std::size_t c = 0; c < dh; ++c) s += qi[c] * kj[c];
          prow[j] = s * inv_sqrt;
          peak = std::max(peak, prow[j]);
        }
        double total = 0.0;
        for (auto& p : prow) {
          p = std::exp(p - peak);
          total += p;
        }
        for (auto& p : prow) p /= total;
      }
    }
  }
  return probs;
}

Var attention(Tape& t, Var q, Var k, Var v, std::size_t seq_len, std::size_t heads) {
  const auto& qv = t.value(q);
  const auto& kv = t.value(k);
  const auto& vv = t.value(v);
  require(vv.rows() == qv.rows() && vv.cols() == qv.cols(), "attention (q vs v)", qv, vv);
  Tensor probs = attention_weights(qv, kv, seq_len, heads);
  const std::size_t d = qv.cols();
  const std::size_t dh = d / heads;
  const std::size_t groups = qv.rows() / seq_len;
  Tensor out = Tensor::like(qv);
  for (std::size_t gi = 0; gi < groups; ++gi) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < seq_len; ++i) {
        const auto prow = probs.row((gi * heads + h) * seq_len + i);
        double* oi = out.data().data() + (gi * seq_len + i) * d + h * dh;
        for (std::size_t j = 0; j < seq_len; ++j) {
          const double* vj = vv.data().data() + (gi * seq_len + j) * d + h * dh;
          for (std::size_t c = 0; c < dh; ++c) oi[c] += prow[j] * vj[c];
        }
      }
    }
  }
  return t.record(std::move(out), {q, k, v},
                  [q, k, v, seq_len, heads, groups, d, dh, probs = std::move(probs)](Tape& tp, const Tensor& g) {
                    const auto& qv = tp.value(q);
                    const auto& kv = tp.value(k);
                    const auto& vv = tp.value(v);
                    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
                    const bool need_q = tp.requires_grad(q), need_k = tp.requires_grad(k), need_v = tp.requires_grad(v);
                    double* dq = need_q ? tp.grad_of(q).data().data() : nullptr;
                    double* dk = need_k ? tp.grad_of(k).data().data() : nullptr;
                    double* dv = need_v ? tp.grad_of(v).data().data() : nullptr;
                    std::vector<double> dp(seq_len);
                    for (std::size_t gi = 0; gi < groups; ++gi) {
                      for (std::size_t h = 0; h < heads; ++h) {
                        for (std::size_t i = 0; i < seq_len; ++i) {
                          const auto prow = probs.row((gi * heads + h) * seq_len + i);
                          const std::size_t ri = (gi * seq_len + i) * d + h * dh;
                          const double* go = g.data().data() + ri;
                          double weighted = 0.0;
                          for (std::size_t j = 0; j < seq_len; ++j) {
                            const std::size_t rj = (gi * seq_len + j) * d + h * dh;
                            double s = 0.0;
                            for (std::size_t c = 0; c < dh; ++c) s += go[c] * vv[rj + c];
                            dp[j] = s;
                            weighted += prow[j] * s;
                            if (dv) {
                              for (std::size_t c = 0; c < dh; ++c) dv[rj + c] += prow[j] * go[c];
                            }
                          }
                          for (std::size_t j = 0; j < seq_len; ++j) {
                            const double ds = prow[j] * (dp[j] - weighted) * inv_sqrt;
                            if (ds == 0.0) continue;
                            const std::size_t rj = (gi * seq_len + j) * d + h * dh;
                            if (dq) {
                              for (std::size_t c = 0; c < dh; ++c) dq[ri + c] += ds * kv[rj + c];
                            }
                            if (dk) {
                              for (std::size_t c = 0; c < dh; ++c) dk[rj + c] += ds * qv[ri + c];
                            }
                          }
                        }
                      }
                    }
                  });
}

Var softmax(Tape& t, Var x) {
  const auto& xv = t.value(x);
  Tensor out = Tensor::like(xv);
  softmax_rows(xv, out);
  const Var self = t.next();
  return t.record(std::move(out), {x}, [x, self](Tape& tp, const Tensor& g) {
    const auto& p = tp.value(self);
    auto& dx = tp.grad_of(x);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      const auto pr = p.row(r);
      const auto gr = g.row(r);
      double dot = 0.0;
      for (std::size_t j = 0; j < pr.size(); ++j) dot += pr[j] * gr[j];
      auto d = dx.row(r);
      for (std::size_t j = 0; j < pr.size(); ++j) d[j] += pr[j] * (gr[j] - dot);
    }
  });
}

Var log_softmax(Tape& t, Var x) {
  const auto& xv = t.value(x);
  Tensor probs = Tensor::like(xv);
  softmax_rows(xv, probs);
  Tensor out = Tensor::like(xv);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    const auto in = xv.row(r);
    const double peak = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (double v : in) total += std::exp(v - peak);
    const double lse = peak + std::log(total);
    auto o = out.row(r);
    for (std::size_t j = 0; j < in.size(); ++j) o[j] = in[j] - lse;
  }
  return t.record(std::move(out), {x}, [x, probs = std::move(probs)](Tape& tp, const Tensor& g) {
    auto& dx = tp.grad_of(x);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      const auto gr = g.row(r);
      double total = 0.0;
      for (double v : gr) total += v;
      const auto pr = probs.row(r);
      auto d = dx.row(r);
      for (std::size_t j = 0; j < gr.size(); ++j) d[j] += gr[j] - pr[j] * total;
    }
  });
}

Var cross_entropy(Tape& t, Var logits, std::span<const int> targets) {
  const auto& lv = t.value(logits);
  const std::size_t n = lv.rows(), c = lv.cols();
  if (targets.size() != n) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " + std::to_string(n) + " rows");
  }
  for (int target : targets) {
    if (target < 0 || static_cast<std::size_t>(target) >= c) {
      throw Error("cross_entropy: target " + std::to_string(target) + " outside [0, " + std::to_string(c) + ")");
    }
  }
  Tensor probs = Tensor::like(lv);
  softmax_rows(lv, probs);
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto in = lv.row(r);
    const double peak = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (double v : in) total += std::exp(v - peak);
    loss -= in[static_cast<std::size_t>(targets[r])] - peak - std::log(total);
  }
  loss /= static_cast<double>(n);
  std::vector<int> tgt(targets.begin(), targets.end());
  return t.record(Tensor({1}, {loss}), {logits},
                  [logits, n, probs = std::move(probs), tgt = std::move(tgt)](Tape& tp, const Tensor& g) {
                    auto& dl = tp.grad_of(logits);
                    const double s = g[0] / static_cast<double>(n);
                    for (std::size_t r = 0; r < n; ++r) {
                      const auto pr = probs.row(r);
                      auto d = dl.row(r);
                      for (std::size_t j = 0; j < pr.size(); ++j) d[j] += s * pr[j];
                      d[static_cast<std::size_t>(tgt[r])] -= s;
                    }
                  });
}

Var prepend_token(Tape& t, Var x, Var token, std::size_t seq_len) {
  const auto& xv = t.value(x);
  const auto& tv = t.value(token);
  require(tv.size() == xv.cols() && seq_len > 0 && xv.rows() % seq_len == 0, "prepend_token", xv, tv);
  const std::size_t groups = xv.rows() / seq_len;
  const std::size_t d = xv.cols();
  Tensor out = Tensor::matrix(groups * (seq_len + 1), d);
  for (std::size_t gi = 0; gi < groups; ++gi) {
    std::copy(tv.data().begin(), tv.data().end(), out.row(gi * (seq_len + 1)).begin());
    for (std::size_t s = 0; s < seq_len; ++s) {
      const auto in = xv.row(gi * seq_len + s);
      std::copy(in.begin(), in.end(), out.row(gi * (seq_len + 1) + 1 + s).begin());
    }
  }
  return t.record(std::move(out), {x, token}, [x, token, groups, seq_len, d](Tape& tp, const Tensor& g) {
    for (std::size_t gi = 0; gi < groups; ++gi) {
      if (tp.requires_grad(token)) {
        auto dt = tp.grad_of(token).data();
        const auto gr = g.row(gi * (seq_len + 1));
        for (std::size_t j = 0; j < d; ++j) dt[j] += gr[j];
      }
      if (tp.requires_grad(x)) {
        auto& dx = tp.grad_of(x);
        for (std::size_t s = 0; s < seq_len; ++s) {
          auto dr = dx.row(gi * seq_len + s);
          const auto gr = g.row(gi * (seq_len + 1) + 1 + s);
          for (std::size_t j = 0; j < d; ++j) dr[j] += gr[j];
        }
      }
    }
  });
}

Var select_rows(Tape& t, Var x, std::vector<std::size_t> rows) {
  const auto& xv = t.value(x);
  Tensor out = Tensor::matrix(rows.size(), xv.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= xv.rows()) throw ShapeError("select_rows: row " + std::to_string(rows[r]) + " out of range");
    const auto in = xv.row(rows[r]);
    std::copy(in.begin(), in.end(), out.row(r).begin());
  }
  return t.record(std::move(out), {x}, [x, rows = std::move(rows)](Tape& tp, const Tensor& g) {
    auto& dx = tp.grad_of(x);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      auto d = dx.row(rows[r]);
      const auto gr = g.row(r);
      for (std::size_t j = 0; j < d.size(); ++j) d[j] += gr[j];
    }
  });
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: nothing to concatenate");
  const std::size_t n = t.value(parts[0]).rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (auto p : parts) {
    require(t.value(p).rows() == n, "concat_cols", t.value(parts[0]), t.value(p));
    widths.push_back(t.value(p).cols());
    total += widths.back();
  }
  Tensor out = Tensor::matrix(n, total);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& pv = t.value(parts[i]);
    for (std::size_t r = 0; r < n; ++r) {
      const auto in = pv.row(r);
      std::copy(in.begin(), in.end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(offset));
    }
    offset += widths[i];
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return t.record(std::move(out), parts, [ins = std::move(ins), widths = std::move(widths), n](Tape& tp,
                                                                                             const Tensor& g) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < ins.size(); ++i) {
      if (tp.requires_grad(ins[i])) {
        auto& d = tp.grad_of(ins[i]);
        for (std::size_t r = 0; r < n; ++r) {
          auto dr = d.row(r);
          const auto gr = g.row(r).subspan(off, widths[i]);
          for (std::size_t j = 0; j < widths[i]; ++j) dr[j] += gr[j];
        }
      }
      off += widths[i];
    }
  });
}

Var slice_cols(Tape& t, Var x, std::size_t begin, std::size_t count) {
  const auto& xv = t.value(x);
  if (begin + count > xv.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(begin + count) + ") outside " +
                     shape_string(xv.shape()));
  }
  Tensor out = Tensor::matrix(xv.rows(), count);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    const auto in = xv.row(r).subspan(begin, count);
    std::copy(in.begin(), in.end(), out.row(r).begin());
  }
  return t.record(std::move(out), {x}, [x, begin, count](Tape& tp, const Tensor& g) {
    auto& dx = tp.grad_of(x);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      auto d = dx.row(r).subspan(begin, count);
      const auto gr = g.row(r);
      for (std::size_t j = 0; j < count; ++j) d[j] += gr[j];
    }
  });
}

Var pick(Tape& t, Var x, std::span<const int> index) {
  const auto& xv = t.value(x);
  if (index.size() != xv.rows()) {
    throw ShapeError("pick: " + std::to_string(index.size()) + " indices for " + std::to_string(xv.rows()) + " rows");
  }
  Tensor out = Tensor::matrix(xv.rows(), 1);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    if (index[r] < 0 || static_cast<std::size_t>(index[r]) >= xv.cols()) {
      throw ShapeError("pick: index " + std::to_string(index[r]) + " outside row of width " + std::to_string(xv.cols()));
    }
    out[r] = xv.at(r, static_cast<std::size_t>(index[r]));
  }
  std::vector<int> idx(index.begin(), index.end());
  return t.record(std::move(out), {x}, [x, idx = std::move(idx)](Tape& tp, const Tensor& g) {
    auto& dx = tp.grad_of(x);
    for (std::size_t r = 0; r < idx.size(); ++r) dx.at(r, static_cast<std::size_t>(idx[r])) += g[r];
  });
}

Var reshape(Tape& t, Var x, std::vector<std::size_t> shape) {
  return t.record(t.value(x).reshaped(std::move(shape)), {x}, [x](Tape& tp, const Tensor& g) {
    accumulate(tp.grad_of(x), g.data());
  });
}

Var sum(Tape& t, Var x) {
  double s = 0.0;
  for (double v : t.value(x).data()) s += v;
  return t.record(Tensor({1}, {s}), {x}, [x](Tape& tp, const Tensor& g) {
    for (auto& d : tp.grad_of(x).data()) d += g[0];
  });
}

Var weighted_sum(Tape& t, Var x, const Tensor& weights) {
  const auto& xv = t.value(x);
  require(weights.size() == xv.size(), "weighted_sum", xv, weights);
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += weights[i] * xv[i];
  return t.record(Tensor({1}, {s}), {x}, [x, weights](Tape& tp, const Tensor& g) {
    auto d = tp.grad_of(x).data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[0] * weights[i];
  });
}

Var entropy_sum(Tape& t, Var log_probs) {
  const auto& lv = t.value(log_probs);
  double h = 0.0;
  for (double l : lv.data()) h -= std::exp(l) * l;
  return t.record(Tensor({1}, {h}), {log_probs}, [log_probs](Tape& tp, const Tensor& g) {
    const auto& l = tp.value(log_probs).data();
    auto d = tp.grad_of(log_probs).data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= g[0] * std::exp(l[i]) * (l[i] + 1.0);
  });
}

}  // namespace shotwright::ops
