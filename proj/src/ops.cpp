#include "das/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "das/error.hpp"

namespace das::ops {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

std::string shapes(const char* op, const Tensor& a, const Tensor& b) {
  return std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
         shape_string(b.shape());
}

}  // namespace

Var affine(Tape& tape, Var x, Var weight, Var bias) {
  const Tensor& xv = tape.value(x);
  const Tensor& wv = tape.value(weight);
  const Tensor& bv = tape.value(bias);
  require(xv.rank() == 1 && wv.rank() == 2 && wv.dim(1) == xv.dim(0), shapes("affine", wv, xv));
  require(bv.rank() == 1 && bv.dim(0) == wv.dim(0), shapes("affine", wv, bv));

  const std::size_t m = wv.dim(0), n = wv.dim(1);
  Tensor out({m});
  for (std::size_t o = 0; o < m; ++o) {
    double acc = bv[o];
    const double* w = wv.data() + o * n;
    for (std::size_t k = 0; k < n; ++k) acc += w[k] * xv[k];
    out[o] = acc;
  }
  return tape.record(std::move(out), {x, weight, bias}, [=](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(weight);
    if (t.requires_grad(x)) {
      Tensor& gx = t.grad_accumulator(x);
      for (std::size_t o = 0; o < m; ++o) {
        for (std::size_t k = 0; k < n; ++k) gx[k] += g[o] * wv.at(o, k);
      }
    }
    if (t.requires_grad(weight)) {
      Tensor& gw = t.grad_accumulator(weight);
      for (std::size_t o = 0; o < m; ++o) {
        for (std::size_t k = 0; k < n; ++k) gw.at(o, k) += g[o] * xv[k];
      }
    }
    if (t.requires_grad(bias)) {
      Tensor& gb = t.grad_accumulator(bias);
      for (std::size_t o = 0; o < m; ++o) gb[o] += g[o];
    }
  });
}

Var affine_rows(Tape& tape, Var x, Var weight, Var bias) {
  const Tensor& xv = tape.value(x);
  const Tensor& wv = tape.value(weight);
  const Tensor& bv = tape.value(bias);
  require(xv.rank() == 2 && wv.rank() == 2 && wv.dim(1) == xv.dim(1), shapes("affine_rows", wv, xv));
  require(bv.rank() == 1 && bv.dim(0) == wv.dim(0), shapes("affine_rows", wv, bv));

  const std::size_t rows = xv.dim(0), m = wv.dim(0), n = wv.dim(1);
  Tensor out({rows, m});
  for (std::size_t i = 0; i < rows; ++i) {
    const double* xr = xv.data() + i * n;
    double* yr = out.data() + i * m;
    for (std::size_t o = 0; o < m; ++o) {
      const double* w = wv.data() + o * n;
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += w[k] * xr[k];
      yr[o] = acc + bv[o];
    }
  }
  return tape.record(std::move(out), {x, weight, bias}, [=](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(weight);
    Tensor* gx = t.requires_grad(x) ? &t.grad_accumulator(x) : nullptr;
    Tensor* gw = t.requires_grad(weight) ? &t.grad_accumulator(weight) : nullptr;
    Tensor* gb = t.requires_grad(bias) ? &t.grad_accumulator(bias) : nullptr;
    for (std::size_t i = 0; i < rows; ++i) {
      const double* xr = xv.data() + i * n;
      for (std::size_t o = 0; o < m; ++o) {
        const double go = g[i * m + o];
        // Upstream max-pooling leaves most rows with zero gradient.
        if (go == 0.0) continue;
        const double* w = wv.data() + o * n;
        if (gx) {
          double* gxr = gx->data() + i * n;
          for (std::size_t k = 0; k < n; ++k) gxr[k] += go * w[k];
        }
        if (gw) {
          double* gwr = gw->data() + o * n;
          for (std::size_t k = 0; k < n; ++k) gwr[k] += go * xr[k];
        }
        if (gb) (*gb)[o] += go;
      }
    }
  });
}

Var relu(Tape& tape, Var x) {
  Tensor out = tape.value(x);
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return tape.record(std::move(out), {x}, [=](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x);
    Tensor& gx = t.grad_accumulator(x);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      if (xv[i] > 0.0) gx[i] += g[i];
    }
  });
}

Var softmax(Tape& tape, Var x) {
  const Tensor& xv = tape.value(x);
  require(xv.rank() >= 1 && xv.cols() >= 1, "softmax: empty input");
  Tensor out(xv.shape());
  const std::size_t rows = xv.rows(), c = xv.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    auto in = xv.row(r);
    auto y = out.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (y[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < c; ++j) y[j] /= z;
  }
  const Var self = tape.next();
  return tape.record(std::move(out), {x}, [=](Tape& t, const Tensor& g) {
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad_accumulator(x);
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += g[r * c + j] * y[r * c + j];
      for (std::size_t j = 0; j < c; ++j) gx[r * c + j] += y[r * c + j] * (g[r * c + j] - dot);
    }
  });
}

namespace {

Pooled pool_segments(Tape& tape, Var h, std::span<const std::size_t> offsets, bool as_vector) {
  const Tensor& hv = tape.value(h);
  require(hv.rank() == 2, "max_over_time: expected a matrix, got " + shape_string(hv.shape()));
  require(offsets.size() >= 2 && offsets.front() == 0 && offsets.back() == hv.dim(0),
          "max_over_time: segment offsets do not cover " + shape_string(hv.shape()));
  const std::size_t segments = offsets.size() - 1, width = hv.dim(1);
  Tensor out = as_vector ? Tensor({width}) : Tensor({segments, width});
  std::vector<std::size_t> argmax(segments * width);
  for (std::size_t s = 0; s < segments; ++s) {
    if (offsets[s + 1] <= offsets[s]) {
      throw std::invalid_argument("max_over_time: empty sequence");
    }
    for (std::size_t j = 0; j < width; ++j) {
      std::size_t best = offsets[s];
      for (std::size_t r = offsets[s] + 1; r < offsets[s + 1]; ++r) {
        if (hv.at(r, j) > hv.at(best, j)) best = r;
      }
      argmax[s * width + j] = best;
      out[s * width + j] = hv.at(best, j);
    }
  }
  Var pooled = tape.record(std::move(out), {h}, [=](Tape& t, const Tensor& g) {
    Tensor& gh = t.grad_accumulator(h);
    for (std::size_t k = 0; k < argmax.size(); ++k) {
      gh.at(argmax[k], k % width) += g[k];
    }
  });
  return Pooled{pooled, std::move(argmax)};
}

}  // namespace

Pooled max_over_time(Tape& tape, Var h) {
  const Tensor& hv = tape.value(h);
  if (hv.rank() != 2 || hv.dim(0) == 0) {
    throw std::invalid_argument("max_over_time: empty input " + shape_string(hv.shape()));
  }
  const std::size_t offsets[] = {0, hv.dim(0)};
  return pool_segments(tape, h, offsets, true);
}

Pooled segment_max_over_time(Tape& tape, Var h, std::span<const std::size_t> offsets) {
  return pool_segments(tape, h, offsets, false);
}

Var dropout(Tape& tape, Var x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor out = tape.value(x);
  std::vector<double> mask(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    mask[i] = rng.bernoulli(rate) ? 0.0 : keep_scale;
    out[i] *= mask[i];
  }
  return tape.record(std::move(out), {x}, [x, mask = std::move(mask)](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_accumulator(x);
    for (std::size_t i = 0; i < mask.size(); ++i) gx[i] += g[i] * mask[i];
  });
}

Var l1_normalize(Tape& tape, Var v, double eps) {
  const Tensor& vv = tape.value(v);
  require(vv.rank() == 1 && vv.size() > 0, "l1_normalize: expected a non-empty vector");
  if (eps < 0.0) throw std::invalid_argument("l1_normalize: eps must be nonnegative");
  double total = 0.0;
  for (double e : vv.values()) {
    if (e < 0.0) {
      throw std::invalid_argument("l1_normalize: negative entry " + std::to_string(e) +
                                  " (input is not a ReLU output)");
    }
    total += e + eps;
  }
  if (!(total > 0.0)) throw NumericalError("l1_normalize: zero mass with eps = 0");
  Tensor out(vv.shape());
  for (std::size_t i = 0; i < vv.size(); ++i) out[i] = (vv[i] + eps) / total;
  const Var self = tape.next();
  return tape.record(std::move(out), {v}, [=](Tape& t, const Tensor& g) {
    const Tensor& p = t.value(self);
    double dot = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) dot += g[i] * p[i];
    Tensor& gv = t.grad_accumulator(v);
    for (std::size_t i = 0; i < p.size(); ++i) gv[i] += (g[i] - dot) / total;
  });
}

Var mean_rows(Tape& tape, Var x) {
  const Tensor& xv = tape.value(x);
  require(xv.rank() == 2 && xv.dim(0) > 0, "mean_rows: expected a non-empty matrix");
  const std::size_t rows = xv.dim(0), cols = xv.dim(1);
  Tensor out({cols});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c] += xv.at(r, c);
  }
  for (double& e : out.values()) e /= static_cast<double>(rows);
  return tape.record(std::move(out), {x}, [=](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_accumulator(x);
    const double inv = 1.0 / static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) gx.at(r, c) += g[c] * inv;
    }
  });
}

Var sum(Tape& tape, Var x) {
  double total = 0.0;
  for (double e : tape.value(x).values()) total += e;
  return tape.record(Tensor::scalar(total), {x}, [=](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_accumulator(x);
    for (double& e : gx.values()) e += g[0];
  });
}

Var sum_squares(Tape& tape, Var x) {
  double total = 0.0;
  for (double e : tape.value(x).values()) total += e * e;
  return tape.record(Tensor::scalar(total), {x}, [=](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x);
    Tensor& gx = t.grad_accumulator(x);
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += 2.0 * xv[i] * g[0];
  });
}

Var linear_combination(Tape& tape, std::span<const Var> terms, std::span<const double> weights) {
  require(terms.size() == weights.size() && !terms.empty(),
          "linear_combination: need one weight per term");
  double total = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k) total += weights[k] * tape.value(terms[k]).item();
  std::vector<Var> ts(terms.begin(), terms.end());
  std::vector<double> ws(weights.begin(), weights.end());
  return tape.record(Tensor::scalar(total), terms, [ts, ws](Tape& t, const Tensor& g) {
    for (std::size_t k = 0; k < ts.size(); ++k) {
      if (t.requires_grad(ts[k])) t.grad_accumulator(ts[k])[0] += ws[k] * g[0];
    }
  });
}

Windows gather_windows(Tape& tape, Var embedding,
                       std::span<const std::vector<std::int32_t>> sequences,
                       std::size_t window) {
  const Tensor& ev = tape.value(embedding);
  require(ev.rank() == 2 && window > 0, "gather_windows: expected an embedding matrix");
  const std::size_t vocab = ev.dim(0), d = ev.dim(1), width = window * d;
  std::vector<std::size_t> offsets{0};
  offsets.reserve(sequences.size() + 1);
  for (const auto& seq : sequences) {
    if (seq.size() < window) {
      throw std::invalid_argument("gather_windows: sequence of length " +
                                  std::to_string(seq.size()) + " is shorter than window " +
                                  std::to_string(window));
    }
    offsets.push_back(offsets.back() + seq.size() - window + 1);
  }
  std::vector<std::int32_t> ids;
  ids.reserve(offsets.back() * window);
  for (const auto& seq : sequences) {
    for (std::size_t start = 0; start + window <= seq.size(); ++start) {
      for (std::size_t k = 0; k < window; ++k) {
        const std::int32_t id = seq[start + k];
        if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
          throw std::out_of_range("token index " + std::to_string(id) +
                                  " outside vocabulary of size " + std::to_string(vocab));
        }
        ids.push_back(id);
      }
    }
  }
  Tensor out({offsets.back(), width});
  for (std::size_t slot = 0; slot < ids.size(); ++slot) {
    std::copy_n(ev.data() + static_cast<std::size_t>(ids[slot]) * d, d, out.data() + slot * d);
  }
  Var rows = tape.record(std::move(out), {embedding},
                         [embedding, d, ids = std::move(ids)](Tape& t, const Tensor& g) {
                           Tensor& ge = t.grad_accumulator(embedding);
                           for (std::size_t slot = 0; slot < ids.size(); ++slot) {
                             double* dst = ge.data() + static_cast<std::size_t>(ids[slot]) * d;
                             const double* src = g.data() + slot * d;
                             for (std::size_t k = 0; k < d; ++k) dst[k] += src[k];
                           }
                         });
  return Windows{rows, std::move(offsets)};
}

}  // namespace das::ops
