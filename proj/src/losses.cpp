#include "das/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "das/error.hpp"
#include "das/ops.hpp"

namespace das {

namespace {

void require_batch(const Tensor& t, const char* what) {
  if (t.rank() != 2 || t.dim(0) == 0) {
    throw std::invalid_argument(std::string(what) + ": empty batch " + shape_string(t.shape()));
  }
}

void require_same(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

void require_one_hot(const Tensor& z) {
  for (std::size_t r = 0; r < z.rows(); ++r) {
    int ones = 0;
    for (double v : z.row(r)) {
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        ones = -1;
        break;
      }
    }
    if (ones != 1) {
      throw std::invalid_argument("bootstrap target row " + std::to_string(r) + " is not one-hot");
    }
  }
}

double clamped_log(double p) { return std::log(std::clamp(p, kProbabilityFloor, 1.0)); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

double log_sum_exp(std::span<const double> z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - mx);
  return mx + std::log(s);
}

}  // namespace

std::string to_string(DistanceLoss kind) {
  return kind == DistanceLoss::kMmdRbf ? "mmd-rbf" : "symmetric-kl-means";
}

DistanceLoss parse_distance_loss(const std::string& name) {
  if (name == "symmetric-kl-means") return DistanceLoss::kSymmetricKlMeans;
  if (name == "mmd-rbf") return DistanceLoss::kMmdRbf;
  throw ConfigError("unknown distance_loss '" + name + "'");
}

double source_cross_entropy(const Tensor& y_true, const Tensor& y_pred) {
  require_batch(y_pred, "source_cross_entropy");
  require_same(y_true, y_pred, "source_cross_entropy");
  double total = 0.0;
  for (std::size_t i = 0; i < y_pred.size(); ++i) {
    if (y_true[i] != 0.0) total -= y_true[i] * clamped_log(y_pred[i]);
  }
  return total / static_cast<double>(y_pred.dim(0));
}

double symmetric_kl(const Tensor& p, const Tensor& q) {
  require_same(p, q, "symmetric_kl");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0) || !(q[i] > 0.0)) {
      throw std::invalid_argument("symmetric_kl: non-positive entry at index " +
                                  std::to_string(i));
    }
    total += (p[i] - q[i]) * (std::log(p[i]) - std::log(q[i]));
  }
  return total;
}

double feature_adaptation_loss(const Tensor& xi_source, const Tensor& xi_target, double eps) {
  Tape tape;
  const Var j = ops::feature_adaptation(tape, tape.constant(xi_source),
                                        tape.constant(xi_target), eps);
  return tape.value(j).item();
}

double entropy_min_loss(const Tensor& y_pred) {
  require_batch(y_pred, "entropy_min_loss");
  double total = 0.0;
  for (double p : y_pred.values()) total -= p * clamped_log(p);
  return total / static_cast<double>(y_pred.dim(0));
}

double bootstrap_loss(const Tensor& z_tilde, const Tensor& y_pred) {
  require_same(z_tilde, y_pred, "bootstrap_loss");
  require_one_hot(z_tilde);
  return source_cross_entropy(z_tilde, y_pred);
}

double mmd_rbf(const Tensor& xi_source, const Tensor& xi_target, double sigma) {
  Tape tape;
  return tape.value(ops::mmd_rbf(tape, tape.constant(xi_source), tape.constant(xi_target), sigma))
      .item();
}

double median_heuristic_sigma(const Tensor& xi_source, const Tensor& xi_target) {
  std::vector<std::span<const double>> rows;
  for (std::size_t r = 0; r < xi_source.rows(); ++r) rows.push_back(xi_source.row(r));
  for (std::size_t r = 0; r < xi_target.rows(); ++r) rows.push_back(xi_target.row(r));
  std::vector<double> dists;
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = a + 1; b < rows.size(); ++b) {
      dists.push_back(std::sqrt(squared_distance(rows[a], rows[b])));
    }
  }
  if (dists.empty()) return 1.0;
  const auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  double median = *mid;
  if (dists.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(dists.begin(), mid));
  }
  return median > 0.0 ? median : 1.0;
}

double rampup_weight(int t, int t_max, double lambda3) {
  if (t_max < 1 || t < 1 || t > t_max) {
    throw std::out_of_range("rampup_weight: epoch " + std::to_string(t) + " outside [1, " +
                            std::to_string(t_max) + "]");
  }
  const double gap = 1.0 - static_cast<double>(t) / static_cast<double>(t_max);
  return std::exp(-5.0 * gap * gap) * lambda3;
}

LossBreakdown total_loss(double L, double J, double Gamma, double Omega,
                         const LossWeights& weights, double w_t) {
  const std::pair<const char*, double> parts[] = {
      {"L", L}, {"J", J}, {"Gamma", Gamma}, {"Omega", Omega}, {"w_t", w_t}};
  for (const auto& [name, v] : parts) {
    if (!std::isfinite(v)) {
      throw NumericalError(std::string("loss component ") + name + " is not finite");
    }
  }
  LossBreakdown out{L, J, Gamma, Omega, w_t, 0.0};
  out.total = L + weights.lambda1 * J + weights.lambda2 * Gamma + w_t * Omega;
  return out;
}

namespace ops {

Var softmax_cross_entropy(Tape& tape, Var logits, const Tensor& targets) {
  const Tensor& z = tape.value(logits);
  require_batch(z, "softmax_cross_entropy");
  require_same(z, targets, "softmax_cross_entropy");
  const std::size_t batch = z.dim(0), classes = z.dim(1);
  double total = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const double lse = log_sum_exp(z.row(i));
    for (std::size_t j = 0; j < classes; ++j) {
      const double y = targets.at(i, j);
      if (y != 0.0) total -= y * (z.at(i, j) - lse);
    }
  }
  const double inv = 1.0 / static_cast<double>(batch);
  return tape.record(Tensor::scalar(total * inv), {logits},
                     [=](Tape& t, const Tensor& g) {
                       const Tensor& z = t.value(logits);
                       Tensor& gz = t.grad_accumulator(logits);
                       for (std::size_t i = 0; i < batch; ++i) {
                         const double lse = log_sum_exp(z.row(i));
                         double mass = 0.0;
                         for (std::size_t j = 0; j < classes; ++j) mass += targets.at(i, j);
                         for (std::size_t j = 0; j < classes; ++j) {
                           const double p = std::exp(z.at(i, j) - lse);
                           gz.at(i, j) += g[0] * inv * (p * mass - targets.at(i, j));
                         }
                       }
                     });
}

Var bootstrap_loss(Tape& tape, Var logits, const Tensor& z_tilde) {
  require_one_hot(z_tilde);
  return softmax_cross_entropy(tape, logits, z_tilde);
}

Var softmax_entropy(Tape& tape, Var logits) {
  const Tensor& z = tape.value(logits);
  require_batch(z, "softmax_entropy");
  const std::size_t batch = z.dim(0), classes = z.dim(1);
  double total = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const double lse = log_sum_exp(z.row(i));
    for (std::size_t j = 0; j < classes; ++j) {
      const double logp = z.at(i, j) - lse;
      total -= std::exp(logp) * logp;
    }
  }
  const double inv = 1.0 / static_cast<double>(batch);
  return tape.record(Tensor::scalar(total * inv), {logits}, [=](Tape& t, const Tensor& g) {
    const Tensor& z = t.value(logits);
    Tensor& gz = t.grad_accumulator(logits);
    std::vector<double> logp(classes);
    for (std::size_t i = 0; i < batch; ++i) {
      const double lse = log_sum_exp(z.row(i));
      double entropy = 0.0;
      for (std::size_t j = 0; j < classes; ++j) {
        logp[j] = z.at(i, j) - lse;
        entropy -= std::exp(logp[j]) * logp[j];
      }
      // dH/dz_j = −p_j·(log p_j + H)
      for (std::size_t j = 0; j < classes; ++j) {
        gz.at(i, j) -= g[0] * inv * std::exp(logp[j]) * (logp[j] + entropy);
      }
    }
  });
}

Var symmetric_kl(Tape& tape, Var p, Var q) {
  const double value = das::symmetric_kl(tape.value(p), tape.value(q));
  return tape.record(Tensor::scalar(value), {p, q}, [=](Tape& t, const Tensor& g) {
    const Tensor& pv = t.value(p);
    const Tensor& qv = t.value(q);
    const bool want_p = t.requires_grad(p), want_q = t.requires_grad(q);
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double log_ratio = std::log(pv[i]) - std::log(qv[i]);
      if (want_p) t.grad_accumulator(p)[i] += g[0] * (log_ratio + 1.0 - qv[i] / pv[i]);
      if (want_q) t.grad_accumulator(q)[i] += g[0] * (-log_ratio + 1.0 - pv[i] / qv[i]);
    }
  });
}

Var feature_adaptation(Tape& tape, Var xi_source, Var xi_target, double eps) {
  require_batch(tape.value(xi_source), "feature_adaptation");
  require_batch(tape.value(xi_target), "feature_adaptation");
  const Var g_s = das::ops::l1_normalize(tape, das::ops::mean_rows(tape, xi_source), eps);
  const Var g_t = das::ops::l1_normalize(tape, das::ops::mean_rows(tape, xi_target), eps);
  return symmetric_kl(tape, g_s, g_t);
}

Var mmd_rbf(Tape& tape, Var xi_source, Var xi_target, double sigma) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("mmd_rbf: sigma must be positive, got " + std::to_string(sigma));
  }
  const Tensor& s = tape.value(xi_source);
  const Tensor& t = tape.value(xi_target);
  require_batch(s, "mmd_rbf");
  require_batch(t, "mmd_rbf");
  if (s.dim(1) != t.dim(1)) throw ShapeError("mmd_rbf: feature widths differ");
  const std::size_t m = s.dim(0), n = t.dim(0);
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  auto kernel = [&](std::span<const double> a, std::span<const double> b) {
    return std::exp(-squared_distance(a, b) * inv_two_var);
  };
  double ss = 0.0, tt = 0.0, st = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) ss += kernel(s.row(a), s.row(b));
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) tt += kernel(t.row(a), t.row(b));
  }
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < n; ++b) st += kernel(s.row(a), t.row(b));
  }
  const double dm = static_cast<double>(m), dn = static_cast<double>(n);
  const double value = ss / (dm * dm) + tt / (dn * dn) - 2.0 * st / (dm * dn);

  return tape.record(Tensor::scalar(value), {xi_source, xi_target}, [=](Tape& tp,
                                                                         const Tensor& g) {
    const Tensor& s = tp.value(xi_source);
    const Tensor& t = tp.value(xi_target);
    const std::size_t width = s.dim(1);
    const double inv_var = 1.0 / (sigma * sigma);
    // d k(x, y) / dx = −k(x, y)·(x − y) / σ²; each (x, y) pair moves both x and y.
    auto pair_grad = [&](const Tensor& xa, std::size_t a, const Tensor& xb, std::size_t b,
                         double coeff, Tensor* ga, Tensor* gb) {
      const double k = std::exp(-squared_distance(xa.row(a), xb.row(b)) * inv_two_var);
      const double scale = coeff * k * inv_var;
      for (std::size_t c = 0; c < width; ++c) {
        const double diff = xa.at(a, c) - xb.at(b, c);
        if (ga) ga->at(a, c) -= scale * diff;
        if (gb) gb->at(b, c) += scale * diff;
      }
    };
    Tensor* gs = tp.requires_grad(xi_source) ? &tp.grad_accumulator(xi_source) : nullptr;
    Tensor* gt = tp.requires_grad(xi_target) ? &tp.grad_accumulator(xi_target) : nullptr;
    const double c_ss = g[0] / (dm * dm), c_tt = g[0] / (dn * dn), c_st = -2.0 * g[0] / (dm * dn);
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) pair_grad(s, a, s, b, c_ss, gs, gs);
    }
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) pair_grad(t, a, t, b, c_tt, gt, gt);
    }
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < n; ++b) pair_grad(s, a, t, b, c_st, gs, gt);
    }
  });
}

Var distance_loss(Tape& tape, DistanceLoss kind, Var xi_source, Var xi_target) {
  if (kind == DistanceLoss::kMmdRbf) {
    const double sigma = median_heuristic_sigma(tape.value(xi_source), tape.value(xi_target));
    return mmd_rbf(tape, xi_source, xi_target, sigma);
  }
  return feature_adaptation(tape, xi_source, xi_target);
}

}  // namespace ops

}  // namespace das
