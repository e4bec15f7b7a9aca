#include "minkunext/train/tsap.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

namespace minkunext {

void LossConfig::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (batch_size < 2) throw std::invalid_argument("batch size must be >= 2");
}

double smooth_rank_sigmoid(double x, double tau) noexcept {
  const double z = x / tau;
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

template <typename T>
TsapResult<T> tsap_loss(const Matrix<T>& x, const PairLabels& labels, const LossConfig& cfg) {
  cfg.validate();
  const std::size_t b = x.rows();
  const std::size_t dim = x.cols();
  if (labels.size() != b) throw std::invalid_argument("label count does not match batch rows");

  // Pairwise Euclidean distances, in double.
  std::vector<double> dist(b * b, 0.0);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = i + 1; j < b; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        const double diff = static_cast<double>(x(i, c)) - static_cast<double>(x(j, c));
        s += diff * diff;
      }
      dist[i * b + j] = dist[j * b + i] = std::sqrt(s);
    }

  TsapResult<T> result;
  std::vector<double> grad_dist(b * b, 0.0);  // d(sum of 1 - AP_q) / d(dist[q, j])
  double total = 0.0;
  const double tau = cfg.tau;
  auto dsig = [tau](double v) {
    const double g = smooth_rank_sigmoid(v, tau);
    return g * (1.0 - g) / tau;
  };

  for (std::size_t q = 0; q < b; ++q) {
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (std::size_t j = 0; j < b; ++j) {
      if (j == q) continue;
      if (labels(q, j) == Relation::positive) pos.push_back(j);
      else if (labels(q, j) == Relation::negative) neg.push_back(j);
    }
    if (pos.empty()) continue;
    const double* dq = dist.data() + q * b;
    std::stable_sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t c) { return dq[a] < dq[c]; });
    if (pos.size() > static_cast<std::size_t>(cfg.k)) pos.resize(static_cast<std::size_t>(cfg.k));
    std::vector<std::size_t> omega = pos;
    omega.insert(omega.end(), neg.begin(), neg.end());

    const double inv_p = 1.0 / static_cast<double>(pos.size());
    double ap = 0.0;
    double* gq = grad_dist.data() + q * b;
    for (std::size_t i : pos) {
      double num = 1.0;
      double den = 1.0;
      for (std::size_t j : pos)
        if (j != i) num += smooth_rank_sigmoid(dq[i] - dq[j], tau);
      for (std::size_t j : omega)
        if (j != i) den += smooth_rank_sigmoid(dq[i] - dq[j], tau);
      ap += inv_p * num / den;

      // loss term -num/den * inv_p; gradient through every d(q, j) it touches.
      const double a = -inv_p / den;
      const double c = inv_p * num / (den * den);
      for (std::size_t j : pos) {
        if (j == i) continue;
        const double g = dsig(dq[i] - dq[j]);
        gq[i] += a * g;
        gq[j] -= a * g;
      }
      for (std::size_t j : omega) {
        if (j == i) continue;
        const double g = dsig(dq[i] - dq[j]);
        gq[i] += c * g;
        gq[j] -= c * g;
      }
    }
    total += 1.0 - ap;
    ++result.valid_queries;
  }
  if (result.valid_queries == 0) throw std::invalid_argument("no valid query");

  const double scale = 1.0 / static_cast<double>(result.valid_queries);
  result.loss = total * scale;
  result.grad = Matrix<T>(b, dim);
  std::vector<double> acc(b * dim, 0.0);
  for (std::size_t q = 0; q < b; ++q)
    for (std::size_t j = 0; j < b; ++j) {
      const double g = grad_dist[q * b + j];
      const double d = dist[q * b + j];
      if (g == 0.0 || d == 0.0) continue;
      const double f = scale * g / d;
      for (std::size_t c = 0; c < dim; ++c) {
        const double diff = (static_cast<double>(x(q, c)) - static_cast<double>(x(j, c))) * f;
        acc[q * dim + c] += diff;
        acc[j * dim + c] -= diff;
      }
    }
  std::transform(acc.begin(), acc.end(), result.grad.data(), [](double v) { return static_cast<T>(v); });
  return result;
}

namespace ad {

template <typename T>
VarId tsap_loss(Tape<T>& tape, VarId descriptors, const PairLabels& labels, const LossConfig& cfg) {
  auto r = minkunext::tsap_loss(tape.value(descriptors), labels, cfg);
  auto grad = std::make_shared<const Matrix<T>>(std::move(r.grad));
  return tape.record("tsap_loss", Matrix<T>(1, 1, static_cast<T>(r.loss)), {descriptors},
                     [grad](const typename Tape<T>::BackwardArgs& a) {
                       if (!a.grads[0]) return;
                       const T g = a.upstream(0, 0);
                       auto* dst = a.grads[0]->data();
                       for (std::size_t i = 0; i < grad->size(); ++i) dst[i] += g * grad->data()[i];
                     });
}

template VarId tsap_loss<float>(Tape<float>&, VarId, const PairLabels&, const LossConfig&);
template VarId tsap_loss<double>(Tape<double>&, VarId, const PairLabels&, const LossConfig&);

}  // namespace ad

template TsapResult<float> tsap_loss<float>(const Matrix<float>&, const PairLabels&, const LossConfig&);
template TsapResult<double> tsap_loss<double>(const Matrix<double>&, const PairLabels&, const LossConfig&);

}  // namespace minkunext
