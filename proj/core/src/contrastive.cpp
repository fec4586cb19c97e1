#include "elicit/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "elicit/error.hpp"

namespace elicit {
namespace {

void check_batch(std::size_t questions, std::size_t comments, double tau) {
  if (questions == 0) throw ValidationError("contrastive batch is empty");
  if (questions != comments) {
    throw ValidationError("contrastive batch has " + std::to_string(questions) +
                          " questions but " + std::to_string(comments) + " comments");
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("tau must be positive and finite");
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// Row-wise log-softmax of `logits` (B x B) evaluated at the diagonal, with the
// max shift and log1p for the off-max terms. Fills `probs` with the softmax.
double info_nce_from_logits(std::span<const double> logits, std::size_t batch,
                            std::vector<double>* probs) {
  double total = 0.0;
  if (probs) probs->assign(batch * batch, 0.0);
  for (std::size_t i = 0; i < batch; ++i) {
    const auto row = logits.subspan(i * batch, batch);
    const auto argmax =
        static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    const double m = row[argmax];
    double rest = 0.0;
    for (std::size_t j = 0; j < batch; ++j) {
      if (j != argmax) rest += std::exp(row[j] - m);
    }
    const double lse = m + std::log1p(rest);
    total += lse - row[i];
    if (probs) {
      for (std::size_t j = 0; j < batch; ++j) (*probs)[i * batch + j] = std::exp(row[j] - lse);
    }
  }
  return total / static_cast<double>(batch);
}

struct EncodedText {
  std::vector<double> unit;  // normalized pooled vector (e1 when constant)
  double norm = 0.0;         // norm of the pooled vector
  bool constant = true;      // no tokens: no dependence on the weights
};

EncodedText encode_for_gradient(const EncoderModel& model, const TokenBag& bag) {
  EncodedText out;
  if (!bag.empty()) {
    auto pooled = model.pooled(bag);
    const double norm = std::sqrt(dot(pooled, pooled));
    if (norm > 0.0) {
      for (double& v : pooled) v /= norm;
      out.unit = std::move(pooled);
      out.norm = norm;
      out.constant = false;
      return out;
    }
  }
  out.unit.assign(model.dim(), 0.0);
  out.unit[0] = 1.0;
  return out;
}

}  // namespace

double info_nce_loss(std::span<const Embedding> questions, std::span<const Embedding> comments,
                     double tau) {
  check_batch(questions.size(), comments.size(), tau);
  const std::size_t batch = questions.size();
  const std::size_t dim = questions.front().dim();
  auto check = [&](const Embedding& e) {
    if (e.dim() != dim) throw ValidationError("info_nce_loss: embeddings differ in dimension");
    for (double v : e.values()) {
      if (!std::isfinite(v)) throw ValidationError("info_nce_loss: non-finite embedding value");
    }
  };
  for (const auto& e : questions) check(e);
  for (const auto& e : comments) check(e);

  std::vector<double> logits(batch * batch);
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t j = 0; j < batch; ++j) {
      logits[i * batch + j] = dot(questions[i].values(), comments[j].values()) / tau;
    }
  }
  return info_nce_from_logits(logits, batch, nullptr);
}

double SparseGradient::at(std::uint32_t bucket, std::size_t k) const {
  const auto it = std::lower_bound(buckets.begin(), buckets.end(), bucket);
  if (it == buckets.end() || *it != bucket) return 0.0;
  return row(static_cast<std::size_t>(it - buckets.begin()))[k];
}

double SparseGradient::squared_norm() const noexcept {
  return std::inner_product(values.begin(), values.end(), values.begin(), 0.0);
}

LossAndGradient loss_gradients(std::span<const TokenBag> questions,
                               std::span<const TokenBag> comments, const EncoderModel& model,
                               double tau) {
  check_batch(questions.size(), comments.size(), tau);
  const std::size_t batch = questions.size();
  const std::size_t dim = model.dim();

  std::vector<EncodedText> q(batch), c(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    q[i] = encode_for_gradient(model, questions[i]);
    c[i] = encode_for_gradient(model, comments[i]);
  }

  std::vector<double> logits(batch * batch);
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t j = 0; j < batch; ++j) {
      logits[i * batch + j] = dot(q[i].unit, c[j].unit) / tau;
    }
  }
  std::vector<double> probs;
  LossAndGradient out;
  out.loss = info_nce_from_logits(logits, batch, &probs);

  // d loss / d sim_ij = (P_ij - [i == j]) / (B tau)
  const double scale = 1.0 / (static_cast<double>(batch) * tau);
  std::vector<double> coeff(batch * batch);
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t j = 0; j < batch; ++j) {
      coeff[i * batch + j] = (probs[i * batch + j] - (i == j ? 1.0 : 0.0)) * scale;
    }
  }

  std::unordered_map<std::uint32_t, std::size_t> slot;
  std::vector<std::uint32_t> order;
  std::vector<double> rows;

  // Backpropagates g = d loss / d unit through unit = pooled / |pooled| and
  // pooled = sum_t count_t * W[t].
  auto backprop = [&](const EncodedText& enc, const TokenBag& bag, std::vector<double>& g) {
    if (enc.constant) return;
    const double radial = dot(g, enc.unit);
    for (std::size_t k = 0; k < dim; ++k) g[k] = (g[k] - radial * enc.unit[k]) / enc.norm;
    for (const auto& [bucket, count] : bag.counts) {
      auto [it, inserted] = slot.try_emplace(bucket, order.size());
      if (inserted) {
        order.push_back(bucket);
        rows.resize(rows.size() + dim, 0.0);
      }
      double* r = rows.data() + it->second * dim;
      const double weight = static_cast<double>(count);
      for (std::size_t k = 0; k < dim; ++k) r[k] += weight * g[k];
    }
  };

  std::vector<double> g(dim);
  for (std::size_t i = 0; i < batch; ++i) {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t j = 0; j < batch; ++j) {
      const double a = coeff[i * batch + j];
      for (std::size_t k = 0; k < dim; ++k) g[k] += a * c[j].unit[k];
    }
    backprop(q[i], questions[i], g);
  }
  for (std::size_t j = 0; j < batch; ++j) {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < batch; ++i) {
      const double a = coeff[i * batch + j];
      for (std::size_t k = 0; k < dim; ++k) g[k] += a * q[i].unit[k];
    }
    backprop(c[j], comments[j], g);
  }

  std::vector<std::size_t> perm(order.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](auto a, auto b) { return order[a] < order[b]; });
  out.gradient.dim = dim;
  out.gradient.buckets.reserve(order.size());
  out.gradient.values.reserve(rows.size());
  for (auto p : perm) {
    out.gradient.buckets.push_back(order[p]);
    out.gradient.values.insert(out.gradient.values.end(), rows.begin() + p * dim,
                               rows.begin() + (p + 1) * dim);
  }
  return out;
}

LossAndGradient loss_gradients(std::span<const std::string> question_texts,
                               std::span<const std::string> comment_texts,
                               const EncoderModel& model, double tau) {
  std::vector<TokenBag> q, c;
  for (const auto& t : question_texts) q.push_back(TokenBag::of(t, model.buckets()));
  for (const auto& t : comment_texts) c.push_back(TokenBag::of(t, model.buckets()));
  return loss_gradients(q, c, model, tau);
}

}  // namespace elicit
