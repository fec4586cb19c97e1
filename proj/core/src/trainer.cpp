#include "elicit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "elicit/contrastive.hpp"
#include "elicit/error.hpp"
#include "elicit/rng.hpp"

namespace elicit {

void TrainConfig::validate() const {
  if (batch_size < 2) throw ValidationError("batch_size must be at least 2");
  if (epochs == 0) throw ValidationError("epochs must be positive");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ValidationError("lr must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("tau must be positive");
  if (weight_decay < 0.0) throw ValidationError("weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ValidationError("betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");
  if (buckets == 0 || dim == 0) throw ValidationError("buckets and dim must be positive");
}

std::vector<std::pair<std::size_t, std::size_t>> plan_batches(std::size_t n,
                                                              std::size_t batch_size) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    if (end - start >= 2) out.emplace_back(start, end);
  }
  return out;
}

namespace {

// AdamW state over the rows the corpus touches. Rows outside that set keep
// their initial values.
class SparseAdamW {
 public:
  SparseAdamW(std::vector<std::uint32_t> touched, std::size_t dim, const TrainConfig& config)
      : touched_(std::move(touched)),
        dim_(dim),
        config_(config),
        m_(touched_.size() * dim, 0.0),
        v_(touched_.size() * dim, 0.0) {
    for (std::size_t i = 0; i < touched_.size(); ++i) slot_.emplace(touched_[i], i);
  }

  void step(EncoderModel& model, const SparseGradient& grad, double lr) {
    ++t_;
    grad_rows_.assign(touched_.size() * dim_, 0.0);
    for (std::size_t r = 0; r < grad.buckets.size(); ++r) {
      const auto idx = slot_.at(grad.buckets[r]);
      std::copy_n(grad.row(r).begin(), dim_, grad_rows_.begin() + idx * dim_);
    }
    const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < touched_.size(); ++i) {
      auto w = model.mutable_row(touched_[i]);
      for (std::size_t k = 0; k < dim_; ++k) {
        const std::size_t j = i * dim_ + k;
        const double g = grad_rows_[j];
        m_[j] = config_.beta1 * m_[j] + (1.0 - config_.beta1) * g;
        v_[j] = config_.beta2 * v_[j] + (1.0 - config_.beta2) * g * g;
        const double m_hat = m_[j] / bias1;
        const double v_hat = v_[j] / bias2;
        w[k] -= lr * config_.weight_decay * w[k];
        w[k] -= lr * m_hat / (std::sqrt(v_hat) + config_.eps);
      }
    }
  }

 private:
  std::vector<std::uint32_t> touched_;
  std::unordered_map<std::uint32_t, std::size_t> slot_;
  std::size_t dim_;
  TrainConfig config_;
  std::vector<double> m_, v_, grad_rows_;
  std::size_t t_ = 0;
};

}  // namespace

TrainResult train(std::span<const QAPair> pairs, const TrainConfig& config) {
  config.validate();
  return train(pairs, EncoderModel::initialize(config.buckets, config.dim, config.init_seed),
               config);
}

TrainResult train(std::span<const QAPair> pairs, EncoderModel initial, const TrainConfig& config) {
  config.validate();
  if (pairs.size() < 2) {
    throw ValidationError("training needs at least 2 QA pairs, got " + std::to_string(pairs.size()));
  }

  const auto buckets = initial.buckets();
  std::vector<TokenBag> questions, answers;
  std::vector<std::uint32_t> touched;
  for (const auto& p : pairs) {
    questions.push_back(TokenBag::of(p.question, buckets));
    answers.push_back(TokenBag::of(p.answer, buckets));
    for (const auto& [b, n] : questions.back().counts) touched.push_back(b);
    for (const auto& [b, n] : answers.back().counts) touched.push_back(b);
  }
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

  const auto batches = plan_batches(pairs.size(), config.batch_size);
  const std::size_t total_steps = batches.size() * config.epochs;
  SparseAdamW optimizer(std::move(touched), initial.dim(), config);

  TrainResult result{std::move(initial), {}};
  Rng rng(config.shuffle_seed);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<TokenBag> batch_q, batch_c;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (const auto& [start, end] : batches) {
      batch_q.clear();
      batch_c.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch_q.push_back(questions[order[i]]);
        batch_c.push_back(answers[order[i]]);
      }
      const auto lg = loss_gradients(batch_q, batch_c, result.model, config.tau);
      if (!std::isfinite(lg.loss)) throw InvariantError("training loss became non-finite");
      const double lr = config.lr * (1.0 - static_cast<double>(step) /
                                               static_cast<double>(total_steps));
      optimizer.step(result.model, lg.gradient, lr);
      loss_sum += lg.loss;
      ++step;
    }
    result.epochs.push_back(
        {epoch + 1, batches.empty() ? 0.0 : loss_sum / static_cast<double>(batches.size()),
         batches.size()});
  }
  return result;
}

}  // namespace elicit
