#include "gait/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "gait/errors.hpp"

namespace gait {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Absolute lower bound on the variance floor so degenerate (constant)
// training data still yields a proper Gaussian.
constexpr double kMinVarianceFloor = 1e-10;

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double hi = std::max(a, b);
  return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
}

// Largest-remainder split of `total` into `parts` sizes; all quotas are equal
// so the first (total % parts) parts receive the extra frame.
std::vector<int> uniform_split(int total, int parts) {
  std::vector<int> sizes(parts, total / parts);
  for (int i = 0; i < total % parts; ++i) sizes[i] += 1;
  return sizes;
}

int pass_count(const HmmConfig& config, int step_count) {
  return config.cyclic ? step_count : 1;
}

std::vector<double> variance_floor(const std::vector<FeatureSequence>& sequences,
                                   double factor) {
  const int d = sequences[0].dim;
  std::vector<double> sum(d, 0.0), sum_sq(d, 0.0);
  std::size_t count = 0;
  for (const auto& seq : sequences) {
    for (int t = 0; t < seq.num_frames(); ++t) {
      auto frame = seq.frame(t);
      for (int j = 0; j < d; ++j) {
        sum[j] += frame[j];
        sum_sq[j] += frame[j] * frame[j];
      }
    }
    count += static_cast<std::size_t>(seq.num_frames());
  }
  std::vector<double> floor(d);
  for (int j = 0; j < d; ++j) {
    double mean = sum[j] / count;
    double var = sum_sq[j] / count - mean * mean;
    floor[j] = std::max(factor * var, kMinVarianceFloor);
  }
  return floor;
}

// Per-frame diagonal-Gaussian log density for every state: T x S.
std::vector<double> emission_log_probs(const GaussianHmm& model,
                                       const FeatureSequence& seq) {
  const int s_count = model.num_states;
  const int d = model.dim;
  std::vector<double> constants(s_count);
  for (int s = 0; s < s_count; ++s) {
    auto var = model.state_variance(s);
    double acc = d * std::log(2.0 * std::numbers::pi);
    for (int j = 0; j < d; ++j) acc += std::log(var[j]);
    constants[s] = -0.5 * acc;
  }
  const int t_count = seq.num_frames();
  std::vector<double> em(static_cast<std::size_t>(t_count) * s_count);
  for (int t = 0; t < t_count; ++t) {
    auto frame = seq.frame(t);
    for (int s = 0; s < s_count; ++s) {
      auto mean = model.state_mean(s);
      auto var = model.state_variance(s);
      double quad = 0.0;
      for (int j = 0; j < d; ++j) {
        double diff = frame[j] - mean[j];
        quad += diff * diff / var[j];
      }
      em[static_cast<std::size_t>(t) * s_count + s] = constants[s] - 0.5 * quad;
    }
  }
  return em;
}

void check_training_inputs(const std::vector<FeatureSequence>& sequences,
                           const std::vector<int>& step_counts, int dim) {
  if (sequences.empty() || sequences.size() != step_counts.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "need one step count per training sequence");
  }
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    if (sequences[i].dim != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "sequence " + std::to_string(i) + " has dimension " +
                      std::to_string(sequences[i].dim) + ", expected " +
                      std::to_string(dim));
    }
    if (step_counts[i] < 1) {
      throw Error(ErrorCode::kInvalidArgument, "step counts must be >= 1");
    }
  }
}

struct Accumulators {
  std::vector<double> occupancy;    // S
  std::vector<double> first;        // S x D
  std::vector<double> second;       // S x D
  std::vector<double> trans_count;  // S x S, only allowed cells used

  Accumulators(int s_count, int d)
      : occupancy(s_count, 0.0),
        first(static_cast<std::size_t>(s_count) * d, 0.0),
        second(static_cast<std::size_t>(s_count) * d, 0.0),
        trans_count(static_cast<std::size_t>(s_count) * s_count, 0.0) {}
};

// Forward-backward over the composite chain of `copies` tied model copies;
// accumulates tied expected counts and returns the data log-likelihood.
double accumulate_composite(const GaussianHmm& model, const FeatureSequence& seq,
                            int copies, Accumulators& acc) {
  const int s_count = model.num_states;
  const int n = copies * s_count;
  const int t_count = seq.num_frames();
  const auto em = emission_log_probs(model, seq);
  auto emission = [&](int t, int x) {
    return em[static_cast<std::size_t>(t) * s_count + x % s_count];
  };
  const double a_self_last = model.log_a(s_count - 1, s_count - 1);
  const double a_wrap = model.cyclic ? model.log_a(s_count - 1, 0) : kNegInf;

  // Predecessor edges of composite state x: {source, log prob}.
  auto for_each_pred = [&](int x, auto&& fn) {
    int s = x % s_count;
    if (s > 0) {
      fn(x - 1, model.log_a(s - 1, s));
      fn(x, model.log_a(s, s));
    } else {
      fn(x, model.log_a(0, 0));
      if (x >= s_count) fn(x - 1, a_wrap);  // previous copy's last state
    }
  };
  auto for_each_succ = [&](int x, auto&& fn) {
    int s = x % s_count;
    if (s < s_count - 1) {
      fn(x, model.log_a(s, s));
      fn(x + 1, model.log_a(s, s + 1));
    } else {
      fn(x, a_self_last);
      if (x + 1 < n) fn(x + 1, a_wrap);
    }
  };

  std::vector<double> alpha(static_cast<std::size_t>(t_count) * n, kNegInf);
  alpha[0] = emission(0, 0);
  for (int t = 1; t < t_count; ++t) {
    for (int x = 0; x < n; ++x) {
      double best = kNegInf;
      for_each_pred(x, [&](int p, double log_a) {
        best = log_sum_exp(best, alpha[static_cast<std::size_t>(t - 1) * n + p] + log_a);
      });
      if (best != kNegInf) {
        alpha[static_cast<std::size_t>(t) * n + x] = best + emission(t, x);
      }
    }
  }
  const double total = alpha[static_cast<std::size_t>(t_count - 1) * n + (n - 1)];
  if (total == kNegInf) {
    throw Error(ErrorCode::kNoValidPath,
                "sequence of " + std::to_string(t_count) +
                    " frames cannot realize " + std::to_string(copies) +
                    " passes of " + std::to_string(s_count) + " states");
  }
  if (std::isnan(total)) {
    throw Error(ErrorCode::kNumericalUnderflow, "forward pass produced NaN");
  }

  std::vector<double> beta(static_cast<std::size_t>(t_count) * n, kNegInf);
  beta[static_cast<std::size_t>(t_count - 1) * n + (n - 1)] = 0.0;
  for (int t = t_count - 2; t >= 0; --t) {
    for (int x = 0; x < n; ++x) {
      double best = kNegInf;
      for_each_succ(x, [&](int y, double log_a) {
        best = log_sum_exp(
            best, log_a + emission(t + 1, y) + beta[static_cast<std::size_t>(t + 1) * n + y]);
      });
      beta[static_cast<std::size_t>(t) * n + x] = best;
    }
  }

  const int d = model.dim;
  for (int t = 0; t < t_count; ++t) {
    auto frame = seq.frame(t);
    for (int x = 0; x < n; ++x) {
      double log_gamma = alpha[static_cast<std::size_t>(t) * n + x] +
                         beta[static_cast<std::size_t>(t) * n + x] - total;
      if (log_gamma == kNegInf) continue;
      double gamma = std::exp(log_gamma);
      int s = x % s_count;
      acc.occupancy[s] += gamma;
      double* first = acc.first.data() + static_cast<std::size_t>(s) * d;
      double* second = acc.second.data() + static_cast<std::size_t>(s) * d;
      for (int j = 0; j < d; ++j) {
        first[j] += gamma * frame[j];
        second[j] += gamma * frame[j] * frame[j];
      }
    }
    if (t + 1 < t_count) {
      for (int x = 0; x < n; ++x) {
        double a_t = alpha[static_cast<std::size_t>(t) * n + x];
        if (a_t == kNegInf) continue;
        int s = x % s_count;
        for_each_succ(x, [&](int y, double log_a) {
          double log_xi = a_t + log_a + emission(t + 1, y) +
                          beta[static_cast<std::size_t>(t + 1) * n + y] - total;
          if (log_xi == kNegInf) return;
          int to = y % s_count;
          acc.trans_count[static_cast<std::size_t>(s) * s_count + to] += std::exp(log_xi);
        });
      }
    }
  }
  return total;
}

std::vector<int> allowed_successors(int state, int s_count, bool cyclic) {
  if (state < s_count - 1) return {state, state + 1};
  if (cyclic) return {0, s_count - 1};
  return {s_count - 1};
}

}  // namespace

void HmmConfig::validate() const {
  if (num_states < 2) {
    throw Error(ErrorCode::kInvalidArgument, "num_states must be >= 2");
  }
  if (training_iterations < 0) {
    throw Error(ErrorCode::kInvalidArgument, "training_iterations must be >= 0");
  }
  if (variance_floor_factor <= 0.0 || variance_floor_factor >= 1.0 ||
      min_self_loop <= 0.0 || min_self_loop >= 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "floor factors must be in (0, 1)");
  }
}

GaussianHmm flat_start(const std::vector<FeatureSequence>& sequences,
                       const std::vector<int>& step_counts, const HmmConfig& config,
                       const std::string& subject_id) {
  config.validate();
  if (sequences.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no training sequences");
  }
  const int d = sequences[0].dim;
  check_training_inputs(sequences, step_counts, d);
  const int s_count = config.num_states;
  const auto floor = variance_floor(sequences, config.variance_floor_factor);

  std::vector<double> count(s_count, 0.0);
  std::vector<double> sum(static_cast<std::size_t>(s_count) * d, 0.0);
  std::vector<double> sum_sq(static_cast<std::size_t>(s_count) * d, 0.0);

  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const auto& seq = sequences[i];
    const int copies = pass_count(config, step_counts[i]);
    const auto pass_sizes = uniform_split(seq.num_frames(), copies);
    int offset = 0;
    for (int pass_len : pass_sizes) {
      if (pass_len < s_count) {
        throw Error(ErrorCode::kTooFewFrames,
                    "pass of " + std::to_string(pass_len) + " frames for " +
                        std::to_string(s_count) + " states");
      }
      const auto segment_sizes = uniform_split(pass_len, s_count);
      int frame = offset;
      for (int s = 0; s < s_count; ++s) {
        for (int u = 0; u < segment_sizes[s]; ++u, ++frame) {
          auto x = seq.frame(frame);
          count[s] += 1.0;
          for (int j = 0; j < d; ++j) {
            sum[static_cast<std::size_t>(s) * d + j] += x[j];
            sum_sq[static_cast<std::size_t>(s) * d + j] += x[j] * x[j];
          }
        }
      }
      offset += pass_len;
    }
  }

  GaussianHmm model;
  model.subject_id = subject_id;
  model.num_states = s_count;
  model.dim = d;
  model.cyclic = config.cyclic;
  model.means.resize(static_cast<std::size_t>(s_count) * d);
  model.variances.resize(static_cast<std::size_t>(s_count) * d);
  for (int s = 0; s < s_count; ++s) {
    for (int j = 0; j < d; ++j) {
      std::size_t idx = static_cast<std::size_t>(s) * d + j;
      double mean = sum[idx] / count[s];
      double var = sum_sq[idx] / count[s] - mean * mean;
      model.means[idx] = mean;
      model.variances[idx] = std::max(var, floor[j]);
    }
  }
  model.log_trans.assign(static_cast<std::size_t>(s_count) * s_count, kNegInf);
  for (int s = 0; s < s_count; ++s) {
    const auto successors = allowed_successors(s, s_count, config.cyclic);
    double log_p = std::log(1.0 / successors.size());
    for (int to : successors) {
      model.log_trans[static_cast<std::size_t>(s) * s_count + to] = log_p;
    }
  }
  return model;
}

ReestimateResult embedded_reestimate(const GaussianHmm& model,
                                     const std::vector<FeatureSequence>& sequences,
                                     const std::vector<int>& step_counts,
                                     const HmmConfig& config) {
  config.validate();
  check_training_inputs(sequences, step_counts, model.dim);
  const int s_count = model.num_states;
  const int d = model.dim;
  const auto floor = variance_floor(sequences, config.variance_floor_factor);

  Accumulators acc(s_count, d);
  double total_ll = 0.0;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    // The model's own topology flag governs the pass structure.
    const int copies = model.cyclic ? step_counts[i] : 1;
    total_ll += accumulate_composite(model, sequences[i], copies, acc);
  }

  ReestimateResult result;
  result.log_likelihood = total_ll;
  GaussianHmm& updated = result.model;
  updated = model;

  for (int s = 0; s < s_count; ++s) {
    if (acc.occupancy[s] <= 0.0) continue;  // unvisited state keeps its parameters
    for (int j = 0; j < d; ++j) {
      std::size_t idx = static_cast<std::size_t>(s) * d + j;
      double mean = acc.first[idx] / acc.occupancy[s];
      double var = acc.second[idx] / acc.occupancy[s] - mean * mean;
      updated.means[idx] = mean;
      updated.variances[idx] = std::max(var, floor[j]);
    }
  }

  for (int s = 0; s < s_count; ++s) {
    const auto successors = allowed_successors(s, s_count, model.cyclic);
    double row_total = 0.0;
    for (int to : successors) {
      row_total += acc.trans_count[static_cast<std::size_t>(s) * s_count + to];
    }
    std::vector<double> probs(successors.size());
    if (row_total > 0.0) {
      for (std::size_t u = 0; u < successors.size(); ++u) {
        probs[u] =
            acc.trans_count[static_cast<std::size_t>(s) * s_count + successors[u]] /
            row_total;
      }
    } else {
      for (std::size_t u = 0; u < successors.size(); ++u) {
        probs[u] = std::exp(model.log_a(s, successors[u]));
      }
    }
    double norm = 0.0;
    for (double& p : probs) {
      p = std::max(p, config.min_self_loop);
      norm += p;
    }
    for (std::size_t u = 0; u < successors.size(); ++u) {
      updated.log_trans[static_cast<std::size_t>(s) * s_count + successors[u]] =
          std::log(probs[u] / norm);
    }
  }
  return result;
}

DecodeResult viterbi(const GaussianHmm& model, const FeatureSequence& seq,
                     DecodeGrammar grammar) {
  if (seq.dim != model.dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "sequence dim " + std::to_string(seq.dim) + " vs model dim " +
                    std::to_string(model.dim));
  }
  const int t_count = seq.num_frames();
  if (t_count < 1) {
    throw Error(ErrorCode::kInvalidArgument, "empty feature sequence");
  }
  const int s_count = model.num_states;
  const bool wrap = model.cyclic && grammar == DecodeGrammar::kMultiStep;
  const auto em = emission_log_probs(model, seq);
  auto emission = [&](int t, int s) {
    return em[static_cast<std::size_t>(t) * s_count + s];
  };

  std::vector<double> score(static_cast<std::size_t>(t_count) * s_count, kNegInf);
  std::vector<int> back(static_cast<std::size_t>(t_count) * s_count, -1);
  score[0] = emission(0, 0);  // all initial mass on the first state
  for (int t = 1; t < t_count; ++t) {
    for (int s = 0; s < s_count; ++s) {
      // Predecessors in increasing order so ties stay with the lowest.
      double best = kNegInf;
      int best_pred = -1;
      auto consider = [&](int p, double log_a) {
        double candidate = score[static_cast<std::size_t>(t - 1) * s_count + p] + log_a;
        if (candidate > best) {
          best = candidate;
          best_pred = p;
        }
      };
      if (s == 0) {
        consider(0, model.log_a(0, 0));
        if (wrap) consider(s_count - 1, model.log_a(s_count - 1, 0));
      } else {
        consider(s - 1, model.log_a(s - 1, s));
        consider(s, model.log_a(s, s));
      }
      if (best != kNegInf) {
        score[static_cast<std::size_t>(t) * s_count + s] = best + emission(t, s);
        back[static_cast<std::size_t>(t) * s_count + s] = best_pred;
      }
    }
  }

  int final_state;
  if (grammar == DecodeGrammar::kSinglePass) {
    final_state = s_count - 1;
  } else {
    final_state = 0;
    for (int s = 1; s < s_count; ++s) {
      if (score[static_cast<std::size_t>(t_count - 1) * s_count + s] >
          score[static_cast<std::size_t>(t_count - 1) * s_count + final_state]) {
        final_state = s;
      }
    }
  }
  const double best_ll =
      score[static_cast<std::size_t>(t_count - 1) * s_count + final_state];
  if (best_ll == kNegInf) {
    throw Error(ErrorCode::kNoValidPath,
                std::to_string(t_count) + " frames admit no valid path through " +
                    std::to_string(s_count) + " states");
  }

  DecodeResult result;
  result.log_likelihood = best_ll;
  result.state_path.resize(t_count);
  result.state_path[t_count - 1] = final_state;
  for (int t = t_count - 1; t > 0; --t) {
    result.state_path[t - 1] =
        back[static_cast<std::size_t>(t) * s_count + result.state_path[t]];
  }
  for (int t = 1; t < t_count; ++t) {
    if (result.state_path[t - 1] == s_count - 1 && result.state_path[t] == 0) {
      result.step_boundaries.push_back(t);
    }
  }
  result.step_count = 1 + static_cast<int>(result.step_boundaries.size());
  return result;
}

double log_likelihood(const GaussianHmm& model, const FeatureSequence& seq,
                      DecodeGrammar grammar) {
  if (seq.dim != model.dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "sequence dim " + std::to_string(seq.dim) + " vs model dim " +
                    std::to_string(model.dim));
  }
  const int t_count = seq.num_frames();
  if (t_count < 1) {
    throw Error(ErrorCode::kInvalidArgument, "empty feature sequence");
  }
  const int s_count = model.num_states;
  const bool wrap = model.cyclic && grammar == DecodeGrammar::kMultiStep;
  const auto em = emission_log_probs(model, seq);

  std::vector<double> alpha(s_count, kNegInf), next(s_count);
  alpha[0] = em[0];
  for (int t = 1; t < t_count; ++t) {
    for (int s = 0; s < s_count; ++s) {
      double total;
      if (s == 0) {
        total = alpha[0] + model.log_a(0, 0);
        if (wrap) {
          total = log_sum_exp(total, alpha[s_count - 1] + model.log_a(s_count - 1, 0));
        }
      } else {
        total = log_sum_exp(alpha[s - 1] + model.log_a(s - 1, s),
                            alpha[s] + model.log_a(s, s));
      }
      next[s] = total == kNegInf
                    ? kNegInf
                    : total + em[static_cast<std::size_t>(t) * s_count + s];
    }
    alpha = next;
  }

  double total;
  if (grammar == DecodeGrammar::kSinglePass) {
    total = alpha[s_count - 1];
  } else {
    total = kNegInf;
    for (int s = 0; s < s_count; ++s) total = log_sum_exp(total, alpha[s]);
  }
  if (total == kNegInf) {
    throw Error(ErrorCode::kNoValidPath,
                std::to_string(t_count) + " frames admit no valid path through " +
                    std::to_string(s_count) + " states");
  }
  return total;
}

}  // namespace gait
