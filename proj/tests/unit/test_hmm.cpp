#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "gait/errors.hpp"
#include "gait/hmm.hpp"
#include "gait/serialization.hpp"
#include "oracles.hpp"

using namespace gait;

namespace {

FeatureSequence scalar_seq(const std::vector<double>& values) {
  FeatureSequence seq;
  seq.dim = 1;
  seq.data = values;
  return seq;
}

// Hand-set S-state scalar model with well-formed rows.
GaussianHmm make_model(int states, bool cyclic, const std::vector<double>& means,
                       const std::vector<double>& variances, double self_prob) {
  GaussianHmm model;
  model.subject_id = "test";
  model.num_states = states;
  model.dim = 1;
  model.cyclic = cyclic;
  model.means = means;
  model.variances = variances;
  model.log_trans.assign(static_cast<std::size_t>(states) * states,
                         oracle::kNegInf);
  for (int s = 0; s < states; ++s) {
    if (s < states - 1) {
      model.log_trans[s * states + s] = std::log(self_prob);
      model.log_trans[s * states + s + 1] = std::log(1.0 - self_prob);
    } else if (cyclic) {
      model.log_trans[s * states + s] = std::log(self_prob);
      model.log_trans[s * states + 0] = std::log(1.0 - self_prob);
    } else {
      model.log_trans[s * states + s] = 0.0;
    }
  }
  return model;
}

GaussianHmm random_model(std::mt19937& rng, int states, bool cyclic) {
  std::uniform_real_distribution<double> mean_dist(-3.0, 3.0);
  std::uniform_real_distribution<double> var_dist(0.2, 2.0);
  std::uniform_real_distribution<double> prob(0.2, 0.8);
  std::vector<double> means(states), variances(states);
  for (int s = 0; s < states; ++s) {
    means[s] = mean_dist(rng);
    variances[s] = var_dist(rng);
  }
  return make_model(states, cyclic, means, variances, prob(rng));
}

}  // namespace

TEST_CASE("flat_start uniform segmentation") {
  HmmConfig config;
  config.num_states = 3;
  config.cyclic = false;

  SUBCASE("segment sizes follow the largest-remainder rule {4,3,3}") {
    // 10 frames, 1 pass, 3 states: segment means identify the split points.
    std::vector<double> values(10);
    for (int i = 0; i < 10; ++i) values[i] = i;
    GaussianHmm model = flat_start({scalar_seq(values)}, {1}, config, "s");
    CHECK(model.means[0] == doctest::Approx((0 + 1 + 2 + 3) / 4.0));
    CHECK(model.means[1] == doctest::Approx((4 + 5 + 6) / 3.0));
    CHECK(model.means[2] == doctest::Approx((7 + 8 + 9) / 3.0));
  }

  SUBCASE("T = S*k frames spread evenly over states") {
    config.cyclic = true;
    // 2 steps, 12 frames: passes [0..5], [6..11]; state s gets 2 frames per pass.
    std::vector<double> values(12);
    for (int i = 0; i < 12; ++i) values[i] = i;
    GaussianHmm model = flat_start({scalar_seq(values)}, {2}, config, "s");
    CHECK(model.means[0] == doctest::Approx((0 + 1 + 6 + 7) / 4.0));
    CHECK(model.means[1] == doctest::Approx((2 + 3 + 8 + 9) / 4.0));
    CHECK(model.means[2] == doctest::Approx((4 + 5 + 10 + 11) / 4.0));
  }

  SUBCASE("identical frames give floored variances and the shared mean") {
    GaussianHmm model =
        flat_start({scalar_seq(std::vector<double>(9, 2.5))}, {1}, config, "s");
    for (int s = 0; s < 3; ++s) {
      CHECK(model.means[s] == doctest::Approx(2.5));
      CHECK(model.variances[s] == doctest::Approx(1e-10));  // absolute floor
    }
  }

  SUBCASE("uniform transitions over allowed successors") {
    std::vector<double> values(9);
    for (int i = 0; i < 9; ++i) values[i] = i;
    GaussianHmm linear = flat_start({scalar_seq(values)}, {1}, config, "s");
    CHECK(std::exp(linear.log_a(0, 0)) == doctest::Approx(0.5));
    CHECK(std::exp(linear.log_a(0, 1)) == doctest::Approx(0.5));
    CHECK(std::exp(linear.log_a(2, 2)) == doctest::Approx(1.0));
    CHECK(linear.log_a(2, 0) == oracle::kNegInf);
    CHECK(linear.log_a(0, 2) == oracle::kNegInf);

    config.cyclic = true;
    GaussianHmm cyclic = flat_start({scalar_seq(values)}, {1}, config, "s");
    CHECK(std::exp(cyclic.log_a(2, 2)) == doctest::Approx(0.5));
    CHECK(std::exp(cyclic.log_a(2, 0)) == doctest::Approx(0.5));
  }

  SUBCASE("TooFewFrames when a pass cannot cover the states") {
    config.cyclic = true;
    std::vector<double> values(5, 1.0);
    try {
      flat_start({scalar_seq(values)}, {2}, config, "s");  // passes of 3 and 2
      FAIL("expected TooFewFrames");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kTooFewFrames);
    }
  }
}

TEST_CASE("embedded_reestimate matches the path-enumeration oracle (S=2, T=4, k=1)") {
  HmmConfig config;
  config.num_states = 2;
  config.variance_floor_factor = 1e-2;
  config.min_self_loop = 1e-3;

  std::mt19937 rng(101);
  std::uniform_real_distribution<double> value(-2.0, 2.0);

  for (bool cyclic : {false, true}) {
    config.cyclic = cyclic;
    for (int trial = 0; trial < 10; ++trial) {
      GaussianHmm model = random_model(rng, 2, cyclic);
      FeatureSequence seq =
          scalar_seq({value(rng), value(rng), value(rng), value(rng)});

      auto expected = oracle::enumerate_reestimate(model, seq, 1);
      auto [updated, ll] = embedded_reestimate(model, {seq}, {1}, config);

      CHECK(ll == doctest::Approx(expected.log_likelihood).epsilon(1e-9));

      // The oracle applies the same M-step formulas to its exact counts.
      const auto floor = [&] {
        double sum = 0.0, sq = 0.0;
        for (double v : seq.data) {
          sum += v;
          sq += v * v;
        }
        double mean = sum / seq.data.size();
        return std::max(config.variance_floor_factor *
                            (sq / seq.data.size() - mean * mean),
                        1e-10);
      }();
      for (int s = 0; s < 2; ++s) {
        CHECK(updated.means[s] == doctest::Approx(expected.mean[s]).epsilon(1e-9));
        CHECK(updated.variances[s] ==
              doctest::Approx(std::max(expected.variance[s], floor)).epsilon(1e-9));
      }
      // Transition rows: floor then renormalize expected counts.
      auto expect_row = [&](int s, std::vector<int> successors) {
        double total = 0.0;
        for (int to : successors) total += expected.trans_posterior[s * 2 + to];
        std::vector<double> probs;
        for (int to : successors) {
          double p = total > 0.0 ? expected.trans_posterior[s * 2 + to] / total
                                 : std::exp(model.log_a(s, to));
          probs.push_back(std::max(p, config.min_self_loop));
        }
        double norm = 0.0;
        for (double p : probs) norm += p;
        for (std::size_t u = 0; u < successors.size(); ++u) {
          CHECK(std::exp(updated.log_a(s, successors[u])) ==
                doctest::Approx(probs[u] / norm).epsilon(1e-9));
        }
      };
      expect_row(0, {0, 1});
      if (cyclic) {
        expect_row(1, {0, 1});
      } else {
        CHECK(std::exp(updated.log_a(1, 1)) == doctest::Approx(1.0));
      }
    }
  }
}

TEST_CASE("EM iterations are monotone in log-likelihood") {
  HmmConfig config;
  config.num_states = 3;
  config.cyclic = true;
  std::mt19937 rng(211);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (int trial = 0; trial < 5; ++trial) {
    std::vector<FeatureSequence> sequences;
    std::vector<int> step_counts;
    for (int r = 0; r < 3; ++r) {
      std::vector<double> values;
      int steps = 2;
      for (int s = 0; s < steps; ++s) {
        for (int i = 0; i < 12; ++i) {
          values.push_back(std::sin(i * 0.7) * 2.0 + 0.3 * gauss(rng));
        }
      }
      sequences.push_back(scalar_seq(values));
      step_counts.push_back(steps);
    }
    GaussianHmm model = flat_start(sequences, step_counts, config, "s");
    double previous = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 6; ++iter) {
      auto [updated, ll] = embedded_reestimate(model, sequences, step_counts, config);
      if (iter > 0) CHECK(ll >= previous - 1e-6);
      previous = ll;
      model = updated;
    }
  }
}

TEST_CASE("re-estimation is a near fixed point on matched-moment data") {
  // Frames sit exactly at the model's hard-alignment statistics with a huge
  // gap between states, so one update must barely move the parameters.
  HmmConfig config;
  config.num_states = 2;
  config.cyclic = false;
  config.variance_floor_factor = 1e-6;

  GaussianHmm model = make_model(2, false, {0.0, 100.0}, {1.0, 1.0}, 0.5);
  // Path 0,0,1,1: state 0 emits {-1, +1}, state 1 emits {99, 101}; empirical
  // mean/variance equal the model's, and transition counts give a00 = 0.5.
  FeatureSequence seq = scalar_seq({-1.0, 1.0, 99.0, 101.0});

  auto [updated, ll] = embedded_reestimate(model, {seq}, {1}, config);
  for (int s = 0; s < 2; ++s) {
    CHECK(std::abs(updated.means[s] - model.means[s]) < 1e-3);
    CHECK(std::abs(updated.variances[s] - model.variances[s]) < 1e-3);
  }
  CHECK(std::abs(std::exp(updated.log_a(0, 0)) - 0.5) < 1e-3);
  CHECK(std::abs(std::exp(updated.log_a(0, 1)) - 0.5) < 1e-3);
}

TEST_CASE("re-estimation respects topology closure and the variance floor") {
  HmmConfig config;
  config.num_states = 3;
  config.cyclic = true;
  std::mt19937 rng(307);
  std::normal_distribution<double> gauss(0.0, 0.5);
  std::vector<double> values;
  for (int i = 0; i < 30; ++i) values.push_back(gauss(rng));
  std::vector<FeatureSequence> sequences = {scalar_seq(values)};
  std::vector<int> step_counts = {2};

  GaussianHmm model = flat_start(sequences, step_counts, config, "s");
  double sum = 0.0, sq = 0.0;
  for (double v : values) {
    sum += v;
    sq += v * v;
  }
  double global_var = sq / values.size() - (sum / values.size()) * (sum / values.size());
  double floor = std::max(config.variance_floor_factor * global_var, 1e-10);

  for (int iter = 0; iter < 6; ++iter) {
    model = embedded_reestimate(model, sequences, step_counts, config).model;
    for (int s = 0; s < 3; ++s) {
      for (int to = 0; to < 3; ++to) {
        bool allowed = (to == s) || (to == s + 1) || (s == 2 && to == 0);
        if (!allowed) CHECK(model.log_a(s, to) == oracle::kNegInf);
      }
      CHECK(model.variances[s] >= floor - 1e-15);
    }
  }
}

TEST_CASE("viterbi and forward match enumeration on small instances") {
  std::mt19937 rng(401);
  std::uniform_real_distribution<double> value(-2.5, 2.5);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    int states = 2 + static_cast<int>(rng() % 2);
    bool cyclic = (rng() % 2) == 0;
    DecodeGrammar grammar =
        (rng() % 2) == 0 ? DecodeGrammar::kSinglePass : DecodeGrammar::kMultiStep;
    int t_count = states + static_cast<int>(rng() % (7 - states));
    GaussianHmm model = random_model(rng, states, cyclic);
    std::vector<double> values(t_count);
    for (auto& v : values) v = value(rng);
    FeatureSequence seq = scalar_seq(values);

    auto expected = oracle::enumerate_decode(model, seq, grammar);
    if (expected.viterbi_ll == oracle::kNegInf) {
      CHECK_THROWS_AS(viterbi(model, seq, grammar), Error);
      continue;
    }
    DecodeResult result = viterbi(model, seq, grammar);
    CHECK(result.log_likelihood ==
          doctest::Approx(expected.viterbi_ll).epsilon(1e-9));
    CHECK(result.state_path == expected.best_path);
    double forward = log_likelihood(model, seq, grammar);
    CHECK(forward == doctest::Approx(expected.forward_ll).epsilon(1e-9));
    CHECK(forward >= result.log_likelihood - 1e-12);
    ++checked;
  }
  CHECK(checked > 20);
}

TEST_CASE("viterbi grammar behaviour") {
  GaussianHmm model = make_model(3, true, {0.0, 5.0, 10.0}, {0.5, 0.5, 0.5}, 0.4);

  SUBCASE("T = S under SinglePass forces the forward-only path") {
    FeatureSequence seq = scalar_seq({0.0, 5.0, 10.0});
    DecodeResult result = viterbi(model, seq, DecodeGrammar::kSinglePass);
    CHECK(result.state_path == std::vector<int>{0, 1, 2});
    CHECK(result.step_count == 1);
    CHECK(result.step_boundaries.empty());
  }

  SUBCASE("SinglePass with T < S has no valid path") {
    FeatureSequence seq = scalar_seq({0.0, 5.0});
    try {
      viterbi(model, seq, DecodeGrammar::kSinglePass);
      FAIL("expected NoValidPath");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNoValidPath);
    }
  }

  SUBCASE("MultiStep counts wrap traversals") {
    FeatureSequence seq =
        scalar_seq({0.0, 5.0, 10.0, 0.0, 5.0, 10.0, 0.0, 5.0});
    DecodeResult result = viterbi(model, seq, DecodeGrammar::kMultiStep);
    CHECK(result.state_path ==
          std::vector<int>{0, 1, 2, 0, 1, 2, 0, 1});
    CHECK(result.step_count == 3);
    CHECK(result.step_boundaries == std::vector<int>{3, 6});
  }

  SUBCASE("SinglePass disables the wrap edge even on cyclic models") {
    FeatureSequence seq =
        scalar_seq({0.0, 5.0, 10.0, 0.0, 5.0, 10.0});
    DecodeResult result = viterbi(model, seq, DecodeGrammar::kSinglePass);
    CHECK(result.step_count == 1);
    for (std::size_t t = 1; t < result.state_path.size(); ++t) {
      CHECK(result.state_path[t] >= result.state_path[t - 1]);
    }
  }
}

TEST_CASE("forward equals viterbi when only one path is legal") {
  GaussianHmm model = make_model(3, false, {0.0, 1.0, 2.0}, {1.0, 1.0, 1.0}, 0.3);
  FeatureSequence seq = scalar_seq({0.0, 1.0, 2.0});
  DecodeResult best = viterbi(model, seq, DecodeGrammar::kSinglePass);
  double forward = log_likelihood(model, seq, DecodeGrammar::kSinglePass);
  CHECK(forward == doctest::Approx(best.log_likelihood).epsilon(1e-12));
}

TEST_CASE("step count equals one plus wrap traversals on random decodes") {
  std::mt19937 rng(501);
  std::uniform_real_distribution<double> value(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    GaussianHmm model = random_model(rng, 3, true);
    std::vector<double> values(10 + rng() % 10);
    for (auto& v : values) v = value(rng);
    DecodeResult result =
        viterbi(model, scalar_seq(values), DecodeGrammar::kMultiStep);
    int wraps = 0;
    for (std::size_t t = 1; t < result.state_path.size(); ++t) {
      if (result.state_path[t - 1] == 2 && result.state_path[t] == 0) ++wraps;
    }
    CHECK(result.step_count == 1 + wraps);
    CHECK(static_cast<int>(result.step_boundaries.size()) == wraps);
  }
}

TEST_CASE("training and serialization are deterministic") {
  HmmConfig config;
  config.num_states = 4;
  config.cyclic = true;
  config.training_iterations = 3;
  std::mt19937 rng(601);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> values;
  for (int i = 0; i < 40; ++i) values.push_back(gauss(rng) + (i % 10));
  std::vector<FeatureSequence> sequences = {scalar_seq(values)};
  std::vector<int> step_counts = {2};

  auto train = [&] {
    GaussianHmm model = flat_start(sequences, step_counts, config, "det");
    for (int i = 0; i < config.training_iterations; ++i) {
      model = embedded_reestimate(model, sequences, step_counts, config).model;
    }
    return model_to_json(model);
  };
  CHECK(train() == train());
}

TEST_CASE("model JSON round-trip preserves -inf transitions") {
  HmmConfig config;
  config.num_states = 3;
  config.cyclic = true;
  std::vector<double> values;
  for (int i = 0; i < 24; ++i) values.push_back(i % 8);
  GaussianHmm model = flat_start({scalar_seq(values)}, {2}, config, "rt");
  GaussianHmm back = model_from_json(model_to_json(model));
  CHECK(back.subject_id == model.subject_id);
  CHECK(back.num_states == model.num_states);
  CHECK(back.cyclic == model.cyclic);
  CHECK(back.log_trans == model.log_trans);
  CHECK(back.means == model.means);
  CHECK(back.variances == model.variances);
  CHECK(model_to_json(back) == model_to_json(model));
}
