#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "gait/errors.hpp"
#include "gait/features.hpp"
#include "gait/serialization.hpp"
#include "oracles.hpp"

using namespace gait;

namespace {

MonoSignal make_signal(std::vector<double> samples, int rate = 16000) {
  return MonoSignal{std::move(samples), rate};
}

FeatureSequence from_rows(const std::vector<std::vector<double>>& rows,
                          double frame_shift = 0.010) {
  FeatureSequence seq;
  seq.dim = static_cast<int>(rows[0].size());
  seq.frame_shift = frame_shift;
  for (const auto& row : rows) seq.data.insert(seq.data.end(), row.begin(), row.end());
  return seq;
}

}  // namespace

TEST_CASE("compute_mfcc frame count follows the framing formula") {
  MfccConfig config;
  MonoSignal signal = make_signal(std::vector<double>(32000, 0.1));
  FeatureSequence features = compute_mfcc(signal, config);
  CHECK(features.num_frames() == 198);  // 1 + (32000 - 400) / 160
  CHECK(features.dim == 13);
  CHECK(features.frame_shift == doctest::Approx(0.010));
}

TEST_CASE("compute_mfcc frame count for 100 random (N, win, hop)") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    int win = 2 + static_cast<int>(rng() % 399);
    int hop = 1 + static_cast<int>(rng() % win);
    long n = win + static_cast<long>(rng() % 5000);
    MfccConfig config;
    config.expected_sample_rate = 16000;
    config.frame_length = win / 16000.0;
    config.frame_shift = hop / 16000.0;
    config.num_mel_filters = 26;
    std::vector<double> samples(n);
    for (auto& s : samples) s = (rng() % 1000) / 1000.0 - 0.5;
    FeatureSequence features = compute_mfcc(make_signal(std::move(samples)), config);
    CHECK(features.num_frames() == 1 + static_cast<int>((n - win) / hop));
  }
}

TEST_CASE("compute_mfcc on silence clamps every filter to the log floor") {
  MfccConfig config;
  MonoSignal signal = make_signal(std::vector<double>(1600, 0.0));
  FeatureSequence features = compute_mfcc(signal, config);
  REQUIRE(features.num_frames() > 1);
  // All frames identical...
  for (int t = 1; t < features.num_frames(); ++t) {
    for (int d = 0; d < features.dim; ++d) {
      CHECK(features.at(t, d) == features.at(0, d));
    }
  }
  // ...and equal to the DCT of a constant log(log_floor) vector: coefficient 0
  // carries sqrt(M) * log(floor), all higher coefficients vanish.
  const int m = config.num_mel_filters;
  CHECK(features.at(0, 0) ==
        doctest::Approx(std::sqrt(1.0 / m) * m * std::log(config.log_floor)));
  for (int d = 1; d < features.dim; ++d) {
    CHECK(features.at(0, d) == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("compute_mfcc errors") {
  MfccConfig config;
  SUBCASE("sample-rate mismatch") {
    MonoSignal signal = make_signal(std::vector<double>(1000, 0.0), 8000);
    try {
      compute_mfcc(signal, config);
      FAIL("expected SampleRateMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kSampleRateMismatch);
    }
  }
  SUBCASE("signal shorter than one frame") {
    MonoSignal signal = make_signal(std::vector<double>(399, 0.0));
    try {
      compute_mfcc(signal, config);
      FAIL("expected SignalTooShort");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kSignalTooShort);
    }
  }
}

TEST_CASE("compute_mfcc matches the dense-matrix oracle") {
  MfccConfig config;
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> value(-0.5, 0.5);

  SUBCASE("single-frame sinusoid at a mel filter center") {
    // Filter 10's center frequency, mapped back from the mel axis.
    double mel_max = 2595.0 * std::log10(1.0 + 8000.0 / 700.0);
    double center_mel = mel_max * 11.0 / (config.num_mel_filters + 1);
    double center_hz = 700.0 * (std::pow(10.0, center_mel / 2595.0) - 1.0);
    std::vector<double> samples(400);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      samples[i] = 0.7 * std::sin(2.0 * std::numbers::pi * center_hz * i / 16000.0);
    }
    FeatureSequence features = compute_mfcc(make_signal(samples), config);
    auto expected = oracle::dense_mfcc(samples, config);
    REQUIRE(features.num_frames() == 1);
    for (int d = 0; d < features.dim; ++d) {
      CHECK(features.at(0, d) == doctest::Approx(expected[0][d]).epsilon(1e-8));
    }
  }

  SUBCASE("random multi-frame signals") {
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> samples(400 + 160 * (rng() % 5));
      for (auto& s : samples) s = value(rng);
      FeatureSequence features = compute_mfcc(make_signal(samples), config);
      auto expected = oracle::dense_mfcc(samples, config);
      REQUIRE(features.num_frames() == static_cast<int>(expected.size()));
      for (int t = 0; t < features.num_frames(); ++t) {
        for (int d = 0; d < features.dim; ++d) {
          CHECK(features.at(t, d) ==
                doctest::Approx(expected[t][d]).epsilon(1e-8));
        }
      }
    }
  }
}

TEST_CASE("positive gain shifts only coefficient 0") {
  MfccConfig config;
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> value(-0.4, 0.4);
  std::vector<double> samples(1200);
  for (auto& s : samples) s = value(rng) + 0.01;  // keep energies above the floor
  FeatureSequence base = compute_mfcc(make_signal(samples), config);
  std::vector<double> scaled = samples;
  const double gain = 2.5;
  for (auto& s : scaled) s *= gain;
  FeatureSequence shifted = compute_mfcc(make_signal(scaled), config);

  const double expected_shift =
      std::sqrt(1.0 / config.num_mel_filters) * config.num_mel_filters *
      std::log(gain);
  for (int t = 0; t < base.num_frames(); ++t) {
    CHECK(shifted.at(t, 0) - base.at(t, 0) ==
          doctest::Approx(expected_shift).epsilon(1e-9));
    for (int d = 1; d < base.dim; ++d) {
      CHECK(shifted.at(t, d) == doctest::Approx(base.at(t, d)).epsilon(1e-9));
    }
  }
}

TEST_CASE("append_dynamics") {
  SUBCASE("constant sequence has zero dynamics") {
    FeatureSequence seq = from_rows({{1.5, -2.0}, {1.5, -2.0}, {1.5, -2.0}});
    FeatureSequence full = append_dynamics(seq, 2);
    CHECK(full.dim == 6);
    for (int t = 0; t < full.num_frames(); ++t) {
      for (int d = 2; d < 6; ++d) CHECK(full.at(t, d) == 0.0);
    }
  }

  SUBCASE("scalar ramp has interior delta exactly 1") {
    FeatureSequence seq = from_rows({{0.0}, {1.0}, {2.0}, {3.0}, {4.0}, {5.0}});
    FeatureSequence full = append_dynamics(seq, 2);
    // t=2: (1*(c3-c1) + 2*(c4-c0)) / (2*(1+4)) = (2 + 8) / 10 = 1
    CHECK(full.at(2, 1) == doctest::Approx(1.0));
    CHECK(full.at(3, 1) == doctest::Approx(1.0));
  }

  SUBCASE("matches the brute-force oracle on random sequences") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> value(-3.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
      int t_count = 1 + static_cast<int>(rng() % 8);
      int dim = 1 + static_cast<int>(rng() % 3);
      int window = 1 + static_cast<int>(rng() % 3);
      std::vector<std::vector<double>> rows(t_count, std::vector<double>(dim));
      for (auto& row : rows) {
        for (auto& x : row) x = value(rng);
      }
      FeatureSequence full = append_dynamics(from_rows(rows), window);
      auto deltas = oracle::brute_force_deltas(rows, window);
      auto accels = oracle::brute_force_deltas(deltas, window);
      for (int t = 0; t < t_count; ++t) {
        for (int d = 0; d < dim; ++d) {
          CHECK(full.at(t, d) == doctest::Approx(rows[t][d]));
          CHECK(full.at(t, dim + d) == doctest::Approx(deltas[t][d]).epsilon(1e-12));
          CHECK(full.at(t, 2 * dim + d) ==
                doctest::Approx(accels[t][d]).epsilon(1e-12));
        }
      }
    }
  }

  SUBCASE("acceleration equals delta of delta") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    std::vector<std::vector<double>> rows(7, std::vector<double>(3));
    for (auto& row : rows) {
      for (auto& x : row) x = value(rng);
    }
    FeatureSequence full = append_dynamics(from_rows(rows), 2);
    // Feed the delta block back through append_dynamics; its delta block must
    // reproduce the acceleration block exactly.
    FeatureSequence delta_block;
    delta_block.dim = 3;
    delta_block.frame_shift = full.frame_shift;
    for (int t = 0; t < full.num_frames(); ++t) {
      for (int d = 0; d < 3; ++d) delta_block.data.push_back(full.at(t, 3 + d));
    }
    FeatureSequence rederived = append_dynamics(delta_block, 2);
    for (int t = 0; t < full.num_frames(); ++t) {
      for (int d = 0; d < 3; ++d) {
        CHECK(full.at(t, 6 + d) == doctest::Approx(rederived.at(t, 3 + d)));
      }
    }
  }
}

TEST_CASE("fit_pca recovers axis-aligned structure") {
  // Axis variances 9, 1, 4 -> eigenvalue order axes 0, 2, 1.
  std::mt19937 rng(41);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 500; ++i) {
    rows.push_back({3.0 * gauss(rng), 1.0 * gauss(rng), 2.0 * gauss(rng)});
  }
  PcaTransform pca = fit_pca({from_rows(rows)});
  REQUIRE(pca.dim == 3);
  CHECK(pca.eigenvalues[0] > pca.eigenvalues[1]);
  CHECK(pca.eigenvalues[1] > pca.eigenvalues[2]);
  // Rows of the rotation approximate signed unit vectors along axes 0, 2, 1.
  auto row_peak = [&](int r) {
    int peak = 0;
    for (int j = 1; j < 3; ++j) {
      if (std::abs(pca.rotation[r * 3 + j]) > std::abs(pca.rotation[r * 3 + peak])) {
        peak = j;
      }
    }
    return peak;
  };
  CHECK(row_peak(0) == 0);
  CHECK(row_peak(1) == 2);
  CHECK(row_peak(2) == 1);
  // Sign convention: dominant entries positive.
  for (int r = 0; r < 3; ++r) CHECK(pca.rotation[r * 3 + row_peak(r)] > 0.0);
}

TEST_CASE("fit_pca rotation is orthogonal within 1e-8") {
  std::mt19937 rng(47);
  std::uniform_real_distribution<double> value(-2.0, 2.0);
  std::vector<std::vector<double>> rows(60, std::vector<double>(5));
  for (auto& row : rows) {
    for (auto& x : row) x = value(rng);
  }
  PcaTransform pca = fit_pca({from_rows(rows)});
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) {
      double dot = 0.0;
      for (int j = 0; j < 5; ++j) {
        dot += pca.rotation[r * 5 + j] * pca.rotation[c * 5 + j];
      }
      CHECK(std::abs(dot - (r == c ? 1.0 : 0.0)) < 1e-8);
    }
  }
}

TEST_CASE("fit_pca eigenvalues match the Jacobi oracle within 1e-6") {
  std::mt19937 rng(53);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 200; ++i) {
    double a = gauss(rng), b = gauss(rng), c = gauss(rng);
    rows.push_back({a + 0.5 * b, b, 0.3 * a + c});
  }
  PcaTransform pca = fit_pca({from_rows(rows)});

  // Oracle: covariance by direct summation, eigenvalues by Jacobi rotations.
  std::vector<double> mean(3, 0.0);
  for (const auto& row : rows) {
    for (int j = 0; j < 3; ++j) mean[j] += row[j];
  }
  for (auto& m : mean) m /= rows.size();
  std::vector<std::vector<double>> cov(3, std::vector<double>(3, 0.0));
  for (const auto& row : rows) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        cov[a][b] += (row[a] - mean[a]) * (row[b] - mean[b]);
      }
    }
  }
  for (auto& r : cov) {
    for (auto& v : r) v /= rows.size() - 1;
  }
  auto expected = oracle::jacobi_eigenvalues(cov);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(pca.eigenvalues[i] - expected[i]) < 1e-6);
  }
}

TEST_CASE("fit_pca rejects too few pooled frames") {
  std::vector<std::vector<double>> rows(4, std::vector<double>(5, 1.0));
  try {
    fit_pca({from_rows(rows)});
    FAIL("expected DegenerateCovariance");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerateCovariance);
  }
}

TEST_CASE("apply_pca basics") {
  SUBCASE("identity transform") {
    PcaTransform identity;
    identity.dim = 2;
    identity.mean = {0.0, 0.0};
    identity.rotation = {1.0, 0.0, 0.0, 1.0};
    identity.eigenvalues = {1.0, 1.0};
    FeatureSequence seq = from_rows({{1.0, 2.0}, {-0.5, 0.25}});
    FeatureSequence out = apply_pca(identity, seq);
    CHECK(out.data == seq.data);
  }
  SUBCASE("the mean maps to zero") {
    std::mt19937 rng(59);
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    std::vector<std::vector<double>> rows(30, std::vector<double>(3));
    for (auto& row : rows) {
      for (auto& x : row) x = value(rng);
    }
    PcaTransform pca = fit_pca({from_rows(rows)});
    FeatureSequence at_mean;
    at_mean.dim = 3;
    at_mean.data = pca.mean;
    FeatureSequence out = apply_pca(pca, at_mean);
    for (int d = 0; d < 3; ++d) CHECK(out.at(0, d) == doctest::Approx(0.0));
  }
  SUBCASE("dimension mismatch") {
    PcaTransform pca;
    pca.dim = 3;
    pca.mean = {0, 0, 0};
    pca.rotation.assign(9, 0.0);
    pca.eigenvalues = {1, 1, 1};
    FeatureSequence seq = from_rows({{1.0, 2.0}});
    try {
      apply_pca(pca, seq);
      FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDimensionMismatch);
    }
  }
}

TEST_CASE("apply_pca diagonalizes the enrollment covariance") {
  std::mt19937 rng(61);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 400; ++i) {
    double a = gauss(rng), b = gauss(rng), c = gauss(rng), d = gauss(rng);
    rows.push_back({a, 0.8 * a + 0.6 * b, c - 0.4 * a, 0.5 * d + 0.2 * c});
  }
  FeatureSequence pool = from_rows(rows);
  PcaTransform pca = fit_pca({pool});
  FeatureSequence rotated = apply_pca(pca, pool);

  const int n = rotated.num_frames(), dim = rotated.dim;
  std::vector<double> mean(dim, 0.0);
  for (int t = 0; t < n; ++t) {
    for (int j = 0; j < dim; ++j) mean[j] += rotated.at(t, j);
  }
  for (auto& m : mean) m /= n;
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) {
      if (a == b) continue;
      double cov = 0.0;
      for (int t = 0; t < n; ++t) {
        cov += (rotated.at(t, a) - mean[a]) * (rotated.at(t, b) - mean[b]);
      }
      cov /= n - 1;
      CHECK(std::abs(cov) < 1e-6);
    }
  }
}

TEST_CASE("apply_pca preserves pairwise squared distances") {
  std::mt19937 rng(67);
  std::uniform_real_distribution<double> value(-2.0, 2.0);
  std::vector<std::vector<double>> rows(40, std::vector<double>(4));
  for (auto& row : rows) {
    for (auto& x : row) x = value(rng);
  }
  FeatureSequence pool = from_rows(rows);
  PcaTransform pca = fit_pca({pool});
  FeatureSequence rotated = apply_pca(pca, pool);
  for (int i = 0; i < 10; ++i) {
    for (int j = i + 1; j < 10; ++j) {
      double before = 0.0, after = 0.0;
      for (int d = 0; d < 4; ++d) {
        double db = pool.at(i, d) - pool.at(j, d);
        double da = rotated.at(i, d) - rotated.at(j, d);
        before += db * db;
        after += da * da;
      }
      CHECK(std::abs(before - after) < 1e-8);
    }
  }
}

TEST_CASE("feature and PCA JSON round-trips are exact") {
  std::mt19937 rng(71);
  std::uniform_real_distribution<double> value(-1.0, 1.0);
  std::vector<std::vector<double>> rows(25, std::vector<double>(4));
  for (auto& row : rows) {
    for (auto& x : row) x = value(rng);
  }
  FeatureSequence seq = from_rows(rows);
  FeatureSequence back = feature_sequence_from_json(feature_sequence_to_json(seq));
  CHECK(back.dim == seq.dim);
  CHECK(back.frame_shift == seq.frame_shift);
  CHECK(back.data == seq.data);

  PcaTransform pca = fit_pca({seq});
  PcaTransform pca_back = pca_from_json(pca_to_json(pca));
  CHECK(pca_back.mean == pca.mean);
  CHECK(pca_back.rotation == pca.rotation);
  CHECK(pca_back.eigenvalues == pca.eigenvalues);
}
