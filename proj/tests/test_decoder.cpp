#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vdib/decoder.hpp"
#include "vdib/verify.hpp"

using namespace vdib;

TEST_CASE("window push, padding and eviction") {
  WindowBuffer buf(2, 3);

  SUBCASE("zero padding before the start") {
    std::vector<uint8_t> v = {1, 0};
    window_push(buf, v);
    const auto f = buf.features();
    REQUIRE(f.size() == 6);
    CHECK(f == std::vector<double>{0, 0, 0, 0, 1, 0});
  }

  SUBCASE("order preserved, oldest evicted") {
    std::vector<uint8_t> a = {1, 0}, b = {0, 1}, c = {1, 1}, d = {0, 0};
    window_push(buf, a);
    window_push(buf, b);
    window_push(buf, c);
    CHECK(buf.features() == std::vector<double>{1, 0, 0, 1, 1, 1});
    window_push(buf, d);  // a drops out
    CHECK(buf.features() == std::vector<double>{0, 1, 1, 1, 0, 0});
  }

  SUBCASE("dimension mismatch rejected") {
    std::vector<uint8_t> bad = {1, 0, 1};
    CHECK_THROWS_AS(window_push(buf, bad), std::invalid_argument);
  }
}

TEST_CASE("rate pooling") {
  WindowBuffer buf(3, 5);
  SUBCASE("all-zero window") {
    for (double s : rate_pool(buf)) CHECK(s == 0.0);
  }
  SUBCASE("unit spiking every step") {
    std::vector<uint8_t> v = {1, 0, 1};
    for (int i = 0; i < 5; ++i) window_push(buf, v);
    const auto sums = rate_pool(buf);
    CHECK(sums[0] == 5.0);
    CHECK(sums[1] == 0.0);
    CHECK(sums[2] == 5.0);
  }
  SUBCASE("column sums of a random window") {
    Rng rng(12);
    std::vector<double> expect(3, 0.0);
    for (int s = 0; s < 5; ++s) {
      std::vector<uint8_t> v(3);
      for (int i = 0; i < 3; ++i) v[i] = static_cast<uint8_t>(rng.bernoulli(0.5));
      window_push(buf, v);
      for (int i = 0; i < 3; ++i) expect[i] += v[i];
    }
    const auto sums = rate_pool(buf);
    for (int i = 0; i < 3; ++i) CHECK(sums[i] == doctest::Approx(expect[i]));
  }
}

TEST_CASE("decoder forward") {
  Rng rng(3);
  SUBCASE("zero linear model gives uniform categorical") {
    DecoderModel m = build_decoder(DecoderKind::linear,
                                   Likelihood::categorical, 4, 3, rng);
    m.w1.fill(0.0);
    std::fill(m.b1.begin(), m.b1.end(), 0.0);
    std::vector<double> f = {1.0, 0.0, 1.0, 1.0};
    const auto probs = predicted_mean(decoder_forward(m, f), m.likelihood);
    for (double p : probs) CHECK(p == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("one-hot feature selects a weight column") {
    DecoderModel m = build_decoder(DecoderKind::linear,
                                   Likelihood::categorical, 4, 3, rng);
    std::vector<double> f = {0.0, 0.0, 1.0, 0.0};
    const auto out = decoder_forward(m, f);
    for (int i = 0; i < 3; ++i) {
      CHECK(out[i] == doctest::Approx(m.w1(i, 2) + m.b1[i]));
    }
  }
  SUBCASE("dead ReLU layer leaves only the output bias") {
    DecoderModel m = build_decoder(DecoderKind::mlp,
                                   Likelihood::gaussian_unit, 4, 3, rng);
    std::fill(m.b1.begin(), m.b1.end(), -100.0);  // all hidden units off
    std::vector<double> f = {0.5, -0.5, 1.0, 0.25};
    const auto out = decoder_forward(m, f);
    for (int i = 0; i < 3; ++i) CHECK(out[i] == doctest::Approx(m.b2[i]));
  }
  SUBCASE("shape mismatch rejected") {
    DecoderModel m = build_decoder(DecoderKind::linear,
                                   Likelihood::categorical, 4, 3, rng);
    std::vector<double> f = {1.0, 2.0};
    CHECK_THROWS_AS(decoder_forward(m, f), std::invalid_argument);
  }
}

TEST_CASE("decoder log losses") {
  SUBCASE("uniform categorical costs log K") {
    std::vector<double> outputs(7, 0.0);
    std::vector<double> r(7, 0.0);
    r[3] = 1.0;
    CHECK(decoder_logloss(outputs, r, Likelihood::categorical) ==
          doctest::Approx(std::log(7.0)));
  }
  SUBCASE("categorical loss is nonnegative, zero only at certainty") {
    std::vector<double> outputs = {0.0, 40.0};  // softmax ~ (4e-18, 1)
    std::vector<double> r = {0.0, 1.0};
    const double loss = decoder_logloss(outputs, r, Likelihood::categorical);
    CHECK(loss >= 0.0);
    CHECK(loss == doctest::Approx(0.0).epsilon(1e-12));
    r = {1.0, 0.0};
    CHECK(decoder_logloss(outputs, r, Likelihood::categorical) > 1.0);
  }
  SUBCASE("bernoulli pixels at sigma(0) cost log 2 each") {
    std::vector<double> outputs(5, 0.0);
    std::vector<double> r(5, 0.5);
    CHECK(decoder_logloss(outputs, r, Likelihood::bernoulli_pixel) ==
          doctest::Approx(5.0 * std::log(2.0)));
  }
  SUBCASE("gaussian perfect reconstruction costs zero") {
    std::vector<double> outputs = {0.3, -1.0, 2.0};
    CHECK(decoder_logloss(outputs, outputs, Likelihood::gaussian_unit) == 0.0);
  }
  SUBCASE("invalid references rejected") {
    std::vector<double> outputs(3, 0.0);
    std::vector<double> two_hot = {1.0, 1.0, 0.0};
    CHECK_THROWS_AS(decoder_logloss(outputs, two_hot, Likelihood::categorical),
                    std::invalid_argument);
    std::vector<double> out_of_range = {0.5, 1.5, 0.0};
    CHECK_THROWS_AS(
        decoder_logloss(outputs, out_of_range, Likelihood::bernoulli_pixel),
        std::invalid_argument);
  }
}

TEST_CASE("gaussian linear gradient is the least-squares outer product") {
  Rng rng(9);
  DecoderModel m = build_decoder(DecoderKind::linear,
                                 Likelihood::gaussian_unit, 3, 2, rng);
  std::vector<double> f = {0.5, -1.0, 2.0};
  std::vector<double> r = {1.0, -0.5};
  const BackpropResult bp = decoder_backprop(m, f, r);
  const auto out = decoder_forward(m, f);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK(bp.grads.w1(i, j) == doctest::Approx((out[i] - r[i]) * f[j]));
    }
    CHECK(bp.grads.b1[i] == doctest::Approx(out[i] - r[i]));
  }
}

TEST_CASE("saturated correct categorical prediction has near-zero gradient") {
  Rng rng(10);
  DecoderModel m = build_decoder(DecoderKind::linear, Likelihood::categorical,
                                 2, 2, rng);
  m.w1.fill(0.0);
  m.b1 = {50.0, -50.0};
  std::vector<double> f = {1.0, 1.0};
  std::vector<double> r = {1.0, 0.0};
  const BackpropResult bp = decoder_backprop(m, f, r);
  CHECK(bp.loss == doctest::Approx(0.0).epsilon(1e-12));
  for (double g : bp.grads.w1.data) CHECK(std::abs(g) < 1e-12);
}

TEST_CASE("backprop matches finite differences across kinds and likelihoods") {
  const CheckResult r = check_decoder_gradients(20, 1e-6);
  INFO(r.detail, " max_err=", r.max_err);
  CHECK(r.pass);
}

TEST_CASE("rate pooling equals a time-tied windowed linear model") {
  Rng rng(14);
  const int n_y = 4, tau_d = 3, n_out = 5;
  DecoderModel rate_model = build_decoder(DecoderKind::linear,
                                          Likelihood::categorical, n_y, n_out,
                                          rng);
  // Tie the windowed model's weights across time offsets.
  DecoderModel tied = build_decoder(DecoderKind::linear,
                                    Likelihood::categorical, n_y * tau_d,
                                    n_out, rng);
  for (int i = 0; i < n_out; ++i) {
    for (int s = 0; s < tau_d; ++s) {
      for (int j = 0; j < n_y; ++j) {
        tied.w1(i, s * n_y + j) = rate_model.w1(i, j);
      }
    }
    tied.b1[i] = rate_model.b1[i];
  }

  WindowBuffer buf(n_y, tau_d);
  Rng srng(15);
  for (int step = 0; step < 6; ++step) {
    std::vector<uint8_t> v(n_y);
    for (int j = 0; j < n_y; ++j) v[j] = static_cast<uint8_t>(srng.bernoulli(0.5));
    window_push(buf, v);
    const auto rate_out = decoder_forward(rate_model, rate_pool(buf));
    const auto tied_out = decoder_forward(tied, buf.features());
    for (int i = 0; i < n_out; ++i) {
      CHECK(std::abs(rate_out[i] - tied_out[i]) <= 1e-12);
    }
  }
}
