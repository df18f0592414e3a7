#include <doctest.h>

#include <cmath>
#include <random>

#include "coa/format.hpp"
#include "coa/policy.hpp"
#include "oracles.hpp"

using namespace coa;

namespace {

Vocabulary vocab_of(std::size_t k) {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < k; ++i) v.push_back("tool" + std::string(1, static_cast<char>('a' + i)));
  return Vocabulary("generic", v);
}

}  // namespace

TEST_CASE("zero logits sample each entry half the time") {
  const auto p = PolicyParams::subset_bernoulli(vocab_of(10));
  Rng rng(7);
  const auto draws = sample(p, 100000, 1.0, rng);
  std::vector<double> freq(10, 0.0);
  for (const auto& d : draws) {
    for (std::size_t k = 0; k < 10; ++k) freq[k] += d.choice[k];
  }
  for (double f : freq) CHECK(std::abs(f / 1e5 - 0.5) < 0.01);
}

TEST_CASE("saturated logits are deterministic") {
  auto p = PolicyParams::subset_bernoulli(vocab_of(6));
  for (std::size_t k = 0; k < 6; ++k) p.theta[k] = k % 2 ? -30.0 : 30.0;
  Rng rng(1);
  for (const auto& d : sample(p, 1000, 1.0, rng)) CHECK(d.selection == EntitySet(6, {0, 2, 4}));
}

TEST_CASE("sampling is reproducible from the seed") {
  const auto p = PolicyParams::categorical_sequence(vocab_of(5), 3, 0.2);
  Rng a(99), b(99);
  const auto x = sample(p, 50, 0.7, a), y = sample(p, 50, 0.7, b);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(x[i].choice == y[i].choice);
}

TEST_CASE("log-probability examples") {
  const auto p = PolicyParams::subset_bernoulli(vocab_of(10));
  const auto r = response_for(p, EntitySet(10, {1, 4, 7}));
  const auto lg = logprob_and_grad(p, r);
  CHECK(std::abs(lg.logprob - 10 * std::log(0.5)) < 1e-12);
  for (std::size_t k = 0; k < 10; ++k) CHECK(lg.grad[k] == (k == 1 || k == 4 || k == 7 ? 0.5 : -0.5));

  auto seq = PolicyParams::categorical_sequence(vocab_of(3), 2);
  const auto s = response_for(seq, EntitySet(3, {2}));
  CHECK(s.choice == std::vector<int>{2, 3});
  CHECK(std::abs(logprob_and_grad(seq, s).logprob - 2 * std::log(0.25)) < 1e-12);
  CHECK_THROWS_AS(response_for(seq, EntitySet(3, {0, 1, 2})), std::invalid_argument);
}

TEST_CASE("analytic gradients match finite differences") {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> th(-3, 3), temp(0.3, 2.0);
  for (int iter = 0; iter < 200; ++iter) {
    const bool seq = iter % 2 == 1;
    PolicyParams p = seq ? PolicyParams::categorical_sequence(vocab_of(4), 3) : PolicyParams::subset_bernoulli(vocab_of(7));
    for (auto& t : p.theta) t = th(g);
    const double t = temp(g);
    Rng rng(static_cast<std::uint64_t>(iter));
    const auto r = sample(p, 1, t, rng).front();
    const auto analytic = logprob_and_grad(p, r, t).grad;
    const auto numeric = oracle::fd_gradient(
        [&](const std::vector<double>& theta) {
          PolicyParams q = p;
          q.theta = theta;
          return logprob_and_grad(q, r, t).logprob;
        },
        p.theta);
    CHECK(oracle::relative_error(analytic, numeric) < 1e-6);
  }
}

TEST_CASE("probabilities sum to one over all outcomes") {
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> th(-2, 2);
  for (std::size_t k : {1u, 4u, 12u}) {
    auto p = PolicyParams::subset_bernoulli(vocab_of(k));
    for (auto& t : p.theta) t = th(g);
    long double total = 0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
      std::vector<std::size_t> m;
      for (std::size_t i = 0; i < k; ++i) {
        if (mask >> i & 1) m.push_back(i);
      }
      total += std::exp(static_cast<long double>(logprob_and_grad(p, response_for(p, EntitySet(k, m)), 0.8).logprob));
    }
    CHECK(std::abs(static_cast<double>(total) - 1.0) < 1e-9);
  }

  auto seq = PolicyParams::categorical_sequence(vocab_of(3), 3);
  for (auto& t : seq.theta) t = th(g);
  long double total = 0;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      for (int c = 0; c < 4; ++c) {
        ToyResponse r{{a, b, c}, EntitySet(3, {})};
        total += std::exp(static_cast<long double>(logprob_and_grad(seq, r, 1.3).logprob));
      }
    }
  }
  CHECK(std::abs(static_cast<double>(total) - 1.0) < 1e-9);
}

TEST_CASE("temperature flattens toward one half") {
  auto p = PolicyParams::subset_bernoulli(vocab_of(3));
  p.theta = {2.0, -1.0, 0.0};
  const auto cold = inclusion_probabilities(p, 0.5), warm = inclusion_probabilities(p, 2.0);
  CHECK(cold[0] > warm[0]);
  CHECK(warm[0] > 0.5);
  CHECK(cold[1] < warm[1]);
  CHECK(warm[1] < 0.5);
  CHECK(cold[2] == 0.5);
  CHECK(warm[2] == 0.5);
  CHECK_THROWS_AS(inclusion_probabilities(p, 0.0), std::invalid_argument);
}

TEST_CASE("rendered responses satisfy the requested format") {
  const auto v = vocab_of(5);
  auto p = PolicyParams::subset_bernoulli(v);
  Rng rng(2);
  for (const auto& r : sample(p, 200, 1.0, rng)) {
    const std::string coa_text = render_response(r, GateMode::Coa, v);
    REQUIRE(parse_coa(coa_text));
    CHECK(extract_entities(extract_answer(coa_text), v) == r.selection);
    const std::string cot_text = render_response(r, GateMode::Cot, v);
    CHECK_FALSE(parse_coa(cot_text));
    ParseOptions cot;
    cot.mode = FormatMode::Cot;
    CHECK(parse_coa(cot_text, cot));
  }
  CHECK(render_response(response_for(p, EntitySet(5, {0, 3})), GateMode::None, v) == "toola, toold");
}

TEST_CASE("imitation steps") {
  const auto v = vocab_of(4);
  const auto p = PolicyParams::subset_bernoulli(v);
  const auto target = response_for(p, EntitySet(4, {0, 2}));
  const auto next = sft_step(p, target, 1.0);
  CHECK(next.theta == std::vector<double>{0.5, -0.5, 0.5, -0.5});
  CHECK(sft_step(p, target, 0.0).theta == p.theta);

  auto q = p;
  for (int i = 0; i < 200; ++i) q = sft_step(q, target, 0.5);
  CHECK(greedy_selection(q) == EntitySet(4, {0, 2}));
  CHECK(task_reward(greedy_selection(q), EntitySet(4, {0, 2}), TaskMetric::F1) == 1.0);

  auto s = PolicyParams::categorical_sequence(v, 3);
  const auto starget = response_for(s, EntitySet(4, {1, 3}));
  for (int i = 0; i < 300; ++i) s = sft_step(s, starget, 0.5);
  CHECK(greedy_selection(s) == EntitySet(4, {1, 3}));
}

TEST_CASE("parameters are clamped and validated") {
  ToyPolicy pol(PolicyParams::subset_bernoulli(vocab_of(2)));
  pol.set_parameters({100.0, -100.0});
  CHECK(pol.parameters() == std::vector<double>{kLogitClamp, -kLogitClamp});
  CHECK_THROWS_AS(pol.set_parameters({1.0}), std::invalid_argument);
  CHECK_THROWS_AS(pol.set_parameters({NAN, 0.0}), std::invalid_argument);
  auto copy = pol.clone();
  pol.set_parameters({0.0, 0.0});
  CHECK(copy->parameters() == std::vector<double>{kLogitClamp, -kLogitClamp});
}
