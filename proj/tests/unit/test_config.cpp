#include <doctest.h>

#include "coa/config.hpp"

using namespace coa;

TEST_CASE("TOML subset values") {
  const auto doc = parse_toml_subset(R"(# run config
[grpo]
group_size = 8
learning_rate = 5e-1   # toy scale
clip_epsilon = 0.2

[reward]
format_mode = "coa"
tags = ["a", 'b\n', 3, true, -2.5,]

[run]
seed = 1_000
)");
  CHECK(doc["grpo"]["group_size"] == 8);
  CHECK(doc["grpo"]["learning_rate"] == 0.5);
  CHECK(doc["reward"]["format_mode"] == "coa");
  CHECK(doc["reward"]["tags"] == nlohmann::json::array({"a", "b\\n", 3, true, -2.5}));
  CHECK(doc["run"]["seed"] == 1000);
}

TEST_CASE("TOML subset errors carry the line number") {
  CHECK_THROWS_WITH_AS(parse_toml_subset("[grpo]\ngroup_size = eight\n"), doctest::Contains("line 2"), ConfigError);
  CHECK_THROWS_AS(parse_toml_subset("seed = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml_subset("[run]\nseed = 1\nseed = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml_subset("[run]\n[run]\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml_subset("[run]\nmode = \"sft\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml_subset("[run]\nseed = 1 2\n"), ConfigError);
}

TEST_CASE("run config schema") {
  const auto c = RunConfig::from_document(parse_toml_subset(
      "[grpo]\nlearning_rate = 0.5\nkl_beta = 0\n[run]\nseed = 7\npolicy = \"categorical_sequence\"\nmode = \"sft\"\n"));
  CHECK(c.grpo.learning_rate == 0.5);
  CHECK(c.grpo.kl_beta == 0.0);
  CHECK(c.grpo.group_size == 8);
  CHECK(c.grpo.seed == 7);
  CHECK(c.run.policy == PolicyKind::CategoricalSequence);
  CHECK(c.run.mode == RunMode::Sft);

  CHECK_THROWS_WITH_AS(RunConfig::from_document(parse_toml_subset("[grpo]\ngroup_sise = 8\n")),
                       doctest::Contains("grpo.group_sise"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_document(parse_toml_subset("[model]\nname = \"x\"\n")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_document(parse_toml_subset("[grpo]\ngroup_size = 1\n")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_document(parse_toml_subset("[grpo]\ngroup_size = 2.5\n")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_document(parse_toml_subset("[run]\nseed = -1\n")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_document(parse_toml_subset("[reward]\nformat_mode = \"xml\"\n")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_document(parse_toml_subset("[data]\nuse_split = \"val\"\n")), ConfigError);
}

TEST_CASE("resolved config round trips") {
  const auto c = RunConfig::from_document(parse_toml_subset(
      "[grpo]\ntemperature = 0.7\ninner_updates = 3\n[reward]\ntask_metric = \"exact_match\"\n"
      "format_mode = \"cot\"\n[data]\nn_train = 20\nn_test = 5\n[run]\nseed = 3\ninit_logit = -1.5\n"));
  const auto j = c.resolved();
  const auto back = RunConfig::from_document(j);
  CHECK(back.resolved() == j);
  CHECK(j["grpo"]["inner_updates"] == 3);
  CHECK(j["reward"]["task_metric"] == "exact_match");
  CHECK(j["run"]["init_logit"] == -1.5);
}
