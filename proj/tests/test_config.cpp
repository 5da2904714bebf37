#include "doctest.h"
#include "dact/config.hpp"

using namespace dact;

TEST_CASE("swda profile") {
  TrainConfig c = TrainConfig::profile_defaults("swda");
  CHECK(c.optimizer == "adam");
  CHECK(c.lr == 0.01);
  CHECK(c.patience == 20);
  CHECK(c.lr_factor == 0.5);
  CHECK(c.weight_decay == 1e-5);
  CHECK(c.dropout == 0.2);
  CHECK(c.max_tokens == 20);
  CHECK(c.encoder_hidden == 128);
  CHECK(c.decoder_hidden == 48);
  CHECK(c.clip_norm == 5.0);
  CHECK(c.context == 5);
  CHECK(c.emb_dim == 300);
  CHECK(c.batch_size == 32);
}

TEST_CASE("mrda profile") {
  TrainConfig c = TrainConfig::profile_defaults("mrda");
  CHECK(c.optimizer == "adamw");
  CHECK(c.lr == 0.001);
  CHECK(c.patience == 15);
  CHECK(c.weight_decay == 5e-5);
  CHECK(c.dropout == 0.3);
  CHECK(c.max_tokens == 30);
  CHECK(c.encoder_hidden == 40);
  CHECK(c.decoder_hidden == 400);
  CHECK_THROWS_AS(TrainConfig::profile_defaults("ami"), Error);
}

TEST_CASE("model config follows the training config") {
  TrainConfig c = TrainConfig::profile_defaults("swda");
  c.encoder = "vgru";
  c.attention = "soft";
  ModelConfig m = c.model_config(1000, 42);
  CHECK(m.kind == ModelKind::Seq2Seq);
  CHECK(m.encoder.kind == EncoderKind::VGRU);
  CHECK(m.encoder.layers() == 2);
  CHECK(m.encoder.sentence_hidden == 128);
  CHECK(m.decoder.hidden == 48);
  CHECK(m.decoder.encoder_dim == 256);
  CHECK(m.decoder.attention == AttentionMode::SoftGuided);
  CHECK(m.decoder.num_labels == 42);
  ModelConfig back = ModelConfig::from_json(m.to_json());
  CHECK(back.to_json() == m.to_json());
}

TEST_CASE("resolution order") {
  IniFile ini = parse_ini(
      "profile = mrda  # comment\n"
      "epochs = 7\n"
      "lr = 0.5\n"
      "; another comment\n"
      "[mrda]\n"
      "lr = 0.002\n"
      "[swda]\n"
      "lr = 0.9\n");
  TrainConfig c = resolve_config(ini, {});
  CHECK(c.profile == "mrda");
  CHECK(c.optimizer == "adamw");
  CHECK(c.epochs == 7);
  CHECK(c.lr == 0.002);
  TrainConfig o = resolve_config(ini, {parse_override("lr=0.003"), parse_override("beam_inf = 2")});
  CHECK(o.lr == 0.003);
  CHECK(o.beam_inf == 2);
  TrainConfig p = resolve_config(ini, {parse_override("profile=swda")});
  CHECK(p.lr == 0.9);
  CHECK(p.optimizer == "adam");
}

TEST_CASE("table 5 grid points are reachable by overrides") {
  for (int bt : {2, 5})
    for (int bi : {1, 2, 5}) {
      TrainConfig c = resolve_config(IniFile{}, {{"beam_train", std::to_string(bt)}, {"beam_inf", std::to_string(bi)}});
      CHECK(c.beam_train == bt);
      CHECK(c.beam_inf == bi);
    }
}

TEST_CASE("config errors") {
  CHECK_THROWS_WITH_AS(resolve_config(parse_ini("learning_rate = 1\n"), {}), doctest::Contains("valid keys"), Error);
  CHECK_THROWS_WITH_AS(resolve_config(IniFile{}, {{"bogus", "1"}}), doctest::Contains("beam_inf"), Error);
  CHECK_THROWS_AS(resolve_config(IniFile{}, {{"lr", "abc"}}), Error);
  CHECK_THROWS_AS(resolve_config(IniFile{}, {{"lr", "-1"}}), Error);
  CHECK_THROWS_AS(resolve_config(IniFile{}, {{"lr_factor", "1.5"}}), Error);
  CHECK_THROWS_AS(resolve_config(IniFile{}, {{"attention", "dot"}}), Error);
  CHECK_THROWS_AS(resolve_config(IniFile{}, {{"cost", "squared"}}), Error);
  CHECK_THROWS_AS(parse_override("novalue"), Error);
  CHECK_THROWS_AS(parse_ini("[swda\n"), Error);
  CHECK_THROWS_AS(parse_ini("just words\n"), Error);
  CHECK_THROWS_AS(load_config("/nonexistent/x.cfg", {}), Error);
}

TEST_CASE("get and set round-trip every key") {
  TrainConfig c = TrainConfig::profile_defaults("synthetic");
  TrainConfig d = TrainConfig::profile_defaults("swda");
  for (const auto& k : TrainConfig::keys()) d.set(k, c.get(k));
  for (const auto& k : TrainConfig::keys()) CHECK(d.get(k) == c.get(k));
  CHECK(c.cost_kind() == CostKind::ZeroOne);
}
