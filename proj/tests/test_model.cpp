#include <doctest.h>

#include <cmath>
#include <numbers>

#include "memeguard/fusion_model.hpp"
#include "memeguard/losses.hpp"
#include "memeguard/rng.hpp"
#include "memeguard/synthetic.hpp"
#include "memeguard/trainer.hpp"
#include "support.hpp"

using namespace memeguard;

namespace {

const LossSpec kCE{LossKind::cross_entropy, 2.0};
const LossSpec kFL2{LossKind::focal, 2.0};

struct TinyData {
  std::vector<Example> train, val;
};

TinyData tiny_synthetic(std::size_t n_train, std::size_t n_val, double signal, std::uint64_t seed) {
  SyntheticConfig sc;
  sc.n = n_train + n_val;
  sc.region_dim = 16;
  sc.signal_dims = 8;
  sc.signal = signal;
  sc.n_boxes = 2;
  sc.seed = seed;
  static std::vector<SyntheticDataset> keep;
  keep.push_back(generate_memes(sc));
  const auto& ds = keep.back();
  return {join(carve(ds.split, 0, n_train, SplitName::train), ds.bank),
          join(carve(ds.split, n_train, n_train + n_val, SplitName::dev_unseen), ds.bank)};
}

ModelConfig small_model() {
  ModelConfig m;
  m.vocab_size = 64;
  m.d_model = 8;
  m.n_layers = 1;
  m.n_heads = 2;
  m.d_ff = 16;
  m.max_text_len = 8;
  m.max_boxes = 4;
  m.region_dim = 16;
  m.seed = 3;
  return m;
}

}  // namespace

TEST_CASE("loss values") {
  CHECK(loss_value(1.0, kCE) == 0.0);
  CHECK(loss_value(1.0, kFL2) == 0.0);
  CHECK(loss_value(0.5, kCE) == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
  CHECK(std::abs(loss_value(0.5, kFL2) - 0.25 * std::numbers::ln2) < 1e-15);
  CHECK_THROWS_AS(loss_value(0.0, kCE), std::domain_error);
  CHECK_THROWS_AS(loss_value(1.5, kCE), std::domain_error);
  CHECK_THROWS_AS(loss_value(-0.1, kFL2), std::domain_error);
  const double ps[] = {0.5, 1.0};
  CHECK(batch_loss(ps, kCE) == doctest::Approx(std::numbers::ln2 / 2));
  CHECK_THROWS(LossSpec{LossKind::focal, -1.0}.validate());
  CHECK(loss_kind_from_string("focal") == LossKind::focal);
  CHECK_THROWS(loss_kind_from_string("hinge"));
}

TEST_CASE("focal loss bounds and monotonicity") {
  Rng rng(8);
  const LossSpec fl0{LossKind::focal, 0.0};
  for (int i = 0; i < 1000; ++i) {
    const double p = 1.0 - rng.uniform();  // (0, 1]
    CHECK(loss_value(p, fl0) == loss_value(p, kCE));
    for (double g : {0.5, 1.0, 2.0, 5.0}) {
      const LossSpec fl{LossKind::focal, g};
      CHECK(loss_value(p, fl) <= loss_value(p, kCE));
      if (p < 1.0) CHECK(loss_value(p, fl) < loss_value(p, kCE));
      const double p2 = std::min(1.0, p + 1e-3);
      if (p2 > p) CHECK(loss_value(p2, fl) < loss_value(p, fl));
    }
  }
}

TEST_CASE("loss from logits matches probability form") {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const std::array<double, 2> z{rng.normal() * 3, rng.normal() * 3};
    for (int label : {0, 1}) {
      const double p = std::exp(z[label]) / (std::exp(z[0]) + std::exp(z[1]));
      for (const auto& spec : {kCE, kFL2}) {
        const auto out = loss_from_logits(z, label, spec);
        CHECK(out.p_true == doctest::Approx(p).epsilon(1e-12));
        CHECK(out.loss == doctest::Approx(loss_value(p, spec)).epsilon(1e-10));
        const double h = 1e-6;
        for (int k = 0; k < 2; ++k) {
          auto zp = z, zm = z;
          zp[k] += h;
          zm[k] -= h;
          const double num = (loss_from_logits(zp, label, spec).loss - loss_from_logits(zm, label, spec).loss) / (2 * h);
          CHECK(out.grad[k] == doctest::Approx(num).epsilon(1e-5).scale(1e-2));
        }
      }
    }
  }
  const auto extreme = loss_from_logits({800.0, -800.0}, 1, kCE);
  CHECK(std::isfinite(extreme.loss));
  CHECK(extreme.loss == doctest::Approx(1600.0));
}

TEST_CASE("lr schedule") {
  TrainConfig t;
  t.max_updates = 1000;
  t.warmup_fraction = 0.1;
  const double w = 100;
  CHECK(lr_at(0, t) == 0.0);
  CHECK(lr_at(int(w), t) == doctest::Approx(t.learning_rate));
  CHECK(lr_at(1000, t) == doctest::Approx(0.0).epsilon(1e-20).scale(1e-20));
  CHECK(lr_at(int(w + (1000 - w) / 2), t) == doctest::Approx(t.learning_rate / 2).epsilon(1e-12));
  CHECK(lr_at(50, t) == doctest::Approx(t.learning_rate / 2).epsilon(1e-12));
  // continuity at the warmup boundary
  CHECK(std::abs(lr_at(99, t) - lr_at(100, t)) < 1e-3 * t.learning_rate);
  CHECK(std::abs(lr_at(101, t) - lr_at(100, t)) < 1e-3 * t.learning_rate);
  for (int s = 1; s < 1000; ++s) CHECK(lr_at(s, t) > 0.0);
}

TEST_CASE("presets") {
  ModelConfig m;
  TrainConfig t;
  apply_preset("visualbert", 100, m, t);
  CHECK(t.learning_rate == 5e-5);
  CHECK(t.batch_size == 32);
  CHECK(t.max_updates == 3000);
  CHECK(t.eval_every == 50);
  apply_preset("uniter-appendix", 8500, m, t);
  CHECK(t.learning_rate == 1e-5);
  CHECK(t.batch_size == 8);
  CHECK(m.dropout_rate == 0.1);
  CHECK(t.max_updates == 5 * 1063);
  CHECK_THROWS(apply_preset("bogus", 1, m, t));
}

TEST_CASE("config validation") {
  ModelConfig m = small_model();
  m.n_heads = 3;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = small_model();
  m.dropout_rate = 1.0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = small_model();
  m.max_boxes = 121;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  TrainConfig t;
  t.eval_every = 0;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  t = {};
  t.max_updates = 10;
  t.eval_every = 20;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  t = {};
  t.learning_rate = 0;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
}

TEST_CASE("text encoding") {
  const auto cfg = small_model();
  const auto a = encode_text("Hello, world", cfg);
  CHECK(a == encode_text("hello world", cfg));
  CHECK(a.size() == 2);
  for (int t : a) CHECK((t >= 2 && t < cfg.vocab_size));
  CHECK(encode_text("!!!", cfg) == std::vector<int>{kUnknownToken});
  CHECK(encode_text("a b c d e f g h i j k", cfg).size() == std::size_t(cfg.max_text_len));
}

TEST_CASE("forward contracts") {
  const auto cfg = fixtures::tiny_model();
  FusionModel model(cfg);
  Rng rng(31);
  CHECK(model.parameter_count() > 0);
  CHECK(FusionModel::parameter_names(cfg).size() == model.params().size());

  for (int i = 0; i < 20; ++i) {
    const auto in = fixtures::random_input(cfg, rng, 1 + int(rng.below(6)), 1 + int(rng.below(3)));
    const auto p = model.class_probabilities(in);
    CHECK(std::isfinite(p[0]));
    CHECK(p[0] > 0.0);
    CHECK(p[1] > 0.0);
    CHECK(std::abs(p[0] + p[1] - 1.0) < 1e-9);
    CHECK(model.predict_proba(in) == p[1]);
  }

  SUBCASE("zero head gives one half") {
    model.zero_head();
    const auto in = fixtures::random_input(cfg, rng, 4, 3);
    CHECK(model.predict_proba(in) == 0.5);
  }
  SUBCASE("box order does not matter") {
    for (int trial = 0; trial < 20; ++trial) {
      auto in = fixtures::random_input(cfg, rng, 3, 3);
      const double before = model.predict_proba(in);
      std::vector<int> perm{0, 1, 2};
      rng.shuffle(std::span(perm));
      Mat shuffled(in.regions.rows(), in.regions.cols());
      for (int r = 0; r < 3; ++r) shuffled.row(r) = in.regions.row(perm[r]);
      in.regions = shuffled;
      CHECK(std::abs(model.predict_proba(in) - before) < 1e-6);
    }
  }
  SUBCASE("token order does matter") {
    auto in = fixtures::random_input(cfg, rng, 4, 2);
    in.tokens = {2, 3, 4, 5};
    const double before = model.predict_proba(in);
    in.tokens = {5, 4, 3, 2};
    CHECK(model.predict_proba(in) != before);
  }
}

TEST_CASE("encode rejects bad shapes") {
  const auto cfg = fixtures::tiny_model();
  Example ex;
  ex.record = {1, "a", "some text", 1};
  ex.features = std::make_shared<RegionMatrix>(RegionMatrix{1, 5, std::vector<float>(5, 0.0f)});
  CHECK_THROWS_AS(encode(ex, cfg), std::invalid_argument);
  ex.features = std::make_shared<RegionMatrix>(RegionMatrix{4, 6, std::vector<float>(24, 0.0f)});
  CHECK_THROWS_AS(encode(ex, cfg), std::invalid_argument);
  ex.features = std::make_shared<RegionMatrix>(RegionMatrix{2, 6, std::vector<float>(12, 0.5f)});
  const auto in = encode(ex, cfg);
  CHECK(in.regions.rows() == 2);
  CHECK(in.regions(1, 5) == 0.5);
}

TEST_CASE("gradients match finite differences") {
  const auto cfg = fixtures::tiny_model();
  const FusionModel model(cfg);
  Rng rng(77);
  std::vector<EncodedInput> inputs;
  for (int i = 0; i < 3; ++i) inputs.push_back(fixtures::random_input(cfg, rng, 2 + i, 1 + i));
  const std::vector<int> labels{1, 0, 1};
  CHECK(fixtures::gradient_check(model, inputs, labels, kCE) < 1e-4);
  CHECK(fixtures::gradient_check(model, inputs, labels, kFL2) < 1e-4);
}

TEST_CASE("dropout is seeded") {
  auto cfg = fixtures::tiny_model();
  cfg.dropout_rate = 0.3;
  const FusionModel model(cfg);
  Rng rng(5);
  const auto in = fixtures::random_input(cfg, rng, 3, 2);
  auto g1 = model.zeros_like(), g2 = model.zeros_like(), g3 = model.zeros_like();
  Rng d1(9), d2(9), d3(10);
  const double l1 = model.accumulate_gradients(in, 1, kCE, 1.0, g1, &d1);
  const double l2 = model.accumulate_gradients(in, 1, kCE, 1.0, g2, &d2);
  const double l3 = model.accumulate_gradients(in, 1, kCE, 1.0, g3, &d3);
  CHECK(l1 == l2);
  CHECK(l1 != l3);
  auto g0 = model.zeros_like();
  const double l0 = model.accumulate_gradients(in, 1, kCE, 1.0, g0, nullptr);
  CHECK(l0 == doctest::Approx(-std::log(model.class_probabilities(in)[1])).epsilon(1e-12));
}

TEST_CASE("checkpoint round trip") {
  const auto cfg = fixtures::tiny_model(12);
  FusionModel model(cfg);
  const auto bytes = encode_checkpoint(model);
  CHECK(bytes.size() == 4 + 4 + 8 * 4 + 8 + 8 + 8 + 4 * model.parameter_count());
  const auto back = decode_checkpoint(bytes);
  CHECK(back.config() == cfg);
  CHECK(encode_checkpoint(back) == bytes);
  Rng rng(2);
  const auto in = fixtures::random_input(cfg, rng, 3, 2);
  CHECK(back.predict_proba(in) == doctest::Approx(model.predict_proba(in)).epsilon(1e-5));

  auto bad = bytes;
  bad[0] = std::byte{'X'};
  CHECK_THROWS(decode_checkpoint(bad));
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS(decode_checkpoint(truncated));
  auto version = bytes;
  version[4] = std::byte{2};
  CHECK_THROWS(decode_checkpoint(version));
}

TEST_CASE("training contracts") {
  const auto data = tiny_synthetic(96, 48, 1.0, 21);
  const auto mcfg = small_model();
  TrainConfig tcfg;
  tcfg.learning_rate = 3e-3;
  tcfg.batch_size = 8;
  tcfg.max_updates = 60;
  tcfg.eval_every = 20;
  tcfg.seed = 4;

  const auto a = train(data.train, data.val, mcfg, tcfg, kCE);
  const auto b = train(data.train, data.val, mcfg, tcfg, kCE);
  CHECK(a.history == b.history);
  REQUIRE(a.history.size() == 3);
  CHECK(a.history.back().step == 60);

  double best = 0.0;
  for (const auto& h : a.history) best = std::max(best, h.val_auroc);
  CHECK(a.best_val_auroc == best);
  CHECK(predict_probas(a.best, data.val) == predict_probas(b.best, data.val));
  CHECK(a.best_val_auroc > 0.8);

  const LossSpec fl0{LossKind::focal, 0.0};
  CHECK(train(data.train, data.val, mcfg, tcfg, fl0).history == a.history);

  SUBCASE("eval at the final update when not a multiple") {
    auto t2 = tcfg;
    t2.max_updates = 50;
    const auto c = train(data.train, data.val, mcfg, t2, kCE);
    REQUIRE(c.history.size() == 3);
    CHECK(c.history[2].step == 50);
  }
  SUBCASE("unlabeled or empty input") {
    auto unlabeled = data.train;
    unlabeled[3].record.label.reset();
    CHECK_THROWS(train(unlabeled, data.val, mcfg, tcfg, kCE));
    CHECK_THROWS(train({}, data.val, mcfg, tcfg, kCE));
    CHECK_THROWS(train(data.train, {}, mcfg, tcfg, kCE));
  }
  SUBCASE("history csv") {
    const auto csv = history_to_csv(a.history);
    CHECK(csv.rfind("step,train_loss,val_auroc,val_acc,lr\n", 0) == 0);
  }
  SUBCASE("predict keeps order") {
    const auto preds = predict(a.best, data.val, "m");
    REQUIRE(preds.size() == data.val.size());
    for (std::size_t i = 0; i < preds.size(); ++i) CHECK(preds.rows[i].id == data.val[i].record.id);
    CHECK(predict(a.best, {}, "m").size() == 0);
  }
}
