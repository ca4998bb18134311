#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "finmwe/crf.hpp"
#include "testutil.hpp"

using namespace finmwe;

namespace {

feat::AttributeMatrix token_matrix(const std::vector<std::string>& tokens) {
  feat::AttributeMatrix m;
  m.families = {"f1"};
  m.columns = {"f1"};
  for (const auto& t : tokens) m.values.push_back({t});
  return m;
}

}  // namespace

TEST_SUITE("crf") {

TEST_CASE("template ids round-trip") {
  crf::FeatureTemplate t;
  t.conjuncts = {{"f1", -2}, {"pos", 1}};
  t.context = crf::FeatureTemplate::LabelContext::PrevCurrent;
  CHECK(t.id() == "b:f1@-2+pos@1");
  auto back = crf::FeatureTemplate::parse(t.id());
  CHECK(back.id() == t.id());
}

TEST_CASE("compile instantiates unigram and boundary features") {
  auto m = token_matrix({"a", "b"});
  crf::CrfModel model;
  model.labels = {"O", "B-agent"};
  SUBCASE("one template at offset 0") {
    model.templates = {{{{"f1", 0}}, crf::FeatureTemplate::LabelContext::Current}};
    auto seq = crf::compile(m, model, true);
    REQUIRE(seq.length() == 2);
    CHECK(model.obs.size() == 2);
    CHECK(model.obs.name(seq.obs[0][0]) == "f1@0=a");
    CHECK(model.obs.name(seq.obs[1][0]) == "f1@0=b");
  }
  SUBCASE("offset -1 at position 0 hits the boundary sentinel") {
    model.templates = {{{{"f1", -1}}, crf::FeatureTemplate::LabelContext::Current}};
    auto seq = crf::compile(m, model, true);
    CHECK(model.obs.name(seq.obs[0][0]) == "f1@-1=_BOS_");
    CHECK(model.obs.name(seq.obs[1][0]) == "f1@-1=a");
  }
  SUBCASE("two-conjunct template counts match brute enumeration") {
    feat::AttributeMatrix pm;
    pm.families = {"pos"};
    pm.columns = {"pos"};
    pm.values = {{"DT"}, {"NN"}, {"VB"}};
    model.templates = {
        {{{"pos", 0}, {"pos", 1}}, crf::FeatureTemplate::LabelContext::Current}};
    auto seq = crf::compile(pm, model, true);
    // Brute enumeration of (value@t, value@t+1) pairs incl. one EOS pair.
    CHECK(model.obs.size() == 3);
    CHECK(model.obs.name(seq.obs[0][0]) == std::string("pos@0+pos@1=DT") +
                                               '\x1f' + "NN");
    CHECK(model.obs.name(seq.obs[2][0]) == std::string("pos@0+pos@1=VB") +
                                               '\x1f' + "_EOS_");
  }
  SUBCASE("unknown attribute family is rejected") {
    model.templates = {{{{"f16", 0}}, crf::FeatureTemplate::LabelContext::Current}};
    CHECK_THROWS_AS(crf::compile(m, model, true), crf::UnknownAttribute);
  }
}

TEST_CASE("log partition of the zero model is T log L") {
  std::mt19937_64 rng(1);
  for (int order : {1, 2}) {
    auto inst = testutil::random_instance(rng, 1, 6, 4, order);
    std::fill(inst.model.weights.begin(), inst.model.weights.end(), 0.0);
    const auto& seq = inst.seqs[0];
    double expect = static_cast<double>(seq.length()) * std::log(4.0);
    CHECK(crf::log_partition(inst.model, seq) ==
          doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("forward log-partition matches exhaustive enumeration") {
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 60; ++rep) {
    int order = rep % 2 ? 2 : 1;
    int labels = 2 + static_cast<int>(rng() % 3);
    auto inst = testutil::random_instance(rng, 1, 6, labels, order, 6,
                                          /*with_obs2=*/rep % 3 == 0);
    auto bf = testutil::brute_force(inst.model, inst.seqs[0]);
    CHECK(crf::log_partition(inst.model, inst.seqs[0]) ==
          doctest::Approx(bf.log_z).epsilon(1e-10));
  }
}

TEST_CASE("viterbi equals exhaustive argmax") {
  std::mt19937_64 rng(43);
  for (int rep = 0; rep < 60; ++rep) {
    int order = rep % 2 ? 2 : 1;
    int labels = 2 + static_cast<int>(rng() % 3);
    auto inst = testutil::random_instance(rng, 1, 6, labels, order, 6,
                                          /*with_obs2=*/rep % 3 == 1);
    auto bf = testutil::brute_force(inst.model, inst.seqs[0]);
    auto path = crf::viterbi(inst.model, inst.seqs[0]);
    double score = crf::sequence_score(inst.model, inst.seqs[0], path);
    CHECK(score == doctest::Approx(bf.max_score).epsilon(1e-12));
  }
}

TEST_CASE("zero weights decode to label index 0 everywhere") {
  std::mt19937_64 rng(2);
  for (int order : {1, 2}) {
    auto inst = testutil::random_instance(rng, 1, 6, 3, order);
    std::fill(inst.model.weights.begin(), inst.model.weights.end(), 0.0);
    for (int y : crf::viterbi(inst.model, inst.seqs[0])) CHECK(y == 0);
  }
}

TEST_CASE("posterior marginals sum to one at every position") {
  std::mt19937_64 rng(44);
  for (int rep = 0; rep < 20; ++rep) {
    int order = rep % 2 ? 2 : 1;
    auto inst = testutil::random_instance(rng, 1, 7, 3, order);
    auto post = crf::posterior_marginals(inst.model, inst.seqs[0]);
    for (const auto& row : post) {
      double s = 0;
      for (double p : row) {
        s += p;
        CHECK(p >= 0.0);
        CHECK(p <= 1.0 + 1e-12);
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("expected feature counts match brute-force expectations") {
  // Gradient at w of the unpenalized log-likelihood is observed - expected;
  // enumerate sequences to compute expectations directly.
  std::mt19937_64 rng(45);
  auto inst = testutil::random_instance(rng, 1, 5, 3, 1, 4, false, true);
  inst.model.gaussian_variance = std::numeric_limits<double>::infinity();
  const auto& seq = inst.seqs[0];
  const auto& m = inst.model;
  const int T = static_cast<int>(seq.length());
  const int L = m.label_count();

  // Enumerate all labelings to get exact expectations.
  std::vector<double> expected(m.weights.size(), 0.0);
  std::vector<int> y(T, 0);
  double log_z = testutil::brute_force(m, seq).log_z;
  for (;;) {
    double pr = std::exp(crf::sequence_score(m, seq, y) - log_z);
    for (int t = 0; t < T; ++t) {
      for (int o : seq.obs[t]) expected[m.em_slot(o, y[t])] += pr;
      if (t >= 1) expected[m.tr_slot(y[t - 1], y[t])] += pr;
    }
    int t = T - 1;
    while (t >= 0 && ++y[t] == L) y[t--] = 0;
    if (t < 0) break;
  }
  std::vector<double> grad;
  crf::loglik_and_gradient(m, inst.seqs, grad);
  std::vector<double> observed(m.weights.size(), 0.0);
  for (int t = 0; t < T; ++t) {
    for (int o : seq.obs[t]) observed[m.em_slot(o, seq.gold[t])] += 1.0;
    if (t >= 1) observed[m.tr_slot(seq.gold[t - 1], seq.gold[t])] += 1.0;
  }
  for (std::size_t k = 0; k < grad.size(); ++k)
    CHECK(grad[k] == doctest::Approx(observed[k] - expected[k]).epsilon(1e-8));
}

TEST_CASE("analytic gradient matches central finite differences") {
  std::mt19937_64 rng(46);
  for (int rep = 0; rep < 4; ++rep) {
    int order = rep % 2 ? 2 : 1;
    auto inst = testutil::random_instance(rng, 3, 5, 3, order, 5,
                                          rep >= 2, true);
    std::vector<double> grad;
    crf::loglik_and_gradient(inst.model, inst.seqs, grad);
    auto fd = testutil::fd_gradient(inst.model, inst.seqs);
    for (std::size_t k = 0; k < grad.size(); ++k)
      CHECK(std::abs(grad[k] - fd[k]) <=
            1e-5 * std::max(1.0, std::abs(grad[k])));
  }
}

TEST_CASE("infinite variance recovers the unpenalized gradient") {
  std::mt19937_64 rng(47);
  auto inst = testutil::random_instance(rng, 2, 4, 3, 1, 5, false, true);
  std::vector<double> g_pen, g_unpen;
  crf::loglik_and_gradient(inst.model, inst.seqs, g_pen);
  auto unpen = inst.model;
  unpen.gaussian_variance = std::numeric_limits<double>::infinity();
  crf::loglik_and_gradient(unpen, inst.seqs, g_unpen);
  for (std::size_t k = 0; k < g_pen.size(); ++k)
    CHECK(g_unpen[k] == doctest::Approx(
              g_pen[k] + inst.model.weights[k] / 10.0).epsilon(1e-12));
}

TEST_CASE("zero-weight single-token gradient is observed minus uniform") {
  crf::CrfModel m;
  m.labels = {"O", "B-agent"};
  m.obs.intern("f1@0=we");
  m.obs.freeze();
  m.obs2.freeze();
  m.gaussian_variance = std::numeric_limits<double>::infinity();
  m.resize_weights();
  crf::CompiledSequence s;
  s.obs = {{0}};
  s.obs2 = {{}};
  s.gold = {1};
  CHECK(crf::log_partition(m, s) == doctest::Approx(std::log(2.0)));
  std::vector<double> grad;
  double ll = crf::loglik_and_gradient(m, {s}, grad);
  CHECK(ll == doctest::Approx(-std::log(2.0)));
  CHECK(grad[m.em_slot(0, 1)] == doctest::Approx(0.5));
  CHECK(grad[m.em_slot(0, 0)] == doctest::Approx(-0.5));
}

TEST_CASE("order-2 model with zero trigram weights scores like order 1") {
  std::mt19937_64 rng(48);
  auto inst = testutil::random_instance(rng, 1, 6, 3, 1, 6);
  crf::CrfModel m2 = inst.model;
  m2.order = 2;
  m2.weights.resize(m2.weight_count(), 0.0);  // appended trigram block

  std::uniform_int_distribution<int> len_dist(1, 6);
  std::uniform_int_distribution<int> obs_dist(0, 5);
  for (int rep = 0; rep < 50; ++rep) {
    crf::CompiledSequence seq;
    int len = len_dist(rng);
    seq.obs.resize(len);
    seq.obs2.resize(len);
    for (int t = 0; t < len; ++t) seq.obs[t].push_back(obs_dist(rng));
    auto p1 = crf::viterbi(inst.model, seq);
    auto p2 = crf::viterbi(m2, seq);
    CHECK(p1 == p2);
    CHECK(crf::sequence_score(inst.model, seq, p1) ==
          crf::sequence_score(m2, seq, p2));
    CHECK(crf::log_partition(inst.model, seq) ==
          doctest::Approx(crf::log_partition(m2, seq)).epsilon(1e-12));
  }
}

TEST_CASE("training learns a token-determined labeling") {
  // Tokens "we" and "company" are always agents; everything else is O.
  std::mt19937_64 rng(49);
  const std::vector<std::string> vocab = {"we",     "company", "profit",
                                          "rose",   "margin",  "will",
                                          "improve", "sharply"};
  auto make_corpus = [&](int n) {
    std::pair<std::vector<feat::AttributeMatrix>,
              std::vector<std::vector<std::string>>>
        corpus;
    for (int k = 0; k < n; ++k) {
      int len = 3 + static_cast<int>(rng() % 5);
      std::vector<std::string> toks, tags;
      for (int t = 0; t < len; ++t) {
        const auto& w = vocab[rng() % vocab.size()];
        toks.push_back(w);
        tags.push_back(w == "we" || w == "company" ? "B-agent" : "O");
      }
      corpus.first.push_back(token_matrix(toks));
      corpus.second.push_back(tags);
    }
    return corpus;
  };
  auto train_set = make_corpus(60);
  auto test_set = make_corpus(20);

  crf::TrainConfig cfg;
  cfg.max_iterations = 200;
  cfg.gaussian_variance = 10.0;
  cfg.order = 1;
  auto model = crf::train(train_set.first, train_set.second, cfg);

  long correct = 0, total = 0;
  for (std::size_t k = 0; k < test_set.first.size(); ++k) {
    auto seq = crf::compile(test_set.first[k], model, false);
    auto tags = crf::viterbi_tags(model, seq);
    for (std::size_t t = 0; t < tags.size(); ++t) {
      ++total;
      if (tags[t] == test_set.second[k][t]) ++correct;
    }
  }
  CHECK(correct == total);
  CHECK(model.stop_reason != "");
}

TEST_CASE("training objective is non-decreasing and deterministic") {
  std::mt19937_64 rng(50);
  const std::vector<std::string> vocab = {"a", "b", "c"};
  std::vector<feat::AttributeMatrix> mats;
  std::vector<std::vector<std::string>> gold;
  for (int k = 0; k < 10; ++k) {
    std::vector<std::string> toks, tags;
    for (int t = 0; t < 4; ++t) {
      toks.push_back(vocab[rng() % 3]);
      tags.push_back(rng() % 2 ? "B-agent" : "O");
    }
    mats.push_back(token_matrix(toks));
    gold.push_back(tags);
  }
  crf::TrainConfig cfg;
  cfg.max_iterations = 50;
  cfg.seed = 9;
  auto m1 = crf::train(mats, gold, cfg);
  auto m2 = crf::train(mats, gold, cfg);
  CHECK(m1.weights == m2.weights);  // bit-identical
}

TEST_CASE("empty-feature dataset trains to the uniform model") {
  feat::AttributeMatrix m;
  m.families = {"f1"};
  m.columns = {};
  m.values = {{}, {}};
  // Four two-token sequences covering every label bigram once, so the
  // transition evidence is exactly uniform and nothing moves.
  std::vector<feat::AttributeMatrix> mats(4, m);
  std::vector<std::vector<std::string>> gold = {
      {"O", "O"}, {"O", "B-agent"}, {"B-agent", "O"}, {"B-agent", "B-agent"}};
  crf::TrainConfig cfg;
  cfg.max_iterations = 10;
  auto model = crf::train(mats, gold, cfg);
  CHECK(model.obs.size() == 0);
  for (double w : model.weights) CHECK(w == 0.0);
  // Decoding under the uniform model falls back to the tie-break label.
  auto seq = crf::compile(m, model, false);
  for (int y : crf::viterbi(model, seq)) CHECK(y == 0);
}

TEST_CASE("model save/load round-trips decodes on fuzzed models") {
  std::mt19937_64 rng(51);
  for (int rep = 0; rep < 1000; ++rep) {
    int order = rep % 2 ? 2 : 1;
    int labels = 2 + static_cast<int>(rng() % 2);
    auto inst = testutil::random_instance(rng, 1, 5, labels, order, 4,
                                          rep % 5 == 0);
    inst.model.feature_set = rep % 3 ? "W" : "";
    inst.model.iterations_run = static_cast<int>(rng() % 500);
    inst.model.stop_reason = "max_iterations";
    std::stringstream ss;
    crf::save_model(inst.model, ss);
    auto loaded = crf::load_model(ss);
    CHECK(loaded.order == inst.model.order);
    CHECK(loaded.labels == inst.model.labels);
    CHECK(loaded.feature_set == inst.model.feature_set);
    auto a = crf::viterbi(inst.model, inst.seqs[0]);
    auto b = crf::viterbi(loaded, inst.seqs[0]);
    CHECK(a == b);
    CHECK(crf::sequence_score(inst.model, inst.seqs[0], a) ==
          doctest::Approx(crf::sequence_score(loaded, inst.seqs[0], b))
              .epsilon(1e-15));
  }
}

TEST_CASE("model file errors") {
  std::mt19937_64 rng(52);
  auto inst = testutil::random_instance(rng, 1, 4, 2, 1);
  std::stringstream ss;
  crf::save_model(inst.model, ss);
  std::string text = ss.str();

  SUBCASE("truncated file") {
    std::istringstream in(text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(crf::load_model(in), crf::CorruptFile);
  }
  SUBCASE("future version") {
    std::string future = text;
    future.replace(future.find("finmwe-crf 1"), 12, "finmwe-crf 9");
    std::istringstream in(future);
    CHECK_THROWS_AS(crf::load_model(in), crf::VersionMismatch);
  }
}

}  // TEST_SUITE
