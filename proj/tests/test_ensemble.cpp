#include <doctest.h>

#include <algorithm>
#include <set>

#include "fixtures.hpp"
#include "matchcast/ensemble.hpp"
#include "matchcast/errors.hpp"
#include "matchcast/odds.hpp"

using namespace matchcast;
using namespace matchcast::ensemble;

namespace {

const synth::League& league() {
    static const auto l = fixtures::small_league({"2016-17", "2017-18"}, 23, 8);
    return l;
}

const EnsembleModel& trained() {
    static const auto m = train_ensemble(league().corpus, fixtures::fast_config());
    return m;
}

double accuracy(const forest::Forest& f, std::span<const MetaFeatures> rows, std::span<const Outcome> labels,
                bool use_text) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) correct += f.predict(stacker_input(rows[i], use_text)) == labels[i];
    return static_cast<double>(correct) / static_cast<double>(rows.size());
}

double triple_accuracy(std::span<const MetaFeatures> rows, std::span<const Outcome> labels, int which) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const OutcomeProbs& p = which == 0 ? rows[i].text_probs : which == 1 ? rows[i].dc_probs : rows[i].book_probs;
        correct += p.argmax() == labels[i];
    }
    return static_cast<double>(correct) / static_cast<double>(rows.size());
}

}  // namespace

TEST_CASE("meta-features concatenate the three triples in fixed order") {
    const auto u = OutcomeProbs::uniform();
    const auto m = assemble_meta_features("m", u, u, u);
    REQUIRE(m.x.size() == kMetaWidth);
    for (double v : m.x) CHECK(v == 1.0 / 3.0);

    const OutcomeProbs t{0.5, 0.3, 0.2}, d{0.1, 0.2, 0.7}, b{0.25, 0.25, 0.5};
    const auto n = assemble_meta_features("n", t, d, b);
    CHECK(n.x == std::vector<double>{0.5, 0.3, 0.2, 0.1, 0.2, 0.7, 0.25, 0.25, 0.5});
    CHECK(stacker_input(n, false) == std::vector<double>{0.1, 0.2, 0.7, 0.25, 0.25, 0.5});
    CHECK(stacker_input(n, true) == n.x);
}

TEST_CASE("meta-features equal an independent assembly of the upstream predictions") {
    const auto& c = league().corpus;
    const auto& model = trained();
    for (const auto& m : c.matches()) {
        if (!m.odds) continue;
        const auto meta = build_meta_features(m, *model.text, model.dc, c);
        std::vector<double> expected;
        for (const auto& p : {predict_text(*model.text, c, m), dc::predict_with_fallback(model.dc, m.home_team, m.away_team).probs,
                              odds::implied_probs(*m.odds)}) {
            expected.push_back(p.home);
            expected.push_back(p.draw);
            expected.push_back(p.away);
        }
        CHECK(meta.x == expected);
        CHECK(std::abs(meta.text_probs.sum() - 1.0) < 1e-9);
        CHECK(std::abs(meta.dc_probs.sum() - 1.0) < 1e-9);
        CHECK(std::abs(meta.book_probs.sum() - 1.0) < 1e-9);
    }
    auto no_odds = c.matches().front();
    no_odds.odds.reset();
    CHECK_THROWS_AS(build_meta_features(no_odds, *model.text, model.dc, c), DataError);
}

TEST_CASE("training meta-features are out of sample") {
    const auto& c = league().corpus;
    const auto& model = trained();
    CHECK(audit_out_of_fold(model, c).empty());
    CHECK(model.training_rows.size() == model.training_labels.size());
    CHECK(model.training_rows.size() + model.excluded.size() == c.matches().size());
    CHECK_FALSE(model.excluded.empty());  // the first weeks lack Dixon-Coles history
    for (const auto& r : model.training_rows) {
        CHECK(r.provenance.text_model.rfind("text/fold-", 0) == 0);
        CHECK(r.provenance.dc_model.rfind("dc/", 0) == 0);
        CHECK(r.provenance.dc_model != "dc/full");
    }
    CHECK(model.stacker.n_features == static_cast<int>(kMetaWidth));
}

TEST_CASE("the out-of-fold audit detects an injected leak") {
    const auto& c = league().corpus;
    auto model = trained();
    const auto& row = model.training_rows.front();
    auto& ids = model.upstream.at(row.provenance.text_model);
    ids.push_back(row.match_id);
    std::sort(ids.begin(), ids.end());
    CHECK_FALSE(audit_out_of_fold(model, c).empty());

    auto dc_leak = trained();
    dc_leak.upstream.at(dc_leak.training_rows.back().provenance.dc_model).push_back(dc_leak.training_rows.back().match_id);
    CHECK_FALSE(audit_out_of_fold(dc_leak, c).empty());
}

TEST_CASE("no-text ablation uses six meta-features") {
    auto config = fixtures::fast_config(30);
    config.ensemble.use_text = false;
    const auto model = train_ensemble(league().corpus, config);
    CHECK_FALSE(model.text.has_value());
    CHECK(model.stacker.n_features == 6);
    CHECK(audit_out_of_fold(model, league().corpus).empty());
    const auto& m = league().corpus.matches().back();
    CHECK(std::abs(predict(model, league().corpus, m).sum() - 1.0) < 1e-9);
}

TEST_CASE("meta-features do not depend on input order") {
    const auto& c = league().corpus;
    std::vector<MatchRecord> ms(c.matches().begin(), c.matches().end());
    std::reverse(ms.begin(), ms.end());
    std::vector<PreviewArticle> ps;
    for (const auto& m : c.matches())
        for (const auto& p : c.previews_for(m.match_id)) ps.push_back({p.match_id, p.source, p.text, {}});
    std::reverse(ps.begin(), ps.end());
    const Corpus shuffled(ms, ps, c.aliases());
    const auto a = train_ensemble(shuffled, fixtures::fast_config());
    const auto& b = trained();
    REQUIRE(a.training_rows.size() == b.training_rows.size());
    for (std::size_t i = 0; i < a.training_rows.size(); ++i) CHECK(a.training_rows[i].x == b.training_rows[i].x);
    CHECK(a.stacker == b.stacker);
}

TEST_CASE("stacker reproduces a perfect upstream oracle") {
    forest::Rng rng(4);
    std::vector<MetaFeatures> rows;
    std::vector<Outcome> labels;
    for (int i = 0; i < 300; ++i) {
        const Outcome y = kOutcomes[rng.below(3)];
        const OutcomeProbs noise = OutcomeProbs::normalized(rng.uniform(), rng.uniform(), rng.uniform());
        rows.push_back(assemble_meta_features("r" + std::to_string(i), noise, noise, fixtures::one_sided(y, 0.8)));
        labels.push_back(y);
    }
    forest::Hyperparams p;
    p.n_trees = 50;
    const auto f = train_stacker(rows, labels, true, p, 1);
    CHECK(accuracy(f, rows, labels, true) >= triple_accuracy(rows, labels, 2));
}

TEST_CASE("noise text and perfect odds: stacker matches the bookmaker") {
    forest::Rng rng(12);
    auto make = [&](int n, std::vector<MetaFeatures>& rows, std::vector<Outcome>& labels) {
        for (int i = 0; i < n; ++i) {
            const Outcome y = kOutcomes[rng.below(3)];
            const auto text = OutcomeProbs::normalized(rng.uniform(), rng.uniform(), rng.uniform());
            const auto dc = OutcomeProbs::normalized(rng.uniform(), rng.uniform(), rng.uniform());
            rows.push_back(assemble_meta_features("r", text, dc, fixtures::one_sided(y, 0.5 + 0.4 * rng.uniform())));
            labels.push_back(y);
        }
    };
    std::vector<MetaFeatures> train_rows, test_rows;
    std::vector<Outcome> train_labels, test_labels;
    make(400, train_rows, train_labels);
    make(400, test_rows, test_labels);
    forest::Hyperparams p;
    p.n_trees = 100;
    const auto f = train_stacker(train_rows, train_labels, true, p, 5);
    const double book = triple_accuracy(test_rows, test_labels, 2);
    CHECK(book == 1.0);
    CHECK(std::abs(accuracy(f, test_rows, test_labels, true) - book) <= 0.02);
}

TEST_CASE("complementary experts: stacker beats every single model") {
    const auto train_set = fixtures::complementary_experts(600, 1);
    const auto test_set = fixtures::complementary_experts(600, 2);
    forest::Hyperparams p;
    p.n_trees = 100;
    const auto f = train_stacker(train_set.rows, train_set.labels, true, p, 3);
    const double stacked = accuracy(f, test_set.rows, test_set.labels, true);
    for (int k = 0; k < 3; ++k) CHECK(stacked > triple_accuracy(test_set.rows, test_set.labels, k));
}

TEST_CASE("text forest predictions do not depend on mu") {
    const auto& c = league().corpus;
    auto config = fixtures::fast_config(30);
    config.text.mu = 1.0;
    const auto a = train_text_model(c, c.matches(), config, 5);
    config.text.mu = 1.5;
    const auto b = train_text_model(c, c.matches(), config, 5);
    for (const auto& m : c.matches()) CHECK(predict_text(a, c, m) == predict_text(b, c, m));

    const double grid[] = {1.0, 1.1, 1.2, 1.25, 1.3, 1.4, 1.5};
    config.text.mu = 1.25;
    CHECK(tune_mu(c, c.matches(), config, grid) == 1.25);
}

TEST_CASE("text model artifact round-trips") {
    const auto& c = league().corpus;
    const auto& model = *trained().text;
    const auto j = text_model_to_json(model);
    CHECK(j.at("type") == "text_model");
    CHECK(j.at("version") == 1);
    const auto back = text_model_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.vocab == model.vocab);
    CHECK(back.forest == model.forest);
    for (const auto& m : c.matches()) CHECK(predict_text(back, c, m) == predict_text(model, c, m));
}

TEST_CASE("predictions for unseen matches are normalized") {
    const auto l = fixtures::small_league({"2016-17", "2017-18", "2018-19"}, 23, 8);
    const Corpus train = l.corpus.filter([](const MatchRecord& m) { return m.season != "2018-19"; });
    const auto model = train_ensemble(train, fixtures::fast_config(30));
    for (const auto& m : l.corpus.matches()) {
        if (m.season != "2018-19") continue;
        const auto p = predict(model, l.corpus, m);
        CHECK(std::abs(p.sum() - 1.0) < 1e-9);
        CHECK(meta_features_for(model, l.corpus, m).provenance.dc_model == "dc/full");
    }
}
