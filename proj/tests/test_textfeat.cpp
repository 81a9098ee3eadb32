#include <doctest.h>

#include <map>
#include <set>

#include "fixtures.hpp"
#include "matchcast/corpus.hpp"
#include "matchcast/textfeat.hpp"

using namespace matchcast;
using namespace matchcast::text;
using fixtures::match;

namespace {

std::vector<double> dense(const SentenceVector& v, std::size_t n) {
    std::vector<double> out(n);
    for (auto [col, count] : v.entries) out[col] = count;
    return out;
}

// Independent tokenizer for apostrophe-free ASCII text.
std::vector<std::string> naive_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s + " ") {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    return out;
}

PreviewArticle article(std::string id, std::string text) {
    return segment_sentences({std::move(id), "test", std::move(text), {}});
}

}  // namespace

TEST_CASE("tokenizer lowercases, strips punctuation and marks possessives") {
    const auto t = tokenize("Mourinho is Manchester United's ex-manager, isn't he?");
    std::vector<std::string> words;
    for (const auto& x : t) words.push_back(x.text);
    CHECK(words == std::vector<std::string>{"mourinho", "is", "manchester", "united", "ex", "manager", "isnt", "he"});
    CHECK(t[3].possessive);
    CHECK_FALSE(t[2].possessive);
    CHECK(tokenize("St Mary’s")[1] == Token{"mary", true});
    CHECK(tokenize("Ødegaard ÉLAN")[1].text == "élan");
    CHECK(tokenize("").empty());
}

TEST_CASE("possessive copula becomes an of-relation") {
    const auto tokens = tokenize("Mourinho is Manchester United's ex-manager");
    const auto r = extract_relations(tokens);
    REQUIRE(r.size() == 1);
    CHECK(render(tokens, r[0].subject) == "mourinho");
    CHECK(r[0].label == "is-ex-manager-of");
    CHECK(render(tokens, r[0].object) == "manchester united");
}

TEST_CASE("sentences without a verb-like pivot yield no tuples") {
    CHECK(extract_relations("Goal").empty());
    CHECK(extract_relations("").empty());
    CHECK(extract_relations("The big derby").empty());
}

TEST_CASE("subject, pivot and object follow token order") {
    const auto tokens = tokenize("Pochettino begins his touchline ban");
    const auto r = extract_relations(tokens);
    REQUIRE(r.size() == 1);
    CHECK(render(tokens, r[0].subject) == "pochettino");
    CHECK(r[0].label == "begins");
    CHECK(render(tokens, r[0].object) == "touchline ban");

    const auto long_tokens = tokenize(
        "Pochettino begins his touchline ban and will be without Kieran Trippier, although Dele Alli and Harry "
        "Winks could feature.");
    for (const auto& t : extract_relations(long_tokens, 4)) {
        CHECK(t.sentence_index == 4);
        CHECK_FALSE(t.subject.empty());
        CHECK_FALSE(t.relation.empty());
        CHECK_FALSE(t.object.empty());
        if (t.subject.end <= t.relation.begin) CHECK(t.relation.end <= t.object.begin);
    }
}

TEST_CASE("allocation by alias mention mass") {
    const auto aliases = fixtures::spurs_saints_aliases();
    const auto m = match("m1", "2019-03-09", "SOU", "TOT", 1, 2);

    const auto a = allocate_sentence("Pochettino begins his touchline ban and will be without Kieran Trippier", m,
                                     aliases);
    CHECK(a.team == Side::away);
    CHECK(a.confidence == 1.0);
    CHECK(a.home_mass == 0.0);
    // Pochettino is the subject (weight 2); Kieran Trippier sits in an object (weight 2).
    CHECK(a.away_mass == 4.0);

    const auto none = allocate_sentence("Kick-off is at three o'clock.", m, aliases);
    CHECK(none.team == Side::none);
    CHECK(none.confidence == 0.0);

    const auto tie = allocate_sentence("Spurs and Saints", m, aliases);
    CHECK(tie.confidence == 0.5);
    CHECK(tie.team == Side::none);

    // 2 away vs 1 home: 2/3 clears 0.6.
    const auto lean = allocate_sentence("Spurs, Tottenham and Saints", m, aliases);
    CHECK(lean.team == Side::away);
    CHECK(lean.confidence == doctest::Approx(2.0 / 3.0));
    AllocationParams strict;
    strict.theta = 0.7;
    CHECK(allocate_sentence("Spurs, Tottenham and Saints", m, aliases, strict).team == Side::none);
}

TEST_CASE("alias hits prefer the longest alias and never overlap") {
    const auto aliases = fixtures::spurs_saints_aliases();
    const auto m = match("m1", "2019-03-09", "SOU", "TOT", 1, 2);
    const auto tokens = tokenize("Kieran Trippier misses out at St Mary's");
    const auto hits = find_alias_hits(tokens, m, aliases);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].span == Span{0, 2});
    CHECK(hits[0].side == Side::away);
    CHECK(hits[1].span == Span{5, 7});
    CHECK(hits[1].side == Side::home);
}

TEST_CASE("allocation confidence bounds and the none rule") {
    const auto league = fixtures::small_league({"2017-18"}, 11, 6);
    const auto& c = league.corpus;
    const AllocationParams params;
    for (const auto& m : c.matches())
        for (const auto& p : c.previews_for(m.match_id))
            for (const auto& s : p.sentences) {
                const auto a = allocate_sentence(s, m, c.aliases(), params);
                CHECK(a.confidence >= 0.0);
                CHECK(a.confidence <= 1.0);
                const bool massless = a.home_mass + a.away_mass == 0;
                CHECK((a.team == Side::none) == (massless || a.confidence < params.theta));
            }
}

TEST_CASE("vocabulary thresholds and column order") {
    VocabularyParams two{2, 1.0};
    const std::vector<PreviewArticle> pair{article("a", "Tottenham travel south."),
                                           article("b", "Tottenham rest players.")};
    const auto v = fit_vocabulary(pair, two);
    CHECK(v.tokens() == std::vector<std::string>{"tottenham"});
    CHECK(v.index_of("tottenham") == 0);

    VocabularyParams one{1, 1.0};
    const std::vector<PreviewArticle> single{article("a", "beat city united")};
    const auto w = fit_vocabulary(single, one);
    CHECK(w.tokens() == std::vector<std::string>{"beat", "city", "united"});

    // max_df drops tokens present in more than the allowed share of articles.
    const auto capped = fit_vocabulary(pair, {1, 0.9});
    CHECK_FALSE(capped.contains("tottenham"));
    CHECK(capped.contains("south"));

    CHECK_THROWS_AS(fit_vocabulary(std::vector<PreviewArticle>{}), DataError);
}

TEST_CASE("vocabulary matches a brute-force document-frequency count") {
    const std::vector<std::string> texts{
        "Arsenal host Chelsea in a London derby. Arsenal have won three in a row.",
        "Chelsea travel to Arsenal without their captain. The manager is confident.",
        "Liverpool welcome Everton for the Merseyside derby. Liverpool are unbeaten at home.",
        "Everton struggled badly last week. Their manager is under pressure.",
        "The derby at Anfield promises goals. Liverpool scored five last week.",
        "Arsenal defender injured in training. Arsenal confirm he will miss the derby.",
        "Chelsea striker returns from injury. The manager expects goals.",
        "Everton sign a new goalkeeper. The captain welcomed the signing.",
        "Liverpool captain fit to face Chelsea. Goals expected at Anfield.",
        "Manager praises defender after win. Training went well this week.",
    };
    std::vector<PreviewArticle> arts;
    std::map<std::string, int> df;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        arts.push_back(article("a" + std::to_string(i), texts[i]));
        std::set<std::string> seen;
        for (const auto& t : naive_tokens(texts[i]))
            if (t.size() >= 2 && !is_stop_word(t)) seen.insert(t);
        for (const auto& t : seen) ++df[t];
    }
    for (int min_df : {1, 2, 3}) {
        for (double max_df : {0.3, 0.5, 1.0}) {
            std::vector<std::string> expected;
            for (const auto& [t, n] : df)
                if (n >= min_df && n <= max_df * static_cast<double>(texts.size())) expected.push_back(t);
            const auto v = fit_vocabulary(arts, {min_df, max_df});
            CHECK(v.tokens() == expected);
            for (std::size_t k = 0; k < expected.size(); ++k)
                CHECK(v.document_frequency()[k] == static_cast<std::uint32_t>(df[expected[k]]));
            CHECK(v.documents() == texts.size());
        }
    }
}

TEST_CASE("sentence vectors count in-vocabulary tokens") {
    const Vocabulary v({"beat", "city", "united"}, {1, 1, 1}, 0, 1);
    CHECK(dense(vectorize_sentence("united beat united", v), 3) == std::vector<double>{1, 0, 2});
    CHECK(vectorize_sentence("nothing known here", v).entries.empty());

    const std::string text = "United beat City, and City beat United twice; united fans sang.";
    std::vector<double> oracle(3);
    for (const auto& t : naive_tokens(text)) {
        if (t == "beat") ++oracle[0];
        if (t == "city") ++oracle[1];
        if (t == "united") ++oracle[2];
    }
    CHECK(dense(vectorize_sentence(text, v), 3) == oracle);
}

TEST_CASE("feature vector concatenates the weighted home block and the away block") {
    TeamAliasTable aliases;
    aliases.add("SOU", "Southampton");
    aliases.add("TOT", "Tottenham");
    const Vocabulary v({"alpha", "beta"}, {1, 1}, 0, 1);
    const auto m = match("m1", "2019-03-09", "SOU", "TOT", 0, 0);
    const std::vector<PreviewArticle> arts{article("m1", "Southampton alpha. Tottenham beta beta.")};

    const auto f1 = build_features(m, arts, v, aliases, 1.0);
    CHECK(f1.x == std::vector<double>{1, 0, 0, 2});
    CHECK(f1.has_text);
    const auto f13 = build_features(m, arts, v, aliases, 1.3);
    CHECK(f13.x == std::vector<double>{1.3, 0, 0, 2});

    const std::vector<PreviewArticle> neutral{article("m1", "alpha beta. Beta alpha.")};
    const auto z = build_features(m, neutral, v, aliases, 1.25);
    CHECK(z.x == std::vector<double>(4, 0.0));
    CHECK(z.none_vector == std::vector<double>{2, 2});

    const auto empty = build_features(m, {}, v, aliases, 1.25);
    CHECK_FALSE(empty.has_text);
    CHECK(empty.x == std::vector<double>(4, 0.0));
    CHECK(feature_names(v) == std::vector<std::string>{"home:alpha", "home:beta", "away:alpha", "away:beta"});
}

TEST_CASE("multiple articles pool into one allocation set") {
    TeamAliasTable aliases;
    aliases.add("SOU", "Southampton");
    aliases.add("TOT", "Tottenham");
    const Vocabulary v({"alpha", "beta"}, {1, 1}, 0, 1);
    const auto m = match("m1", "2019-03-09", "SOU", "TOT", 0, 0);
    const std::vector<PreviewArticle> arts{article("m1", "Southampton alpha."), article("m1", "Southampton alpha beta.")};
    const auto f = build_features(m, arts, v, aliases, 1.0);
    CHECK(f.home_vector == std::vector<double>{2, 1});
    CHECK(f.allocations.size() == 2);
}

TEST_CASE("partition, homogeneity and determinism on generated previews") {
    const auto league = fixtures::small_league({"2017-18"}, 13, 8);
    const auto& c = league.corpus;
    std::vector<PreviewArticle> arts;
    for (const auto& m : c.matches())
        for (const auto& p : c.previews_for(m.match_id)) arts.push_back(p);
    const auto vocab = fit_vocabulary(arts);
    const std::size_t n = vocab.size();
    REQUIRE(n > 10);

    for (const auto& m : c.matches()) {
        const auto ps = c.previews_for(m.match_id);
        const auto f = build_features(m, ps, vocab, c.aliases(), 1.25);
        std::vector<double> total(n);
        for (const auto& p : ps)
            for (const auto& s : p.sentences) {
                const auto d = dense(vectorize_sentence(s, vocab), n);
                for (std::size_t k = 0; k < n; ++k) total[k] += d[k];
            }
        for (std::size_t k = 0; k < n; ++k)
            CHECK(total[k] == f.home_vector[k] + f.away_vector[k] + f.none_vector[k]);

        for (double c_scale : {2.0, 0.37, 3.0}) {
            const auto g = build_features(m, ps, vocab, c.aliases(), 1.25 * c_scale);
            for (std::size_t k = 0; k < n; ++k) {
                CHECK(g.x[k] == (1.25 * c_scale) * f.home_vector[k]);
                CHECK(g.x[n + k] == f.x[n + k]);
            }
        }
        const auto again = build_features(m, ps, vocab, c.aliases(), 1.25);
        CHECK(again.x == f.x);
    }
}

TEST_CASE("vocabulary fitted on training articles holds no test-only token") {
    const auto league = fixtures::small_league({"2016-17", "2017-18"}, 17, 6);
    const auto& c = league.corpus;
    std::vector<PreviewArticle> train, test;
    for (const auto& m : c.matches())
        for (const auto& p : c.previews_for(m.match_id)) (m.season == "2016-17" ? train : test).push_back(p);
    // A test article with words that never occur before the cutoff.
    test.push_back(article("zz", "Zeppelin quasar xylophone zeppelin."));
    const auto vocab = fit_vocabulary(train, {1, 1.0});
    std::set<std::string> train_tokens;
    for (const auto& p : train)
        for (const auto& t : tokenize(p.text)) train_tokens.insert(t.text);
    for (const auto& t : vocab.tokens()) CHECK(train_tokens.count(t) == 1);
    CHECK_FALSE(vocab.contains("zeppelin"));
}
