#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "matchcast/corpus.hpp"
#include "matchcast/ensemble.hpp"
#include "matchcast/forest.hpp"
#include "matchcast/synth.hpp"

namespace fixtures {

using namespace matchcast;

inline Date date(const char* s) { return parse_date(s); }

inline MatchRecord match(std::string id, const char* d, std::string home, std::string away, int hg, int ag,
                         std::optional<OddsTriple> odds = std::nullopt, std::string season = "2018-19") {
    MatchRecord m;
    m.match_id = std::move(id);
    m.date = parse_date(d);
    m.season = std::move(season);
    m.home_team = std::move(home);
    m.away_team = std::move(away);
    m.home_goals = hg;
    m.away_goals = ag;
    m.odds = odds;
    return m;
}

inline TeamAliasTable spurs_saints_aliases() {
    TeamAliasTable t;
    for (const char* a : {"Tottenham", "Spurs", "Pochettino", "Trippier", "Kieran Trippier", "Dele Alli", "Harry Winks"})
        t.add("TOT", a);
    for (const char* a : {"Southampton", "Saints", "Hasenhuttl", "St Mary's"}) t.add("SOU", a);
    return t;
}

inline const std::string kSnippet =
    "Which Tottenham team will show up at St Mary’s? Tottenham competed a clinical Champions League victory "
    "over Dortmund – but they are winless in their last three league games. Pochettino begins his touchline "
    "ban and will be without Kieran Trippier, although Dele Alli and Harry Winks could feature.";

// Small forests keep the suite fast on one core.
inline PipelineConfig fast_config(int trees = 60) {
    PipelineConfig c;
    c.text_forest.n_trees = trees;
    c.stacker_forest.n_trees = trees;
    c.text_forest.threads = 1;
    c.stacker_forest.threads = 1;
    return c;
}

inline synth::League small_league(std::vector<std::string> seasons = {"2016-17", "2017-18", "2018-19"},
                                  std::uint64_t seed = 7, std::size_t teams = 8) {
    synth::LeagueOptions o;
    o.seasons = std::move(seasons);
    o.seed = seed;
    o.n_teams = teams;
    return synth::generate_league(o);
}

// Meta-feature rows where each upstream model is a confident, correct expert on
// its own third of the matches and an unconfident guesser elsewhere.
struct ExpertsData {
    std::vector<ensemble::MetaFeatures> rows;
    std::vector<Outcome> labels;
};

inline OutcomeProbs one_sided(Outcome o, double p) {
    const double rest = (1.0 - p) / 2.0;
    OutcomeProbs r{rest, rest, rest};
    if (o == Outcome::homewin) r.home = p;
    if (o == Outcome::draw) r.draw = p;
    if (o == Outcome::awaywin) r.away = p;
    return r;
}

inline ExpertsData complementary_experts(std::size_t n, std::uint64_t seed) {
    forest::Rng rng(seed);
    ExpertsData d;
    for (std::size_t i = 0; i < n; ++i) {
        const Outcome y = kOutcomes[rng.below(3)];
        const std::size_t expert = rng.below(3);
        OutcomeProbs triples[3];
        for (std::size_t k = 0; k < 3; ++k) {
            if (k == expert) {
                triples[k] = one_sided(y, 0.9);
            } else {
                // Weak lean towards a uniformly random class; never above 0.45.
                triples[k] = one_sided(kOutcomes[rng.below(3)], 0.36 + 0.09 * rng.uniform());
            }
        }
        d.rows.push_back(ensemble::assemble_meta_features("x" + std::to_string(i), triples[0], triples[1], triples[2]));
        d.labels.push_back(y);
    }
    return d;
}

}  // namespace fixtures
