#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matchcast/corpus.hpp"
#include "matchcast/dixon_coles.hpp"

// Synthetic leagues with known generating parameters, for tests and demos.
namespace matchcast::synth {

// Draws a scoreline from the renormalized Dixon-Coles grid by inverse CDF.
std::pair<int, int> sample_score(const dc::ScoreGrid& grid, double u);

// `n_matches` fixtures cycling through a double round-robin of the teams in
// `truth`, one round every 3 days from `start`, scores drawn from `truth`.
std::vector<MatchRecord> simulate_matches(const dc::Params& truth, std::size_t n_matches, std::uint64_t seed,
                                          Date start = Date{std::chrono::year{2000}, std::chrono::month{8},
                                                            std::chrono::day{1}});

// Round-robin pairings (circle method): rounds[r] lists (home, away) indices.
// The second half mirrors the first with venues swapped.
std::vector<std::vector<std::pair<std::size_t, std::size_t>>> double_round_robin(std::size_t n_teams);

struct LeagueOptions {
    std::size_t n_teams = 10;          // even, at most 16
    std::vector<std::string> seasons{"2014-15", "2015-16", "2016-17"};
    double home_adv = 1.35;
    double rho = -0.05;
    double strength_sd = 0.25;         // log-scale spread of attack and defense
    double form_sd = 0.35;             // hidden per-team, per-round log-rate shock
    double form_threshold = 0.12;      // |form| above which previews describe it
    double overround = 0.05;
    double odds_noise = 0.08;          // log-scale noise on the bookmaker's probabilities
    double preview_rate = 1.0;
    double odds_rate = 1.0;
    std::uint64_t seed = 7;
};

struct League {
    Corpus corpus;
    dc::Params truth;  // season-independent strengths
};

// Seasons start on 10 August of the first year in their label, one round a week.
// Form shifts the goal rates but not the listed strengths; the bookmaker sees
// the form, and the previews describe it in words.
League generate_league(const LeagueOptions& options);

}  // namespace matchcast::synth
