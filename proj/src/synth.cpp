#include "matchcast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "matchcast/errors.hpp"
#include "matchcast/forest.hpp"

namespace matchcast::synth {

namespace {
constexpr int kSampleGoals = 20;
}

std::pair<int, int> sample_score(const dc::ScoreGrid& grid, double u) {
    double acc = 0;
    for (int h = 0; h <= grid.max_goals; ++h)
        for (int a = 0; a <= grid.max_goals; ++a) {
            acc += grid.at(h, a);
            if (u < acc) return {h, a};
        }
    return {grid.max_goals, grid.max_goals};
}

std::vector<std::vector<std::pair<std::size_t, std::size_t>>> double_round_robin(std::size_t n_teams) {
    if (n_teams < 2 || n_teams % 2 != 0) throw ConfigError("round robin needs an even number of teams >= 2");
    std::vector<std::size_t> ring(n_teams);
    for (std::size_t i = 0; i < n_teams; ++i) ring[i] = i;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> rounds;
    for (std::size_t r = 0; r + 1 < n_teams; ++r) {
        std::vector<std::pair<std::size_t, std::size_t>> round;
        for (std::size_t i = 0; i < n_teams / 2; ++i) {
            std::size_t a = ring[i], b = ring[n_teams - 1 - i];
            // Alternate venues so no team is always at home.
            if ((r + i) % 2 == 1) std::swap(a, b);
            round.emplace_back(a, b);
        }
        rounds.push_back(std::move(round));
        std::rotate(ring.begin() + 1, ring.end() - 1, ring.end());
    }
    const std::size_t half = rounds.size();
    for (std::size_t r = 0; r < half; ++r) {
        auto mirrored = rounds[r];
        for (auto& [h, a] : mirrored) std::swap(h, a);
        rounds.push_back(std::move(mirrored));
    }
    return rounds;
}

std::vector<MatchRecord> simulate_matches(const dc::Params& truth, std::size_t n_matches, std::uint64_t seed,
                                          Date start) {
    std::vector<std::string> teams;
    for (const auto& [id, _] : truth.teams) teams.push_back(id);
    const auto rounds = double_round_robin(teams.size());
    forest::Rng rng(seed);
    std::vector<MatchRecord> out;
    std::size_t round = 0;
    while (out.size() < n_matches) {
        const auto& fixtures = rounds[round % rounds.size()];
        const Date date{std::chrono::sys_days{start} + std::chrono::days{3 * static_cast<long>(round)}};
        for (std::size_t i = 0; i < fixtures.size() && out.size() < n_matches; ++i) {
            const auto& home = teams[fixtures[i].first];
            const auto& away = teams[fixtures[i].second];
            const auto [h, a] = sample_score(dc::score_grid(truth, home, away, kSampleGoals), rng.uniform());
            MatchRecord m;
            m.match_id = fmt::format("sim-{:06}", out.size());
            m.date = date;
            m.season = "sim";
            m.home_team = home;
            m.away_team = away;
            m.home_goals = h;
            m.away_goals = a;
            out.push_back(std::move(m));
        }
        ++round;
    }
    return out;
}

namespace {

struct Club {
    const char* name;
    const char* town;
    const char* nickname;
};

constexpr Club kClubs[] = {
    {"Ashford Rovers", "Ashford", "Foxes"},       {"Brambleton City", "Brambleton", "Hornets"},
    {"Carrow Athletic", "Carrow", "Canaries"},    {"Dunmore United", "Dunmore", "Miners"},
    {"Eastwick Town", "Eastwick", "Owls"},        {"Fairhaven Albion", "Fairhaven", "Gulls"},
    {"Glenford Wanderers", "Glenford", "Stags"},  {"Holloway Park", "Holloway", "Robins"},
    {"Ironbridge County", "Ironbridge", "Smiths"}, {"Kingsmere Villa", "Kingsmere", "Swans"},
    {"Lowther Forest", "Lowther", "Woodsmen"},    {"Marston Orient", "Marston", "Lions"},
    {"Northam Rangers", "Northam", "Badgers"},    {"Oakridge Harriers", "Oakridge", "Harriers"},
    {"Penbury Celtic", "Penbury", "Bhoys"},       {"Queensgate Borough", "Queensgate", "Royals"},
};

const char* const kGood[] = {
    "{} arrive in superb form after a run of convincing wins.",
    "{} have been excellent lately and their confidence is sky high.",
    "{} welcome back their captain from injury and look sharp in training.",
    "{} scored freely last weekend and the manager praised a dominant display.",
    "{} are unbeaten in recent weeks and the squad is fully fit.",
};

const char* const kBad[] = {
    "{} have struggled badly and lost again last weekend.",
    "{} are without several injured defenders and morale is low.",
    "{} conceded sloppy goals in a heavy defeat and the manager is under pressure.",
    "{} look tired after a poor run and key players are suspended.",
    "{} have failed to score in recent matches and the crowd is restless.",
};

const char* const kNeutral[] = {
    "{} named an unchanged squad for the trip.",
    "{} will assess the fitness of a midfielder before kick-off.",
    "{} trained as normal this week.",
};

const char* const kFiller[] = {
    "Kick-off is at three o'clock and tickets remain available.",
    "The referee has been confirmed and the weather forecast is mild.",
    "Both sets of supporters expect a lively atmosphere.",
};

std::string alias_for(const Club& c, forest::Rng& rng) {
    switch (rng.below(3)) {
        case 0: return c.name;
        case 1: return c.town;
        default: return std::string("The ") + c.nickname;
    }
}

std::string describe(const Club& c, double form, double threshold, forest::Rng& rng) {
    std::string who = alias_for(c, rng);
    const char* tmpl = form > threshold ? kGood[rng.below(std::size(kGood))]
                       : form < -threshold ? kBad[rng.below(std::size(kBad))]
                                           : kNeutral[rng.below(std::size(kNeutral))];
    return fmt::format(fmt::runtime(tmpl), who);
}

}  // namespace

League generate_league(const LeagueOptions& o) {
    if (o.n_teams > std::size(kClubs)) throw ConfigError("at most 16 synthetic teams");
    const auto rounds = double_round_robin(o.n_teams);
    forest::Rng rng(forest::mix_seed(o.seed, 1));
    std::mt19937_64 gen(forest::mix_seed(o.seed, 2));
    std::normal_distribution<double> normal(0.0, 1.0);

    League league;
    league.truth.home_adv = o.home_adv;
    league.truth.rho = o.rho;
    TeamAliasTable aliases;
    std::vector<double> log_attack(o.n_teams), log_defense(o.n_teams);
    double mean_attack = 0;
    for (std::size_t t = 0; t < o.n_teams; ++t) {
        log_attack[t] = o.strength_sd * normal(gen);
        log_defense[t] = o.strength_sd * normal(gen);
        mean_attack += log_attack[t] / static_cast<double>(o.n_teams);
    }
    for (std::size_t t = 0; t < o.n_teams; ++t) {
        const Club& c = kClubs[t];
        league.truth.teams[c.name] = {std::exp(log_attack[t] - mean_attack), std::exp(log_defense[t])};
        aliases.add(c.name, c.name);
        aliases.add(c.name, c.town);
        aliases.add(c.name, c.nickname);
    }

    std::vector<MatchRecord> matches;
    std::vector<PreviewArticle> previews;
    for (const auto& season : o.seasons) {
        const int year = std::stoi(season.substr(0, 4));
        const std::chrono::sys_days kickoff{Date{std::chrono::year{year}, std::chrono::month{8}, std::chrono::day{10}}};
        for (std::size_t r = 0; r < rounds.size(); ++r) {
            std::vector<double> form(o.n_teams);
            for (auto& f : form) f = o.form_sd * normal(gen);
            const Date date{kickoff + std::chrono::days{7 * static_cast<long>(r)}};
            for (std::size_t i = 0; i < rounds[r].size(); ++i) {
                const auto [hi, ai] = rounds[r][i];
                const Club& home = kClubs[hi];
                const Club& away = kClubs[ai];
                const auto& hs = league.truth.teams.at(home.name);
                const auto& as = league.truth.teams.at(away.name);
                const double lambda = hs.attack * as.defense * o.home_adv * std::exp(form[hi] - 0.5 * form[ai]);
                const double kappa = as.attack * hs.defense * std::exp(form[ai] - 0.5 * form[hi]);
                const auto grid = dc::score_grid(lambda, kappa, o.rho, kSampleGoals);
                const auto [hg, ag] = sample_score(grid, rng.uniform());

                MatchRecord m;
                m.match_id = fmt::format("{}-r{:02}-{}", season, r + 1, i + 1);
                m.date = date;
                m.season = season;
                m.home_team = home.name;
                m.away_team = away.name;
                m.home_goals = hg;
                m.away_goals = ag;
                if (rng.uniform() < o.odds_rate) {
                    const auto p = dc::outcome_probs(grid);
                    double q[3];
                    for (std::size_t k = 0; k < 3; ++k)
                        q[k] = p.at(kOutcomes[k]) * std::exp(o.odds_noise * normal(gen));
                    const double s = q[0] + q[1] + q[2];
                    const auto price = [&](double v) {
                        return std::max(1.01, std::round(100.0 / (v / s * (1.0 + o.overround))) / 100.0);
                    };
                    m.odds = OddsTriple{price(q[0]), price(q[1]), price(q[2])};
                }
                if (rng.uniform() < o.preview_rate) {
                    std::string text = describe(home, form[hi], o.form_threshold, rng) + " " +
                                       describe(away, form[ai], o.form_threshold, rng) + " " +
                                       kFiller[rng.below(std::size(kFiller))];
                    previews.push_back({m.match_id, "synthetic", std::move(text), {}});
                }
                matches.push_back(std::move(m));
            }
        }
    }
    league.corpus = Corpus(std::move(matches), std::move(previews), std::move(aliases));
    return league;
}

}  // namespace matchcast::synth
