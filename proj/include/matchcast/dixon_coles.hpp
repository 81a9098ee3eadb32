#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "matchcast/types.hpp"

namespace matchcast::dc {

struct TeamStrength {
    double attack = 1.0;
    double defense = 1.0;
    friend bool operator==(const TeamStrength&, const TeamStrength&) = default;
};

// Fitted Dixon-Coles parameters. Home goals ~ attack[home] * defense[away] *
// home_adv, away goals ~ attack[away] * defense[home], with the low-score
// correction tau controlled by rho. Geometric mean of attacks is 1.
struct Params {
    std::map<std::string, TeamStrength, std::less<>> teams;
    double home_adv = 1.0;
    double rho = 0.0;
    double xi = 0.0;

    // Fit diagnostics.
    Date as_of{};
    std::size_t n_matches = 0;
    int iterations = 0;
    double grad_norm = 0.0;
    double log_likelihood = 0.0;  // weighted, normalized by total weight

    bool has_team(std::string_view team) const { return teams.find(team) != teams.end(); }
    // Geometric-mean team, used for teams absent from training.
    TeamStrength league_mean() const;
};

struct FitOptions {
    double xi = 0.0065;  // decay per half-week
    double rho_min = -0.3;
    double rho_max = 0.3;
    int max_iter = 500;
    double grad_tol = 1e-6;
    const Params* warm_start = nullptr;
};

// Objective values (weighted mean log-likelihood) at each accepted iterate.
struct FitTrace {
    std::vector<double> log_likelihood;
};

// Low-score dependence correction.
double tau(int home_goals, int away_goals, double lambda, double kappa, double rho);

// Weight of a match played `days` before the reference date.
double time_weight(double xi, long days);

// Maximum-likelihood fit. Every team needs at least one home and one away
// match. Throws NonConvergenceError when the projected gradient max-norm of
// the normalized objective stays above grad_tol after max_iter iterations.
Params fit(std::span<const MatchRecord> train, Date as_of, const FitOptions& options = {},
           FitTrace* trace = nullptr);

// Weighted mean log-likelihood (constants dropped) of `params` on `matches`.
double log_likelihood(const Params& params, std::span<const MatchRecord> matches, Date as_of);

// Drops matches of teams lacking a home or an away appearance, repeating
// until stable, so the result satisfies fit's precondition.
std::vector<MatchRecord> fit_eligible(std::span<const MatchRecord> matches);

struct ScoreGrid {
    int max_goals = 10;
    std::vector<double> probs;   // row-major [home_goals][away_goals], renormalized
    double captured_mass = 1.0;  // grid mass before renormalization

    double at(int home_goals, int away_goals) const {
        return probs[static_cast<std::size_t>(home_goals) * (max_goals + 1) + away_goals];
    }
};

ScoreGrid score_grid(double lambda, double kappa, double rho, int max_goals = 10);
ScoreGrid score_grid(const Params& params, std::string_view home, std::string_view away,
                     int max_goals = 10);
// Lower triangle, diagonal, upper triangle.
OutcomeProbs outcome_probs(const ScoreGrid& grid);

// Goal means for a fixture. Throws ModelError for unknown teams.
std::pair<double, double> goal_means(const Params& params, std::string_view home, std::string_view away);

// Outcome probabilities; the grid grows beyond max_goals when needed to hold
// 0.999 of the mass.
OutcomeProbs predict(const Params& params, std::string_view home, std::string_view away,
                     int max_goals = 10);

struct Prediction {
    OutcomeProbs probs;
    bool fallback = false;  // a team was absent from training
};

// Like predict, but substitutes league-mean strength for unknown teams.
Prediction predict_with_fallback(const Params& params, std::string_view home, std::string_view away,
                                 int max_goals = 10);

nlohmann::json to_json(const Params& params);
Params params_from_json(const nlohmann::json& j);

}  // namespace matchcast::dc
