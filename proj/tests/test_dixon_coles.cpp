#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fixtures.hpp"
#include "matchcast/dixon_coles.hpp"
#include "matchcast/errors.hpp"
#include "matchcast/synth.hpp"

using namespace matchcast;
using fixtures::match;

namespace {

double poisson(int k, double mean) { return std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0)); }

// Independent double sum over a (g+1)^2 grid, renormalized.
OutcomeProbs oracle(double lambda, double kappa, double rho, int g) {
    double h = 0, d = 0, a = 0;
    for (int x = 0; x <= g; ++x)
        for (int y = 0; y <= g; ++y) {
            double t = 1;
            if (x == 0 && y == 0) t = 1 - lambda * kappa * rho;
            if (x == 0 && y == 1) t = 1 + lambda * rho;
            if (x == 1 && y == 0) t = 1 + kappa * rho;
            if (x == 1 && y == 1) t = 1 - rho;
            const double p = t * poisson(x, lambda) * poisson(y, kappa);
            (x > y ? h : x == y ? d : a) += p;
        }
    const double s = h + d + a;
    return {h / s, d / s, a / s};
}

dc::Params design_truth() {
    dc::Params p;
    p.teams = {{"A", {1.2, 1.0}}, {"B", {0.8, 1.0}}, {"C", {1.0, 1.0}}, {"D", {1.0 / 0.96, 1.0}}};
    p.home_adv = 1.4;
    p.rho = -0.05;
    return p;
}

dc::FitOptions no_decay() {
    dc::FitOptions o;
    o.xi = 0.0;
    return o;
}

}  // namespace

TEST_CASE("tau corrects only the four low-score cells") {
    CHECK(dc::tau(0, 0, 1.2, 0.8, -0.1) == doctest::Approx(1.096).epsilon(1e-15));
    CHECK(dc::tau(0, 1, 1.2, 0.8, -0.1) == doctest::Approx(0.88));
    CHECK(dc::tau(1, 0, 1.2, 0.8, -0.1) == doctest::Approx(0.92));
    CHECK(dc::tau(1, 1, 1.2, 0.8, -0.1) == doctest::Approx(1.1));
    CHECK(dc::tau(2, 0, 1.2, 0.8, -0.1) == 1.0);
    CHECK(dc::tau(3, 3, 1.2, 0.8, 0.25) == 1.0);
}

TEST_CASE("time weight decays per half-week") {
    CHECK(dc::time_weight(0.0065, 0) == 1.0);
    CHECK(dc::time_weight(0.0065, 7) == doctest::Approx(std::exp(-0.013)));
    CHECK(dc::time_weight(0.0, 400) == 1.0);
}

TEST_CASE("unit means give the double-sum triple") {
    const auto p = dc::outcome_probs(dc::score_grid(1.0, 1.0, 0.0, 10));
    const auto o = oracle(1.0, 1.0, 0.0, 10);
    CHECK(std::abs(p.home - o.home) < 1e-12);
    CHECK(std::abs(p.draw - o.draw) < 1e-12);
    // Values frozen from the oracle above.
    CHECK(std::abs(p.home - 0.3457) < 1e-4);
    CHECK(std::abs(p.draw - 0.3085) < 1e-4);
    CHECK(std::abs(p.away - 0.3457) < 1e-4);
    CHECK(p.home == p.away);
}

TEST_CASE("grid agrees with the oracle across means and rho") {
    for (double l : {0.3, 1.0, 1.7, 3.2})
        for (double k : {0.4, 1.1, 2.5})
            for (double r : {-0.2, -0.05, 0.0, 0.1}) {
                if (1 - l * k * r <= 0 || 1 + l * r <= 0 || 1 + k * r <= 0) continue;
                const auto p = dc::outcome_probs(dc::score_grid(l, k, r, 12));
                const auto o = oracle(l, k, r, 12);
                CHECK(std::abs(p.home - o.home) < 1e-12);
                CHECK(std::abs(p.draw - o.draw) < 1e-12);
                CHECK(std::abs(p.away - o.away) < 1e-12);
                CHECK(std::abs(p.sum() - 1.0) < 1e-12);
            }
}

TEST_CASE("rho rescales the 0-0 cell by tau before renormalization") {
    const auto base = dc::score_grid(1.2, 0.8, 0.0, 10);
    const auto corr = dc::score_grid(1.2, 0.8, -0.1, 10);
    const double ratio = (corr.at(0, 0) * corr.captured_mass) / (base.at(0, 0) * base.captured_mass);
    CHECK(ratio == doctest::Approx(1.096).epsilon(1e-12));
    // Cells outside the corrected block are untouched.
    CHECK(corr.at(3, 2) * corr.captured_mass == doctest::Approx(base.at(3, 2) * base.captured_mass).epsilon(1e-14));
}

TEST_CASE("with rho = 0 the grid factorizes into its margins") {
    const auto g = dc::score_grid(1.6, 0.9, 0.0, 10);
    std::vector<double> row(11), col(11);
    for (int x = 0; x <= 10; ++x)
        for (int y = 0; y <= 10; ++y) {
            row[x] += g.at(x, y);
            col[y] += g.at(x, y);
        }
    for (int x = 0; x <= 10; ++x)
        for (int y = 0; y <= 10; ++y) CHECK(g.at(x, y) == doctest::Approx(row[x] * col[y]).epsilon(1e-12));
}

TEST_CASE("score grid preconditions") {
    CHECK_THROWS_AS(dc::score_grid(1.0, 1.0, 0.0, 4), ModelError);
    CHECK_THROWS_AS(dc::score_grid(9.0, 1.0, 0.0, 10), ModelError);
    const auto p = design_truth();
    CHECK_THROWS_AS(dc::score_grid(p, "A", "Z", 10), ModelError);
    CHECK_THROWS_AS(dc::predict(p, "Z", "A"), ModelError);
    // predict widens the grid instead of failing on extreme means.
    dc::Params extreme = p;
    extreme.teams["A"].attack = 9.0;
    const auto q = dc::predict(extreme, "A", "B");
    CHECK(std::abs(q.sum() - 1.0) < 1e-12);
    CHECK(q.home > 0.99);
}

TEST_CASE("identical teams: symmetric without home advantage, home-favoured with it") {
    dc::Params p;
    p.teams = {{"X", {1.1, 0.9}}, {"Y", {1.1, 0.9}}};
    p.rho = -0.08;
    p.home_adv = 1.0;
    const auto even = dc::predict(p, "X", "Y");
    CHECK(even.home == even.away);
    p.home_adv = 1.3;
    const auto home = dc::predict(p, "X", "Y");
    CHECK(home.home > home.away);
}

TEST_CASE("unknown teams fall back to the league mean with a flag") {
    const auto p = design_truth();
    const auto known = dc::predict_with_fallback(p, "A", "B");
    CHECK_FALSE(known.fallback);
    const auto unknown = dc::predict_with_fallback(p, "A", "Promoted");
    CHECK(unknown.fallback);
    CHECK(std::abs(unknown.probs.sum() - 1.0) < 1e-12);
}

TEST_CASE("symmetric two-team league: equal strengths, home advantage from the goal excess") {
    std::vector<MatchRecord> ms;
    for (int i = 0; i < 6; ++i) {
        const std::string d = fmt::format("2018-08-{:02}", 2 * i + 1);
        ms.push_back(match("h" + std::to_string(i), d.c_str(), i % 2 ? "A" : "B", i % 2 ? "B" : "A", 2, 1));
        ms.push_back(match("g" + std::to_string(i), d.c_str(), i % 2 ? "B" : "A", i % 2 ? "A" : "B", 3, 2));
    }
    const auto p = dc::fit(ms, fixtures::date("2018-08-31"), no_decay());
    CHECK(p.teams.at("A").attack == doctest::Approx(p.teams.at("B").attack).epsilon(1e-6));
    CHECK(p.teams.at("A").defense == doctest::Approx(p.teams.at("B").defense).epsilon(1e-6));
    // Home sides average 2.5 goals and away sides 1.5.
    CHECK(p.home_adv == doctest::Approx(2.5 / 1.5).epsilon(1e-5));
}

TEST_CASE("fit preconditions and non-convergence") {
    std::vector<MatchRecord> ms{match("a", "2018-08-01", "A", "B", 1, 0), match("b", "2018-08-08", "A", "C", 2, 1),
                                match("c", "2018-08-15", "B", "C", 0, 0)};
    CHECK_THROWS_AS(dc::fit(ms, fixtures::date("2018-09-01")), DataError);  // A never plays away
    CHECK_THROWS_AS(dc::fit({}, fixtures::date("2018-09-01")), DataError);
    CHECK(dc::fit_eligible(ms).empty());

    const auto sim = synth::simulate_matches(design_truth(), 200, 5);
    CHECK_THROWS_AS(dc::fit(sim, sim.front().date), DataError);  // matches after as_of
    auto opts = no_decay();
    opts.max_iter = 2;
    try {
        dc::fit(sim, sim.back().date, opts);
        FAIL("expected non-convergence");
    } catch (const NonConvergenceError& e) {
        CHECK(e.iterations() == 2);
        CHECK(e.grad_norm() > 1e-6);
    }
}

TEST_CASE("fit converges, centres log-attacks and never lowers the objective") {
    const auto sim = synth::simulate_matches(design_truth(), 600, 21);
    dc::FitTrace trace;
    const auto p = dc::fit(sim, sim.back().date, {}, &trace);
    CHECK(p.grad_norm < 1e-6);
    double sum_log_attack = 0;
    for (const auto& [_, s] : p.teams) sum_log_attack += std::log(s.attack);
    CHECK(std::abs(sum_log_attack) < 1e-9);
    REQUIRE(trace.log_likelihood.size() >= 2);
    for (std::size_t i = 1; i < trace.log_likelihood.size(); ++i)
        CHECK(trace.log_likelihood[i] >= trace.log_likelihood[i - 1]);
    CHECK(p.log_likelihood == doctest::Approx(dc::log_likelihood(p, sim, sim.back().date)).epsilon(1e-12));
    CHECK(p.rho >= -0.3);
    CHECK(p.rho <= 0.3);
}

TEST_CASE("fit does not depend on match order") {
    auto sim = synth::simulate_matches(design_truth(), 300, 8);
    const auto p = dc::fit(sim, sim.back().date);
    std::reverse(sim.begin(), sim.end());
    std::rotate(sim.begin(), sim.begin() + 77, sim.end());
    const auto q = dc::fit(sim, p.as_of);
    CHECK(q.teams == p.teams);
    CHECK(q.home_adv == p.home_adv);
    CHECK(dc::predict(p, "A", "C") == dc::predict(q, "A", "C"));
}

TEST_CASE("relabelling teams permutes the fitted parameters") {
    const auto sim = synth::simulate_matches(design_truth(), 240, 31);
    const std::map<std::string, std::string> rename{{"A", "C"}, {"B", "A"}, {"C", "D"}, {"D", "B"}};
    auto relabelled = sim;
    for (auto& m : relabelled) {
        m.home_team = rename.at(m.home_team);
        m.away_team = rename.at(m.away_team);
    }
    const auto p = dc::fit(sim, sim.back().date);
    const auto q = dc::fit(relabelled, sim.back().date);
    for (const auto& [from, to] : rename) {
        CHECK(q.teams.at(to).attack == doctest::Approx(p.teams.at(from).attack).epsilon(1e-6));
        CHECK(q.teams.at(to).defense == doctest::Approx(p.teams.at(from).defense).epsilon(1e-6));
    }
    CHECK(q.home_adv == doctest::Approx(p.home_adv).epsilon(1e-6));
    CHECK(q.rho == doctest::Approx(p.rho).epsilon(1e-5));
}

TEST_CASE("heavy decay reduces the fit to the newest block") {
    // Old history where A dominates, then a full double round-robin on one day.
    std::vector<MatchRecord> old = synth::simulate_matches(design_truth(), 120, 4);
    std::vector<MatchRecord> recent;
    const char* teams[] = {"A", "B", "C", "D"};
    const int scores[12][2] = {{0, 2}, {1, 1}, {2, 0}, {1, 3}, {2, 2}, {0, 1},
                               {3, 1}, {1, 0}, {0, 0}, {2, 1}, {1, 2}, {4, 1}};
    int k = 0;
    for (int h = 0; h < 4; ++h)
        for (int a = 0; a < 4; ++a) {
            if (h == a) continue;
            recent.push_back(match("r" + std::to_string(k), "2003-06-01", teams[h], teams[a], scores[k][0], scores[k][1]));
            ++k;
        }
    auto all = old;
    all.insert(all.end(), recent.begin(), recent.end());
    dc::FitOptions heavy;
    heavy.xi = 10.0;
    const auto p = dc::fit(all, fixtures::date("2003-06-01"), heavy);
    const auto q = dc::fit(recent, fixtures::date("2003-06-01"), no_decay());
    for (const auto* t : teams) {
        CHECK(p.teams.at(t).attack == doctest::Approx(q.teams.at(t).attack).epsilon(1e-4));
        CHECK(p.teams.at(t).defense == doctest::Approx(q.teams.at(t).defense).epsilon(1e-4));
    }
    CHECK(p.home_adv == doctest::Approx(q.home_adv).epsilon(1e-4));
}

TEST_CASE("large simulated league recovers the generating parameters") {
    const auto truth = design_truth();
    const auto sim = synth::simulate_matches(truth, 20000, 2024);
    const auto p = dc::fit(sim, sim.back().date, no_decay());
    for (const auto& [id, s] : truth.teams) {
        CHECK(std::abs(p.teams.at(id).attack - s.attack) < 0.05);
        CHECK(std::abs(p.teams.at(id).defense - s.defense) < 0.05);
    }
    CHECK(std::abs(p.home_adv - truth.home_adv) < 0.05);
    CHECK(std::abs(p.rho - truth.rho) < 0.05);
}

TEST_CASE("warm start reaches the same optimum") {
    const auto sim = synth::simulate_matches(design_truth(), 400, 77);
    const auto cold = dc::fit(sim, sim.back().date);
    auto opts = dc::FitOptions{};
    opts.warm_start = &cold;
    const auto warm = dc::fit(sim, sim.back().date, opts);
    CHECK(warm.iterations <= cold.iterations);
    CHECK(warm.home_adv == doctest::Approx(cold.home_adv).epsilon(1e-6));
}

TEST_CASE("artifact JSON round-trips") {
    const auto sim = synth::simulate_matches(design_truth(), 200, 9);
    const auto p = dc::fit(sim, sim.back().date);
    const auto j = dc::to_json(p);
    CHECK(j.at("type") == "dixon_coles");
    CHECK(j.at("version") == 1);
    CHECK(j.contains("xi"));
    CHECK(j.at("teams").at("A").contains("attack"));
    const auto q = dc::params_from_json(j);
    CHECK(q.teams == p.teams);
    CHECK(q.home_adv == p.home_adv);
    CHECK(q.rho == p.rho);
    CHECK(q.xi == p.xi);
    auto bad = j;
    bad["version"] = 2;
    CHECK_THROWS_AS(dc::params_from_json(bad), ModelError);
}
