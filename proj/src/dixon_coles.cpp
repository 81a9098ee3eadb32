#include "matchcast/dixon_coles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "matchcast/errors.hpp"

namespace matchcast::dc {

namespace {

constexpr double kHalfWeekDays = 3.5;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Flat parameter vector: log attack of teams 0..n-2 (team n-1 takes minus
// their sum), log defense of teams 0..n-1, log home advantage, rho.
class Objective {
public:
    Objective(std::span<const MatchRecord> matches, const std::vector<std::string>& teams, Date as_of,
              double xi) {
        n_ = static_cast<int>(teams.size());
        auto index = [&](const std::string& t) {
            return static_cast<int>(std::lower_bound(teams.begin(), teams.end(), t) - teams.begin());
        };
        long min_days = std::numeric_limits<long>::max();
        for (const auto& m : matches) min_days = std::min(min_days, days_between(m.date, as_of));
        for (const auto& m : matches) {
            home_.push_back(index(m.home_team));
            away_.push_back(index(m.away_team));
            hg_.push_back(m.home_goals);
            ag_.push_back(m.away_goals);
            // Relative to the newest match; the normalized objective is unchanged.
            weight_.push_back(time_weight(xi, days_between(m.date, as_of) - min_days));
        }
        total_weight_ = std::accumulate(weight_.begin(), weight_.end(), 0.0);
    }

    int dim() const { return 2 * n_ + 1; }
    int rho_index() const { return 2 * n_; }

    void unpack(const std::vector<double>& th, std::vector<double>& la, std::vector<double>& ld) const {
        la.assign(n_, 0.0);
        ld.assign(n_, 0.0);
        double sum = 0;
        for (int i = 0; i + 1 < n_; ++i) {
            la[i] = th[i];
            sum += th[i];
        }
        la[n_ - 1] = -sum;
        for (int i = 0; i < n_; ++i) ld[i] = th[n_ - 1 + i];
    }

    // Negated weighted mean log-likelihood; +inf outside the feasible region.
    double eval(const std::vector<double>& th, std::vector<double>* grad) const {
        std::vector<double> la, ld;
        unpack(th, la, ld);
        const double lg = th[2 * n_ - 1];
        const double rho = th[2 * n_];
        std::vector<double> g_la(n_, 0.0), g_ld(n_, 0.0);
        double g_lg = 0, g_rho = 0, ll = 0;

        for (std::size_t m = 0; m < weight_.size(); ++m) {
            const int h = home_[m], a = away_[m], x = hg_[m], y = ag_[m];
            const double w = weight_[m];
            const double eta = la[h] + ld[a] + lg;
            const double zeta = la[a] + ld[h];
            const double lambda = std::exp(eta);
            const double kappa = std::exp(zeta);
            const double t = tau(x, y, lambda, kappa, rho);
            if (!(t > 0) || !std::isfinite(lambda) || !std::isfinite(kappa)) return kInf;

            // d tau scaled: lambda * dtau/dlambda, kappa * dtau/dkappa, dtau/drho.
            double dl = 0, dk = 0, dr = 0;
            if (x == 0 && y == 0) {
                dl = dk = -lambda * kappa * rho;
                dr = -lambda * kappa;
            } else if (x == 0 && y == 1) {
                dl = lambda * rho;
                dr = lambda;
            } else if (x == 1 && y == 0) {
                dk = kappa * rho;
                dr = kappa;
            } else if (x == 1 && y == 1) {
                dr = -1;
            }
            ll += w * (std::log(t) + x * eta - lambda + y * zeta - kappa);
            if (grad) {
                const double d_eta = w * (x - lambda + dl / t);
                const double d_zeta = w * (y - kappa + dk / t);
                g_la[h] += d_eta;
                g_ld[a] += d_eta;
                g_lg += d_eta;
                g_la[a] += d_zeta;
                g_ld[h] += d_zeta;
                g_rho += w * dr / t;
            }
        }
        const double f = -ll / total_weight_;
        if (!std::isfinite(f)) return kInf;
        if (grad) {
            grad->assign(dim(), 0.0);
            for (int i = 0; i + 1 < n_; ++i) (*grad)[i] = -(g_la[i] - g_la[n_ - 1]) / total_weight_;
            for (int i = 0; i < n_; ++i) (*grad)[n_ - 1 + i] = -g_ld[i] / total_weight_;
            (*grad)[2 * n_ - 1] = -g_lg / total_weight_;
            (*grad)[2 * n_] = -g_rho / total_weight_;
        }
        return f;
    }

private:
    int n_ = 0;
    std::vector<int> home_, away_, hg_, ag_;
    std::vector<double> weight_;
    double total_weight_ = 0;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double max_abs(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

std::vector<std::string> teams_of(std::span<const MatchRecord> matches) {
    std::vector<std::string> teams;
    for (const auto& m : matches) {
        teams.push_back(m.home_team);
        teams.push_back(m.away_team);
    }
    std::sort(teams.begin(), teams.end());
    teams.erase(std::unique(teams.begin(), teams.end()), teams.end());
    return teams;
}

}  // namespace

double tau(int x, int y, double lambda, double kappa, double rho) {
    if (x == 0 && y == 0) return 1.0 - lambda * kappa * rho;
    if (x == 0 && y == 1) return 1.0 + lambda * rho;
    if (x == 1 && y == 0) return 1.0 + kappa * rho;
    if (x == 1 && y == 1) return 1.0 - rho;
    return 1.0;
}

double time_weight(double xi, long days) { return std::exp(-xi * static_cast<double>(days) / kHalfWeekDays); }

TeamStrength Params::league_mean() const {
    if (teams.empty()) return {};
    double la = 0, ld = 0;
    for (const auto& [id, s] : teams) {
        la += std::log(s.attack);
        ld += std::log(s.defense);
    }
    const double n = static_cast<double>(teams.size());
    return {std::exp(la / n), std::exp(ld / n)};
}

std::vector<MatchRecord> fit_eligible(std::span<const MatchRecord> matches) {
    std::vector<MatchRecord> kept(matches.begin(), matches.end());
    for (;;) {
        std::map<std::string, std::pair<int, int>> apps;
        for (const auto& m : kept) {
            ++apps[m.home_team].first;
            ++apps[m.away_team].second;
        }
        auto ok = [&](const std::string& t) {
            const auto& [h, a] = apps[t];
            return h > 0 && a > 0;
        };
        const std::size_t before = kept.size();
        std::erase_if(kept, [&](const MatchRecord& m) { return !ok(m.home_team) || !ok(m.away_team); });
        if (kept.size() == before) return kept;
    }
}

Params fit(std::span<const MatchRecord> train_in, Date as_of, const FitOptions& options, FitTrace* trace) {
    if (train_in.empty()) throw DataError("Dixon-Coles fit needs at least one match");
    if (!(options.rho_min < options.rho_max)) throw ConfigError("rho bounds must satisfy rho_min < rho_max");
    if (options.xi < 0) throw ConfigError("xi must be non-negative");

    std::vector<MatchRecord> train(train_in.begin(), train_in.end());
    std::sort(train.begin(), train.end(), [](const MatchRecord& a, const MatchRecord& b) {
        return a.date != b.date ? a.date < b.date : a.match_id < b.match_id;
    });
    std::map<std::string, std::pair<int, int>> apps;
    for (const auto& m : train) {
        if (as_of < m.date) {
            throw DataError("training match '" + m.match_id + "' is dated after the fit date " + format_date(as_of));
        }
        ++apps[m.home_team].first;
        ++apps[m.away_team].second;
    }
    for (const auto& [team, c] : apps) {
        if (c.first == 0 || c.second == 0) {
            throw DataError("team '" + team + "' needs at least one home and one away match to be fitted");
        }
    }

    const auto teams = teams_of(train);
    const int n = static_cast<int>(teams.size());
    Objective obj(train, teams, as_of, options.xi);
    const int dim = obj.dim();
    const int ri = obj.rho_index();

    // Start from league-average scoring, or from a previous fit.
    std::vector<double> x(dim, 0.0);
    double home_goals = 0, away_goals = 0;
    for (const auto& m : train) {
        home_goals += m.home_goals;
        away_goals += m.away_goals;
    }
    const double n_matches = static_cast<double>(train.size());
    const double base = std::log(std::max(away_goals, 0.5) / n_matches);
    for (int i = 0; i < n; ++i) x[n - 1 + i] = base;
    x[2 * n - 1] = std::log(std::max(home_goals, 0.5) / std::max(away_goals, 0.5));
    if (options.warm_start) {
        const Params& w = *options.warm_start;
        std::vector<double> la(n, 0.0);
        for (int i = 0; i < n; ++i) {
            auto it = w.teams.find(teams[i]);
            if (it == w.teams.end()) continue;
            la[i] = std::log(it->second.attack);
            x[n - 1 + i] = std::log(it->second.defense);
        }
        const double mean = std::accumulate(la.begin(), la.end(), 0.0) / n;
        for (int i = 0; i + 1 < n; ++i) x[i] = la[i] - mean;
        x[2 * n - 1] = std::log(w.home_adv);
        x[ri] = std::clamp(w.rho, options.rho_min, options.rho_max);
    }

    std::vector<double> g;
    double f = obj.eval(x, &g);
    if (!std::isfinite(f)) {
        x[ri] = 0.0;
        f = obj.eval(x, &g);
    }
    if (!std::isfinite(f)) throw ModelError("Dixon-Coles objective is not finite at the starting point");
    if (trace) trace->log_likelihood.push_back(-f);

    auto projected = [&](const std::vector<double>& grad, const std::vector<double>& at) {
        std::vector<double> pg = grad;
        if ((at[ri] <= options.rho_min && pg[ri] > 0) || (at[ri] >= options.rho_max && pg[ri] < 0)) pg[ri] = 0;
        return pg;
    };

    // Inverse Hessian approximation, row-major.
    std::vector<double> H(static_cast<std::size_t>(dim) * dim, 0.0);
    auto reset_h = [&](double scale) {
        std::fill(H.begin(), H.end(), 0.0);
        for (int i = 0; i < dim; ++i) H[static_cast<std::size_t>(i) * dim + i] = scale;
    };
    reset_h(1.0);
    bool h_is_identity = true;
    bool scaled = false;

    int iter = 0;
    double gnorm = max_abs(projected(g, x));
    while (gnorm >= options.grad_tol && iter < options.max_iter) {
        ++iter;
        const std::vector<double> pg = projected(g, x);
        const bool rho_fixed = pg[ri] == 0 && g[ri] != 0;
        std::vector<double> d(dim, 0.0);
        for (int i = 0; i < dim; ++i) {
            double s = 0;
            for (int j = 0; j < dim; ++j) s += H[static_cast<std::size_t>(i) * dim + j] * pg[j];
            d[i] = -s;
        }
        if (rho_fixed) d[ri] = 0;
        if (dot(d, pg) >= 0) {
            reset_h(1.0);
            h_is_identity = true;
            for (int i = 0; i < dim; ++i) d[i] = -pg[i];
        }

        std::vector<double> xn(dim), gn;
        double fn = kInf;
        bool accepted = false;
        double t = 1.0;
        for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
            for (int i = 0; i < dim; ++i) xn[i] = x[i] + t * d[i];
            xn[ri] = std::clamp(xn[ri], options.rho_min, options.rho_max);
            fn = obj.eval(xn, &gn);
            if (!std::isfinite(fn)) continue;
            double decrease = 0;
            for (int i = 0; i < dim; ++i) decrease += g[i] * (xn[i] - x[i]);
            if (fn <= f + 1e-4 * decrease) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (h_is_identity) break;
            reset_h(1.0);
            h_is_identity = true;
            continue;
        }

        std::vector<double> s(dim), y(dim);
        for (int i = 0; i < dim; ++i) {
            s[i] = xn[i] - x[i];
            y[i] = gn[i] - g[i];
        }
        const double sy = dot(s, y);
        if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
            if (!scaled) {
                reset_h(sy / dot(y, y));
                scaled = true;
            }
            // H <- (I - r s y') H (I - r y s') + r s s'
            const double r = 1.0 / sy;
            std::vector<double> hy(dim, 0.0);
            for (int i = 0; i < dim; ++i) {
                for (int j = 0; j < dim; ++j) hy[i] += H[static_cast<std::size_t>(i) * dim + j] * y[j];
            }
            const double yhy = dot(y, hy);
            for (int i = 0; i < dim; ++i) {
                for (int j = 0; j < dim; ++j) {
                    H[static_cast<std::size_t>(i) * dim + j] +=
                        (1.0 + r * yhy) * r * s[i] * s[j] - r * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
            h_is_identity = false;
        }
        x = std::move(xn);
        g = std::move(gn);
        f = fn;
        if (trace) trace->log_likelihood.push_back(-f);
        gnorm = max_abs(projected(g, x));
    }
    if (gnorm >= options.grad_tol) throw NonConvergenceError(gnorm, iter);

    std::vector<double> la, ld;
    obj.unpack(x, la, ld);
    Params p;
    for (int i = 0; i < n; ++i) p.teams[teams[i]] = {std::exp(la[i]), std::exp(ld[i])};
    p.home_adv = std::exp(x[2 * n - 1]);
    p.rho = x[ri];
    p.xi = options.xi;
    p.as_of = as_of;
    p.n_matches = train.size();
    p.iterations = iter;
    p.grad_norm = gnorm;
    p.log_likelihood = -f;
    return p;
}

double log_likelihood(const Params& params, std::span<const MatchRecord> matches, Date as_of) {
    double ll = 0, total = 0;
    for (const auto& m : matches) {
        const auto [lambda, kappa] = goal_means(params, m.home_team, m.away_team);
        const double w = time_weight(params.xi, days_between(m.date, as_of));
        const double t = tau(m.home_goals, m.away_goals, lambda, kappa, params.rho);
        if (!(t > 0)) return -kInf;
        ll += w * (std::log(t) + m.home_goals * std::log(lambda) - lambda + m.away_goals * std::log(kappa) - kappa);
        total += w;
    }
    return total > 0 ? ll / total : 0.0;
}

namespace {

ScoreGrid unchecked_grid(double lambda, double kappa, double rho, int max_goals) {
    const int g = max_goals + 1;
    std::vector<double> px(g), py(g);
    px[0] = std::exp(-lambda);
    py[0] = std::exp(-kappa);
    for (int k = 1; k < g; ++k) {
        px[k] = px[k - 1] * lambda / k;
        py[k] = py[k - 1] * kappa / k;
    }
    ScoreGrid grid;
    grid.max_goals = max_goals;
    grid.probs.resize(static_cast<std::size_t>(g) * g);
    double mass = 0;
    for (int x = 0; x < g; ++x) {
        for (int y = 0; y < g; ++y) {
            const double p = std::max(0.0, tau(x, y, lambda, kappa, rho)) * (px[x] * py[y]);
            grid.probs[static_cast<std::size_t>(x) * g + y] = p;
            mass += p;
        }
    }
    grid.captured_mass = mass;
    if (mass > 0)
        for (double& p : grid.probs) p /= mass;
    return grid;
}

constexpr double kMinCapturedMass = 0.999;
constexpr int kWidestGrid = 640;

// Extreme fitted means can leave more than 0.001 of the mass above
// max_goals; the grid is doubled until the check passes.
OutcomeProbs covering_outcome_probs(double lambda, double kappa, double rho, int max_goals) {
    if (max_goals < 5) throw ModelError("score grid needs max_goals >= 5");
    if (!(lambda > 0) || !(kappa > 0)) throw ModelError("goal means must be positive");
    for (int g = max_goals;; g *= 2) {
        const ScoreGrid grid = unchecked_grid(lambda, kappa, rho, g);
        if (grid.captured_mass >= kMinCapturedMass) return outcome_probs(grid);
        if (g >= kWidestGrid) throw ModelError("goal means too large for a score grid");
    }
}

}  // namespace

ScoreGrid score_grid(double lambda, double kappa, double rho, int max_goals) {
    if (max_goals < 5) throw ModelError("score grid needs max_goals >= 5");
    if (!(lambda > 0) || !(kappa > 0)) throw ModelError("goal means must be positive");
    ScoreGrid grid = unchecked_grid(lambda, kappa, rho, max_goals);
    if (grid.captured_mass < kMinCapturedMass) {
        throw ModelError("score grid truncated too much probability mass; raise max_goals");
    }
    return grid;
}

std::pair<double, double> goal_means(const Params& params, std::string_view home, std::string_view away) {
    auto h = params.teams.find(home);
    auto a = params.teams.find(away);
    if (h == params.teams.end()) throw ModelError("unknown team '" + std::string(home) + "'");
    if (a == params.teams.end()) throw ModelError("unknown team '" + std::string(away) + "'");
    return {h->second.attack * a->second.defense * params.home_adv, a->second.attack * h->second.defense};
}

ScoreGrid score_grid(const Params& params, std::string_view home, std::string_view away, int max_goals) {
    const auto [lambda, kappa] = goal_means(params, home, away);
    return score_grid(lambda, kappa, params.rho, max_goals);
}

OutcomeProbs outcome_probs(const ScoreGrid& grid) {
    // Mirrored cells are visited in the same order, so a symmetric grid gives
    // bit-identical home and away sums.
    double home = 0, draw = 0, away = 0;
    for (int x = 0; x <= grid.max_goals; ++x) {
        draw += grid.at(x, x);
        for (int y = 0; y < x; ++y) {
            home += grid.at(x, y);
            away += grid.at(y, x);
        }
    }
    return OutcomeProbs::normalized(home, draw, away);
}

OutcomeProbs predict(const Params& params, std::string_view home, std::string_view away, int max_goals) {
    const auto [lambda, kappa] = goal_means(params, home, away);
    return covering_outcome_probs(lambda, kappa, params.rho, max_goals);
}

Prediction predict_with_fallback(const Params& params, std::string_view home, std::string_view away,
                                 int max_goals) {
    const bool known = params.has_team(home) && params.has_team(away);
    if (known) return {predict(params, home, away, max_goals), false};
    const TeamStrength mean = params.league_mean();
    auto strength = [&](std::string_view t) {
        auto it = params.teams.find(t);
        return it == params.teams.end() ? mean : it->second;
    };
    const TeamStrength h = strength(home), a = strength(away);
    const double lambda = h.attack * a.defense * params.home_adv;
    const double kappa = a.attack * h.defense;
    return {covering_outcome_probs(lambda, kappa, params.rho, max_goals), true};
}

nlohmann::json to_json(const Params& p) {
    nlohmann::json teams = nlohmann::json::object();
    for (const auto& [id, s] : p.teams) teams[id] = {{"attack", s.attack}, {"defense", s.defense}};
    return {{"type", "dixon_coles"},
            {"version", 1},
            {"xi", p.xi},
            {"gamma", p.home_adv},
            {"rho", p.rho},
            {"teams", std::move(teams)},
            {"as_of", format_date(p.as_of)},
            {"n_matches", p.n_matches},
            {"iterations", p.iterations},
            {"grad_norm", p.grad_norm},
            {"log_likelihood", p.log_likelihood}};
}

Params params_from_json(const nlohmann::json& j) {
    try {
        if (j.at("type").get<std::string>() != "dixon_coles") throw ModelError("artifact is not a dixon_coles model");
        if (j.at("version").get<int>() != 1) throw ModelError("unsupported dixon_coles artifact version");
        Params p;
        p.xi = j.at("xi").get<double>();
        p.home_adv = j.at("gamma").get<double>();
        p.rho = j.at("rho").get<double>();
        for (auto it = j.at("teams").begin(); it != j.at("teams").end(); ++it) {
            p.teams[it.key()] = {it.value().at("attack").get<double>(), it.value().at("defense").get<double>()};
        }
        p.as_of = parse_date(j.at("as_of").get<std::string>());
        p.n_matches = j.value("n_matches", std::size_t{0});
        p.iterations = j.value("iterations", 0);
        p.grad_norm = j.value("grad_norm", 0.0);
        p.log_likelihood = j.value("log_likelihood", 0.0);
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("malformed dixon_coles artifact: ") + e.what());
    }
}

}  // namespace matchcast::dc
