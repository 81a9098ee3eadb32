#include "matchcast/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "matchcast/errors.hpp"
#include "matchcast/io.hpp"
#include "matchcast/odds.hpp"

namespace matchcast::eval {

long ConfusionMatrix::total() const {
    long t = 0;
    for (const auto& row : counts)
        for (long c : row) t += c;
    return t;
}

long ConfusionMatrix::correct() const { return counts[0][0] + counts[1][1] + counts[2][2]; }

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t p = 0; p < 3; ++p) counts[a][p] += o.counts[a][p];
    return *this;
}

Metrics metrics(const ConfusionMatrix& cm) {
    const long n = cm.total();
    if (n == 0) throw DataError("metrics of an empty confusion matrix");
    double precision = 0, recall = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        long predicted = 0, actual = 0;
        for (std::size_t j = 0; j < 3; ++j) {
            predicted += cm.counts[j][k];
            actual += cm.counts[k][j];
        }
        const double tp = static_cast<double>(cm.counts[k][k]);
        precision += predicted > 0 ? tp / static_cast<double>(predicted) : 0.0;
        recall += actual > 0 ? tp / static_cast<double>(actual) : 0.0;
    }
    Metrics m;
    m.accuracy = static_cast<double>(cm.correct()) / static_cast<double>(n);
    m.precision = precision / 3.0;
    m.recall = recall / 3.0;
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

const ModelResult& ExperimentReport::result(const std::string& model) const {
    for (const auto& r : results)
        if (r.model == model) return r;
    throw ConfigError("no result for model " + model);
}

namespace {

struct Suite {
    ensemble::EnsembleModel full;
    ensemble::EnsembleModel ablation;
};

Suite train_suite(const Corpus& train, PipelineConfig config) {
    config.ensemble.use_text = true;
    Suite s{ensemble::train_ensemble(train, config), {}};
    s.ablation = s.full;
    s.ablation.use_text = false;
    s.ablation.stacker = ensemble::train_stacker(s.full.training_rows, s.full.training_labels, false,
                                                 config.stacker_forest, forest::mix_seed(config.seed, 2001));
    return s;
}

// Picks of the five models, in kModels order.
std::array<Outcome, 5> predict_all(const Suite& s, const Corpus& corpus, const MatchRecord& m,
                                   const dc::Params* dc_override = nullptr) {
    const dc::Params& dcp = dc_override ? *dc_override : s.full.dc;
    const auto meta = ensemble::meta_features_for(s.full, corpus, m, dc_override);
    const auto full = s.full.stacker.predict_proba(ensemble::stacker_input(meta, true));
    const auto ablation = s.ablation.stacker.predict_proba(ensemble::stacker_input(meta, false));
    return {ensemble::predict_text(*s.full.text, corpus, m).argmax(),
            dc::predict_with_fallback(dcp, m.home_team, m.away_team, s.full.max_goals).probs.argmax(),
            odds::favourite_pick(*m.odds), full.argmax(), ablation.argmax()};
}

std::vector<ModelResult> empty_results() {
    std::vector<ModelResult> r;
    for (const auto& id : kModels) r.push_back({id, {}, {}, {}, {}, {}, {}});
    return r;
}

bool has_odds(const MatchRecord& m) { return m.odds.has_value(); }

Date last_date(std::span<const MatchRecord> ms) { return ms.back().date; }

}  // namespace

ExperimentReport experiment1(const Corpus& corpus, const Experiment1Options& options, const PipelineConfig& config) {
    ExperimentReport report;
    report.experiment = 1;
    report.results = empty_results();
    std::vector<Metrics> sums(kModels.size());

    for (const auto& season : options.seasons) {
        std::vector<MatchRecord> in_season;
        for (const auto& m : corpus.matches())
            if (m.season == season) in_season.push_back(m);
        if (in_season.empty()) throw DataError("season " + season + " has no matches");
        const Date start = in_season.front().date;
        const Corpus train = corpus.filter([&](const MatchRecord& m) { return m.date < start; });
        if (train.matches().empty()) throw EmptySplitError(EmptySplitError::Side::train, "training split is empty");

        std::vector<MatchRecord> test;
        for (const auto& m : in_season) {
            if (test.size() == options.test_size) break;
            if (!has_odds(m))
                report.excluded.push_back(m.match_id + ": no odds");
            else if (!corpus.has_preview(m.match_id))
                report.excluded.push_back(m.match_id + ": no preview");
            else
                test.push_back(m);
        }
        if (test.empty()) throw EmptySplitError(EmptySplitError::Side::test, "test split is empty");
        if (test.size() < options.test_size)
            report.flags.push_back(fmt::format("season {}: {} eligible test matches (< {})", season, test.size(),
                                               options.test_size));

        const Suite suite = train_suite(train, config);
        for (const auto& e : suite.full.excluded) report.excluded.push_back(season + " training " + e);

        SeasonResult sr{season, train.matches().size(), test.size(), empty_results()};
        for (const auto& m : test) {
            const auto picks = predict_all(suite, corpus, m);
            for (std::size_t k = 0; k < picks.size(); ++k) sr.models[k].confusion.add(m.outcome(), picks[k]);
        }
        for (std::size_t k = 0; k < sr.models.size(); ++k) {
            auto& r = sr.models[k];
            r.metrics = metrics(r.confusion);
            report.results[k].confusion += r.confusion;
            sums[k].accuracy += r.metrics.accuracy;
            sums[k].precision += r.metrics.precision;
            sums[k].recall += r.metrics.recall;
            sums[k].f1 += r.metrics.f1;
        }
        report.train_matches += train.matches().size();
        report.test_matches += test.size();
        report.seasons.push_back(std::move(sr));
    }
    const double n = static_cast<double>(options.seasons.size());
    for (std::size_t k = 0; k < kModels.size(); ++k)
        report.results[k].metrics = {sums[k].accuracy / n, sums[k].precision / n, sums[k].recall / n, sums[k].f1 / n};
    return report;
}

std::vector<std::string> random_test_ids(const Corpus& corpus, std::uint64_t seed, double test_fraction) {
    if (!(test_fraction > 0 && test_fraction < 1)) throw ConfigError("test fraction must be in (0, 1)");
    std::vector<std::string> ids;
    for (const auto& m : corpus.matches()) ids.push_back(m.match_id);
    std::sort(ids.begin(), ids.end());
    forest::Rng rng(forest::mix_seed(seed, 3000));
    for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(ids.size())));
    ids.resize(n_test);
    std::sort(ids.begin(), ids.end());
    return ids;
}

ExperimentReport experiment2(const Corpus& corpus, std::uint64_t seed, const PipelineConfig& config,
                             double test_fraction) {
    ExperimentReport report;
    report.experiment = 2;
    report.results = empty_results();

    const auto ids = random_test_ids(corpus, seed, test_fraction);
    const std::set<std::string> test_ids(ids.begin(), ids.end());
    const Corpus train = corpus.filter([&](const MatchRecord& m) { return !test_ids.count(m.match_id); });
    if (train.matches().empty()) throw EmptySplitError(EmptySplitError::Side::train, "training split is empty");

    std::vector<MatchRecord> test;
    for (const auto& m : corpus.matches()) {
        if (!test_ids.count(m.match_id)) continue;
        if (has_odds(m))
            test.push_back(m);
        else
            report.excluded.push_back(m.match_id + ": no odds");
    }
    if (test.empty()) throw EmptySplitError(EmptySplitError::Side::test, "test split is empty");

    const Suite suite = train_suite(train, config);
    for (const auto& e : suite.full.excluded) report.excluded.push_back("training " + e);

    std::vector<long> draw_hits(kModels.size()), longshot_hits(kModels.size());
    for (const auto& m : test) {
        const Outcome actual = m.outcome();
        const bool draw = actual == Outcome::draw;
        const bool longshot = odds::is_longshot(*m.odds, actual);
        report.test_draws += draw;
        report.test_longshots += longshot;
        const auto picks = predict_all(suite, corpus, m);
        for (std::size_t k = 0; k < picks.size(); ++k) {
            report.results[k].confusion.add(actual, picks[k]);
            draw_hits[k] += draw && picks[k] == Outcome::draw;
            longshot_hits[k] += longshot && picks[k] == actual;
        }
    }
    for (std::size_t k = 0; k < kModels.size(); ++k) {
        auto& r = report.results[k];
        r.metrics = metrics(r.confusion);
        if (report.test_draws > 0)
            r.draw_rate = static_cast<double>(draw_hits[k]) / static_cast<double>(report.test_draws);
        if (report.test_longshots > 0)
            r.longshot_rate = static_cast<double>(longshot_hits[k]) / static_cast<double>(report.test_longshots);
    }
    if (report.test_draws == 0) report.flags.push_back("no draws in test set; draw rate undefined");
    if (report.test_longshots == 0) report.flags.push_back("no longshots in test set; longshot rate undefined");
    report.train_matches = train.matches().size();
    report.test_matches = test.size();
    return report;
}

ExperimentReport experiment3(const Corpus& corpus, const Experiment3Options& options, const PipelineConfig& config) {
    if (options.matches_per_week == 0) throw ConfigError("matches per week must be positive");
    ExperimentReport report;
    report.experiment = 3;
    report.season = options.season;
    report.results = empty_results();
    report.gameweeks_derived = true;
    report.flags.push_back(fmt::format("gameweeks derived as date-ordered blocks of {} matches",
                                       options.matches_per_week));

    std::vector<MatchRecord> in_season;
    for (const auto& m : corpus.matches()) {
        if (m.season != options.season) continue;
        if (has_odds(m))
            in_season.push_back(m);
        else
            report.excluded.push_back(m.match_id + ": no odds");
    }
    if (in_season.empty()) throw EmptySplitError(EmptySplitError::Side::test, "test split is empty");
    const Date start = in_season.front().date;
    const Corpus train = corpus.filter([&](const MatchRecord& m) { return m.date < start; });
    if (train.matches().empty()) throw EmptySplitError(EmptySplitError::Side::train, "training split is empty");

    const Suite suite = train_suite(train, config);
    for (const auto& e : suite.full.excluded) report.excluded.push_back("training " + e);
    const Date frozen_cutoff = last_date(train.matches());

    std::vector<long> correct(kModels.size());
    long played = 0;
    std::optional<dc::Params> current;
    Date dc_cutoff = frozen_cutoff;
    int week = 0;
    for (std::size_t begin = 0; begin < in_season.size(); begin += options.matches_per_week) {
        ++week;
        const std::size_t end = std::min(in_season.size(), begin + options.matches_per_week);
        const Date first = in_season[begin].date;

        if (options.refit_dc_weekly) {
            std::vector<MatchRecord> history;
            for (const auto& m : corpus.matches())
                if (m.date < first) history.push_back(m);
            const auto eligible = dc::fit_eligible(history);
            if (!eligible.empty()) {
                const dc::Params* warm = current ? &*current : &suite.full.dc;
                current = dc::fit(eligible, first, config.dc.fit_options(warm));
                dc_cutoff = last_date(eligible);
            }
        }
        for (const char* model : {"text", "stacker"})
            report.provenance.push_back({week, first, model, frozen_cutoff});
        report.provenance.push_back({week, first, "dixon_coles", dc_cutoff});

        for (std::size_t i = begin; i < end; ++i) {
            const auto& m = in_season[i];
            const auto picks = predict_all(suite, corpus, m, current ? &*current : nullptr);
            for (std::size_t k = 0; k < picks.size(); ++k) {
                report.results[k].confusion.add(m.outcome(), picks[k]);
                correct[k] += picks[k] == m.outcome();
            }
        }
        played += static_cast<long>(end - begin);
        report.matches_per_week.push_back(played);
        for (std::size_t k = 0; k < kModels.size(); ++k) report.results[k].cumulative_correct.push_back(correct[k]);
    }

    const auto& cum = report.matches_per_week;
    for (auto& r : report.results) {
        r.metrics = metrics(r.confusion);
        const double first = static_cast<double>(r.cumulative_correct.front()) / static_cast<double>(cum.front());
        const double last = static_cast<double>(r.cumulative_correct.back()) / static_cast<double>(cum.back());
        r.accuracy_delta = last - first;
    }
    report.train_matches = train.matches().size();
    report.test_matches = in_season.size();
    return report;
}

std::vector<std::string> audit_walk_forward(const ExperimentReport& report) {
    std::vector<std::string> out;
    for (const auto& p : report.provenance)
        if (!(p.data_cutoff < p.first_date))
            out.push_back(fmt::format("week {}: {} trained on data through {} (gameweek starts {})", p.week, p.model,
                                      format_date(p.data_cutoff), format_date(p.first_date)));
    return out;
}

namespace {

nlohmann::json metrics_json(const Metrics& m) {
    return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

nlohmann::json confusion_json(const ConfusionMatrix& cm) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : cm.counts) rows.push_back(row);
    return rows;
}

nlohmann::json result_json(const ModelResult& r) {
    nlohmann::json j{{"model", r.model}, {"metrics", metrics_json(r.metrics)}, {"confusion", confusion_json(r.confusion)}};
    if (r.draw_rate) j["draw_rate"] = *r.draw_rate;
    if (r.longshot_rate) j["longshot_rate"] = *r.longshot_rate;
    if (!r.cumulative_correct.empty()) j["cumulative_correct"] = r.cumulative_correct;
    if (r.accuracy_delta) j["accuracy_delta"] = *r.accuracy_delta;
    return j;
}

}  // namespace

nlohmann::json to_json(const ExperimentReport& report) {
    nlohmann::json j{{"type", "experiment_report"},
                     {"version", 1},
                     {"experiment", report.experiment},
                     {"train_matches", report.train_matches},
                     {"test_matches", report.test_matches},
                     {"excluded", report.excluded},
                     {"flags", report.flags}};
    j["results"] = nlohmann::json::array();
    for (const auto& r : report.results) j["results"].push_back(result_json(r));
    if (report.experiment == 1) {
        j["seasons"] = nlohmann::json::array();
        for (const auto& s : report.seasons) {
            nlohmann::json sj{{"season", s.season}, {"train_matches", s.train_matches}, {"test_matches", s.test_matches}};
            sj["results"] = nlohmann::json::array();
            for (const auto& r : s.models) sj["results"].push_back(result_json(r));
            j["seasons"].push_back(std::move(sj));
        }
    }
    if (report.experiment == 2) {
        j["test_draws"] = report.test_draws;
        j["test_longshots"] = report.test_longshots;
    }
    if (report.experiment == 3) {
        j["season"] = report.season;
        j["gameweeks_derived"] = report.gameweeks_derived;
        j["matches_cumulative"] = report.matches_per_week;
        j["provenance"] = nlohmann::json::array();
        for (const auto& p : report.provenance)
            j["provenance"].push_back({{"week", p.week},
                                       {"first_date", format_date(p.first_date)},
                                       {"model", p.model},
                                       {"data_cutoff", format_date(p.data_cutoff)}});
        j["audit_violations"] = audit_walk_forward(report);
    }
    return j;
}

std::string format_table(const ExperimentReport& report) {
    std::ostringstream out;
    out << fmt::format("Experiment {}  train={} test={}\n", report.experiment, report.train_matches,
                       report.test_matches);
    out << fmt::format("{:<18}{:>10}{:>11}{:>9}{:>9}", "model", "accuracy", "precision", "recall", "f1");
    if (report.experiment == 2) out << fmt::format("{:>8}{:>10}", "draws", "longshots");
    if (report.experiment == 3) out << fmt::format("{:>8}", "delta");
    out << '\n';
    const auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{:.3f}", *v) : std::string("n/a"); };
    for (const auto& r : report.results) {
        out << fmt::format("{:<18}{:>10.3f}{:>11.3f}{:>9.3f}{:>9.3f}", r.model, r.metrics.accuracy,
                           r.metrics.precision, r.metrics.recall, r.metrics.f1);
        if (report.experiment == 2) out << fmt::format("{:>8}{:>10}", opt(r.draw_rate), opt(r.longshot_rate));
        if (report.experiment == 3) out << fmt::format("{:>8}", opt(r.accuracy_delta));
        out << '\n';
    }
    if (report.experiment == 2)
        out << fmt::format("test draws={} longshots={}\n", report.test_draws, report.test_longshots);
    for (const auto& f : report.flags) out << "flag: " << f << '\n';
    if (!report.excluded.empty())
        out << report.excluded.size() << " matches excluded from training or testing (listed in the JSON report)\n";
    return out.str();
}

std::string weekly_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out << "week,matches";
    for (const auto& r : report.results) out << ',' << r.model;
    out << '\n';
    for (std::size_t w = 0; w < report.matches_per_week.size(); ++w) {
        out << (w + 1) << ',' << report.matches_per_week[w];
        for (const auto& r : report.results) out << ',' << r.cumulative_correct[w];
        out << '\n';
    }
    return out.str();
}

}  // namespace matchcast::eval
