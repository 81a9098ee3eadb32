#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "matchcast/config.hpp"
#include "matchcast/corpus.hpp"
#include "matchcast/ensemble.hpp"

namespace matchcast::eval {

// counts[actual][predicted]
struct ConfusionMatrix {
    std::array<std::array<long, 3>, 3> counts{};

    void add(Outcome actual, Outcome predicted) { ++counts[index_of(actual)][index_of(predicted)]; }
    long total() const;
    long correct() const;
    ConfusionMatrix& operator+=(const ConfusionMatrix& o);
};

// Precision and recall are macro-averaged over the three classes (0/0 := 0);
// f1 is the harmonic mean of macro precision and macro recall.
struct Metrics {
    double accuracy = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

// Throws DataError for an empty matrix.
Metrics metrics(const ConfusionMatrix& cm);

// Model ids in report order: Models 1-4 plus the no-text ablation of Model 4.
inline const std::vector<std::string> kModels{"text", "dixon_coles", "bookmaker", "ensemble", "ensemble_no_text"};

struct ModelResult {
    std::string model;
    ConfusionMatrix confusion;
    Metrics metrics;
    std::optional<double> draw_rate;      // Experiment 2
    std::optional<double> longshot_rate;  // Experiment 2
    std::vector<long> cumulative_correct;  // Experiment 3, one entry per week
    std::optional<double> accuracy_delta;  // Experiment 3: final minus week-1 cumulative accuracy
};

struct SeasonResult {
    std::string season;
    std::size_t train_matches = 0;
    std::size_t test_matches = 0;
    std::vector<ModelResult> models;
};

// Data cutoff of a model used to predict one gameweek.
struct WeekProvenance {
    int week = 0;
    Date first_date{};
    std::string model;
    Date data_cutoff{};  // newest match date in the model's training data
};

struct ExperimentReport {
    int experiment = 0;
    std::vector<ModelResult> results;    // Experiment 1: metrics averaged over seasons
    std::vector<SeasonResult> seasons;   // Experiment 1
    std::size_t train_matches = 0;
    std::size_t test_matches = 0;
    std::size_t test_draws = 0;          // Experiment 2
    std::size_t test_longshots = 0;      // Experiment 2
    std::string season;                  // Experiment 3
    std::vector<long> matches_per_week;  // Experiment 3, cumulative
    bool gameweeks_derived = false;
    std::vector<WeekProvenance> provenance;
    std::vector<std::string> excluded;
    std::vector<std::string> flags;

    const ModelResult& result(const std::string& model) const;
};

struct Experiment1Options {
    std::vector<std::string> seasons{"2016-17", "2017-18", "2018-19"};
    std::size_t test_size = 300;
};

struct Experiment3Options {
    std::string season = "2018-19";
    std::size_t matches_per_week = 10;
    bool refit_dc_weekly = true;
};

ExperimentReport experiment1(const Corpus& corpus, const Experiment1Options& options, const PipelineConfig& config);
ExperimentReport experiment2(const Corpus& corpus, std::uint64_t seed, const PipelineConfig& config,
                             double test_fraction = 0.2);
ExperimentReport experiment3(const Corpus& corpus, const Experiment3Options& options, const PipelineConfig& config);

// Seeded 80/20 membership used by experiment2: returns the test match ids.
std::vector<std::string> random_test_ids(const Corpus& corpus, std::uint64_t seed, double test_fraction);

// Every provenance entry whose data cutoff is not before its gameweek.
std::vector<std::string> audit_walk_forward(const ExperimentReport& report);

nlohmann::json to_json(const ExperimentReport& report);
std::string format_table(const ExperimentReport& report);
// week,matches,<model cumulative counts...>
std::string weekly_csv(const ExperimentReport& report);

}  // namespace matchcast::eval
