#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "matchcast/config.hpp"
#include "matchcast/corpus.hpp"
#include "matchcast/dixon_coles.hpp"
#include "matchcast/forest.hpp"
#include "matchcast/textfeat.hpp"

namespace matchcast::ensemble {

// Model 1: forest over X = [mu * V(home), V(away)].
struct TextModel {
    text::Vocabulary vocab;
    forest::Forest forest;
    double mu = 1.25;
    text::AllocationParams allocation;
    std::vector<std::string> trained_on;  // sorted match ids whose labels were used
};

text::Vocabulary fit_vocabulary_for(const Corpus& corpus, std::span<const MatchRecord> matches,
                                    const text::VocabularyParams& params);

// Trains on the matches in `train` that have preview text. When `vocab` is
// null the vocabulary is fitted on those matches' previews.
TextModel train_text_model(const Corpus& corpus, std::span<const MatchRecord> train, const PipelineConfig& config,
                           std::uint64_t seed, const text::Vocabulary* vocab = nullptr);

text::TextFeatures text_features(const TextModel& model, const Corpus& corpus, const MatchRecord& match);
OutcomeProbs predict_text(const TextModel& model, const Corpus& corpus, const MatchRecord& match);

// Grid search of mu by accuracy on the last 20% (by date) of text-bearing
// training matches. Ties resolve to the grid value closest to config.text.mu.
double tune_mu(const Corpus& corpus, std::span<const MatchRecord> train, const PipelineConfig& config,
               std::span<const double> grid);

// Identifiers of the upstream models that produced a row's probabilities.
struct Provenance {
    std::string text_model;
    std::string dc_model;
};

inline constexpr std::size_t kMetaWidth = 9;

struct MetaFeatures {
    std::string match_id;
    OutcomeProbs text_probs;
    OutcomeProbs dc_probs;
    OutcomeProbs book_probs;
    // [text_h, text_d, text_a, dc_h, dc_d, dc_a, book_h, book_d, book_a]
    std::vector<double> x;
    bool text_missing = false;  // no preview; text probs come from the zero vector
    bool dc_fallback = false;   // a team was absent from the Dixon-Coles fit
    Provenance provenance;
};

MetaFeatures assemble_meta_features(std::string match_id, const OutcomeProbs& text_probs,
                                    const OutcomeProbs& dc_probs, const OutcomeProbs& book_probs);

// Stacker input: all nine features, or the last six for the no-text ablation.
std::vector<double> stacker_input(const MetaFeatures& meta, bool use_text);

// Runs the three upstream predictors. Throws DataError when the match has no odds.
MetaFeatures build_meta_features(const MatchRecord& match, const TextModel& text_model, const dc::Params& dc,
                                 const Corpus& corpus, int max_goals = 10);

struct EnsembleModel {
    std::optional<TextModel> text;  // absent in the no-text ablation
    dc::Params dc;
    forest::Forest stacker;
    bool use_text = true;
    int max_goals = 10;

    // Out-of-sample training meta-features and their labels.
    std::vector<MetaFeatures> training_rows;
    std::vector<Outcome> training_labels;
    // Upstream model id -> sorted ids of the matches it was trained on.
    std::map<std::string, std::vector<std::string>> upstream;
    std::vector<std::string> excluded;  // "match_id: reason"
};

// Trains Model 4 on `train`. Training meta-features are out-of-sample: Model 1
// probabilities come from fold models that did not see the match and
// Dixon-Coles probabilities from fits on strictly earlier matches.
EnsembleModel train_ensemble(const Corpus& train, const PipelineConfig& config);

// Stacker on precomputed meta-features.
forest::Forest train_stacker(std::span<const MetaFeatures> rows, std::span<const Outcome> labels, bool use_text,
                             const forest::Hyperparams& params, std::uint64_t seed);

// Meta-features for a new match, optionally with a refreshed Dixon-Coles fit.
MetaFeatures meta_features_for(const EnsembleModel& model, const Corpus& corpus, const MatchRecord& match,
                               const dc::Params* dc_override = nullptr);
OutcomeProbs predict(const EnsembleModel& model, const Corpus& corpus, const MatchRecord& match,
                     const dc::Params* dc_override = nullptr);

// One message per training row whose upstream probabilities came from a model
// trained on that row's match, or (Dixon-Coles) on a match not dated before it.
std::vector<std::string> audit_out_of_fold(const EnsembleModel& model, const Corpus& corpus);

nlohmann::json text_model_to_json(const TextModel& model);
TextModel text_model_from_json(const nlohmann::json& j);

}  // namespace matchcast::ensemble
