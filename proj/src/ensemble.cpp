#include "matchcast/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "matchcast/errors.hpp"
#include "matchcast/odds.hpp"

namespace matchcast::ensemble {

namespace {

std::vector<std::string> sorted_ids(const std::vector<const MatchRecord*>& matches) {
    std::vector<std::string> ids;
    ids.reserve(matches.size());
    for (const auto* m : matches) ids.push_back(m->match_id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

TextModel fit_text_forest(const Corpus& corpus, const std::vector<const MatchRecord*>& rows, text::Vocabulary vocab,
                          double mu, const PipelineConfig& config, std::uint64_t seed) {
    if (rows.size() < 2) throw ModelError("text model needs at least two matches with preview text");
    TextModel model;
    model.vocab = std::move(vocab);
    model.mu = mu;
    model.allocation = config.text.allocation;
    std::vector<std::vector<double>> x;
    std::vector<Outcome> y;
    x.reserve(rows.size());
    for (const auto* m : rows) {
        auto f = text::build_features(*m, corpus.previews_for(m->match_id), model.vocab, corpus.aliases(), mu,
                                      model.allocation);
        x.push_back(std::move(f.x));
        y.push_back(m->outcome());
    }
    if (model.vocab.size() == 0) throw ModelError("text vocabulary is empty; lower min_df or add articles");
    model.forest = forest::train(x, y, config.text_forest, seed);
    model.trained_on = sorted_ids(rows);
    return model;
}

std::vector<const MatchRecord*> with_text(const Corpus& corpus, std::span<const MatchRecord> matches) {
    std::vector<const MatchRecord*> out;
    for (const auto& m : matches) {
        if (corpus.has_preview(m.match_id)) out.push_back(&m);
    }
    return out;
}

}  // namespace

text::Vocabulary fit_vocabulary_for(const Corpus& corpus, std::span<const MatchRecord> matches,
                                    const text::VocabularyParams& params) {
    std::vector<PreviewArticle> articles;
    for (const auto& m : matches) {
        for (const auto& a : corpus.previews_for(m.match_id)) articles.push_back(a);
    }
    return text::fit_vocabulary(articles, params);
}

double tune_mu(const Corpus& corpus, std::span<const MatchRecord> train, const PipelineConfig& config,
               std::span<const double> grid) {
    if (grid.empty()) throw ConfigError("mu grid is empty");
    const auto rows = with_text(corpus, train);
    const std::size_t cut = rows.size() * 4 / 5;
    if (cut < 2 || cut == rows.size()) throw ModelError("too few text-bearing matches to tune mu");
    const std::vector<const MatchRecord*> fit_rows(rows.begin(), rows.begin() + static_cast<long>(cut));
    std::vector<MatchRecord> fit_matches;
    for (const auto* m : fit_rows) fit_matches.push_back(*m);
    const auto vocab = fit_vocabulary_for(corpus, fit_matches, config.text.vocabulary);

    double best_mu = grid.front();
    double best_acc = -1;
    for (double mu : grid) {
        const TextModel model = fit_text_forest(corpus, fit_rows, vocab, mu, config, config.seed);
        int correct = 0;
        for (std::size_t i = cut; i < rows.size(); ++i) {
            correct += predict_text(model, corpus, *rows[i]).argmax() == rows[i]->outcome();
        }
        const double acc = static_cast<double>(correct) / static_cast<double>(rows.size() - cut);
        const bool closer = std::abs(mu - config.text.mu) < std::abs(best_mu - config.text.mu);
        if (acc > best_acc || (acc == best_acc && closer)) {
            best_acc = acc;
            best_mu = mu;
        }
    }
    return best_mu;
}

TextModel train_text_model(const Corpus& corpus, std::span<const MatchRecord> train, const PipelineConfig& config,
                           std::uint64_t seed, const text::Vocabulary* vocab) {
    const auto rows = with_text(corpus, train);
    if (rows.empty()) throw DataError("no training match has preview text");
    text::Vocabulary v = vocab ? *vocab : fit_vocabulary_for(corpus, train, config.text.vocabulary);
    return fit_text_forest(corpus, rows, std::move(v), config.text.mu, config, seed);
}

text::TextFeatures text_features(const TextModel& model, const Corpus& corpus, const MatchRecord& match) {
    return text::build_features(match, corpus.previews_for(match.match_id), model.vocab, corpus.aliases(), model.mu,
                                model.allocation);
}

OutcomeProbs predict_text(const TextModel& model, const Corpus& corpus, const MatchRecord& match) {
    const auto f = text_features(model, corpus, match);
    return model.forest.predict_proba(f.x);
}

MetaFeatures assemble_meta_features(std::string match_id, const OutcomeProbs& text_probs,
                                    const OutcomeProbs& dc_probs, const OutcomeProbs& book_probs) {
    MetaFeatures m;
    m.match_id = std::move(match_id);
    m.text_probs = text_probs;
    m.dc_probs = dc_probs;
    m.book_probs = book_probs;
    m.x = {text_probs.home, text_probs.draw, text_probs.away, dc_probs.home,  dc_probs.draw,
           dc_probs.away,   book_probs.home, book_probs.draw, book_probs.away};
    return m;
}

std::vector<double> stacker_input(const MetaFeatures& meta, bool use_text) {
    if (use_text) return meta.x;
    return std::vector<double>(meta.x.begin() + 3, meta.x.end());
}

MetaFeatures build_meta_features(const MatchRecord& match, const TextModel& text_model, const dc::Params& dc,
                                 const Corpus& corpus, int max_goals) {
    if (!match.odds) throw DataError("match '" + match.match_id + "' has no odds");
    const auto dcp = dc::predict_with_fallback(dc, match.home_team, match.away_team, max_goals);
    MetaFeatures m = assemble_meta_features(match.match_id, predict_text(text_model, corpus, match), dcp.probs,
                                            odds::implied_probs(*match.odds));
    m.text_missing = !corpus.has_preview(match.match_id);
    m.dc_fallback = dcp.fallback;
    return m;
}

forest::Forest train_stacker(std::span<const MetaFeatures> rows, std::span<const Outcome> labels, bool use_text,
                             const forest::Hyperparams& params, std::uint64_t seed) {
    std::vector<std::vector<double>> x;
    x.reserve(rows.size());
    for (const auto& r : rows) x.push_back(stacker_input(r, use_text));
    return forest::train(x, labels, params, seed);
}

EnsembleModel train_ensemble(const Corpus& train, const PipelineConfig& config) {
    config.validate();
    const auto matches = train.matches();
    if (matches.empty()) throw DataError("empty training corpus");

    EnsembleModel model;
    model.use_text = config.ensemble.use_text;
    model.max_goals = config.dc.max_goals;
    const int k = config.ensemble.folds;

    // Model 1: full model for prediction, plus one fold model per fold.
    std::vector<TextModel> fold_models;
    if (model.use_text) {
        const auto vocab = fit_vocabulary_for(train, matches, config.text.vocabulary);
        model.text = train_text_model(train, matches, config, config.seed, &vocab);
        model.upstream["text/full"] = model.text->trained_on;
        for (int f = 0; f < k; ++f) {
            std::vector<const MatchRecord*> rows;
            std::vector<MatchRecord> fold_matches;
            for (std::size_t i = 0; i < matches.size(); ++i) {
                if (static_cast<int>(i % k) != f && train.has_preview(matches[i].match_id)) {
                    rows.push_back(&matches[i]);
                    fold_matches.push_back(matches[i]);
                }
            }
            // The held-out fold's articles stay out of the fold vocabulary too.
            const auto fold_vocab = fit_vocabulary_for(train, fold_matches, config.text.vocabulary);
            fold_models.push_back(fit_text_forest(train, rows, fold_vocab, config.text.mu, config,
                                                  forest::mix_seed(config.seed, 1000 + f)));
            model.upstream["text/fold-" + std::to_string(f)] = fold_models.back().trained_on;
        }
    }

    // Model 2 for prediction: every training match.
    {
        const auto eligible = dc::fit_eligible(matches);
        if (eligible.empty()) throw ModelError("no team has both home and away matches in the training data");
        model.dc = dc::fit(eligible, matches.back().date, config.dc.fit_options());
        std::vector<const MatchRecord*> ptrs;
        for (const auto& m : eligible) ptrs.push_back(&m);
        model.upstream["dc/full"] = sorted_ids(ptrs);
    }

    // Expanding-window Dixon-Coles fits for the training meta-features.
    std::optional<dc::Params> window_fit;
    std::string window_id;
    std::optional<Date> anchor;
    for (std::size_t i = 0; i < matches.size(); ++i) {
        const MatchRecord& m = matches[i];
        if (!anchor || days_between(*anchor, m.date) >= config.ensemble.dc_refit_days) {
            std::vector<MatchRecord> history;
            for (std::size_t j = 0; j < i && matches[j].date < m.date; ++j) history.push_back(matches[j]);
            auto eligible = dc::fit_eligible(history);
            if (static_cast<int>(eligible.size()) >= config.ensemble.min_history) {
                window_fit = dc::fit(eligible, m.date,
                                     config.dc.fit_options(window_fit ? &*window_fit : nullptr));
                window_id = "dc/" + format_date(m.date);
                std::vector<const MatchRecord*> ptrs;
                for (const auto& e : eligible) ptrs.push_back(&e);
                model.upstream[window_id] = sorted_ids(ptrs);
                anchor = m.date;
            }
        }
        if (!window_fit) {
            model.excluded.push_back(m.match_id + ": insufficient history for Dixon-Coles");
            continue;
        }
        if (!m.odds) {
            model.excluded.push_back(m.match_id + ": missing odds");
            continue;
        }

        const auto dcp = dc::predict_with_fallback(*window_fit, m.home_team, m.away_team, config.dc.max_goals);
        OutcomeProbs text_probs = OutcomeProbs::uniform();
        std::string text_id;
        if (model.use_text) {
            const int fold = static_cast<int>(i % k);
            text_probs = predict_text(fold_models[fold], train, m);
            text_id = "text/fold-" + std::to_string(fold);
        }
        MetaFeatures row = assemble_meta_features(m.match_id, text_probs, dcp.probs, odds::implied_probs(*m.odds));
        row.text_missing = !train.has_preview(m.match_id);
        row.dc_fallback = dcp.fallback;
        row.provenance = {text_id, window_id};
        model.training_rows.push_back(std::move(row));
        model.training_labels.push_back(m.outcome());
    }
    if (model.training_rows.size() < 2) {
        throw ModelError("too few matches with history and odds to train the ensemble stacker");
    }
    model.stacker = train_stacker(model.training_rows, model.training_labels, model.use_text, config.stacker_forest,
                                  forest::mix_seed(config.seed, 2000));
    return model;
}

MetaFeatures meta_features_for(const EnsembleModel& model, const Corpus& corpus, const MatchRecord& match,
                               const dc::Params* dc_override) {
    if (!match.odds) throw DataError("match '" + match.match_id + "' has no odds");
    const dc::Params& dc = dc_override ? *dc_override : model.dc;
    const auto dcp = dc::predict_with_fallback(dc, match.home_team, match.away_team, model.max_goals);
    const OutcomeProbs text_probs =
        model.text ? predict_text(*model.text, corpus, match) : OutcomeProbs::uniform();
    MetaFeatures m = assemble_meta_features(match.match_id, text_probs, dcp.probs, odds::implied_probs(*match.odds));
    m.text_missing = !corpus.has_preview(match.match_id);
    m.dc_fallback = dcp.fallback;
    m.provenance = {model.text ? "text/full" : "", dc_override ? "dc/override" : "dc/full"};
    return m;
}

OutcomeProbs predict(const EnsembleModel& model, const Corpus& corpus, const MatchRecord& match,
                     const dc::Params* dc_override) {
    const auto meta = meta_features_for(model, corpus, match, dc_override);
    return model.stacker.predict_proba(stacker_input(meta, model.use_text));
}

std::vector<std::string> audit_out_of_fold(const EnsembleModel& model, const Corpus& corpus) {
    std::vector<std::string> violations;
    auto trained_on = [&](const std::string& id) -> const std::vector<std::string>* {
        auto it = model.upstream.find(id);
        return it == model.upstream.end() ? nullptr : &it->second;
    };
    for (const auto& row : model.training_rows) {
        const MatchRecord* match = corpus.find(row.match_id);
        if (!match) {
            violations.push_back(row.match_id + ": not in corpus");
            continue;
        }
        if (model.use_text) {
            const auto* ids = trained_on(row.provenance.text_model);
            if (!ids) {
                violations.push_back(row.match_id + ": unknown text model '" + row.provenance.text_model + "'");
            } else if (std::binary_search(ids->begin(), ids->end(), row.match_id)) {
                violations.push_back(row.match_id + ": text probabilities from a model trained on it");
            }
        }
        const auto* ids = trained_on(row.provenance.dc_model);
        if (!ids) {
            violations.push_back(row.match_id + ": unknown Dixon-Coles model '" + row.provenance.dc_model + "'");
            continue;
        }
        for (const auto& id : *ids) {
            const MatchRecord* used = corpus.find(id);
            if (id == row.match_id || !used || !(used->date < match->date)) {
                violations.push_back(row.match_id + ": Dixon-Coles fit used match '" + id + "'");
                break;
            }
        }
    }
    return violations;
}

nlohmann::json text_model_to_json(const TextModel& model) {
    return {{"type", "text_model"},
            {"version", 1},
            {"mu", model.mu},
            {"theta", model.allocation.theta},
            {"argument_weight", model.allocation.argument_weight},
            {"token_weight", model.allocation.token_weight},
            {"vocabulary",
             {{"tokens", model.vocab.tokens()},
              {"document_frequency", model.vocab.document_frequency()},
              {"fingerprint", model.vocab.fingerprint()},
              {"documents", model.vocab.documents()}}},
            {"trained_on", model.trained_on},
            {"forest", forest::to_json(model.forest)}};
}

TextModel text_model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("type").get<std::string>() != "text_model") throw ModelError("artifact is not a text_model");
        if (j.at("version").get<int>() != 1) throw ModelError("unsupported text_model artifact version");
        TextModel m;
        m.mu = j.at("mu").get<double>();
        m.allocation.theta = j.at("theta").get<double>();
        m.allocation.argument_weight = j.at("argument_weight").get<double>();
        m.allocation.token_weight = j.at("token_weight").get<double>();
        const auto& v = j.at("vocabulary");
        m.vocab = text::Vocabulary(v.at("tokens").get<std::vector<std::string>>(),
                                   v.at("document_frequency").get<std::vector<std::uint32_t>>(),
                                   v.at("fingerprint").get<std::uint64_t>(), v.at("documents").get<std::size_t>());
        m.trained_on = j.at("trained_on").get<std::vector<std::string>>();
        m.forest = forest::forest_from_json(j.at("forest"));
        if (m.forest.n_features != static_cast<int>(2 * m.vocab.size())) {
            throw ModelError("text_model forest width does not match its vocabulary");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("malformed text_model artifact: ") + e.what());
    } catch (const DataError& e) {
        throw ModelError(std::string("malformed text_model artifact: ") + e.what());
    }
}

}  // namespace matchcast::ensemble
