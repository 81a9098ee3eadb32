#include "matchcast/cli.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "matchcast/config.hpp"
#include "matchcast/corpus.hpp"
#include "matchcast/dixon_coles.hpp"
#include "matchcast/ensemble.hpp"
#include "matchcast/errors.hpp"
#include "matchcast/eval.hpp"
#include "matchcast/io.hpp"

namespace matchcast::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    PipelineConfig config;
    bool verbose = false;

    std::string matches, previews, aliases, out;
    std::string corpus, model_kind = "ensemble", artifact, match_id, as_of;
    bool no_text = false;
    bool tune_mu = false;
    std::string text_model;
    int experiment = 1;
    std::string csv, season = "2018-19";
    std::vector<std::string> seasons{"2016-17", "2017-18", "2018-19"};
    std::size_t test_size = 300;
};

json read_json(const std::string& path) {
    try {
        return json::parse(io::read_file(path));
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
}

void write_json(const std::string& path, const json& j) { io::write_file_atomic(path, j.dump(2) + "\n"); }

// Artifact paths stored in an ensemble are relative to the ensemble file.
std::string sibling(const std::string& base, const std::string& suffix) {
    fs::path p(base);
    return (p.parent_path() / (p.stem().string() + suffix)).string();
}

std::string resolve(const std::string& base, const std::string& ref) {
    fs::path r(ref);
    return r.is_absolute() ? ref : (fs::path(base).parent_path() / r).string();
}

const MatchRecord& require_match(const Corpus& corpus, const std::string& id) {
    const MatchRecord* m = corpus.find(id);
    if (!m) throw DataError("match '" + id + "' not in corpus");
    return *m;
}

void print_probs(std::ostream& out, const std::string& model, const std::string& match_id, const OutcomeProbs& p) {
    json j{{"match_id", match_id}, {"model", model}, {"home", p.home}, {"draw", p.draw}, {"away", p.away},
           {"pick", std::string(to_string(p.argmax()))}};
    out << j.dump() << '\n';
}

void cmd_ingest(const Options& o, std::ostream& log) {
    Corpus corpus(load_matches(o.matches), load_previews(o.previews), load_aliases(o.aliases));
    save_corpus(corpus, o.out);
    if (o.verbose)
        log << fmt::format("ingested {} matches, {} previews\n", corpus.matches().size(), corpus.preview_count());
}

void cmd_train(const Options& o, std::ostream& log) {
    const Corpus corpus = load_corpus(o.corpus);
    if (corpus.matches().empty()) throw DataError("corpus has no matches");
    PipelineConfig config = o.config;
    if (o.model_kind == "dc") {
        const auto eligible = dc::fit_eligible(corpus.matches());
        if (eligible.empty()) throw DataError("no team has both home and away matches");
        const Date as_of = o.as_of.empty() ? eligible.back().date : parse_date(o.as_of);
        std::vector<MatchRecord> history;
        for (const auto& m : eligible)
            if (!(as_of < m.date)) history.push_back(m);
        const auto params = dc::fit(dc::fit_eligible(history), as_of, config.dc.fit_options());
        write_json(o.out, dc::to_json(params));
        if (o.verbose) log << fmt::format("dc: {} matches, {} iterations\n", params.n_matches, params.iterations);
    } else if (o.model_kind == "text") {
        if (o.tune_mu) {
            const double grid[] = {1.0, 1.1, 1.2, 1.3, 1.4, 1.5};
            config.text.mu = ensemble::tune_mu(corpus, corpus.matches(), config, grid);
        }
        const auto model = ensemble::train_text_model(corpus, corpus.matches(), config, config.seed);
        write_json(o.out, ensemble::text_model_to_json(model));
        if (o.verbose) log << fmt::format("text: vocabulary {}, mu {}\n", model.vocab.size(), model.mu);
    } else {
        config.ensemble.use_text = !o.no_text;
        const auto model = ensemble::train_ensemble(corpus, config);
        json upstream;
        const std::string dc_path = sibling(o.out, ".dc.json");
        write_json(dc_path, dc::to_json(model.dc));
        upstream["dc"] = fs::path(dc_path).filename().string();
        if (model.text) {
            const std::string text_path = sibling(o.out, ".text.json");
            write_json(text_path, ensemble::text_model_to_json(*model.text));
            upstream["text"] = fs::path(text_path).filename().string();
        }
        json j{{"type", "ensemble"},
               {"version", 1},
               {"use_text", model.use_text},
               {"max_goals", model.max_goals},
               {"corpus", fs::absolute(o.corpus).lexically_normal().string()},
               {"upstream", upstream},
               {"training_rows", model.training_rows.size()},
               {"excluded", model.excluded},
               {"stacker", forest::to_json(model.stacker)}};
        write_json(o.out, j);
        if (o.verbose)
            log << fmt::format("ensemble: {} training rows, {} excluded\n", model.training_rows.size(),
                               model.excluded.size());
    }
}

void cmd_predict(const Options& o, std::ostream& out) {
    const json j = read_json(o.artifact);
    const std::string type = j.value("type", "");
    if (type == "dixon_coles") {
        if (o.corpus.empty()) throw ConfigError("--corpus is required to predict with a dixon_coles artifact");
        const auto params = dc::params_from_json(j);
        const auto& m = require_match(load_corpus(o.corpus), o.match_id);
        print_probs(out, type, m.match_id,
                    dc::predict_with_fallback(params, m.home_team, m.away_team, o.config.dc.max_goals).probs);
    } else if (type == "text_model") {
        if (o.corpus.empty()) throw ConfigError("--corpus is required to predict with a text_model artifact");
        const auto model = ensemble::text_model_from_json(j);
        const Corpus corpus = load_corpus(o.corpus);
        print_probs(out, type, o.match_id, ensemble::predict_text(model, corpus, require_match(corpus, o.match_id)));
    } else if (type == "ensemble") {
        if (j.at("version").get<int>() != 1) throw ModelError("unsupported ensemble artifact version");
        ensemble::EnsembleModel model;
        try {
            model.use_text = j.at("use_text").get<bool>();
            model.max_goals = j.at("max_goals").get<int>();
            model.stacker = forest::forest_from_json(j.at("stacker"));
            const auto& up = j.at("upstream");
            model.dc = dc::params_from_json(read_json(resolve(o.artifact, up.at("dc").get<std::string>())));
            if (up.contains("text"))
                model.text =
                    ensemble::text_model_from_json(read_json(resolve(o.artifact, up.at("text").get<std::string>())));
        } catch (const json::exception& e) {
            throw ModelError(std::string("malformed ensemble artifact: ") + e.what());
        }
        if (!model.text) throw ModelError("ensemble artifact has no text model");
        const Corpus corpus = load_corpus(o.corpus.empty() ? j.at("corpus").get<std::string>() : o.corpus);
        print_probs(out, type, o.match_id, ensemble::predict(model, corpus, require_match(corpus, o.match_id)));
    } else {
        throw ModelError(o.artifact + ": unknown artifact type '" + type + "'");
    }
}

void cmd_features(const Options& o, std::ostream& log) {
    const Corpus corpus = load_corpus(o.corpus);
    text::Vocabulary vocab;
    text::AllocationParams allocation = o.config.text.allocation;
    if (!o.text_model.empty()) {
        const auto model = ensemble::text_model_from_json(read_json(o.text_model));
        vocab = model.vocab;
        allocation = model.allocation;
    } else {
        vocab = ensemble::fit_vocabulary_for(corpus, corpus.matches(), o.config.text.vocabulary);
    }
    std::ostringstream csv;
    csv << "match_id";
    for (const auto& name : text::feature_names(vocab)) csv << ',' << name;
    csv << '\n';
    for (const auto& m : corpus.matches()) {
        const auto f = text::build_features(m, corpus.previews_for(m.match_id), vocab, corpus.aliases(),
                                            o.config.text.mu, allocation);
        csv << m.match_id;
        for (double v : f.x) csv << ',' << io::format_double(v);
        csv << '\n';
    }
    io::write_file_atomic(o.out, csv.str());
    if (o.verbose) log << fmt::format("features: {} rows x {} columns\n", corpus.matches().size(), 2 * vocab.size());
}

void cmd_evaluate(const Options& o, std::ostream& out) {
    const Corpus corpus = load_corpus(o.corpus);
    eval::ExperimentReport report;
    if (o.experiment == 1) {
        report = eval::experiment1(corpus, {o.seasons, o.test_size}, o.config);
    } else if (o.experiment == 2) {
        report = eval::experiment2(corpus, o.config.seed, o.config);
    } else {
        report = eval::experiment3(corpus, {o.season, 10, true}, o.config);
        if (!o.csv.empty()) io::write_file_atomic(o.csv, eval::weekly_csv(report));
    }
    write_json(o.out, eval::to_json(report));
    out << eval::format_table(report);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options o;
    auto& cfg = o.config;
    CLI::App app{"Football match outcome prediction from statistics, odds and preview text", "matchcast"};
    app.set_config("--config", "", "Configuration file (flags override its values)");
    app.require_subcommand(1);
    app.fallthrough();

    app.add_option("--seed", cfg.seed, "Seed for every stochastic step")->capture_default_str();
    app.add_flag("--verbose,-v", o.verbose, "Progress messages on standard error");
    app.add_option("--mu", cfg.text.mu, "Home weight in the text feature vector")->capture_default_str();
    app.add_option("--theta", cfg.text.allocation.theta, "Allocation confidence threshold")->capture_default_str();
    app.add_option("--min-df", cfg.text.vocabulary.min_df, "Minimum document frequency")->capture_default_str();
    app.add_option("--max-df", cfg.text.vocabulary.max_df, "Maximum document frequency (fraction)")
        ->capture_default_str();
    app.add_option("--xi", cfg.dc.xi, "Dixon-Coles time decay per half-week")->capture_default_str();
    app.add_option("--rho-min", cfg.dc.rho_min)->capture_default_str();
    app.add_option("--rho-max", cfg.dc.rho_max)->capture_default_str();
    app.add_option("--max-goals", cfg.dc.max_goals)->capture_default_str();
    app.add_option("--max-iter", cfg.dc.max_iter)->capture_default_str();
    app.add_option("--trees", cfg.text_forest.n_trees, "Trees in the text forest")->capture_default_str();
    app.add_option("--stacker-trees", cfg.stacker_forest.n_trees, "Trees in the stacker forest")
        ->capture_default_str();
    app.add_option("--min-leaf", cfg.text_forest.min_leaf)->capture_default_str();
    app.add_option("--stacker-min-leaf", cfg.stacker_forest.min_leaf)->capture_default_str();
    app.add_option("--max-depth", cfg.text_forest.max_depth, "0 for unlimited")->capture_default_str();
    app.add_option("--folds", cfg.ensemble.folds, "Out-of-fold splits for text meta-features")
        ->capture_default_str();
    app.add_option("--dc-refit-days", cfg.ensemble.dc_refit_days)->capture_default_str();
    app.add_option("--min-history", cfg.ensemble.min_history)->capture_default_str();
    app.add_option("--threads", cfg.text_forest.threads, "Forest worker threads (0 = all cores)");

    auto* ingest = app.add_subcommand("ingest", "Validate inputs and write a corpus cache");
    ingest->add_option("--matches", o.matches)->required()->check(CLI::ExistingFile);
    ingest->add_option("--previews", o.previews)->required()->check(CLI::ExistingFile);
    ingest->add_option("--aliases", o.aliases)->required()->check(CLI::ExistingFile);
    ingest->add_option("--out", o.out)->required();

    auto* train = app.add_subcommand("train", "Fit a model and write its artifact");
    train->add_option("--model", o.model_kind)->check(CLI::IsMember({"dc", "text", "ensemble"}))->capture_default_str();
    train->add_option("--corpus", o.corpus)->required()->check(CLI::ExistingFile);
    train->add_option("--out", o.out)->required();
    train->add_option("--as-of", o.as_of, "Reference date YYYY-MM-DD for the Dixon-Coles fit");
    train->add_flag("--no-text", o.no_text, "Ensemble without the text meta-features");
    train->add_flag("--tune-mu", o.tune_mu, "Select mu on a held-out tail of the training matches");

    auto* predict = app.add_subcommand("predict", "Print outcome probabilities for one match");
    predict->add_option("--model", o.artifact, "Artifact file")->required()->check(CLI::ExistingFile);
    predict->add_option("--match", o.match_id)->required();
    predict->add_option("--corpus", o.corpus)->check(CLI::ExistingFile);

    auto* features = app.add_subcommand("features", "Export text features as CSV");
    features->add_option("--corpus", o.corpus)->required()->check(CLI::ExistingFile);
    features->add_option("--out", o.out)->required();
    features->add_option("--text-model", o.text_model, "Use this model's vocabulary")->check(CLI::ExistingFile);

    auto* evaluate = app.add_subcommand("evaluate", "Run an experiment and write its report");
    evaluate->add_option("--experiment", o.experiment)->check(CLI::IsMember({1, 2, 3}))->capture_default_str();
    evaluate->add_option("--corpus", o.corpus)->required()->check(CLI::ExistingFile);
    evaluate->add_option("--out", o.out)->required();
    evaluate->add_option("--csv", o.csv, "Week-by-week cumulative counts (experiment 3)");
    evaluate->add_option("--season", o.season, "Season walked forward in experiment 3")->capture_default_str();
    evaluate->add_option("--seasons", o.seasons, "Test seasons for experiment 1, comma separated")
        ->delimiter(',')
        ->capture_default_str();
    evaluate->add_option("--test-size", o.test_size, "Matches per season in experiment 1")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }
    cfg.stacker_forest.threads = cfg.text_forest.threads;

    try {
        cfg.validate();
        if (*ingest) cmd_ingest(o, err);
        if (*train) cmd_train(o, err);
        if (*predict) cmd_predict(o, out);
        if (*features) cmd_features(o, err);
        if (*evaluate) cmd_evaluate(o, out);
        return 0;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return 2;
    } catch (const ModelError& e) {
        err << "model error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace matchcast::cli
