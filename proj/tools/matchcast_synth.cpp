// Writes a synthetic league (matches.csv, previews.jsonl, aliases.json) for demos.
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "matchcast/corpus.hpp"
#include "matchcast/errors.hpp"
#include "matchcast/io.hpp"
#include "matchcast/synth.hpp"

int main(int argc, char** argv) {
    matchcast::synth::LeagueOptions opt;
    std::string dir = ".";
    CLI::App app{"Generate a synthetic league", "matchcast_synth"};
    app.add_option("--out-dir", dir)->capture_default_str();
    app.add_option("--teams", opt.n_teams)->capture_default_str();
    app.add_option("--seasons", opt.seasons, "Season labels, comma separated")->delimiter(',')->capture_default_str();
    app.add_option("--seed", opt.seed)->capture_default_str();
    app.add_option("--preview-rate", opt.preview_rate)->capture_default_str();
    app.add_option("--odds-rate", opt.odds_rate)->capture_default_str();
    CLI11_PARSE(app, argc, argv);
    try {
        const auto league = matchcast::synth::generate_league(opt);
        const auto& c = league.corpus;
        std::ostringstream matches, previews;
        matchcast::write_matches(matches, c.matches());
        std::vector<matchcast::PreviewArticle> all;
        for (const auto& m : c.matches())
            for (const auto& p : c.previews_for(m.match_id)) all.push_back(p);
        matchcast::write_previews(previews, all);
        matchcast::io::write_file_atomic(dir + "/matches.csv", matches.str());
        matchcast::io::write_file_atomic(dir + "/previews.jsonl", previews.str());
        matchcast::io::write_file_atomic(dir + "/aliases.json", matchcast::aliases_to_json(c.aliases()));
    } catch (const matchcast::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
