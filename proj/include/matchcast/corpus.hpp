#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "matchcast/errors.hpp"
#include "matchcast/types.hpp"

namespace matchcast {

// Exact header required of matches.csv.
inline constexpr std::string_view kMatchesHeader =
    "match_id,date,season,home_team,away_team,home_goals,away_goals,odds_home,odds_draw,odds_away";

struct PreviewArticle {
    std::string match_id;
    std::string source;
    std::string text;
    // Filled by segment_sentences; empty until then.
    std::vector<std::string> sentences;

    friend bool operator==(const PreviewArticle&, const PreviewArticle&) = default;
};

// Canonical team id -> surface strings. Lookups are case-insensitive and
// no alias may belong to two teams.
class TeamAliasTable {
public:
    void add(const std::string& team, const std::string& alias);

    bool has_team(std::string_view team) const;
    // Aliases in insertion order; throws DataError for an unknown team.
    const std::vector<std::string>& aliases(std::string_view team) const;
    std::optional<std::string> team_for(std::string_view alias) const;
    const std::map<std::string, std::vector<std::string>, std::less<>>& entries() const {
        return entries_;
    }

    friend bool operator==(const TeamAliasTable& a, const TeamAliasTable& b) {
        return a.entries_ == b.entries_;
    }

private:
    std::map<std::string, std::vector<std::string>, std::less<>> entries_;
    std::unordered_map<std::string, std::string> by_alias_;
};

// Immutable after construction. Matches are ordered by (date, match_id).
class Corpus {
public:
    Corpus() = default;
    // Validates, sorts, and segments every preview.
    Corpus(std::vector<MatchRecord> matches, std::vector<PreviewArticle> previews,
           TeamAliasTable aliases);

    std::span<const MatchRecord> matches() const { return matches_; }
    const TeamAliasTable& aliases() const { return aliases_; }
    const MatchRecord* find(std::string_view match_id) const;
    std::span<const PreviewArticle> previews_for(std::string_view match_id) const;
    bool has_preview(std::string_view match_id) const { return !previews_for(match_id).empty(); }
    std::size_t preview_count() const;
    // Season labels ordered by their first match date.
    std::vector<std::string> seasons() const;
    // Subset sharing the alias table; keeps the previews of retained matches.
    Corpus filter(const std::function<bool(const MatchRecord&)>& keep) const;

    friend bool operator==(const Corpus&, const Corpus&);

private:
    std::vector<MatchRecord> matches_;
    std::map<std::string, std::vector<PreviewArticle>, std::less<>> previews_;
    std::unordered_map<std::string, std::size_t> index_;
    TeamAliasTable aliases_;
};

std::vector<MatchRecord> parse_matches(std::istream& in, const std::string& origin = "matches.csv");
std::vector<MatchRecord> load_matches(const std::string& path);
void write_matches(std::ostream& out, std::span<const MatchRecord> matches);

std::vector<PreviewArticle> parse_previews(std::istream& in,
                                           const std::string& origin = "previews.jsonl");
std::vector<PreviewArticle> load_previews(const std::string& path);
void write_previews(std::ostream& out, std::span<const PreviewArticle> previews);

TeamAliasTable parse_aliases(std::string_view json_text);
TeamAliasTable load_aliases(const std::string& path);
std::string aliases_to_json(const TeamAliasTable& aliases);

// Rule-based splitter: breaks after . ! ? (plus closing quotes) when followed by
// whitespace and a capital, or by end of text. Known abbreviations and single
// capital initials do not end a sentence.
std::vector<std::string> split_sentences(std::string_view text);
PreviewArticle segment_sentences(PreviewArticle article);

class EmptySplitError : public DataError {
public:
    enum class Side { train, test };
    EmptySplitError(Side side, const std::string& what) : DataError(what), side_(side) {}
    Side side() const { return side_; }

private:
    Side side_;
};

struct TemporalSplit {
    Corpus train;  // date < cutoff
    Corpus test;   // date >= cutoff
};

TemporalSplit temporal_split(const Corpus& corpus, Date cutoff);

// Versioned cache container used by `matchcast ingest`.
inline constexpr int kCorpusCacheVersion = 1;
std::string serialize_corpus(const Corpus& corpus);
Corpus deserialize_corpus(std::string_view data);
void save_corpus(const Corpus& corpus, const std::string& path);
Corpus load_corpus(const std::string& path);

}  // namespace matchcast
