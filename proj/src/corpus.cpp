#include "matchcast/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "matchcast/io.hpp"

namespace matchcast {

using nlohmann::json;

namespace {

std::string lowercase(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string_view trim(std::string_view s) {
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

bool match_less(const MatchRecord& a, const MatchRecord& b) {
    if (a.date != b.date) return a.date < b.date;
    return a.match_id < b.match_id;
}

// RFC 4180 fields; quotes only needed around commas or quotes.
std::vector<std::string> split_csv_line(std::string_view line, bool& ok) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    ok = true;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) ok = false;
    fields.push_back(std::move(cur));
    return fields;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

int parse_goals(std::string_view s, const std::string& where) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) {
        throw DataError(where + ": goals '" + std::string(s) + "' is not an integer");
    }
    if (v < 0) throw DataError(where + ": negative goals");
    return v;
}

double parse_price(std::string_view s, const std::string& where) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw DataError(where + ": odds '" + std::string(s) + "' is not a number");
    }
    if (!(v > 1.0)) throw DataError(where + ": decimal odds must exceed 1");
    return v;
}

// Bytes of a closing quote or bracket starting at `i`, or 0.
std::size_t closing_mark_len(std::string_view t, std::size_t i) {
    const char c = t[i];
    if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
    // U+2019 and U+201D
    if (i + 2 < t.size() + 0 && static_cast<unsigned char>(c) == 0xE2 &&
        static_cast<unsigned char>(t[i + 1]) == 0x80 &&
        (static_cast<unsigned char>(t[i + 2]) == 0x99 ||
         static_cast<unsigned char>(t[i + 2]) == 0x9D)) {
        return 3;
    }
    return 0;
}

bool is_capital_at(std::string_view t, std::size_t i) {
    if (i >= t.size()) return false;
    const auto c = static_cast<unsigned char>(t[i]);
    if (c >= 'A' && c <= 'Z') return true;
    // Latin-1 capitals U+00C0..U+00DE except U+00D7.
    if (c == 0xC3 && i + 1 < t.size()) {
        const auto n = static_cast<unsigned char>(t[i + 1]);
        return n >= 0x80 && n <= 0x9E && n != 0x97;
    }
    return false;
}

bool starts_sentence(std::string_view t, std::size_t i) {
    if (is_capital_at(t, i)) return true;
    // Opening quote or bracket followed by a capital.
    if (i < t.size() && (t[i] == '"' || t[i] == '\'' || t[i] == '(')) return is_capital_at(t, i + 1);
    if (i + 2 < t.size() && static_cast<unsigned char>(t[i]) == 0xE2 &&
        static_cast<unsigned char>(t[i + 1]) == 0x80 &&
        (static_cast<unsigned char>(t[i + 2]) == 0x9C ||
         static_cast<unsigned char>(t[i + 2]) == 0x98)) {
        return is_capital_at(t, i + 3);
    }
    return false;
}

const std::unordered_set<std::string>& abbreviations() {
    static const std::unordered_set<std::string> kAbbrev{
        "st", "mr", "mrs", "ms", "dr", "jr", "sr", "vs", "v", "etc", "no", "prof",
        "rev", "gen", "lt", "col", "sgt", "capt", "mt", "ft", "fc", "utd", "approx", "inc"};
    return kAbbrev;
}

// True when the period at `dot` closes an abbreviation or an initial.
bool is_abbreviation_dot(std::string_view t, std::size_t dot) {
    std::size_t b = dot;
    while (b > 0 && std::isalpha(static_cast<unsigned char>(t[b - 1]))) --b;
    if (b == dot) return false;
    // Word glued to an apostrophe ("Mary's.") is not an abbreviation.
    if (b > 0 && (t[b - 1] == '\'' || static_cast<unsigned char>(t[b - 1]) == 0x99)) return false;
    const std::string_view word = t.substr(b, dot - b);
    if (word.size() == 1 && std::isupper(static_cast<unsigned char>(word[0]))) return true;
    return abbreviations().count(lowercase(word)) > 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// TeamAliasTable

void TeamAliasTable::add(const std::string& team, const std::string& alias) {
    const std::string key = lowercase(trim(alias));
    if (key.empty()) throw DataError("empty alias for team '" + team + "'");
    auto it = by_alias_.find(key);
    if (it != by_alias_.end()) {
        if (it->second == team) return;
        throw DataError("alias '" + alias + "' belongs to both '" + it->second + "' and '" + team +
                        "'");
    }
    by_alias_.emplace(key, team);
    entries_[team].push_back(alias);
}

bool TeamAliasTable::has_team(std::string_view team) const { return entries_.find(team) != entries_.end(); }

const std::vector<std::string>& TeamAliasTable::aliases(std::string_view team) const {
    auto it = entries_.find(team);
    if (it == entries_.end()) throw DataError("no aliases for team '" + std::string(team) + "'");
    return it->second;
}

std::optional<std::string> TeamAliasTable::team_for(std::string_view alias) const {
    auto it = by_alias_.find(lowercase(trim(alias)));
    if (it == by_alias_.end()) return std::nullopt;
    return it->second;
}

// ---------------------------------------------------------------------------
// Corpus

Corpus::Corpus(std::vector<MatchRecord> matches, std::vector<PreviewArticle> previews,
               TeamAliasTable aliases)
    : matches_(std::move(matches)), aliases_(std::move(aliases)) {
    std::sort(matches_.begin(), matches_.end(), match_less);
    for (std::size_t i = 0; i < matches_.size(); ++i) {
        const MatchRecord& m = matches_[i];
        if (m.home_team == m.away_team) {
            throw DataError("match '" + m.match_id + "': home and away team are both '" +
                            m.home_team + "'");
        }
        if (m.home_goals < 0 || m.away_goals < 0) {
            throw DataError("match '" + m.match_id + "': negative goals");
        }
        if (!index_.emplace(m.match_id, i).second) {
            throw DataError("duplicate match_id '" + m.match_id + "'");
        }
    }
    for (auto& p : previews) {
        if (index_.find(p.match_id) == index_.end()) {
            throw DataError("preview references unknown match_id '" + p.match_id + "'");
        }
        previews_[p.match_id].push_back(segment_sentences(std::move(p)));
    }
}

const MatchRecord* Corpus::find(std::string_view match_id) const {
    auto it = index_.find(std::string(match_id));
    return it == index_.end() ? nullptr : &matches_[it->second];
}

std::span<const PreviewArticle> Corpus::previews_for(std::string_view match_id) const {
    auto it = previews_.find(match_id);
    if (it == previews_.end()) return {};
    return it->second;
}

std::size_t Corpus::preview_count() const {
    std::size_t n = 0;
    for (const auto& [id, list] : previews_) n += list.size();
    return n;
}

std::vector<std::string> Corpus::seasons() const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& m : matches_) {
        if (seen.insert(m.season).second) out.push_back(m.season);
    }
    return out;
}

Corpus Corpus::filter(const std::function<bool(const MatchRecord&)>& keep) const {
    std::vector<MatchRecord> kept;
    std::vector<PreviewArticle> previews;
    for (const auto& m : matches_) {
        if (!keep(m)) continue;
        kept.push_back(m);
        for (const auto& p : previews_for(m.match_id)) previews.push_back(p);
    }
    return Corpus(std::move(kept), std::move(previews), aliases_);
}

bool operator==(const Corpus& a, const Corpus& b) {
    return a.matches_ == b.matches_ && a.previews_ == b.previews_ && a.aliases_ == b.aliases_;
}

// ---------------------------------------------------------------------------
// matches.csv

std::vector<MatchRecord> parse_matches(std::istream& in, const std::string& origin) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(origin + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (line != kMatchesHeader) {
        throw DataError(origin + ":1: header must be exactly '" + std::string(kMatchesHeader) + "'");
    }

    std::vector<MatchRecord> out;
    std::unordered_set<std::string> ids;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno);
        bool ok = true;
        auto f = split_csv_line(line, ok);
        if (!ok) throw DataError(where + ": unterminated quoted field");
        if (f.size() != 10) {
            throw DataError(where + ": expected 10 fields, found " + std::to_string(f.size()));
        }
        MatchRecord m;
        m.match_id = f[0];
        if (m.match_id.empty()) throw DataError(where + ": empty match_id");
        try {
            m.date = parse_date(f[1]);
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
        m.season = f[2];
        m.home_team = f[3];
        m.away_team = f[4];
        if (m.home_team.empty() || m.away_team.empty()) throw DataError(where + ": empty team id");
        if (m.home_team == m.away_team) throw DataError(where + ": home_team equals away_team");
        m.home_goals = parse_goals(f[5], where);
        m.away_goals = parse_goals(f[6], where);
        const bool any_odds = !f[7].empty() || !f[8].empty() || !f[9].empty();
        if (any_odds) {
            if (f[7].empty() || f[8].empty() || f[9].empty()) {
                throw DataError(where + ": odds must be all present or all empty");
            }
            m.odds = OddsTriple{parse_price(f[7], where), parse_price(f[8], where),
                                parse_price(f[9], where)};
        }
        if (!ids.insert(m.match_id).second) {
            throw DataError(where + ": duplicate match_id '" + m.match_id + "'");
        }
        out.push_back(std::move(m));
    }
    std::sort(out.begin(), out.end(), match_less);
    return out;
}

std::vector<MatchRecord> load_matches(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return parse_matches(in, path);
}

void write_matches(std::ostream& out, std::span<const MatchRecord> matches) {
    out << kMatchesHeader << '\n';
    for (const auto& m : matches) {
        out << csv_field(m.match_id) << ',' << format_date(m.date) << ',' << csv_field(m.season)
            << ',' << csv_field(m.home_team) << ',' << csv_field(m.away_team) << ','
            << m.home_goals << ',' << m.away_goals << ',';
        if (m.odds) {
            out << io::format_double(m.odds->home) << ',' << io::format_double(m.odds->draw) << ','
                << io::format_double(m.odds->away);
        } else {
            out << ",,";
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// previews.jsonl

std::vector<PreviewArticle> parse_previews(std::istream& in, const std::string& origin) {
    std::vector<PreviewArticle> out;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError(where + ": invalid JSON (" + e.what() + ")");
        }
        if (!j.is_object()) throw DataError(where + ": expected a JSON object");
        PreviewArticle a;
        for (auto [field, dest] : {std::pair{"match_id", &a.match_id}, std::pair{"source", &a.source},
                                   std::pair{"text", &a.text}}) {
            auto it = j.find(field);
            if (it == j.end()) throw DataError(where + ": missing field '" + field + "'");
            if (!it->is_string()) throw DataError(where + ": field '" + field + "' must be a string");
            *dest = it->get<std::string>();
        }
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<PreviewArticle> load_previews(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return parse_previews(in, path);
}

void write_previews(std::ostream& out, std::span<const PreviewArticle> previews) {
    for (const auto& p : previews) {
        json j = {{"match_id", p.match_id}, {"source", p.source}, {"text", p.text}};
        out << j.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------
// aliases.json

TeamAliasTable parse_aliases(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("aliases: invalid JSON (") + e.what() + ")");
    }
    if (!j.is_object()) throw DataError("aliases: expected an object of team -> alias array");
    TeamAliasTable table;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.value().is_array()) {
            throw DataError("aliases: value for '" + it.key() + "' must be an array");
        }
        for (const auto& a : it.value()) {
            if (!a.is_string()) throw DataError("aliases: non-string alias for '" + it.key() + "'");
            table.add(it.key(), a.get<std::string>());
        }
    }
    return table;
}

TeamAliasTable load_aliases(const std::string& path) { return parse_aliases(io::read_file(path)); }

std::string aliases_to_json(const TeamAliasTable& aliases) {
    json j = json::object();
    for (const auto& [team, list] : aliases.entries()) j[team] = list;
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Sentence segmentation

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    auto emit = [&](std::size_t b, std::size_t e) {
        auto s = trim(text.substr(b, e - b));
        if (!s.empty()) out.emplace_back(s);
    };

    std::size_t start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c != '.' && c != '!' && c != '?') {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < text.size() && (text[j] == '.' || text[j] == '!' || text[j] == '?')) ++j;
        const bool single_dot = c == '.' && j == i + 1;
        while (j < text.size()) {
            const std::size_t n = closing_mark_len(text, j);
            if (n == 0) break;
            j += n;
        }
        std::size_t k = j;
        while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
        const bool at_end = k == text.size();
        const bool boundary =
            at_end || (k > j && starts_sentence(text, k) && !(single_dot && is_abbreviation_dot(text, i)));
        if (boundary) {
            emit(start, j);
            start = j;
        }
        i = j;
    }
    emit(start, text.size());
    return out;
}

PreviewArticle segment_sentences(PreviewArticle article) {
    article.sentences = split_sentences(article.text);
    return article;
}

// ---------------------------------------------------------------------------
// Splits

TemporalSplit temporal_split(const Corpus& corpus, Date cutoff) {
    TemporalSplit split{corpus.filter([&](const MatchRecord& m) { return m.date < cutoff; }),
                        corpus.filter([&](const MatchRecord& m) { return !(m.date < cutoff); })};
    if (split.train.matches().empty()) {
        throw EmptySplitError(EmptySplitError::Side::train,
                              "temporal split at " + format_date(cutoff) + " leaves no training matches");
    }
    if (split.test.matches().empty()) {
        throw EmptySplitError(EmptySplitError::Side::test,
                              "temporal split at " + format_date(cutoff) + " leaves no test matches");
    }
    return split;
}

// ---------------------------------------------------------------------------
// Cache

namespace {
constexpr const char* kCorpusFormat = "matchcast-corpus";
}

std::string serialize_corpus(const Corpus& corpus) {
    json matches = json::array();
    for (const auto& m : corpus.matches()) {
        json jm = {{"match_id", m.match_id},     {"date", format_date(m.date)},
                   {"season", m.season},         {"home_team", m.home_team},
                   {"away_team", m.away_team},   {"home_goals", m.home_goals},
                   {"away_goals", m.away_goals}, {"odds", nullptr}};
        if (m.odds) jm["odds"] = {m.odds->home, m.odds->draw, m.odds->away};
        matches.push_back(std::move(jm));
    }
    json previews = json::array();
    for (const auto& m : corpus.matches()) {
        for (const auto& p : corpus.previews_for(m.match_id)) {
            previews.push_back({{"match_id", p.match_id}, {"source", p.source}, {"text", p.text}});
        }
    }
    json aliases = json::object();
    for (const auto& [team, list] : corpus.aliases().entries()) aliases[team] = list;
    json root = {{"format", kCorpusFormat},
                 {"version", kCorpusCacheVersion},
                 {"matches", std::move(matches)},
                 {"previews", std::move(previews)},
                 {"aliases", std::move(aliases)}};
    return root.dump();
}

Corpus deserialize_corpus(std::string_view data) {
    json root;
    try {
        root = json::parse(data);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("corpus cache is not valid: ") + e.what());
    }
    if (!root.is_object() || root.value("format", "") != kCorpusFormat) {
        throw DataError("not a matchcast corpus cache");
    }
    const int version = root.value("version", -1);
    if (version != kCorpusCacheVersion) {
        throw DataError("corpus cache version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kCorpusCacheVersion) + ")");
    }
    try {
        std::vector<MatchRecord> matches;
        for (const auto& jm : root.at("matches")) {
            MatchRecord m;
            m.match_id = jm.at("match_id").get<std::string>();
            m.date = parse_date(jm.at("date").get<std::string>());
            m.season = jm.at("season").get<std::string>();
            m.home_team = jm.at("home_team").get<std::string>();
            m.away_team = jm.at("away_team").get<std::string>();
            m.home_goals = jm.at("home_goals").get<int>();
            m.away_goals = jm.at("away_goals").get<int>();
            if (!jm.at("odds").is_null()) {
                const auto& o = jm.at("odds");
                m.odds = OddsTriple{o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>()};
            }
            matches.push_back(std::move(m));
        }
        std::vector<PreviewArticle> previews;
        for (const auto& jp : root.at("previews")) {
            previews.push_back({jp.at("match_id").get<std::string>(), jp.at("source").get<std::string>(),
                                jp.at("text").get<std::string>(), {}});
        }
        TeamAliasTable aliases = parse_aliases(root.at("aliases").dump());
        return Corpus(std::move(matches), std::move(previews), std::move(aliases));
    } catch (const json::exception& e) {
        throw DataError(std::string("corpus cache is malformed: ") + e.what());
    }
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    io::write_file_atomic(path, serialize_corpus(corpus));
}

Corpus load_corpus(const std::string& path) { return deserialize_corpus(io::read_file(path)); }

}  // namespace matchcast
