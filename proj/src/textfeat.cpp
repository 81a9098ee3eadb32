#include "matchcast/textfeat.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "matchcast/errors.hpp"

namespace matchcast::text {

namespace {

const std::unordered_set<std::string_view>& stop_words() {
    static const std::unordered_set<std::string_view> kWords{
        "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your", "yours",
        "yourself", "yourselves", "he", "him", "his", "himself", "she", "her", "hers", "herself",
        "it", "its", "itself", "they", "them", "their", "theirs", "themselves", "what", "which",
        "who", "whom", "whose", "this", "that", "these", "those", "am", "is", "are", "was", "were",
        "be", "been", "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a",
        "an", "the", "and", "but", "if", "or", "because", "as", "until", "while", "of", "at", "by",
        "for", "with", "about", "against", "between", "into", "through", "during", "before",
        "after", "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over",
        "under", "again", "further", "then", "once", "here", "there", "when", "where", "why", "how",
        "all", "any", "both", "each", "few", "more", "most", "other", "some", "such", "no", "nor",
        "not", "only", "own", "same", "so", "than", "too", "very", "can", "will", "just", "should",
        "now", "would", "could", "might", "must", "shall", "may", "also", "yet", "however",
        "although", "though", "whereas", "since", "unless", "upon", "within", "without", "us",
        "s", "t", "d", "ll", "m", "re", "ve", "o", "y", "mr", "its", "onto", "via", "per", "whether",
        "either", "neither", "ever", "even", "still", "much", "many", "every"};
    return kWords;
}

// Verbs and copulas used as relation pivots.
const std::unordered_set<std::string_view>& verb_lexicon() {
    static const std::unordered_set<std::string_view> kVerbs{
        "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had", "will",
        "would", "can", "could", "should", "may", "might", "must", "shall", "do", "does", "did",
        "begin", "begins", "began", "face", "faces", "faced", "need", "needs", "needed", "make",
        "makes", "made", "take", "takes", "took", "play", "plays", "played", "host", "hosts",
        "hosted", "visit", "visits", "beat", "beats", "lose", "loses", "lost", "win", "wins", "won",
        "remain", "remains", "remained", "return", "returns", "returned", "feature", "features",
        "miss", "misses", "missed", "come", "comes", "came", "go", "goes", "went", "look", "looks",
        "show", "shows", "showed", "start", "starts", "started", "travel", "travels", "head",
        "heads", "expect", "expects", "expected", "hope", "hopes", "want", "wants", "welcome",
        "welcomes", "sit", "sits", "lead", "leads", "led", "keep", "keeps", "kept"};
    return kVerbs;
}

const std::unordered_set<std::string_view>& determiners() {
    static const std::unordered_set<std::string_view> kDet{
        "the", "a", "an", "his", "her", "their", "its", "our", "my", "your", "this", "that",
        "these", "those"};
    return kDet;
}

// Words that typically follow a transitive verb ("X beats the Y").
const std::unordered_set<std::string_view>& verb_followers() {
    static const std::unordered_set<std::string_view> kFollow{
        "the", "a", "an", "his", "her", "their", "its", "our", "my", "your", "this", "that",
        "these", "those", "to", "for", "with", "at", "on", "in", "into", "up", "down", "out",
        "off", "against", "over", "him", "them", "it"};
    return kFollow;
}

// Conjunctions that always start a new clause.
const std::unordered_set<std::string_view>& clause_breaks() {
    static const std::unordered_set<std::string_view> kBreaks{
        "but", "although", "though", "while", "whereas", "because", "however", "yet"};
    return kBreaks;
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool in_lexicon(const Token& t) { return verb_lexicon().count(t.text) > 0; }

bool is_verb_like(std::span<const Token> tokens, std::size_t i) {
    const Token& t = tokens[i];
    if (in_lexicon(t)) return true;
    if (t.possessive || i == 0) return false;
    const std::string_view prev = tokens[i - 1].text;
    if (determiners().count(prev)) return false;
    const std::string_view w = t.text;
    if (w.size() >= 5 && ends_with(w, "ed")) return true;
    if (w.size() >= 4 && ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us") &&
        !ends_with(w, "is") && i + 1 < tokens.size() && verb_followers().count(tokens[i + 1].text)) {
        return true;
    }
    return false;
}

bool is_noun_like(const Token& t) { return !is_stop_word(t.text) && !in_lexicon(t); }

// Appends one UTF-8 code point starting at s[i] (lowercasing Latin-1 capitals);
// returns bytes consumed.
std::size_t append_letter(std::string_view s, std::size_t i, std::string& out) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if (c >= 0xF0) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    len = std::min(len, s.size() - i);
    if (len == 2 && c == 0xC3) {
        auto n = static_cast<unsigned char>(s[i + 1]);
        if (n >= 0x80 && n <= 0x9E && n != 0x97) n = static_cast<unsigned char>(n + 0x20);
        out += static_cast<char>(c);
        out += static_cast<char>(n);
        return 2;
    }
    out.append(s.substr(i, len));
    return len;
}

enum class CharClass { word, apostrophe, other };

// Classifies the character at s[i] and reports its byte length.
CharClass classify(std::string_view s, std::size_t i, std::size_t& len) {
    const auto c = static_cast<unsigned char>(s[i]);
    len = 1;
    if (c < 0x80) {
        if (std::isalnum(c)) return CharClass::word;
        if (c == '\'') return CharClass::apostrophe;
        return CharClass::other;
    }
    // General punctuation block U+2000..U+206F: quotes, dashes, ellipsis.
    if (c == 0xE2 && i + 2 < s.size() + 0 && static_cast<unsigned char>(s[i + 1]) == 0x80) {
        len = 3;
        const auto n = static_cast<unsigned char>(s[i + 2]);
        if (n == 0x98 || n == 0x99) return CharClass::apostrophe;
        return CharClass::other;
    }
    // Latin-1 punctuation and symbols U+00A0..U+00BF.
    if (c == 0xC2) {
        len = 2;
        return CharClass::other;
    }
    return CharClass::word;
}

}  // namespace

bool is_stop_word(std::string_view token) { return stop_words().count(token) > 0; }

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::string cur;
    auto flush = [&](bool possessive) {
        if (!cur.empty()) out.push_back({std::move(cur), possessive});
        cur.clear();
    };
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t len = 1;
        const CharClass cls = classify(s, i, len);
        if (cls == CharClass::word) {
            if (static_cast<unsigned char>(s[i]) < 0x80) {
                cur += static_cast<char>(std::tolower(static_cast<unsigned char>(s[i])));
                ++i;
            } else {
                i += append_letter(s, i, cur);
            }
            continue;
        }
        if (cls == CharClass::apostrophe && !cur.empty()) {
            const std::size_t next = i + len;
            std::size_t nlen = 1;
            const bool next_is_word = next < s.size() && classify(s, next, nlen) == CharClass::word;
            if (!next_is_word) {
                // Plural possessive: "players' ".
                flush(true);
                i = next;
                continue;
            }
            const bool single_s = (s[next] == 's' || s[next] == 'S') &&
                                  (next + 1 >= s.size() || classify(s, next + 1, nlen) != CharClass::word);
            if (single_s) {
                flush(true);
                i = next + 1;
                continue;
            }
            // Contraction or name: drop the apostrophe and keep going.
            i = next;
            continue;
        }
        flush(false);
        i += len;
    }
    flush(false);
    return out;
}

std::string render(std::span<const Token> tokens, Span span) {
    std::string out;
    for (std::size_t i = span.begin; i < span.end && i < tokens.size(); ++i) {
        if (!out.empty()) out += ' ';
        out += tokens[i].text;
    }
    return out;
}

std::vector<RelationTuple> extract_relations(std::span<const Token> tokens, std::size_t sentence_index) {
    // Clause boundaries: break-words always, "and"/"or" only before a verb.
    std::vector<Span> clauses;
    std::size_t start = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::string_view w = tokens[i].text;
        bool brk = clause_breaks().count(w) > 0;
        if (!brk && (w == "and" || w == "or") && i + 1 < tokens.size()) {
            brk = in_lexicon(tokens[i + 1]) || is_verb_like(tokens, i + 1);
        }
        if (brk) {
            clauses.push_back({start, i});
            start = i + 1;
        }
    }
    clauses.push_back({start, tokens.size()});

    std::vector<RelationTuple> out;
    Span subject_carry{};
    for (const Span& clause : clauses) {
        if (clause.empty()) continue;
        std::size_t pivot = clause.end;
        for (std::size_t i = clause.begin; i < clause.end; ++i) {
            if (is_verb_like(tokens, i)) {
                pivot = i;
                break;
            }
        }
        if (pivot == clause.end) continue;

        std::size_t rel_end = pivot + 1;
        while (rel_end < clause.end && in_lexicon(tokens[rel_end])) ++rel_end;

        // Longest noun-like run before the pivot; later run wins ties.
        Span subject{};
        std::size_t i = clause.begin;
        while (i < pivot) {
            if (!is_noun_like(tokens[i])) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < pivot && is_noun_like(tokens[j])) ++j;
            if (j - i >= subject.end - subject.begin) subject = {i, j};
            i = j;
        }
        if (subject.empty()) subject = subject_carry;
        if (subject.empty()) continue;

        std::size_t ob = rel_end;
        while (ob < clause.end && is_stop_word(tokens[ob].text)) ++ob;
        std::size_t oe = clause.end;
        while (oe > ob && is_stop_word(tokens[oe - 1].text)) --oe;
        if (ob >= oe) continue;

        std::string label;
        for (std::size_t k = pivot; k < rel_end; ++k) {
            if (!label.empty()) label += '-';
            label += tokens[k].text;
        }
        Span object{ob, oe};
        for (std::size_t q = ob; q + 1 < oe; ++q) {
            if (!tokens[q].possessive) continue;
            std::size_t head_end = q + 1;
            while (head_end < oe && !is_stop_word(tokens[head_end].text)) ++head_end;
            for (std::size_t k = q + 1; k < head_end; ++k) label += "-" + tokens[k].text;
            label += "-of";
            object = {ob, q + 1};
            break;
        }

        out.push_back({subject, {pivot, rel_end}, object, sentence_index, std::move(label)});
        subject_carry = subject;
    }
    return out;
}

std::vector<RelationTuple> extract_relations(std::string_view sentence, std::size_t sentence_index) {
    const auto tokens = tokenize(sentence);
    return extract_relations(tokens, sentence_index);
}

std::string_view to_string(Side s) {
    switch (s) {
        case Side::home: return "home";
        case Side::away: return "away";
        case Side::none: return "none";
    }
    return "?";
}

std::vector<AliasHit> find_alias_hits(std::span<const Token> tokens, const MatchRecord& match,
                                      const TeamAliasTable& aliases) {
    struct Pattern {
        std::vector<std::string> words;
        Side side;
    };
    std::vector<Pattern> patterns;
    for (auto [team, side] : {std::pair{&match.home_team, Side::home}, std::pair{&match.away_team, Side::away}}) {
        for (const auto& alias : aliases.aliases(*team)) {
            Pattern p{{}, side};
            for (auto& t : tokenize(alias)) p.words.push_back(std::move(t.text));
            if (!p.words.empty()) patterns.push_back(std::move(p));
        }
    }
    // Longest alias first so "manchester united" beats "united".
    std::stable_sort(patterns.begin(), patterns.end(),
                     [](const Pattern& a, const Pattern& b) { return a.words.size() > b.words.size(); });

    std::vector<AliasHit> hits;
    std::size_t i = 0;
    while (i < tokens.size()) {
        const Pattern* found = nullptr;
        for (const auto& p : patterns) {
            if (i + p.words.size() > tokens.size()) continue;
            bool ok = true;
            for (std::size_t k = 0; k < p.words.size() && ok; ++k) ok = tokens[i + k].text == p.words[k];
            if (ok) {
                found = &p;
                break;
            }
        }
        if (found == nullptr) {
            ++i;
            continue;
        }
        hits.push_back({{i, i + found->words.size()}, found->side, 0});
        i += found->words.size();
    }
    return hits;
}

Allocation allocate_sentence(std::span<const Token> tokens, std::span<const RelationTuple> tuples,
                             const MatchRecord& match, const TeamAliasTable& aliases,
                             const AllocationParams& params) {
    Allocation a;
    if (!tuples.empty()) a.sentence_index = tuples.front().sentence_index;
    for (AliasHit hit : find_alias_hits(tokens, match, aliases)) {
        const bool in_argument = std::any_of(tuples.begin(), tuples.end(), [&](const RelationTuple& t) {
            return hit.span.overlaps(t.subject) || hit.span.overlaps(t.object);
        });
        const double w = in_argument ? params.argument_weight : params.token_weight;
        (hit.side == Side::home ? a.home_mass : a.away_mass) += w;
    }
    const double total = a.home_mass + a.away_mass;
    if (total <= 0) return a;
    const double top = std::max(a.home_mass, a.away_mass);
    a.confidence = top / total;
    if (a.home_mass != a.away_mass && a.confidence >= params.theta) {
        a.team = a.home_mass > a.away_mass ? Side::home : Side::away;
    }
    return a;
}

Allocation allocate_sentence(std::string_view sentence, const MatchRecord& match,
                             const TeamAliasTable& aliases, const AllocationParams& params) {
    const auto tokens = tokenize(sentence);
    const auto tuples = extract_relations(tokens);
    return allocate_sentence(tokens, tuples, match, aliases, params);
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<std::uint32_t> document_frequency,
                       std::uint64_t fingerprint, std::size_t documents)
    : tokens_(std::move(tokens)), df_(std::move(document_frequency)), fingerprint_(fingerprint),
      documents_(documents) {
    if (df_.size() != tokens_.size()) throw DataError("vocabulary: frequency table size mismatch");
    if (!std::is_sorted(tokens_.begin(), tokens_.end())) throw DataError("vocabulary: tokens not sorted");
    for (std::uint32_t i = 0; i < tokens_.size(); ++i) {
        if (!index_.emplace(tokens_[i], i).second) throw DataError("vocabulary: duplicate token " + tokens_[i]);
    }
}

long Vocabulary::index_of(std::string_view token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : static_cast<long>(it->second);
}

bool is_vocabulary_candidate(std::string_view token) {
    return token.size() >= 2 && !is_stop_word(token);
}

namespace {

std::uint64_t fnv1a(std::uint64_t h, std::string_view s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
    return h;
}

std::vector<std::string> sentences_of(const PreviewArticle& a) {
    if (!a.sentences.empty() || a.text.empty()) return a.sentences;
    return split_sentences(a.text);
}

}  // namespace

Vocabulary fit_vocabulary(std::span<const PreviewArticle> train_articles, const VocabularyParams& params) {
    if (train_articles.empty()) throw DataError("cannot fit a vocabulary on an empty training set");
    std::map<std::string, std::uint32_t, std::less<>> df;
    std::vector<std::pair<std::string_view, std::string_view>> keys;
    for (const auto& article : train_articles) {
        std::unordered_set<std::string> seen;
        for (const auto& sentence : sentences_of(article)) {
            for (auto& t : tokenize(sentence)) {
                if (is_vocabulary_candidate(t.text)) seen.insert(std::move(t.text));
            }
        }
        for (const auto& t : seen) ++df[t];
        keys.emplace_back(article.match_id, article.text);
    }
    std::sort(keys.begin(), keys.end());
    std::uint64_t fp = 0xcbf29ce484222325ULL;
    for (const auto& [id, text] : keys) fp = fnv1a(fnv1a(fp, id), text);

    const double n = static_cast<double>(train_articles.size());
    std::vector<std::string> tokens;
    std::vector<std::uint32_t> freq;
    for (const auto& [token, count] : df) {
        if (count < static_cast<std::uint32_t>(std::max(params.min_df, 0))) continue;
        if (static_cast<double>(count) > params.max_df * n) continue;
        tokens.push_back(token);
        freq.push_back(count);
    }
    return Vocabulary(std::move(tokens), std::move(freq), fp, train_articles.size());
}

SentenceVector vectorize_sentence(std::span<const Token> tokens, const Vocabulary& vocab) {
    std::map<std::uint32_t, std::uint32_t> counts;
    for (const auto& t : tokens) {
        const long col = vocab.index_of(t.text);
        if (col >= 0) ++counts[static_cast<std::uint32_t>(col)];
    }
    return SentenceVector{{counts.begin(), counts.end()}};
}

SentenceVector vectorize_sentence(std::string_view sentence, const Vocabulary& vocab) {
    const auto tokens = tokenize(sentence);
    return vectorize_sentence(tokens, vocab);
}

TextFeatures build_features(const MatchRecord& match, std::span<const PreviewArticle> articles,
                            const Vocabulary& vocab, const TeamAliasTable& aliases, double mu,
                            const AllocationParams& params) {
    if (!(mu > 0)) throw ModelError("home weighting mu must be positive");
    const std::size_t v = vocab.size();
    TextFeatures f;
    f.match_id = match.match_id;
    f.mu = mu;
    f.home_vector.assign(v, 0.0);
    f.away_vector.assign(v, 0.0);
    f.none_vector.assign(v, 0.0);

    std::size_t sentence_index = 0;
    for (const auto& article : articles) {
        if (article.match_id != match.match_id) {
            throw DataError("article for '" + article.match_id + "' passed with match '" + match.match_id + "'");
        }
        f.has_text = true;
        for (const auto& sentence : sentences_of(article)) {
            const auto tokens = tokenize(sentence);
            const auto tuples = extract_relations(tokens, sentence_index);
            Allocation a = allocate_sentence(tokens, tuples, match, aliases, params);
            a.sentence_index = sentence_index++;
            a.vector = vectorize_sentence(tokens, vocab);
            auto& target = a.team == Side::home ? f.home_vector
                           : a.team == Side::away ? f.away_vector
                                                  : f.none_vector;
            for (auto [col, count] : a.vector.entries) target[col] += count;
            f.allocations.push_back(std::move(a));
        }
    }

    f.x.reserve(2 * v);
    for (double h : f.home_vector) f.x.push_back(mu * h);
    f.x.insert(f.x.end(), f.away_vector.begin(), f.away_vector.end());
    return f;
}

std::vector<std::string> feature_names(const Vocabulary& vocab) {
    std::vector<std::string> names;
    names.reserve(2 * vocab.size());
    for (const auto& t : vocab.tokens()) names.push_back("home:" + t);
    for (const auto& t : vocab.tokens()) names.push_back("away:" + t);
    return names;
}

}  // namespace matchcast::text
