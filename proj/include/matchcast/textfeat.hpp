#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "matchcast/corpus.hpp"
#include "matchcast/types.hpp"

namespace matchcast::text {

struct Token {
    std::string text;        // lowercased
    bool possessive = false;  // followed by 's or a trailing apostrophe

    friend bool operator==(const Token&, const Token&) = default;
};

// Lowercased alphanumeric tokens; punctuation is dropped, apostrophes are
// folded into the previous token (possessive marker) or removed.
std::vector<Token> tokenize(std::string_view sentence);

bool is_stop_word(std::string_view token);

// Half-open token range [begin, end).
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool empty() const { return begin >= end; }
    bool overlaps(const Span& o) const { return begin < o.end && o.begin < end; }
    friend bool operator==(const Span&, const Span&) = default;
};

struct RelationTuple {
    Span subject;
    Span relation;
    Span object;
    std::size_t sentence_index = 0;
    // Hyphen-joined relation label, e.g. "begins" or "is-ex-manager-of".
    std::string label;
};

// Renders a span as space-joined tokens.
std::string render(std::span<const Token> tokens, Span span);

// Heuristic {argument, relation, argument} extraction. Each clause pivots on
// its first verb-like token; the subject is the longest noun-like run before
// the pivot (inherited from the previous clause when absent) and the object is
// the rest of the clause. "X is Y's Z" becomes (X, is-Z-of, Y).
std::vector<RelationTuple> extract_relations(std::span<const Token> tokens,
                                             std::size_t sentence_index = 0);
std::vector<RelationTuple> extract_relations(std::string_view sentence,
                                             std::size_t sentence_index = 0);

enum class Side : std::uint8_t { home, away, none };
std::string_view to_string(Side s);

struct AllocationParams {
    double theta = 0.6;         // minimum winning share of mention mass
    double argument_weight = 2;  // alias hit inside a tuple argument
    double token_weight = 1;     // any other alias hit
};

struct AliasHit {
    Span span;
    Side side = Side::none;
    double weight = 0;
};

// Sparse counts sorted by column.
struct SentenceVector {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> entries;
    friend bool operator==(const SentenceVector&, const SentenceVector&) = default;
};

struct Allocation {
    std::size_t sentence_index = 0;
    SentenceVector vector;
    Side team = Side::none;
    double confidence = 0;  // winning share of mention mass, 0 when no mentions
    double home_mass = 0;
    double away_mass = 0;
};

// Finds non-overlapping alias occurrences of the two teams, longest first.
std::vector<AliasHit> find_alias_hits(std::span<const Token> tokens, const MatchRecord& match,
                                      const TeamAliasTable& aliases);

// Assigns a sentence to home, away or none by alias mention mass. Leaves
// `vector` empty; build_features fills it.
Allocation allocate_sentence(std::span<const Token> tokens, std::span<const RelationTuple> tuples,
                             const MatchRecord& match, const TeamAliasTable& aliases,
                             const AllocationParams& params = {});
Allocation allocate_sentence(std::string_view sentence, const MatchRecord& match,
                             const TeamAliasTable& aliases, const AllocationParams& params = {});

struct VocabularyParams {
    int min_df = 3;
    double max_df = 0.9;  // fraction of training articles
};

class Vocabulary {
public:
    Vocabulary() = default;
    // Columns follow alphabetical token order.
    Vocabulary(std::vector<std::string> tokens, std::vector<std::uint32_t> document_frequency,
               std::uint64_t fingerprint, std::size_t documents);

    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }
    const std::vector<std::uint32_t>& document_frequency() const { return df_; }
    std::uint64_t fingerprint() const { return fingerprint_; }
    std::size_t documents() const { return documents_; }
    // Column of `token`, or -1.
    long index_of(std::string_view token) const;
    bool contains(std::string_view token) const { return index_of(token) >= 0; }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.tokens_ == b.tokens_ && a.df_ == b.df_ && a.fingerprint_ == b.fingerprint_ &&
               a.documents_ == b.documents_;
    }

private:
    std::vector<std::string> tokens_;
    std::vector<std::uint32_t> df_;
    std::map<std::string, std::uint32_t, std::less<>> index_;
    std::uint64_t fingerprint_ = 0;
    std::size_t documents_ = 0;
};

// Tokens kept by the vectorizer: two or more characters and not a stop word.
bool is_vocabulary_candidate(std::string_view token);

// Unigram count vectorizer fit. Throws DataError on an empty training set.
Vocabulary fit_vocabulary(std::span<const PreviewArticle> train_articles,
                          const VocabularyParams& params = {});

SentenceVector vectorize_sentence(std::span<const Token> tokens, const Vocabulary& vocab);
SentenceVector vectorize_sentence(std::string_view sentence, const Vocabulary& vocab);

struct TextFeatures {
    std::string match_id;
    std::vector<double> home_vector;  // summed vectors of home-allocated sentences
    std::vector<double> away_vector;
    std::vector<double> none_vector;  // sentences allocated to neither team
    double mu = 1.0;
    std::vector<double> x;  // [mu * home_vector, away_vector]
    bool has_text = false;
    std::vector<Allocation> allocations;
};

// Pools the sentences of all articles for the match. With no articles the
// result is the zero vector and has_text is false.
TextFeatures build_features(const MatchRecord& match, std::span<const PreviewArticle> articles,
                            const Vocabulary& vocab, const TeamAliasTable& aliases, double mu,
                            const AllocationParams& params = {});

// Column names for a feature vector of width 2V: home block then away block.
std::vector<std::string> feature_names(const Vocabulary& vocab);

}  // namespace matchcast::text
