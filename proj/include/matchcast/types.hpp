#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace matchcast {

// Declaration order is the tie-break order used everywhere an argmax is taken.
enum class Outcome : std::uint8_t { homewin = 0, draw = 1, awaywin = 2 };

inline constexpr std::array<Outcome, 3> kOutcomes{Outcome::homewin, Outcome::draw,
                                                  Outcome::awaywin};

inline constexpr std::size_t index_of(Outcome o) { return static_cast<std::size_t>(o); }

std::string_view to_string(Outcome o);
Outcome outcome_from_string(std::string_view s);

// Normalized probability triple over {homewin, draw, awaywin}.
struct OutcomeProbs {
    double home = 0.0;
    double draw = 0.0;
    double away = 0.0;

    double at(Outcome o) const;
    double sum() const { return home + draw + away; }
    // First maximum in homewin < draw < awaywin order.
    Outcome argmax() const;

    static OutcomeProbs uniform() { return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}; }
    // Rescales non-negative weights to sum to one.
    static OutcomeProbs normalized(double home, double draw, double away);

    friend bool operator==(const OutcomeProbs&, const OutcomeProbs&) = default;
};

// Decimal bookmaker odds; each price must exceed 1.
struct OddsTriple {
    double home = 0.0;
    double draw = 0.0;
    double away = 0.0;

    double at(Outcome o) const;
    friend bool operator==(const OddsTriple&, const OddsTriple&) = default;
};

using Date = std::chrono::year_month_day;

// Strict ISO-8601 calendar date (YYYY-MM-DD).
Date parse_date(std::string_view s);
std::string format_date(Date d);
// b - a in days.
long days_between(Date a, Date b);

struct MatchRecord {
    std::string match_id;
    Date date{};
    std::string season;
    std::string home_team;
    std::string away_team;
    int home_goals = 0;
    int away_goals = 0;
    std::optional<OddsTriple> odds;

    Outcome outcome() const;
    friend bool operator==(const MatchRecord&, const MatchRecord&) = default;
};

}  // namespace matchcast
