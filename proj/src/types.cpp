#include "matchcast/types.hpp"

#include <charconv>
#include <cstdio>

#include "matchcast/errors.hpp"

namespace matchcast {

std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::homewin: return "homewin";
        case Outcome::draw: return "draw";
        case Outcome::awaywin: return "awaywin";
    }
    return "?";
}

Outcome outcome_from_string(std::string_view s) {
    for (Outcome o : kOutcomes) {
        if (to_string(o) == s) return o;
    }
    throw DataError("unknown outcome '" + std::string(s) + "'");
}

double OutcomeProbs::at(Outcome o) const {
    switch (o) {
        case Outcome::homewin: return home;
        case Outcome::draw: return draw;
        case Outcome::awaywin: return away;
    }
    return 0.0;
}

Outcome OutcomeProbs::argmax() const {
    Outcome best = Outcome::homewin;
    for (Outcome o : kOutcomes) {
        if (at(o) > at(best)) best = o;
    }
    return best;
}

OutcomeProbs OutcomeProbs::normalized(double home, double draw, double away) {
    const double total = home + draw + away;
    if (!(total > 0.0)) return uniform();
    return {home / total, draw / total, away / total};
}

double OddsTriple::at(Outcome o) const {
    switch (o) {
        case Outcome::homewin: return home;
        case Outcome::draw: return draw;
        case Outcome::awaywin: return away;
    }
    return 0.0;
}

namespace {

bool parse_fixed_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
    }
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

Date parse_date(std::string_view s) {
    int y = 0, m = 0, d = 0;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !parse_fixed_int(s.substr(0, 4), y) ||
        !parse_fixed_int(s.substr(5, 2), m) || !parse_fixed_int(s.substr(8, 2), d)) {
        throw DataError("unparsable date '" + std::string(s) + "' (expected YYYY-MM-DD)");
    }
    Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
              std::chrono::day{static_cast<unsigned>(d)}};
    if (!date.ok()) throw DataError("invalid calendar date '" + std::string(s) + "'");
    return date;
}

std::string format_date(Date d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

long days_between(Date a, Date b) {
    return (std::chrono::sys_days{b} - std::chrono::sys_days{a}).count();
}

Outcome MatchRecord::outcome() const {
    if (home_goals > away_goals) return Outcome::homewin;
    if (home_goals == away_goals) return Outcome::draw;
    return Outcome::awaywin;
}

}  // namespace matchcast
