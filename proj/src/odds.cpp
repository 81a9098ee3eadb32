#include "matchcast/odds.hpp"

#include "matchcast/errors.hpp"
#include "matchcast/io.hpp"

namespace matchcast::odds {

void validate(const OddsTriple& odds) {
    for (Outcome o : kOutcomes) {
        if (!(odds.at(o) > 1.0)) {
            throw DataError("decimal odds must exceed 1 (got " + io::format_double(odds.at(o)) + " for " +
                            std::string(to_string(o)) + ")");
        }
    }
}

OutcomeProbs implied_probs(const OddsTriple& odds) {
    validate(odds);
    return OutcomeProbs::normalized(1.0 / odds.home, 1.0 / odds.draw, 1.0 / odds.away);
}

double overround(const OddsTriple& odds) {
    validate(odds);
    return 1.0 / odds.home + 1.0 / odds.draw + 1.0 / odds.away;
}

Outcome favourite_pick(const OddsTriple& odds) {
    // Shortest price is the largest implied probability.
    return implied_probs(odds).argmax();
}

bool is_longshot(const OutcomeProbs& implied, Outcome actual) {
    return implied.at(actual) < kLongshotThreshold;
}

bool is_longshot(const OddsTriple& odds, Outcome actual) {
    return is_longshot(implied_probs(odds), actual);
}

}  // namespace matchcast::odds
