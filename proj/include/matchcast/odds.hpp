#pragma once

#include "matchcast/types.hpp"

namespace matchcast::odds {

// Probability below which an actual outcome counts as a longshot (strict).
inline constexpr double kLongshotThreshold = 0.20;

// Throws DataError unless every price exceeds 1.
void validate(const OddsTriple& odds);

// Reciprocal prices rescaled to sum to one (proportional overround removal).
OutcomeProbs implied_probs(const OddsTriple& odds);

// Sum of reciprocal prices; 1 for a fair book.
double overround(const OddsTriple& odds);

// Outcome with the shortest price, ties broken homewin < draw < awaywin.
Outcome favourite_pick(const OddsTriple& odds);

bool is_longshot(const OutcomeProbs& implied, Outcome actual);
bool is_longshot(const OddsTriple& odds, Outcome actual);

}  // namespace matchcast::odds
