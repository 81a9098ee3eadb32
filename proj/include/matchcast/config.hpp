#pragma once

#include <cstdint>

#include "matchcast/dixon_coles.hpp"
#include "matchcast/forest.hpp"
#include "matchcast/textfeat.hpp"

namespace matchcast {

struct TextConfig {
    double mu = 1.25;
    text::AllocationParams allocation;
    text::VocabularyParams vocabulary;
};

struct DcConfig {
    double xi = 0.0065;
    int max_goals = 10;
    double rho_min = -0.3;
    double rho_max = 0.3;
    int max_iter = 500;
    double grad_tol = 1e-6;

    dc::FitOptions fit_options(const dc::Params* warm_start = nullptr) const {
        return {xi, rho_min, rho_max, max_iter, grad_tol, warm_start};
    }
};

struct EnsembleConfig {
    int folds = 5;
    int dc_refit_days = 7;     // expanding-window refit cadence for training meta-features
    int min_history = 30;      // matches required before a Dixon-Coles fit is attempted
    bool use_text = true;      // false reproduces the no-text ablation (6 meta-features)
};

struct PipelineConfig {
    TextConfig text;
    DcConfig dc;
    forest::Hyperparams text_forest;
    forest::Hyperparams stacker_forest;
    EnsembleConfig ensemble;
    std::uint64_t seed = 42;

    // Throws ConfigError on out-of-range values.
    void validate() const;
};

}  // namespace matchcast
