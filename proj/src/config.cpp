#include "matchcast/config.hpp"

#include "matchcast/errors.hpp"

namespace matchcast {

void PipelineConfig::validate() const {
    if (!(text.mu > 0)) throw ConfigError("mu must be positive");
    if (!(text.allocation.theta > 0.5 && text.allocation.theta <= 1.0)) {
        throw ConfigError("theta must lie in (0.5, 1]");
    }
    if (text.vocabulary.min_df < 1) throw ConfigError("min_df must be at least 1");
    if (!(text.vocabulary.max_df > 0 && text.vocabulary.max_df <= 1.0)) throw ConfigError("max_df must lie in (0, 1]");
    if (dc.xi < 0) throw ConfigError("xi must be non-negative");
    if (dc.max_goals < 5) throw ConfigError("max_goals must be at least 5");
    if (!(dc.rho_min < dc.rho_max)) throw ConfigError("rho_min must be below rho_max");
    if (dc.max_iter < 1) throw ConfigError("max_iter must be positive");
    for (const auto* f : {&text_forest, &stacker_forest}) {
        if (f->n_trees < 1 || f->min_leaf < 1 || f->max_depth < 0 || f->mtry < 0) {
            throw ConfigError("forest settings must be positive (max_depth/mtry may be 0 for automatic)");
        }
    }
    if (ensemble.folds < 2) throw ConfigError("ensemble folds must be at least 2");
    if (ensemble.dc_refit_days < 1) throw ConfigError("dc_refit_days must be positive");
    if (ensemble.min_history < 1) throw ConfigError("min_history must be positive");
}

}  // namespace matchcast
