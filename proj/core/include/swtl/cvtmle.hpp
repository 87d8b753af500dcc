#pragma once

#include "swtl/tmle.hpp"

namespace swtl {

/// Cluster-level cross-validated TMLE: fold-specific nuisance training,
/// per-fold fluctuation on out-of-fold predictions, pooled point estimate,
/// out-of-fold cluster EIC.  V = 0 applies the default fold rule
/// (V = J when J < 20, else 10).  Degenerate validation folds (no complete
/// cases in one arm) are merged into their successor with a warning.
TmleFit cv_tmle(const TrialDataset& data, const EstimatorConfig& config, int V, Rng rng);

}  // namespace swtl
