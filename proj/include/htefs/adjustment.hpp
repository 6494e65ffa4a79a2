#pragma once

// Adjustment sets read off a known causal graph (oracle baselines).

#include "htefs/matrix.hpp"
#include "htefs/scm.hpp"

namespace htefs {

enum class AdjustmentMode { Parents, Valid, OSet };

struct AdjustmentResult {
  ColumnSet columns;  // feature-column indices, ascending
  bool empty_causal_path = false;
};

AdjustmentResult oracle_adjustment(const CausalGraph& graph, AdjustmentMode mode);

}  // namespace htefs
