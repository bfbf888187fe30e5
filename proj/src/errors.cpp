#include "flexgrid/errors.hpp"

namespace flexgrid {

NonConvergenceError::NonConvergenceError(const std::string& what, double last_mismatch,
                                         int iterations)
    : ComputationError(what), last_mismatch_(last_mismatch), iterations_(iterations) {}

IllConditionedError::IllConditionedError(const std::string& what, double condition_number)
    : ComputationError(what), condition_number_(condition_number) {}

}  // namespace flexgrid
