#ifndef STOCHINT_STOCHINT_HPP_
#define STOCHINT_STOCHINT_HPP_

#include "stochint/basis.hpp"
#include "stochint/boosting.hpp"
#include "stochint/dataset.hpp"
#include "stochint/dataset_io.hpp"
#include "stochint/error.hpp"
#include "stochint/experiment.hpp"
#include "stochint/generators.hpp"
#include "stochint/gesio.hpp"
#include "stochint/linear.hpp"
#include "stochint/nuisance.hpp"
#include "stochint/outcome.hpp"
#include "stochint/propensity.hpp"
#include "stochint/random.hpp"
#include "stochint/report.hpp"
#include "stochint/sie.hpp"

#endif  // STOCHINT_STOCHINT_HPP_
