#pragma once

#include <array>
#include <cstdint>

#include "molerun/dataflow/task.hpp"

namespace molerun::workflow {

/// Parameters of the ant-foraging surrogate; defaults are those of the
/// original NetLogo setup.
struct SurrogateParams {
  double population = 125.0;  // [1, 1000]
  double diffusion = 50.0;    // [0, 99]
  double evaporation = 50.0;  // [0, 99]
  std::int64_t seed = 42;
};

/// Ticks until each of the three food sources is emptied. Noise factors are
/// drawn uniformly in [0.9, 1.1] from a stream keyed by the seed; without
/// noise they are 1. Throws DomainError outside the parameter bounds.
std::array<double, 3> evaluate_surrogate(const SurrogateParams& params, bool noise = true);

/// Task with inputs (population, diffusion, evaporation, seed) and outputs
/// (food1, food2, food3), bound positionally to the given prototypes.
dataflow::TaskPtr make_surrogate_task(std::string name, std::vector<dataflow::Prototype> inputs,
                                      std::vector<dataflow::Prototype> outputs, dataflow::Context defaults,
                                      bool noise, dataflow::Resources resources = {});

/// Two-objective test problem: (x², (x−2)²).
dataflow::TaskPtr make_schaffer_task(std::string name, dataflow::Prototype x, std::vector<dataflow::Prototype> outputs,
                                     dataflow::Context defaults = {}, dataflow::Resources resources = {});

}  // namespace molerun::workflow
