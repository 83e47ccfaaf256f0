#include "molerun/workflow/surrogate.hpp"

#include <cmath>

#include "molerun/support/random.hpp"

namespace molerun::workflow {

using dataflow::Kind;
using dataflow::Prototype;

std::array<double, 3> evaluate_surrogate(const SurrogateParams& p, bool noise) {
  if (!(p.population >= 1 && p.population <= 1000)) throw DomainError("population must lie in [1, 1000]");
  if (!(p.diffusion >= 0 && p.diffusion <= 99)) throw DomainError("diffusion rate must lie in [0, 99]");
  if (!(p.evaporation >= 0 && p.evaporation <= 99)) throw DomainError("evaporation rate must lie in [0, 99]");
  std::array<double, 3> n{1.0, 1.0, 1.0};
  if (noise) {
    Rng rng(stream_seed(static_cast<std::uint64_t>(p.seed), "surrogate"));
    for (auto& x : n) x = rng.uniform(0.9, 1.1);
  }
  const double e = p.evaporation;
  const double d = p.diffusion;
  const double crowd = 1.0 + 50.0 / p.population;
  auto sq = [](double x) { return x * x; };
  return {10.0 * (1.0 + sq(e / 99.0)) * crowd * n[0],
          20.0 * (1.0 + sq((d - 40.0) / 99.0) + sq((e - 50.0) / 99.0)) * crowd * n[1],
          30.0 * (1.0 + sq((99.0 - e) / 99.0)) * crowd * n[2]};
}

dataflow::TaskPtr make_surrogate_task(std::string name, std::vector<Prototype> inputs, std::vector<Prototype> outputs,
                                      dataflow::Context defaults, bool noise, dataflow::Resources resources) {
  const std::array<Kind, 4> in_kinds{Kind::real, Kind::real, Kind::real, Kind::integer};
  if (inputs.size() != 4 || outputs.size() != 3)
    throw DefinitionError("surrogate task " + name + " needs 4 inputs (population, diffusion, evaporation, seed) and 3 outputs");
  for (std::size_t i = 0; i < 4; ++i)
    if (inputs[i].kind() != in_kinds[i])
      throw DefinitionError("surrogate task " + name + ": input " + inputs[i].name() + " has the wrong kind");
  for (const auto& o : outputs)
    if (o.kind() != Kind::real) throw DefinitionError("surrogate task " + name + ": outputs must be real");
  auto kernel = [inputs, outputs, noise](const dataflow::Context& in, const dataflow::ExecutionScope&) {
    SurrogateParams p{in.get<double>(inputs[0]), in.get<double>(inputs[1]), in.get<double>(inputs[2]),
                      in.get<std::int64_t>(inputs[3])};
    const auto food = evaluate_surrogate(p, noise);
    dataflow::Context out;
    for (std::size_t i = 0; i < 3; ++i) out = out.with(outputs[i], dataflow::real(food[i]));
    return out;
  };
  return std::make_shared<const dataflow::Task>(std::move(name), std::move(inputs), std::move(outputs),
                                                std::move(kernel), std::move(defaults), resources);
}

dataflow::TaskPtr make_schaffer_task(std::string name, Prototype x, std::vector<Prototype> outputs,
                                     dataflow::Context defaults, dataflow::Resources resources) {
  if (x.kind() != Kind::real || outputs.size() != 2 || outputs[0].kind() != Kind::real ||
      outputs[1].kind() != Kind::real)
    throw DefinitionError("schaffer task " + name + " needs one real input and two real outputs");
  auto kernel = [x, outputs](const dataflow::Context& in, const dataflow::ExecutionScope&) {
    const double v = in.get<double>(x);
    return dataflow::Context{{outputs[0], dataflow::real(v * v)}, {outputs[1], dataflow::real((v - 2) * (v - 2))}};
  };
  return std::make_shared<const dataflow::Task>(std::move(name), std::vector<Prototype>{x}, std::move(outputs),
                                                std::move(kernel), std::move(defaults), resources);
}

}  // namespace molerun::workflow
