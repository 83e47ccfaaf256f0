#include "molerun/dataflow/hooks.hpp"

#include <fstream>
#include <memory>

#include "molerun/support/format.hpp"

namespace molerun::dataflow {

std::mutex& PathLocks::lock_for(const std::filesystem::path& path) {
  std::lock_guard guard(guard_);
  auto& slot = locks_[std::filesystem::weakly_canonical(path).string()];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

PathLocks& global_path_locks() {
  static PathLocks locks;
  return locks;
}

std::string render_to_string(const ToStringHook& hook, const Context& context) {
  std::string out;
  for (const auto& proto : hook.prototypes) {
    const Value* v = context.find(proto);
    if (!v) throw LookupError("to-string hook: prototype " + proto.name() + " is not bound");
    if (!out.empty()) out += ',';
    out += proto.name() + "=" + render(*v);
  }
  return out;
}

std::string render_template(std::string_view format, const Context& context) {
  std::string out;
  std::size_t pos = 0;
  while (pos < format.size()) {
    const auto open = format.find("${", pos);
    if (open == std::string_view::npos) {
      out.append(format.substr(pos));
      break;
    }
    out.append(format.substr(pos, open - pos));
    const auto close = format.find('}', open + 2);
    if (close == std::string_view::npos) throw FormatError("unclosed placeholder in '" + std::string(format) + "'");
    const std::string name(format.substr(open + 2, close - open - 2));
    const Value* v = context.find_name(name);
    if (!v) throw LookupError("placeholder ${" + name + "} is not bound");
    out += render(*v);
    pos = close + 1;
  }
  return out;
}

namespace {

const std::vector<double>& real_column(const Context& context, const std::string& name) {
  const Value* v = context.find(Prototype(name, Kind::real_array));
  if (!v) throw LookupError("save-population hook: " + name + " is not bound to a real array");
  return std::get<std::vector<double>>(*v);
}

}  // namespace

std::string render_population_csv(const SavePopulationHook& hook, const Context& context) {
  const Value* generation = context.find(Prototype("generation", Kind::integer));
  if (!generation) throw LookupError("save-population hook: generation is not bound");
  const Value* evaluations = context.find(Prototype("evaluations", Kind::integer_array));
  if (!evaluations) throw LookupError("save-population hook: evaluations is not bound");
  const auto& evals = std::get<std::vector<std::int64_t>>(*evaluations);

  std::vector<const std::vector<double>*> columns;
  for (const auto& name : hook.genes) columns.push_back(&real_column(context, name));
  for (const auto& name : hook.objectives) columns.push_back(&real_column(context, name));
  for (const auto* column : columns)
    if (column->size() != evals.size()) throw DomainError("save-population hook: ragged population columns");

  std::string out = "generation";
  for (const auto& name : hook.genes) out += "," + name;
  for (const auto& name : hook.objectives) out += "," + name;
  out += ",evaluations\n";
  const std::string gen = std::to_string(std::get<std::int64_t>(*generation));
  for (std::size_t row = 0; row < evals.size(); ++row) {
    out += gen;
    for (const auto* column : columns) out += "," + format_real((*column)[row]);
    out += "," + std::to_string(evals[row]) + "\n";
  }
  return out;
}

std::filesystem::path population_file(const SavePopulationHook& hook, const std::filesystem::path& root,
                                      std::int64_t generation) {
  std::filesystem::path dir(hook.directory);
  // hook outputs always live under the run directory
  dir = root / dir.relative_path();
  return dir / ("population" + std::to_string(generation) + ".csv");
}

HookEffect fire_hook(const Hook& hook, const Context& context, const HookSink& sink, const std::string& job) {
  HookEffect effect{hook.capsule, std::string(hook_kind(hook.action)), job, {}, {}, std::nullopt};
  try {
    if (const auto* h = std::get_if<ToStringHook>(&hook.action)) {
      effect.text = render_to_string(*h, context);
      if (sink.log) sink.log(effect.text);
    } else if (const auto* h = std::get_if<DisplayHook>(&hook.action)) {
      effect.text = render_template(h->format, context);
      if (sink.log) sink.log(effect.text);
    } else {
      const auto& save = std::get<SavePopulationHook>(hook.action);
      const std::string csv = render_population_csv(save, context);
      const auto generation = context.get<std::int64_t>(Prototype("generation", Kind::integer));
      effect.file = population_file(save, sink.output_root, generation);
      std::filesystem::create_directories(effect.file.parent_path());
      std::lock_guard guard(global_path_locks().lock_for(effect.file));
      std::ofstream os(effect.file, std::ios::binary | std::ios::trunc);
      os << csv;
      if (!os) throw Error("cannot write " + effect.file.string());
    }
  } catch (const std::exception& e) {
    effect.error = e.what();
  }
  return effect;
}

}  // namespace molerun::dataflow
