#include "molerun/dataflow/serialization.hpp"

#include "molerun/support/errors.hpp"

namespace molerun::dataflow {

nlohmann::json to_json(const Context& context) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& proto : context.prototypes())
    out[proto.name()] = {{"kind", std::string(to_string(proto.kind()))}, {"value", render(context.at(proto))}};
  return out;
}

Context context_from_json(const nlohmann::json& json) {
  if (!json.is_object()) throw FormatError("context must be a JSON object");
  Context out;
  for (const auto& [name, entry] : json.items()) {
    if (!entry.is_object() || !entry.contains("kind") || !entry.contains("value"))
      throw FormatError("malformed binding for " + name);
    const auto kind = parse_kind(entry["kind"].get<std::string>());
    if (!kind) throw FormatError("unknown kind for " + name);
    out = out.with(Prototype(name, *kind), parse_value(*kind, entry["value"].get<std::string>()));
  }
  return out;
}

}  // namespace molerun::dataflow
