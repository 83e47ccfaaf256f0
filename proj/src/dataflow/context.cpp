#include "molerun/dataflow/context.hpp"

#include "molerun/support/errors.hpp"

namespace molerun::dataflow {

Context::Context(std::initializer_list<std::pair<Prototype, Value>> bindings) {
  for (const auto& [proto, value] : bindings) *this = with(proto, value);
}

Context Context::with(const Prototype& proto, Value value) const {
  if (kind_of(value) != proto.kind())
    throw DomainError("value of kind " + std::string(dataflow::to_string(kind_of(value))) +
                      " cannot bind " + describe(proto));
  Context out = *this;
  out.bindings_.insert_or_assign(proto.name(), Binding{proto.kind(), std::move(value)});
  return out;
}

Context Context::merged(const Context& overrides) const {
  Context out = *this;
  for (const auto& [name, binding] : overrides.bindings_) out.bindings_.insert_or_assign(name, binding);
  return out;
}

Context Context::restricted_to(std::span<const Prototype> protos) const {
  Context out;
  for (const auto& proto : protos)
    if (const auto it = bindings_.find(proto.name()); it != bindings_.end() && it->second.kind == proto.kind())
      out.bindings_.insert_or_assign(proto.name(), it->second);
  return out;
}

Context Context::without(const std::string& name) const {
  Context out = *this;
  out.bindings_.erase(name);
  return out;
}

bool Context::contains(const Prototype& proto) const { return find(proto) != nullptr; }

const Value* Context::find(const Prototype& proto) const {
  const auto it = bindings_.find(proto.name());
  if (it == bindings_.end() || it->second.kind != proto.kind()) return nullptr;
  return &it->second.value;
}

const Value* Context::find_name(const std::string& name) const {
  const auto it = bindings_.find(name);
  return it == bindings_.end() ? nullptr : &it->second.value;
}

const Value& Context::at(const Prototype& proto) const {
  if (const auto* v = find(proto)) return *v;
  throw LookupError("prototype " + describe(proto) + " is not bound");
}

std::vector<Prototype> Context::prototypes() const {
  std::vector<Prototype> out;
  out.reserve(bindings_.size());
  for (const auto& [name, binding] : bindings_) out.emplace_back(name, binding.kind);
  return out;
}

std::uint64_t Context::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  };
  for (const auto& [name, binding] : bindings_) {
    feed(name);
    feed(dataflow::to_string(binding.kind));
    feed(render(binding.value));
  }
  return h;
}

std::string Context::to_string() const {
  std::string out;
  for (const auto& [name, binding] : bindings_) {
    if (!out.empty()) out += ',';
    out += name + "=" + render(binding.value);
  }
  return out;
}

}  // namespace molerun::dataflow
