#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "molerun/dataflow/value.hpp"

namespace molerun::dataflow {

/// Immutable binding of prototypes to values of matching kind.
///
/// Bindings are keyed by prototype name; binding a name again replaces the
/// previous binding, whatever its kind. Every derivation returns a new
/// context, the receiver is never modified.
class Context {
 public:
  Context() = default;
  Context(std::initializer_list<std::pair<Prototype, Value>> bindings);

  /// Throws DomainError when the value kind differs from the prototype kind.
  [[nodiscard]] Context with(const Prototype& proto, Value value) const;

  /// Bindings of `overrides` shadow ours.
  [[nodiscard]] Context merged(const Context& overrides) const;

  /// Keeps only the bindings matching the given prototypes (name and kind).
  [[nodiscard]] Context restricted_to(std::span<const Prototype> protos) const;

  [[nodiscard]] Context without(const std::string& name) const;

  bool contains(const Prototype& proto) const;
  bool contains_name(const std::string& name) const { return bindings_.count(name) != 0; }

  /// nullptr if unbound or bound with another kind.
  const Value* find(const Prototype& proto) const;
  const Value* find_name(const std::string& name) const;

  /// Throws LookupError if unbound.
  const Value& at(const Prototype& proto) const;

  template <typename T>
  const T& get(const Prototype& proto) const {
    return std::get<T>(at(proto));
  }

  std::vector<Prototype> prototypes() const;
  std::size_t size() const { return bindings_.size(); }
  bool empty() const { return bindings_.empty(); }

  /// Stable content hash (FNV-1a over the canonical rendering).
  std::uint64_t hash() const;

  /// "name=value" pairs in name order; diagnostic only.
  std::string to_string() const;

  friend bool operator==(const Context&, const Context&) = default;

  auto begin() const { return bindings_.begin(); }
  auto end() const { return bindings_.end(); }

 private:
  struct Binding {
    Kind kind;
    Value value;
    friend bool operator==(const Binding&, const Binding&) = default;
  };
  std::map<std::string, Binding> bindings_;

 public:
  using value_type = decltype(bindings_)::value_type;
};

}  // namespace molerun::dataflow
