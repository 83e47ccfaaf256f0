#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace molerun::dataflow {

/// Closed set of value kinds that may flow between tasks.
enum class Kind { integer, real, text, boolean, real_array, integer_array };

std::string_view to_string(Kind kind);
std::optional<Kind> parse_kind(std::string_view text);

/// Array counterpart of a scalar numeric kind, used when aggregation collects
/// the outputs of sibling branches.
std::optional<Kind> array_of(Kind kind);

/// Alternative order matches Kind.
using Value = std::variant<std::int64_t, double, std::string, bool, std::vector<double>,
                           std::vector<std::int64_t>>;

Kind kind_of(const Value& value);

inline Value integer(std::int64_t v) { return Value{std::in_place_index<0>, v}; }
inline Value real(double v) { return Value{std::in_place_index<1>, v}; }
inline Value text(std::string v) { return Value{std::in_place_index<2>, std::move(v)}; }
inline Value boolean(bool v) { return Value{std::in_place_index<3>, v}; }
inline Value real_array(std::vector<double> v) { return Value{std::in_place_index<4>, std::move(v)}; }
inline Value integer_array(std::vector<std::int64_t> v) {
  return Value{std::in_place_index<5>, std::move(v)};
}

/// Canonical text form: reals in shortest round-trip decimal, booleans as
/// true/false, arrays as comma-separated elements in brackets.
std::string render(const Value& value);

/// Parses the canonical text form of a value of the given kind. Integers are
/// accepted where a real is expected. Throws FormatError.
Value parse_value(Kind kind, std::string_view text);

/// A typed, named variable slot. Two prototypes are interchangeable iff both
/// name and kind match.
class Prototype {
 public:
  Prototype(std::string name, Kind kind);

  const std::string& name() const { return name_; }
  Kind kind() const { return kind_; }

  /// The array-valued prototype with the same name.
  Prototype as_array() const;

  friend bool operator==(const Prototype&, const Prototype&) = default;
  friend auto operator<=>(const Prototype&, const Prototype&) = default;

 private:
  std::string name_;
  Kind kind_;
};

std::string describe(const Prototype& proto);

}  // namespace molerun::dataflow
