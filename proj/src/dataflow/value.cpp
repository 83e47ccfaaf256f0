#include "molerun/dataflow/value.hpp"

#include <array>
#include <type_traits>
#include <utility>

#include "molerun/support/errors.hpp"
#include "molerun/support/format.hpp"

namespace molerun::dataflow {

namespace {

constexpr std::array<std::pair<Kind, std::string_view>, 6> kKindNames{{
    {Kind::integer, "integer"},
    {Kind::real, "real"},
    {Kind::text, "text"},
    {Kind::boolean, "boolean"},
    {Kind::real_array, "real[]"},
    {Kind::integer_array, "integer[]"},
}};

template <typename T, typename Parse>
std::vector<T> parse_list(std::string_view text, Parse parse) {
  text = trim(text);
  if (text.size() < 2 || text.front() != '[' || text.back() != ']')
    throw FormatError("array value must be enclosed in brackets: '" + std::string(text) + "'");
  text = trim(text.substr(1, text.size() - 2));
  std::vector<T> out;
  if (text.empty()) return out;
  while (true) {
    const auto comma = text.find(',');
    out.push_back(parse(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

double real_or_throw(std::string_view text) {
  if (auto v = parse_real(text)) return *v;
  throw FormatError("not a real number: '" + std::string(trim(text)) + "'");
}

std::int64_t integer_or_throw(std::string_view text) {
  if (auto v = parse_integer(text)) return *v;
  throw FormatError("not an integer: '" + std::string(trim(text)) + "'");
}

}  // namespace

std::string_view to_string(Kind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "?";
}

std::optional<Kind> parse_kind(std::string_view text) {
  for (const auto& [k, name] : kKindNames)
    if (name == text) return k;
  return std::nullopt;
}

std::optional<Kind> array_of(Kind kind) {
  switch (kind) {
    case Kind::real: return Kind::real_array;
    case Kind::integer: return Kind::integer_array;
    default: return std::nullopt;
  }
}

Kind kind_of(const Value& value) { return static_cast<Kind>(value.index()); }

namespace {

template <typename T>
std::string join(const std::vector<T>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_same_v<T, double>) out += format_real(items[i]);
    else out += std::to_string(items[i]);
  }
  return out + "]";
}

}  // namespace

std::string render(const Value& value) {
  struct Renderer {
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_real(v); }
    std::string operator()(const std::string& v) const { return v; }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(const std::vector<double>& v) const { return join(v); }
    std::string operator()(const std::vector<std::int64_t>& v) const { return join(v); }
  };
  return std::visit(Renderer{}, value);
}

Value parse_value(Kind kind, std::string_view raw) {
  switch (kind) {
    case Kind::integer: return integer(integer_or_throw(raw));
    case Kind::real: return real(real_or_throw(raw));
    case Kind::text: return text(std::string(raw));
    case Kind::boolean: {
      const auto t = trim(raw);
      if (t == "true") return boolean(true);
      if (t == "false") return boolean(false);
      throw FormatError("not a boolean: '" + std::string(t) + "'");
    }
    case Kind::real_array: return real_array(parse_list<double>(raw, real_or_throw));
    case Kind::integer_array: return integer_array(parse_list<std::int64_t>(raw, integer_or_throw));
  }
  throw FormatError("unknown kind");
}

Prototype::Prototype(std::string name, Kind kind) : name_(std::move(name)), kind_(kind) {
  if (name_.empty()) throw DefinitionError("prototype name must not be empty");
}

Prototype Prototype::as_array() const {
  const auto k = array_of(kind_);
  if (!k) throw DefinitionError("prototype " + name_ + " of kind " + std::string(to_string(kind_)) +
                                " has no array counterpart");
  return Prototype(name_, *k);
}

std::string describe(const Prototype& proto) {
  return proto.name() + ":" + std::string(to_string(proto.kind()));
}

}  // namespace molerun::dataflow
