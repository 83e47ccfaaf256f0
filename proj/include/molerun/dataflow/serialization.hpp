#pragma once

#include <json.hpp>

#include "molerun/dataflow/context.hpp"

namespace molerun::dataflow {

/// `{"name": {"kind": "real", "value": "2.5"}, ...}`; values use the
/// canonical text form so reals round-trip exactly (including inf/nan).
nlohmann::json to_json(const Context& context);

/// Throws FormatError on malformed input.
Context context_from_json(const nlohmann::json& json);

}  // namespace molerun::dataflow
