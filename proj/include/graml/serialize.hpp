#pragma once

#include <json.hpp>

#include "graml/env.hpp"
#include "graml/trace.hpp"

namespace graml {

using Json = nlohmann::json;

// States are [x, y]; observations are [x, y, action-index].
Json to_json(State s);
State state_from_json(const Json& j);
Json to_json(const Trace& trace);
Trace trace_from_json(const Json& j);

}  // namespace graml
