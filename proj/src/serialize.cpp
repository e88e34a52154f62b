#include "graml/serialize.hpp"

#include <string>

#include "graml/error.hpp"

namespace graml {

Json to_json(State s) { return Json::array({s.x, s.y}); }

State state_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2) fail(ErrorKind::Parse, "state must be [x, y]: " + j.dump());
  return {j[0].get<int>(), j[1].get<int>()};
}

Json to_json(const Trace& trace) {
  Json obs = Json::array();
  for (const auto& o : trace.observations) {
    obs.push_back(Json::array({o.state.x, o.state.y, index_of(o.action)}));
  }
  Json j = {{"observations", std::move(obs)},
            {"mask", to_string(trace.mask_kind)},
            {"ratio", trace.observed_ratio}};
  j["goal"] = trace.goal ? to_json(*trace.goal) : Json(nullptr);
  if (!trace.kept.empty()) j["kept"] = trace.kept;
  return j;
}

Trace trace_from_json(const Json& j) {
  try {
    Trace t;
    for (const auto& o : j.at("observations")) {
      if (!o.is_array() || o.size() != 3) fail(ErrorKind::Parse, "observation must be [x, y, a]");
      const int a = o[2].get<int>();
      if (a < 0 || a >= static_cast<int>(kNumActions)) fail(ErrorKind::Parse, "action index out of range");
      t.observations.push_back({{o[0].get<int>(), o[1].get<int>()}, action_from_index(a)});
    }
    if (j.contains("goal") && !j["goal"].is_null()) t.goal = state_from_json(j["goal"]);
    if (j.contains("mask")) t.mask_kind = mask_kind_from_string(j["mask"].get<std::string>());
    if (j.contains("ratio")) t.observed_ratio = j["ratio"].get<double>();
    if (j.contains("kept")) t.kept = j["kept"].get<std::vector<std::uint32_t>>();
    return t;
  } catch (const Json::exception& e) {
    fail(ErrorKind::Parse, std::string("malformed trace: ") + e.what());
  }
}

}  // namespace graml
