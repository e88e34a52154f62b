#include "graml/trace.hpp"

#include <algorithm>
#include <string>

#include "graml/error.hpp"

namespace graml {

std::string_view to_string(MaskKind kind) {
  switch (kind) {
    case MaskKind::Full: return "full";
    case MaskKind::Consecutive: return "consecutive";
    case MaskKind::NonConsecutive: return "nonconsecutive";
  }
  return "?";
}

MaskKind mask_kind_from_string(std::string_view name) {
  if (name == "full") return MaskKind::Full;
  if (name == "consecutive") return MaskKind::Consecutive;
  if (name == "nonconsecutive") return MaskKind::NonConsecutive;
  fail(ErrorKind::Parse, "unknown mask kind '" + std::string(name) + "'");
}

std::vector<State> states_of(const Trace& trace) {
  std::vector<State> out;
  out.reserve(trace.size());
  for (const auto& o : trace.observations) out.push_back(o.state);
  return out;
}

Trace prefix(const Trace& trace, std::size_t n) {
  Trace out = trace;
  if (n < out.observations.size()) {
    out.observations.resize(n);
    if (!out.kept.empty()) out.kept.resize(n);
  }
  return out;
}

bool reaches_goal(const GridEnv& env, const Trace& trace, State goal) {
  if (trace.empty()) return false;
  State s = trace.observations.front().state;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& o = trace.observations[i];
    if (o.state != s || !env.is_valid(s)) return false;
    const auto r = env.step(s, o.action, goal, 0);
    const bool last = i + 1 == trace.size();
    if (last) return r.done_reason == DoneReason::GoalReached;
    if (r.done) return false;
    s = r.next_state;
  }
  return false;
}

}  // namespace graml
