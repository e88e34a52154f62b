#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "graml/env.hpp"

namespace graml {

struct Observation {
  State state;
  Action action = Action::Up;

  friend bool operator==(const Observation&, const Observation&) = default;
};

enum class MaskKind { Full, Consecutive, NonConsecutive };

std::string_view to_string(MaskKind kind);
MaskKind mask_kind_from_string(std::string_view name);

// Ordered state-action observations. Masked traces remember which positions
// of their unmasked source survived in `kept` (empty for an unmasked trace).
struct Trace {
  std::vector<Observation> observations;
  std::optional<State> goal;
  MaskKind mask_kind = MaskKind::Full;
  double observed_ratio = 1.0;
  std::vector<std::uint32_t> kept;

  std::size_t size() const { return observations.size(); }
  bool empty() const { return observations.empty(); }
};

std::vector<State> states_of(const Trace& trace);

// First `n` observations (the whole trace when n >= size). Masking metadata
// is carried over unchanged.
Trace prefix(const Trace& trace, std::size_t n);

// Replays the actions from the first observed state and checks that every
// recorded state matches and that the final action lands on `goal`.
bool reaches_goal(const GridEnv& env, const Trace& trace, State goal);

}  // namespace graml
