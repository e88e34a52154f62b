#pragma once

#include <cstdint>
#include <vector>

#include "graml/env.hpp"

namespace graml::detail {

// Flattened transition table so inner learning and search loops avoid the
// checked GridEnv::step path. Semantics match GridEnv::move.
struct Dynamics {
  std::vector<std::uint32_t> next;  // cell * 4 + action -> cell
  std::vector<std::uint8_t> lava;
  std::vector<std::uint32_t> open;

  explicit Dynamics(const GridEnv& env) {
    next.resize(env.num_cells() * kNumActions);
    lava.resize(env.num_cells());
    for (std::size_t c = 0; c < env.num_cells(); ++c) {
      const State s = env.state_at(c);
      lava[c] = env.is_lava(s) ? 1 : 0;
      for (Action a : kAllActions) {
        next[c * kNumActions + index_of(a)] =
            static_cast<std::uint32_t>(env.index(env.move(s, a)));
      }
      if (env.is_open(s)) open.push_back(static_cast<std::uint32_t>(c));
    }
  }
};

}  // namespace graml::detail
