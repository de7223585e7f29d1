#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ddopt/error.hpp"
#include "ddopt/random.hpp"

namespace ddopt {

/// Local clocks and delay realizations on a global logical clock 0..horizon.
///
/// dual_delays[i][s] is the staleness of the multiplier agent i reads at its slot
/// agent_slots[i][s]. primal_delays[i][s] is the age of agent i's output the
/// coordinator reads at coordinator_slots[s]; the referenced tick is always one of
/// agent i's own slots, so the composite staleness stays within 2 k0.
struct AsyncSchedule {
  int horizon = 0;
  int k0 = 0;
  std::vector<int> coordinator_slots;
  std::vector<std::vector<int>> agent_slots;
  std::vector<std::vector<int>> dual_delays;
  std::vector<std::vector<int>> primal_delays;

  int num_agents() const { return static_cast<int>(agent_slots.size()); }

  bool operator==(const AsyncSchedule&) const = default;
};

struct ScheduleViolation {
  std::string clock;  // "K_D" or "K_<i>"
  int slot = 0;
  std::string bound;
  std::string message;
};

namespace detail {

inline std::vector<int> generate_clock(int horizon, int k0, Rng& rng) {
  const int max_gap = std::max(k0, 1);
  std::vector<int> slots{0};
  for (;;) {
    const int next = slots.back() + uniform_int(rng, 1, max_gap);
    if (next > horizon) break;
    slots.push_back(next);
  }
  return slots;
}

inline bool has_slot(const std::vector<int>& slots, int k) { return std::binary_search(slots.begin(), slots.end(), k); }

}  // namespace detail

/// Clock gaps uniform on {1..max(k0,1)} starting at slot 0; dual delays uniform on
/// {0..min(k0,k)}; primal delays uniform over the agent's slots in [k - k0, k].
/// k0 = 0 gives the synchronous schedule. Same seed, same schedule.
inline AsyncSchedule generate_schedule(int n_agents, int horizon, int k0, std::uint64_t seed) {
  if (horizon < 1) throw ConfigError("schedule horizon must be >= 1");
  if (k0 < 0) throw ConfigError("asynchrony parameter k0 must be nonnegative");
  if (n_agents < 1) throw ConfigError("schedule needs at least one agent");

  Rng rng(seed);
  AsyncSchedule s;
  s.horizon = horizon;
  s.k0 = k0;
  s.coordinator_slots = detail::generate_clock(horizon, k0, rng);
  for (int i = 0; i < n_agents; ++i) s.agent_slots.push_back(detail::generate_clock(horizon, k0, rng));

  for (int i = 0; i < n_agents; ++i) {
    std::vector<int> delays;
    delays.reserve(s.agent_slots[i].size());
    for (int k : s.agent_slots[i]) delays.push_back(uniform_int(rng, 0, std::min(k0, k)));
    s.dual_delays.push_back(std::move(delays));
  }

  for (int i = 0; i < n_agents; ++i) {
    const auto& own = s.agent_slots[i];
    std::vector<int> delays;
    delays.reserve(s.coordinator_slots.size());
    for (int k : s.coordinator_slots) {
      auto first = std::lower_bound(own.begin(), own.end(), std::max(0, k - k0));
      auto last = std::upper_bound(own.begin(), own.end(), k);
      const auto count = static_cast<std::uint64_t>(last - first);
      const int target = *(first + static_cast<std::ptrdiff_t>(uniform_index(rng, count)));
      delays.push_back(k - target);
    }
    s.primal_delays.push_back(std::move(delays));
  }
  return s;
}

/// Empty iff the schedule satisfies bounded asynchrony with parameter k0.
inline std::vector<ScheduleViolation> validate(const AsyncSchedule& s) {
  std::vector<ScheduleViolation> out;
  auto report = [&](std::string clock, int slot, std::string bound, std::string message) {
    out.push_back({std::move(clock), slot, std::move(bound), std::move(message)});
  };
  const int max_gap = std::max(s.k0, 1);

  auto check_clock = [&](const std::string& name, const std::vector<int>& slots) {
    if (slots.empty() || slots.front() != 0) {
      report(name, 0, "slot 0", name + " does not contain slot 0");
      return;
    }
    for (std::size_t j = 1; j < slots.size(); ++j) {
      if (slots[j] <= slots[j - 1])
        report(name, slots[j], "strictly increasing", name + " slots not strictly increasing at " + std::to_string(slots[j]));
      else if (slots[j] - slots[j - 1] > max_gap)
        report(name, slots[j], "gap <= " + std::to_string(max_gap),
               name + " gap " + std::to_string(slots[j] - slots[j - 1]) + " before slot " + std::to_string(slots[j]) +
                   " exceeds " + std::to_string(max_gap));
    }
    if (slots.back() > s.horizon)
      report(name, slots.back(), "slot <= horizon", name + " slot " + std::to_string(slots.back()) + " beyond horizon");
    else if (s.horizon + 1 - slots.back() > max_gap)
      report(name, slots.back(), "gap <= " + std::to_string(max_gap),
             name + " is silent after slot " + std::to_string(slots.back()) + " until the horizon");
  };

  if (s.k0 < 0) report("K_D", 0, "k0 >= 0", "negative asynchrony parameter");
  check_clock("K_D", s.coordinator_slots);
  if (s.dual_delays.size() != s.agent_slots.size() || s.primal_delays.size() != s.agent_slots.size()) {
    report("K_D", 0, "shape", "delay tables do not match the number of agents");
    return out;
  }

  for (int i = 0; i < s.num_agents(); ++i) {
    const std::string name = "K_" + std::to_string(i);
    const auto& slots = s.agent_slots[i];
    check_clock(name, slots);

    const auto& dual = s.dual_delays[i];
    if (dual.size() != slots.size()) {
      report(name, 0, "shape", "agent " + std::to_string(i) + " dual delay count differs from its slot count");
    } else {
      for (std::size_t j = 0; j < slots.size(); ++j) {
        const int k = slots[j];
        const int d = dual[j];
        if (d < 0 || d > s.k0)
          report(name, k, "0 <= delta_d <= " + std::to_string(s.k0),
                 "agent " + std::to_string(i) + " slot " + std::to_string(k) + " dual delay " + std::to_string(d) +
                     " out of range");
        else if (k - d < 0)
          report(name, k, "k - delta_d >= 0",
                 "agent " + std::to_string(i) + " slot " + std::to_string(k) + " reads before iteration 0");
      }
    }

    const auto& primal = s.primal_delays[i];
    if (primal.size() != s.coordinator_slots.size()) {
      report(name, 0, "shape", "agent " + std::to_string(i) + " primal delay count differs from K_D size");
      continue;
    }
    for (std::size_t j = 0; j < primal.size(); ++j) {
      const int k = s.coordinator_slots[j];
      const int d = primal[j];
      if (d < 0 || d > s.k0)
        report(name, k, "0 <= delta_p <= " + std::to_string(s.k0),
               "agent " + std::to_string(i) + " slot " + std::to_string(k) + " primal delay " + std::to_string(d) +
                   " out of range");
      else if (k - d < 0)
        report(name, k, "k - delta_p >= 0",
               "agent " + std::to_string(i) + " slot " + std::to_string(k) + " reads before iteration 0");
      else if (!detail::has_slot(slots, k - d))
        report(name, k, "target in K_i",
               "agent " + std::to_string(i) + " slot " + std::to_string(k) + " reads tick " + std::to_string(k - d) +
                   " where the agent produced nothing");
    }
  }
  return out;
}

// Text trace:
//   ddopt-schedule 1
//   horizon <K>
//   k0 <k0>
//   agents <n>
//   coordinator <slots...>
//   agent <i> slots <...>
//   agent <i> dual_delays <...>
//   agent <i> primal_delays <...>

namespace detail {
inline void write_ints(std::ostream& os, const std::vector<int>& values) {
  for (int v : values) os << ' ' << v;
  os << '\n';
}

inline std::vector<int> read_ints(std::istringstream& line) {
  std::vector<int> values;
  int v;
  while (line >> v) values.push_back(v);
  if (!line.eof()) throw ConfigError("schedule trace: non-integer token");
  return values;
}
}  // namespace detail

inline void write_schedule(std::ostream& os, const AsyncSchedule& s) {
  os << "ddopt-schedule 1\n";
  os << "horizon " << s.horizon << '\n';
  os << "k0 " << s.k0 << '\n';
  os << "agents " << s.num_agents() << '\n';
  os << "coordinator";
  detail::write_ints(os, s.coordinator_slots);
  for (int i = 0; i < s.num_agents(); ++i) {
    os << "agent " << i << " slots";
    detail::write_ints(os, s.agent_slots[i]);
    os << "agent " << i << " dual_delays";
    detail::write_ints(os, s.dual_delays[i]);
    os << "agent " << i << " primal_delays";
    detail::write_ints(os, s.primal_delays[i]);
  }
}

inline AsyncSchedule read_schedule(std::istream& is) {
  AsyncSchedule s;
  std::string text;
  if (!std::getline(is, text) || text != "ddopt-schedule 1") throw ConfigError("schedule trace: bad header");
  int n_agents = -1;
  while (std::getline(is, text)) {
    if (text.empty()) continue;
    std::istringstream line(text);
    std::string key;
    line >> key;
    if (key == "horizon") {
      line >> s.horizon;
    } else if (key == "k0") {
      line >> s.k0;
    } else if (key == "agents") {
      line >> n_agents;
      if (!line || n_agents < 0) throw ConfigError("schedule trace: bad agent count");
      s.agent_slots.resize(n_agents);
      s.dual_delays.resize(n_agents);
      s.primal_delays.resize(n_agents);
    } else if (key == "coordinator") {
      s.coordinator_slots = detail::read_ints(line);
    } else if (key == "agent") {
      int i;
      std::string field;
      line >> i >> field;
      if (!line || i < 0 || i >= n_agents) throw ConfigError("schedule trace: bad agent line '" + text + "'");
      auto values = detail::read_ints(line);
      if (field == "slots")
        s.agent_slots[i] = std::move(values);
      else if (field == "dual_delays")
        s.dual_delays[i] = std::move(values);
      else if (field == "primal_delays")
        s.primal_delays[i] = std::move(values);
      else
        throw ConfigError("schedule trace: unknown agent field '" + field + "'");
    } else {
      throw ConfigError("schedule trace: unknown key '" + key + "'");
    }
    if (line.fail() && !line.eof()) throw ConfigError("schedule trace: malformed line '" + text + "'");
  }
  if (n_agents < 0) throw ConfigError("schedule trace: missing agent count");
  return s;
}

}  // namespace ddopt
