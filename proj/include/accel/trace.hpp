#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "accel/types.hpp"

namespace accel {

// One trace row: discrete index k or continuous time t, the function gap,
// a method-specific energy value, the gradient norm, and named check flags.
struct TraceRecord {
  double index = 0.0;
  double f_gap = 0.0;
  double energy = 0.0;
  double grad_norm = 0.0;
  std::map<std::string, bool> flags;

  bool operator==(const TraceRecord&) const = default;
};

struct TraceMeta {
  std::string id;                          // method or flow identifier
  nlohmann::json config;                   // config snapshot
  double delta = 0.0;                      // continuous-time overlay step, t = delta * k
  std::uint64_t seed = 0;
  std::map<std::string, double> scalars;   // R, D_h(x*,x0), sigma, eps, ...
  std::map<std::string, std::string> notes;

  bool operator==(const TraceMeta&) const = default;
};

struct Trace {
  TraceMeta meta;
  std::vector<TraceRecord> records;
  std::vector<Vector> points;  // iterate / state snapshots aligned with records

  bool clean() const {
    for (const auto& r : records)
      for (const auto& [name, ok] : r.flags)
        if (!ok) return false;
    return true;
  }

  // Names of flags that failed anywhere, for diagnostics.
  std::vector<std::string> failed_flags() const;

  double scalar(const std::string& name) const;
  bool has_scalar(const std::string& name) const { return meta.scalars.count(name) > 0; }

  bool operator==(const Trace& other) const;
};

}  // namespace accel
