#include "accel/trace.hpp"

#include <algorithm>

namespace accel {

std::vector<std::string> Trace::failed_flags() const {
  std::vector<std::string> out;
  for (const auto& r : records)
    for (const auto& [name, ok] : r.flags)
      if (!ok && std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
  return out;
}

double Trace::scalar(const std::string& name) const {
  auto it = meta.scalars.find(name);
  if (it == meta.scalars.end()) throw ConfigError("trace metadata is missing scalar: " + name);
  return it->second;
}

bool Trace::operator==(const Trace& other) const {
  if (!(meta == other.meta) || records != other.records) return false;
  if (points.size() != other.points.size()) return false;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (points[i] != other.points[i]) return false;
  return true;
}

}  // namespace accel
