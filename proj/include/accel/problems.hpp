#pragma once

#include <cstdint>
#include <memory>
#include <utility>

#include "json.hpp"

#include "accel/oracle.hpp"

namespace accel {

// Serializable problem descriptor: {"kind": ..., "dim": n, "seed": s, "params": {...}}.
struct ProblemSpec {
  std::string kind;
  int dim = 2;
  std::uint64_t seed = 0;
  nlohmann::json params = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const ProblemSpec& s);
void from_json(const nlohmann::json& j, ProblemSpec& s);

// Builds a catalogue oracle together with its start point.
// Kinds: "quadratic", "logsumexp", "ppower", "ppower-plus-quadratic".
std::pair<ObjectiveOracle, Vector> make_problem(const ProblemSpec& spec);

// Serializable generator descriptor: {"kind": ..., "dim": n, "params": {...}}.
struct GeneratorSpec {
  std::string kind;
  int dim = 2;
  nlohmann::json params = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const GeneratorSpec& s);
void from_json(const nlohmann::json& j, GeneratorSpec& s);

// Kinds: "euclidean", "ppower" (params p, x0), "entropy".
DistanceGenerator make_generator(const GeneratorSpec& spec);

// Convenience: the p-th power generator (1/p)||x - x0||^p.
DistanceGenerator ppower_generator(int p, const Vector& x0);
DistanceGenerator euclidean_generator(int dim);

// Oracle evaluation counters, shared by a counting wrapper.
struct OracleCallCounts {
  long value = 0;
  long gradient = 0;
  long hessian_vec = 0;
  long third = 0;
  long total() const { return value + gradient + hessian_vec + third; }
};

ObjectiveOracle with_counting(const ObjectiveOracle& f, std::shared_ptr<OracleCallCounts> counts);

}  // namespace accel
