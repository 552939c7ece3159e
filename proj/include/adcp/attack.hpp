#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "adcp/eot.hpp"
#include "adcp/image.hpp"
#include "adcp/oracle.hpp"
#include "adcp/patch_model.hpp"
#include "adcp/pso.hpp"

namespace adcp {

/// Swarm hyperparameters plus the search box over patch parameters.
struct SwarmConfig : SwarmOptions {
  PatchBounds bounds = default_patch_bounds();
};

nlohmann::json to_json(const SwarmOptions& options);
SwarmOptions swarm_options_from_json(const nlohmann::json& j, const SwarmOptions& base = {});

struct AttackOutcome {
  bool success = false;
  PatchParams theta;  // the fooling parameters, or the best found
  double best_fitness = 0.0;
  std::size_t queries = 0;
  std::size_t evaluations = 0;
  int iterations_used = 0;
  std::vector<double> fitness_trace;
};

nlohmann::json to_json(const AttackOutcome& outcome);

/// An oracle failure in the middle of an attack; `partial` holds the state
/// reached so far and `queries` the oracle calls completed.
class AttackAborted : public OracleError {
 public:
  AttackAborted(const OracleError& cause, AttackOutcome partial);
  AttackOutcome partial;
};

/// Black-box patch search.
///
/// The swarm minimizes the EOT mean objectness of the composited image and
/// returns as soon as one candidate fools the detector on every sampled
/// variant. Evaluation (particle i, iteration j) draws its transforms from a
/// stream derived from (cfg.seed, j, i), and particle i is evaluated on pool
/// slot i % pool.size(), so the search is identical for any pool size. With
/// more than one slot, an early exit also charges the queries of the rest of
/// the in-flight batch.
AttackOutcome run_attack(const Image& image, const GroundTruth& truth, const OraclePool& pool,
                         const EotConfig& eot, const SwarmConfig& cfg);

AttackOutcome run_attack(const Image& image, const GroundTruth& truth, DetectorOracle& oracle,
                         const EotConfig& eot, const SwarmConfig& cfg);

/// Writes "iteration,gbest_fitness" rows.
void write_fitness_trace_csv(std::ostream& out, const std::vector<double>& trace);

}  // namespace adcp
