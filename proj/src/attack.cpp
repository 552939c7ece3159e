#include "adcp/attack.hpp"

#include <atomic>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "adcp/compositor.hpp"

namespace adcp {
namespace {

// Salt separating transform streams from particle initialization streams.
constexpr std::uint64_t kTransformStreamSalt = 0x454f54ULL;

std::uint64_t transform_seed(std::uint64_t seed, int iteration, std::size_t particle) {
  return derive_seed(derive_seed(derive_seed(seed, kTransformStreamSalt),
                                 static_cast<std::uint64_t>(iteration)),
                     particle);
}

}  // namespace

nlohmann::json to_json(const SwarmOptions& o) {
  return {{"population", o.population},
          {"step_max", o.step_max},
          {"inertia", o.inertia},
          {"cognitive", o.cognitive},
          {"cognitive_rand", o.cognitive_rand},
          {"social", o.social},
          {"social_rand", o.social_rand},
          {"v_max_frac", o.v_max_frac},
          {"resample_coefficients", o.resample_coefficients},
          {"seed", o.seed}};
}

SwarmOptions swarm_options_from_json(const nlohmann::json& j, const SwarmOptions& base) {
  if (!j.is_object()) throw std::invalid_argument("swarm: expected a table");
  SwarmOptions o = base;
  auto integer = [&](const char* key, auto& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number_integer()) throw std::invalid_argument(std::string("swarm: '") + key + "' must be an integer");
    out = j.at(key).get<std::decay_t<decltype(out)>>();
  };
  auto number = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number()) throw std::invalid_argument(std::string("swarm: '") + key + "' must be a number");
    out = j.at(key).get<double>();
  };
  integer("population", o.population);
  integer("step_max", o.step_max);
  integer("seed", o.seed);
  number("inertia", o.inertia);
  number("cognitive", o.cognitive);
  number("cognitive_rand", o.cognitive_rand);
  number("social", o.social);
  number("social_rand", o.social_rand);
  number("v_max_frac", o.v_max_frac);
  if (j.contains("resample_coefficients")) {
    if (!j.at("resample_coefficients").is_boolean()) throw std::invalid_argument("swarm: 'resample_coefficients' must be a boolean");
    o.resample_coefficients = j.at("resample_coefficients").get<bool>();
  }
  o.validate();
  return o;
}

nlohmann::json to_json(const AttackOutcome& outcome) {
  return {{"success", outcome.success},
          {"theta", to_json(outcome.theta)},
          {"best_fitness", outcome.best_fitness},
          {"queries", outcome.queries},
          {"evaluations", outcome.evaluations},
          {"iterations_used", outcome.iterations_used},
          {"fitness_trace", outcome.fitness_trace}};
}

AttackAborted::AttackAborted(const OracleError& cause, AttackOutcome partial_outcome)
    : OracleError(cause.what()), partial(std::move(partial_outcome)) {
  queries = partial.queries;
}

AttackOutcome run_attack(const Image& image, const GroundTruth& truth, const OraclePool& pool,
                         const EotConfig& eot, const SwarmConfig& cfg) {
  if (image.empty()) throw std::invalid_argument("attack: empty image");
  eot.validate();
  const int labels = pool[0].label_space();
  if (labels > 0 && (truth.class_id < 0 || truth.class_id >= labels)) {
    throw std::invalid_argument("attack: class " + std::to_string(truth.class_id) +
                                " outside the oracle's label space of " + std::to_string(labels));
  }

  std::atomic<std::size_t> queries{0};
  auto evaluate = [&](std::size_t particle, int iteration, const FlatVector& position) {
    SeededRandom rng(transform_seed(cfg.seed, iteration, particle));
    try {
      const EotEstimate est = expected_loss(image, decode(position), pool[particle % pool.size()],
                                            truth, eot, rng);
      queries += est.queries;
      return Evaluation<double>{est.mean_loss, est.success};
    } catch (const OracleError& e) {
      queries += e.queries;
      throw;
    }
  };

  ParticleSwarm<double, kPatchDims> swarm(cfg, cfg.bounds);
  AttackOutcome outcome;
  try {
    const auto result = swarm.minimize(evaluate, pool.size());
    outcome.success = result.stopped;
    outcome.theta = decode(result.position);
    outcome.best_fitness = result.fitness;
    outcome.evaluations = result.evaluations;
    outcome.iterations_used = result.iterations;
    outcome.fitness_trace = result.trace;
  } catch (const OracleError& e) {
    outcome.success = false;
    outcome.theta = decode(swarm.global_best());
    outcome.best_fitness = swarm.global_best_fitness();
    outcome.evaluations = swarm.evaluations();
    outcome.iterations_used = static_cast<int>(swarm.trace().size());
    outcome.fitness_trace = swarm.trace();
    outcome.queries = queries.load();
    throw AttackAborted(e, std::move(outcome));
  }
  outcome.queries = queries.load();
  return outcome;
}

AttackOutcome run_attack(const Image& image, const GroundTruth& truth, DetectorOracle& oracle,
                         const EotConfig& eot, const SwarmConfig& cfg) {
  // Non-owning handle: the caller keeps `oracle` alive for the call.
  std::shared_ptr<DetectorOracle> handle(&oracle, [](DetectorOracle*) {});
  return run_attack(image, truth, OraclePool::shared(std::move(handle)), eot, cfg);
}

void write_fitness_trace_csv(std::ostream& out, const std::vector<double>& trace) {
  out << "iteration,gbest_fitness\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    nlohmann::json v = trace[i];
    out << i << ',' << v.dump() << '\n';
  }
}

}  // namespace adcp
