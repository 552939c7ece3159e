#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "adcp/patch_model.hpp"
#include "adcp/random.hpp"

namespace adcp {

/// Swarm hyperparameters. Defaults: inertia 0.9, c1 = 1.6, r1 = 1, c2 = 2.0,
/// r2 = 1, which makes the update deterministic once the swarm is
/// initialized. Set `resample_coefficients` to draw r1, r2 ~ U(0, 1) per
/// dimension per step instead.
struct SwarmOptions {
  int population = 20;
  int step_max = 500;
  double inertia = 0.9;
  double cognitive = 1.6;
  double cognitive_rand = 1.0;
  double social = 2.0;
  double social_rand = 1.0;
  double v_max_frac = 0.25;  // per-dimension speed limit, fraction of the range
  bool resample_coefficients = false;
  std::uint64_t seed = 0;

  void validate() const {
    if (population < 1) throw std::invalid_argument("swarm: population must be at least 1");
    if (step_max < 1) throw std::invalid_argument("swarm: step_max must be at least 1");
    if (!(v_max_frac > 0.0)) throw std::invalid_argument("swarm: v_max_frac must be positive");
  }

  bool operator==(const SwarmOptions&) const = default;
};

template <typename Scalar, int Dim>
struct Particle {
  Vector<Scalar, Dim> position;
  Vector<Scalar, Dim> velocity;
  Vector<Scalar, Dim> best_position;
  Scalar best_fitness = std::numeric_limits<Scalar>::infinity();
};

template <typename Scalar, int Dim>
Vector<Scalar, Dim> velocity_limit(const SwarmOptions& opt, const Bounds<Scalar, Dim>& bounds) {
  return bounds.span() * static_cast<Scalar>(opt.v_max_frac);
}

/// v' = w v + c1 r1 (pbest - x) + c2 r2 (gbest - x), clamped per dimension to
/// +-v_max. r1 and r2 are per-dimension coefficient vectors.
template <typename Scalar, int Dim>
Vector<Scalar, Dim> step_velocity(const Particle<Scalar, Dim>& p, const std::type_identity_t<Vector<Scalar, Dim>>& gbest,
                                  const SwarmOptions& opt, const Bounds<Scalar, Dim>& bounds,
                                  const std::type_identity_t<Vector<Scalar, Dim>>& r1,
                                  const std::type_identity_t<Vector<Scalar, Dim>>& r2) {
  const Vector<Scalar, Dim> v_max = velocity_limit(opt, bounds);
  const Vector<Scalar, Dim> raw =
      static_cast<Scalar>(opt.inertia) * p.velocity +
      static_cast<Scalar>(opt.cognitive) * r1.cwiseProduct(p.best_position - p.position) +
      static_cast<Scalar>(opt.social) * r2.cwiseProduct(gbest - p.position);
  return raw.cwiseMax(-v_max).cwiseMin(v_max);
}

/// Velocity update with the configured scalar r1, r2.
template <typename Scalar, int Dim>
Vector<Scalar, Dim> step_velocity(const Particle<Scalar, Dim>& p, const std::type_identity_t<Vector<Scalar, Dim>>& gbest,
                                  const SwarmOptions& opt, const Bounds<Scalar, Dim>& bounds) {
  const auto n = p.position.size();
  const Vector<Scalar, Dim> r1 = Vector<Scalar, Dim>::Constant(n, static_cast<Scalar>(opt.cognitive_rand));
  const Vector<Scalar, Dim> r2 = Vector<Scalar, Dim>::Constant(n, static_cast<Scalar>(opt.social_rand));
  return step_velocity(p, gbest, opt, bounds, r1, r2);
}

/// x' = clamp(x + v', bounds).
template <typename Scalar, int Dim>
Vector<Scalar, Dim> step_position(const Particle<Scalar, Dim>& p, const std::type_identity_t<Vector<Scalar, Dim>>& velocity,
                                  const Bounds<Scalar, Dim>& bounds) {
  return clamp(p.position + velocity, bounds);
}

template <typename Scalar>
struct Evaluation {
  Scalar fitness = std::numeric_limits<Scalar>::infinity();
  bool stop = false;  // the candidate already meets the goal
};

template <typename Scalar, int Dim>
struct SwarmResult {
  bool stopped = false;
  /// Stopping particle's position when `stopped`, otherwise the global best.
  Vector<Scalar, Dim> position;
  Scalar fitness = std::numeric_limits<Scalar>::infinity();
  int iterations = 0;
  std::size_t evaluations = 0;
  std::vector<Scalar> trace;  // global best fitness after each iteration
};

/// Synchronous particle swarm minimizer over a box.
///
/// Each iteration evaluates every particle, refreshes personal and global
/// bests, and stops as soon as an evaluation reports `stop`. Evaluations run
/// in index-ordered batches of `parallelism`; the lowest-index stopping
/// particle wins, so the outcome does not depend on the batch size. Every
/// particle owns a random stream derived from the seed.
template <typename Scalar, int Dim>
class ParticleSwarm {
 public:
  using VectorType = Vector<Scalar, Dim>;
  using ParticleType = Particle<Scalar, Dim>;
  using BoundsType = Bounds<Scalar, Dim>;

  ParticleSwarm(const SwarmOptions& options, BoundsType bounds)
      : options_(options), bounds_(std::move(bounds)) {
    options_.validate();
    if (!bounds_.valid()) throw std::invalid_argument("swarm: invalid bounds");
  }

  void initialize() {
    const VectorType v_max = velocity_limit(options_, bounds_);
    const BoundsType velocity_box{-v_max, v_max};
    particles_.clear();
    streams_.clear();
    for (int i = 0; i < options_.population; ++i) {
      SeededRandom rng(derive_seed(options_.seed, static_cast<std::uint64_t>(i)));
      ParticleType p;
      p.position = sample_uniform(bounds_, rng);
      p.velocity = sample_uniform(velocity_box, rng);
      p.best_position = p.position;
      particles_.push_back(std::move(p));
      streams_.push_back(rng);
    }
    global_best_ = particles_.front().position;
    global_best_fitness_ = std::numeric_limits<Scalar>::infinity();
    trace_.clear();
    evaluations_ = 0;
  }

  /// Moves every particle once using the current bests.
  void update() {
    const auto n = bounds_.size();
    for (std::size_t i = 0; i < particles_.size(); ++i) {
      auto& p = particles_[i];
      VectorType velocity;
      if (options_.resample_coefficients) {
        VectorType r1(n), r2(n);
        for (Eigen::Index d = 0; d < n; ++d) r1[d] = static_cast<Scalar>(streams_[i].unit());
        for (Eigen::Index d = 0; d < n; ++d) r2[d] = static_cast<Scalar>(streams_[i].unit());
        velocity = step_velocity(p, global_best_, options_, bounds_, r1, r2);
      } else {
        velocity = step_velocity(p, global_best_, options_, bounds_);
      }
      p.position = step_position(p, velocity, bounds_);
      p.velocity = velocity;
    }
  }

  /// Evaluates all particles for `iteration`. Returns the index of the first
  /// particle that reported stop.
  ///
  /// `evaluate(particle_index, iteration, position)` must return an
  /// Evaluation<Scalar> and be safe to call concurrently when
  /// parallelism > 1.
  template <typename Evaluate>
  std::optional<std::size_t> evaluate(Evaluate& evaluate_fn, int iteration,
                                      std::size_t parallelism = 1) {
    parallelism = std::max<std::size_t>(parallelism, 1);
    std::vector<Evaluation<Scalar>> batch;
    for (std::size_t start = 0; start < particles_.size(); start += parallelism) {
      const std::size_t end = std::min(particles_.size(), start + parallelism);
      batch.clear();
      if (end - start == 1) {
        batch.push_back(evaluate_fn(start, iteration, std::as_const(particles_[start].position)));
      } else {
        std::vector<std::future<Evaluation<Scalar>>> pending;
        for (std::size_t i = start; i < end; ++i) {
          pending.push_back(std::async(std::launch::async, [&, i] {
            return evaluate_fn(i, iteration, std::as_const(particles_[i].position));
          }));
        }
        for (auto& f : pending) f.wait();
        for (auto& f : pending) batch.push_back(f.get());
      }

      std::optional<std::size_t> stopped;
      for (std::size_t i = start; i < end; ++i) {
        const Evaluation<Scalar>& e = batch[i - start];
        const Scalar fitness =
            std::isnan(e.fitness) ? std::numeric_limits<Scalar>::infinity() : e.fitness;
        ++evaluations_;
        auto& p = particles_[i];
        if (fitness < p.best_fitness) {
          p.best_fitness = fitness;
          p.best_position = p.position;
        }
        if (fitness < global_best_fitness_) {
          global_best_fitness_ = fitness;
          global_best_ = p.position;
        }
        if (e.stop && !stopped) stopped = i;
      }
      if (stopped) return stopped;
    }
    return std::nullopt;
  }

  template <typename Evaluate>
  SwarmResult<Scalar, Dim> minimize(Evaluate&& evaluate_fn, std::size_t parallelism = 1) {
    initialize();
    SwarmResult<Scalar, Dim> result;
    for (int j = 0; j < options_.step_max; ++j) {
      const auto stopped = evaluate(evaluate_fn, j, parallelism);
      trace_.push_back(global_best_fitness_);
      if (stopped) {
        result.stopped = true;
        result.position = particles_[*stopped].position;
        result.fitness = global_best_fitness_;
        result.iterations = j + 1;
        result.evaluations = evaluations_;
        result.trace = trace_;
        return result;
      }
      if (j + 1 < options_.step_max) update();
    }
    result.position = global_best_;
    result.fitness = global_best_fitness_;
    result.iterations = options_.step_max;
    result.evaluations = evaluations_;
    result.trace = trace_;
    return result;
  }

  const std::vector<ParticleType>& particles() const { return particles_; }
  std::vector<ParticleType>& particles() { return particles_; }
  const VectorType& global_best() const { return global_best_; }
  Scalar global_best_fitness() const { return global_best_fitness_; }
  const std::vector<Scalar>& trace() const { return trace_; }
  std::size_t evaluations() const { return evaluations_; }
  const SwarmOptions& options() const { return options_; }
  const BoundsType& bounds() const { return bounds_; }

 private:
  SwarmOptions options_;
  BoundsType bounds_;
  std::vector<ParticleType> particles_;
  std::vector<SeededRandom> streams_;
  VectorType global_best_;
  Scalar global_best_fitness_ = std::numeric_limits<Scalar>::infinity();
  std::vector<Scalar> trace_;
  std::size_t evaluations_ = 0;
};

}  // namespace adcp
