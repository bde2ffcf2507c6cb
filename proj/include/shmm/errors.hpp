#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace shmm {

/// Base class for runtime numerical failures (singular systems, divergence,
/// degenerate recursions). Argument/shape violations use std::invalid_argument.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A matrix required to be invertible is singular or too ill-conditioned.
/// Carries the condition estimate that tripped the guard.
class SingularMatrixError : public NumericalError {
 public:
  SingularMatrixError(const std::string& what, double condition)
      : NumericalError(what + " (condition estimate " + std::to_string(condition) + ")"),
        condition_(condition) {}

  double condition() const { return condition_; }

 private:
  double condition_;
};

class RankDeficientError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InsufficientDataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Accumulator asked to update before its two priming observations.
class NotWarmError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Normalizing denominator of the belief recursion vanished.
class DegenerateBeliefError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Running likelihood vector underflowed to exact zero.
class DegenerateScoreError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// EM kept collapsing components across all retry sub-seeds.
class DegenerateMixtureError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Iterative solver exhausted its schedule; carries the last iterate.
class OptimizationError : public NumericalError {
 public:
  OptimizationError(const std::string& what, Eigen::VectorXd last_iterate)
      : NumericalError(what), last_iterate_(std::move(last_iterate)) {}

  const Eigen::VectorXd& last_iterate() const { return last_iterate_; }

 private:
  Eigen::VectorXd last_iterate_;
};

class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExperimentInvalidError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Metric undefined for the given inputs (zero variance denominators).
class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace shmm
