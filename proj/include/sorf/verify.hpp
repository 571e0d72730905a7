#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "sorf/discretizer.hpp"
#include "sorf/encoding.hpp"
#include "sorf/oracle.hpp"
#include "sorf/path.hpp"

namespace sorf {

// Randomized small instances on which the screened pipeline is checked
// against the exhaustive oracle.
struct InstanceSpec {
  int n_min = 8, n_max = 50;
  int d_min = 1, d_max = 3;
  int s_max = 4;  // quantile bound, so alphabets stay small
  bool classification = false;
};

struct SyntheticInstance {
  Task task = Task::Regression;
  std::vector<std::vector<double>> columns;
  std::vector<double> labels;
  DiscretizedDataset ds;
};

SyntheticInstance make_instance(std::mt19937_64& rng, const InstanceSpec& spec);

ProblemEncoding instance_encoding(const SyntheticInstance& inst, double rho, double lambda);

// Screened pipeline solve at one lambda via a short warm-started path.
ModelState pipeline_solve(const SyntheticInstance& inst, double lambda, double tol,
                          int path_steps = 4, int threads = 1);

struct CheckResult {
  bool pass = true;
  std::string detail;
};

// Oracle active set contained in the survivor set, screened from both a cold
// feasible pair and the converged pair.
CheckResult check_screening_safety(const SyntheticInstance& inst, double lambda,
                                   double oracle_tol = 1e-10);
// Objective and coefficient agreement between pipeline and oracle.
CheckResult check_optimality(const SyntheticInstance& inst, double lambda,
                             double objective_tol = 1e-6, double coef_tol = 1e-5);
// Converged certificate: gap within tolerance and the dual point feasible for
// every materialized constraint.
CheckResult check_certificate(const SyntheticInstance& inst, double lambda,
                              double gap_tol = 1e-6);
// Tree-pruned rule correlation max against the exhaustive one.
CheckResult check_lambda_max(const SyntheticInstance& inst);

struct VerifyOptions {
  std::uint64_t seed = 1;
  int instances = 20;
  double gap_tol = 1e-6;
};

struct VerifyReport {
  int checks = 0;
  int failed = 0;
};

// The oracle-equivalence bundle behind the `verify` subcommand: one line per
// check to the log, nonzero failed count on any violation.
VerifyReport run_verify(const VerifyOptions& options, std::ostream& log);

}  // namespace sorf
