#ifndef DAMLN_LEARNING_H_
#define DAMLN_LEARNING_H_

// Generative weight learning by penalized pseudo-log-likelihood summed over
// training databases. Each database contributes under its own scaling
// factors, computed from its own domain sizes.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "damln/grounder.h"
#include "damln/mln_io.h"

namespace damln {

struct TrainingDatabase {
  Database db;
  DomainMap domains;
};

// Databases are closed-world completed: atoms they do not list are false.
struct TrainingSet {
  std::vector<TrainingDatabase> databases;

  static TrainingSet FromDatabases(const Model& model,
                                   const std::vector<Database>& dbs);
};

enum class Optimizer { kConjugateGradient, kGradientAscent };

struct LearnConfig {
  double prior_std = 10.0;
  int max_iterations = 100;
  // Stop once the gradient's infinity norm falls to this value.
  double tolerance = 1e-4;
  Optimizer optimizer = Optimizer::kConjugateGradient;
  Mode mode = Mode::kDaMln;
  Aggregator aggregator = Aggregator::kMax;
  // Divide each database's term by its atom count.
  bool per_db_normalize = false;
  std::size_t memory_budget_bytes = std::size_t{2} << 30;
};

// Penalized PLL with its sufficient statistics precomputed per database.
class PllObjective {
 public:
  PllObjective(const Model& model, const TrainingSet& ts, const LearnConfig& cfg);

  std::size_t num_weights() const { return num_weights_; }
  std::size_t num_databases() const { return databases_.size(); }
  const std::vector<double>& scales(std::size_t db) const {
    return databases_[db].scales;
  }
  // Replaces the scaling factors of one database.
  void OverrideScales(std::size_t db, std::vector<double> scales);

  double Value(std::span<const double> weights) const;
  std::vector<double> Gradient(std::span<const double> weights) const;
  double ValueAndGradient(std::span<const double> weights,
                          std::vector<double>& gradient) const;
  // Diagonal of the negated Hessian.
  std::vector<double> Curvature(std::span<const double> weights) const;

 private:
  // Atoms sharing the same observed value and per-formula count differences
  // (true-groundings with the atom true minus with it false) are pooled.
  struct AtomClass {
    bool observed = false;
    std::vector<std::pair<std::uint32_t, double>> deltas;
    double multiplicity = 0.0;
  };
  struct DatabaseStats {
    std::vector<AtomClass> classes;
    std::vector<double> scales;
    double normalizer = 1.0;
  };

  double Accumulate(std::span<const double> weights,
                    std::vector<double>* gradient) const;

  std::size_t num_weights_;
  double prior_std_;
  std::vector<DatabaseStats> databases_;
};

double Pll(const Model& model, const TrainingSet& ts,
           std::span<const double> weights, const LearnConfig& cfg);
std::vector<double> PllGradient(const Model& model, const TrainingSet& ts,
                                std::span<const double> weights,
                                const LearnConfig& cfg);

struct LearnTraceEntry {
  int iteration = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;  // infinity norm
  double step = 0.0;
};

struct LearnResult {
  std::vector<double> weights;
  std::vector<LearnTraceEntry> trace;
  bool converged = false;
};

// Maximizes the penalized PLL starting from all-zero weights. Polak-Ribiere
// conjugate gradient (with restarts) or plain gradient ascent. Steps satisfy
// the Armijo condition and, when reachable, a curvature condition.
LearnResult LearnWeights(const Model& model, const TrainingSet& ts,
                         const LearnConfig& cfg);
LearnResult LearnWeights(const PllObjective& objective, const LearnConfig& cfg);

}  // namespace damln

#endif  // DAMLN_LEARNING_H_
