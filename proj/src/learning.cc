#include "damln/learning.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>

#include <spdlog/spdlog.h>

#include "damln/error.h"

namespace damln {
namespace {

// log(1 + exp(x)) without overflow.
double Softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double InfNorm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double Dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Line search along d from w. Looks for a step with sufficient increase whose
// directional derivative has dropped to a tenth of the initial slope, using a
// safeguarded secant search on the derivative. Falls back to plain
// backtracking when the bracket cannot be closed. On success `step` holds the
// accepted step and trial/trial_f/trial_g the new point.
bool SearchLine(const PllObjective& objective, const std::vector<double>& w,
                double f, double slope, const std::vector<double>& d, double& step,
                std::vector<double>& trial, double& trial_f,
                std::vector<double>& trial_g) {
  constexpr double kArmijo = 1e-4;
  constexpr double kCurvature = 0.1;
  constexpr int kMaxEvaluations = 60;
  constexpr int kMaxHalvings = 80;
  const std::size_t n = w.size();

  auto eval = [&](double alpha, double& value, double& deriv) {
    for (std::size_t i = 0; i < n; ++i) trial[i] = w[i] + alpha * d[i];
    value = objective.ValueAndGradient(trial, trial_g);
    deriv = Dot(trial_g, d);
    return std::isfinite(value) && std::isfinite(deriv);
  };
  auto sufficient = [&](double alpha, double value) {
    return value >= f + kArmijo * alpha * slope;
  };

  double lo = 0.0, lo_deriv = slope;
  double hi = -1.0, hi_deriv = 0.0;
  double alpha = step;
  double best = -1.0, best_value = 0.0, last = -1.0;
  for (int k = 0; k < kMaxEvaluations; ++k) {
    double value = 0.0, deriv = 0.0;
    const bool finite = eval(alpha, value, deriv);
    last = alpha;
    if (finite && sufficient(alpha, value)) {
      best = alpha;
      best_value = value;
      if (std::abs(deriv) <= kCurvature * slope) break;
      if (deriv > 0.0) {
        lo = alpha;
        lo_deriv = deriv;
      } else {
        hi = alpha;
        hi_deriv = deriv;
      }
    } else {
      hi = alpha;
      hi_deriv = finite ? deriv : 0.0;
    }
    if (hi < 0.0) {
      alpha *= 4.0;
      continue;
    }
    double next = 0.5 * (lo + hi);
    if (hi_deriv < 0.0 && lo_deriv > 0.0) {
      const double secant = lo + (hi - lo) * lo_deriv / (lo_deriv - hi_deriv);
      const double margin = 0.05 * (hi - lo);
      if (secant > lo + margin && secant < hi - margin) next = secant;
    }
    alpha = next;
  }
  if (best > 0.0) {
    double deriv = 0.0;
    if (best != last) eval(best, best_value, deriv);
    trial_f = best_value;
    step = best;
    return true;
  }

  alpha = step;
  for (int h = 0; h < kMaxHalvings; ++h, alpha *= 0.5) {
    double value = 0.0, deriv = 0.0;
    if (eval(alpha, value, deriv) && sufficient(alpha, value)) {
      trial_f = value;
      step = alpha;
      return true;
    }
  }
  return false;
}

// Inverse diagonal curvature, floored so that directions the data does not
// constrain keep a finite scale.
std::vector<double> InversePreconditioner(const PllObjective& objective,
                                          const std::vector<double>& w) {
  std::vector<double> c = objective.Curvature(w);
  double top = 0.0;
  for (double x : c) {
    if (std::isfinite(x)) top = std::max(top, x);
  }
  for (double& x : c) {
    x = top > 0.0 && std::isfinite(x) ? 1.0 / std::max(x, 1e-12 * top) : 1.0;
  }
  return c;
}

}  // namespace

TrainingSet TrainingSet::FromDatabases(const Model& model,
                                       const std::vector<Database>& dbs) {
  TrainingSet ts;
  for (const Database& db : dbs) {
    ts.databases.push_back({db, ResolveDomains(model, db)});
  }
  return ts;
}

PllObjective::PllObjective(const Model& model, const TrainingSet& ts,
                           const LearnConfig& cfg)
    : num_weights_(model.formulas.size()), prior_std_(cfg.prior_std) {
  if (!(cfg.prior_std > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "prior_std must be positive");
  }
  std::set<std::string> all_predicates;
  for (const PredicateSchema& p : model.predicates) all_predicates.insert(p.name);
  const GroundingOptions options{cfg.mode, cfg.aggregator, cfg.memory_budget_bytes};

  auto build = [&](const TrainingDatabase& tdb) {
    GroundNetwork net = GroundNetwork::Build(model, tdb.domains, Database{},
                                             all_predicates, options);
    std::vector<std::uint8_t> values(net.num_atoms(), 0);
    for (const auto& [atom, value] : tdb.db.literals) {
      std::optional<AtomId> id = net.FindAtom(atom);
      if (!id) {
        throw Error(ErrorCode::kUnknownAtom,
                    "training atom " + atom.ToString() + " is not in the network");
      }
      values[*id] = value ? 1 : 0;
    }

    using Key = std::pair<bool, std::vector<std::pair<std::uint32_t, std::int64_t>>>;
    std::map<Key, std::int64_t> pooled;
    std::vector<std::int64_t> delta(net.num_formulas(), 0);
    for (AtomId a = 0; a < net.num_atoms(); ++a) {
      std::fill(delta.begin(), delta.end(), 0);
      for (FeatureId f : net.features_of(a)) {
        const int t1 = net.EvaluateFeature(f, values, a, true) ? 1 : 0;
        const int t0 = net.EvaluateFeature(f, values, a, false) ? 1 : 0;
        delta[net.feature_formula(f)] += t1 - t0;
      }
      Key key{values[a] != 0, {}};
      for (std::uint32_t i = 0; i < delta.size(); ++i) {
        if (delta[i] != 0) key.second.emplace_back(i, delta[i]);
      }
      ++pooled[key];
    }

    DatabaseStats stats;
    for (std::size_t i = 0; i < net.num_formulas(); ++i) {
      stats.scales.push_back(net.scale(i));
    }
    for (const auto& [key, count] : pooled) {
      AtomClass cls;
      cls.observed = key.first;
      for (const auto& [i, d] : key.second) {
        cls.deltas.emplace_back(i, static_cast<double>(d));
      }
      cls.multiplicity = static_cast<double>(count);
      stats.classes.push_back(std::move(cls));
    }
    stats.normalizer =
        cfg.per_db_normalize ? 1.0 / std::max<double>(1.0, net.num_atoms()) : 1.0;
    spdlog::debug("training database: {} atoms pooled into {} classes",
                  net.num_atoms(), stats.classes.size());
    return stats;
  };

  std::vector<std::future<DatabaseStats>> pending;
  for (const TrainingDatabase& tdb : ts.databases) {
    pending.push_back(std::async(std::launch::async, build, std::cref(tdb)));
  }
  for (auto& p : pending) databases_.push_back(p.get());
}

void PllObjective::OverrideScales(std::size_t db, std::vector<double> scales) {
  if (scales.size() != num_weights_) {
    throw Error(ErrorCode::kInvalidArgument, "scale vector size mismatch");
  }
  databases_.at(db).scales = std::move(scales);
}

double PllObjective::Accumulate(std::span<const double> weights,
                                std::vector<double>* gradient) const {
  if (weights.size() != num_weights_) {
    throw Error(ErrorCode::kInvalidArgument, "weight vector size mismatch");
  }
  if (gradient) gradient->assign(num_weights_, 0.0);
  double total = 0.0;
  std::vector<double> effective(num_weights_);
  std::vector<double> db_grad(num_weights_);
  for (const DatabaseStats& stats : databases_) {
    for (std::size_t i = 0; i < num_weights_; ++i) {
      effective[i] = weights[i] / stats.scales[i];
    }
    std::fill(db_grad.begin(), db_grad.end(), 0.0);
    double db_total = 0.0;
    for (const AtomClass& cls : stats.classes) {
      double log_odds = 0.0;
      for (const auto& [i, d] : cls.deltas) log_odds += effective[i] * d;
      // log P(observed value | rest of the world)
      db_total -= cls.multiplicity *
                  Softplus(cls.observed ? -log_odds : log_odds);
      if (gradient) {
        const double residual =
            (cls.observed ? 1.0 : 0.0) - Sigmoid(log_odds);
        for (const auto& [i, d] : cls.deltas) {
          db_grad[i] += cls.multiplicity * d * residual;
        }
      }
    }
    total += stats.normalizer * db_total;
    if (gradient) {
      for (std::size_t i = 0; i < num_weights_; ++i) {
        (*gradient)[i] += stats.normalizer * db_grad[i] / stats.scales[i];
      }
    }
  }
  const double var = prior_std_ * prior_std_;
  for (std::size_t i = 0; i < num_weights_; ++i) {
    total -= weights[i] * weights[i] / (2.0 * var);
    if (gradient) (*gradient)[i] -= weights[i] / var;
  }
  return total;
}

double PllObjective::Value(std::span<const double> weights) const {
  return Accumulate(weights, nullptr);
}

std::vector<double> PllObjective::Gradient(std::span<const double> weights) const {
  std::vector<double> g;
  Accumulate(weights, &g);
  return g;
}

double PllObjective::ValueAndGradient(std::span<const double> weights,
                                      std::vector<double>& gradient) const {
  return Accumulate(weights, &gradient);
}

std::vector<double> PllObjective::Curvature(std::span<const double> weights) const {
  if (weights.size() != num_weights_) {
    throw Error(ErrorCode::kInvalidArgument, "weight vector size mismatch");
  }
  std::vector<double> out(num_weights_, 1.0 / (prior_std_ * prior_std_));
  std::vector<double> db_curv(num_weights_);
  for (const DatabaseStats& stats : databases_) {
    std::fill(db_curv.begin(), db_curv.end(), 0.0);
    for (const AtomClass& cls : stats.classes) {
      double log_odds = 0.0;
      for (const auto& [i, d] : cls.deltas) log_odds += weights[i] / stats.scales[i] * d;
      const double p = Sigmoid(log_odds);
      for (const auto& [i, d] : cls.deltas) {
        db_curv[i] += cls.multiplicity * d * d * p * (1.0 - p);
      }
    }
    for (std::size_t i = 0; i < num_weights_; ++i) {
      out[i] += stats.normalizer * db_curv[i] / (stats.scales[i] * stats.scales[i]);
    }
  }
  return out;
}

double Pll(const Model& model, const TrainingSet& ts,
           std::span<const double> weights, const LearnConfig& cfg) {
  return PllObjective(model, ts, cfg).Value(weights);
}

std::vector<double> PllGradient(const Model& model, const TrainingSet& ts,
                                std::span<const double> weights,
                                const LearnConfig& cfg) {
  return PllObjective(model, ts, cfg).Gradient(weights);
}

LearnResult LearnWeights(const Model& model, const TrainingSet& ts,
                         const LearnConfig& cfg) {
  if (ts.databases.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "learning needs at least one database");
  }
  return LearnWeights(PllObjective(model, ts, cfg), cfg);
}

LearnResult LearnWeights(const PllObjective& objective, const LearnConfig& cfg) {
  if (!(cfg.tolerance > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tolerance must be positive");
  }
  const std::size_t n = objective.num_weights();

  LearnResult result;
  std::vector<double> w(n, 0.0);
  std::vector<double> g;
  double f = objective.ValueAndGradient(w, g);

  auto check_finite = [](double value, const std::vector<double>& grad) {
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::kNonFiniteObjective, "objective is not finite");
    }
    for (std::size_t i = 0; i < grad.size(); ++i) {
      if (!std::isfinite(grad[i])) {
        throw Error(ErrorCode::kNonFiniteObjective,
                    "gradient component " + std::to_string(i) + " is not finite");
      }
    }
  };
  check_finite(f, g);
  result.trace.push_back({0, f, InfNorm(g), 0.0});

  const bool cg = cfg.optimizer == Optimizer::kConjugateGradient;
  std::vector<double> inv(n, 1.0);
  if (cg) inv = InversePreconditioner(objective, w);
  auto precondition = [&](const std::vector<double>& grad) {
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = inv[i] * grad[i];
    return z;
  };

  std::vector<double> z = precondition(g);
  std::vector<double> d = z;
  double step = cg ? 1.0 : 1.0 / std::max(1.0, InfNorm(d));
  int since_restart = 0;
  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    if (InfNorm(g) <= cfg.tolerance) break;
    double slope = Dot(g, d);
    if (!(slope > 0.0)) {
      d = z;
      slope = Dot(g, d);
      since_restart = 0;
    }

    std::vector<double> trial(n);
    std::vector<double> trial_g;
    double trial_f = 0.0;
    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      accepted = SearchLine(objective, w, f, slope, d, step, trial, trial_f, trial_g);
      if (!accepted) {
        // Fall back to the plain (preconditioned) ascent direction once.
        if (d == z) break;
        d = z;
        slope = Dot(g, d);
        step = 1.0 / std::max(1.0, InfNorm(d));
        since_restart = 0;
      }
    }
    if (!accepted) {
      spdlog::warn("line search made no progress at iteration {}", iter);
      break;
    }
    check_finite(trial_f, trial_g);
    double beta = 0.0;
    std::vector<double> trial_z;
    if (cg && ++since_restart < static_cast<int>(std::max<std::size_t>(n, 1))) {
      trial_z = precondition(trial_g);
      double num = 0.0;
      for (std::size_t i = 0; i < n; ++i) num += trial_z[i] * (trial_g[i] - g[i]);
      beta = std::max(0.0, num / Dot(z, g));
    } else {
      since_restart = 0;
      if (cg) inv = InversePreconditioner(objective, trial);
      trial_z = precondition(trial_g);
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = trial_z[i] + beta * d[i];
    w = trial;
    g = std::move(trial_g);
    z = std::move(trial_z);
    f = trial_f;
    result.trace.push_back({iter, f, InfNorm(g), step});
    spdlog::debug("iteration {}: objective {:.9g}, |g|inf {:.3g}, step {:.3g}", iter,
                  f, InfNorm(g), step);
  }

  result.converged = InfNorm(g) <= cfg.tolerance;
  result.weights = std::move(w);
  spdlog::info("learning finished after {} iteration(s): objective {:.6f}, "
               "|g|inf {:.3g}{}",
               result.trace.back().iteration, f, InfNorm(g),
               result.converged ? "" : " (not converged)");
  return result;
}

}  // namespace damln
