#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.h"

#include "damln/error.h"
#include "damln/fs_benchmark.h"
#include "damln/inference.h"
#include "damln/learning.h"

using namespace damln;

namespace {

const Model& Fs() {
  static const Model m = FsModel();
  return m;
}

TrainingSet FsTraining(const std::vector<int>& sizes, std::uint64_t seed = 1) {
  std::vector<Database> dbs;
  for (int n : sizes) dbs.push_back(GenerateFs(n, FsParams{}, seed + n).db);
  return TrainingSet::FromDatabases(Fs(), dbs);
}

// A database over `n` constants where R holds for exactly the first `k`.
TrainingSet Singleton(int n, int k, Model& model) {
  model = ParseModel("t = {}\nR(t)\n0 R(x)\n");
  Database db;
  for (int i = 0; i < n; ++i) db.Assert({"R", {"C" + std::to_string(i)}}, i < k);
  db.added_constants["t"] = {};
  for (int i = 0; i < n; ++i) db.added_constants["t"].push_back("C" + std::to_string(i));
  return TrainingSet::FromDatabases(model, {db});
}

// Pseudo-log-likelihood from full-world log weights, without any pooling.
double OraclePll(const Model& model, const TrainingSet& ts, const std::vector<double>& w,
                 Mode mode, double prior_std) {
  const Model weighted = model.WithWeights(w);
  double total = 0.0;
  for (const auto& tdb : ts.databases) {
    const auto scales = oracle::Scales(model, tdb.domains, mode, Aggregator::kMax);
    TruthAssignment world;
    for (const auto& g : oracle::AllAtoms(model, tdb.domains)) {
      auto it = tdb.db.literals.find(g);
      world[g] = it != tdb.db.literals.end() && it->second;
    }
    for (const auto& [atom, observed] : TruthAssignment(world)) {
      world[atom] = true;
      const double lp = oracle::LogWeight(weighted, tdb.domains, scales, world);
      world[atom] = false;
      const double lm = oracle::LogWeight(weighted, tdb.domains, scales, world);
      world[atom] = observed;
      const double top = std::max(lp, lm);
      total += (observed ? lp : lm) - top - std::log(std::exp(lp - top) + std::exp(lm - top));
    }
  }
  for (double x : w) total -= x * x / (2 * prior_std * prior_std);
  return total;
}

bool GradientMatches(const PllObjective& obj, const std::vector<double>& w) {
  const std::vector<double> g = obj.Gradient(w);
  bool ok = true;
  for (std::size_t i = 0; i < w.size(); ++i) {
    std::vector<double> up = w, down = w;
    up[i] += 1e-5;
    down[i] -= 1e-5;
    const double fd = (obj.Value(up) - obj.Value(down)) / 2e-5;
    const double scale = std::max({std::abs(fd), std::abs(g[i]), 1.0});
    if (std::abs(fd - g[i]) > 1e-4 * scale) {
      MESSAGE("component " << i << ": analytic " << g[i] << " vs " << fd);
      ok = false;
    }
  }
  return ok;
}

double InfNorm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Steepest ascent with an exact line search: the step is found by bisection
// on the sign of the directional derivative, so it never compares objective
// values. Independent of the library optimizer.
std::vector<double> ReferenceAscent(const PllObjective& obj, double tol) {
  const std::size_t n = obj.num_weights();
  std::vector<double> w(n, 0.0);
  std::vector<double> g = obj.Gradient(w);
  auto at = [&](double alpha) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = w[i] + alpha * g[i];
    return t;
  };
  auto slope = [&](double alpha) {
    const std::vector<double> gt = obj.Gradient(at(alpha));
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += gt[i] * g[i];
    return s;
  };
  double hi = 1.0;
  for (int it = 0; it < 200000 && InfNorm(g) > tol; ++it) {
    double lo = 0.0;
    while (slope(hi) > 0.0) {
      lo = hi;
      hi *= 2.0;
    }
    for (int k = 0; k < 60 && hi - lo > 1e-14 * hi; ++k) {
      const double mid = 0.5 * (lo + hi);
      (slope(mid) > 0.0 ? lo : hi) = mid;
    }
    w = at(0.5 * (lo + hi));
    g = obj.Gradient(w);
    hi = std::max(2.0 * hi, 1e-6);
  }
  return w;
}

}  // namespace

TEST_CASE("zero weights give uniform conditionals") {
  const TrainingSet ts = FsTraining({5, 8});
  LearnConfig cfg;
  const std::vector<double> zero(5, 0.0);
  const double k = 25 + 10 + 64 + 16;
  CHECK(Pll(Fs(), ts, zero, cfg) == doctest::Approx(k * std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("pll matches per-atom recomputation") {
  const TrainingSet ts = FsTraining({3, 4});
  damln::Rng rng(2);
  for (auto mode : {Mode::kDaMln, Mode::kMln}) {
    LearnConfig cfg;
    cfg.mode = mode;
    cfg.prior_std = 2.0;
    for (int t = 0; t < 3; ++t) {
      std::vector<double> w(5);
      for (double& x : w) x = oracle::Uniform(rng, -2, 2);
      CHECK(Pll(Fs(), ts, w, cfg) ==
            doctest::Approx(OraclePll(Fs(), ts, w, mode, 2.0)).epsilon(1e-11));
    }
  }
}

TEST_CASE("pll matches the inference conditionals") {
  const TrainingSet ts = FsTraining({3});
  const std::vector<double> w{1.0, -0.5, 0.3, 0.7, -1.2};
  LearnConfig cfg;
  const GroundNetwork net =
      GroundNetwork::Build(Fs().WithWeights(w), ts.databases[0].domains, Database{},
                           {"Friends", "Smokes", "Cancer"}, {Mode::kDaMln});
  World world(net);
  for (const auto& [atom, v] : ts.databases[0].db.literals) world.Set(*net.FindAtom(atom), v);
  double expected = 0.0;
  for (AtomId a = 0; a < net.num_atoms(); ++a) {
    const double p = ConditionalProbability(net, a, world);
    expected += std::log(world.value(a) ? p : 1 - p);
  }
  for (double x : w) expected -= x * x / 200.0;
  CHECK(Pll(Fs(), ts, w, cfg) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("prior bounds the singleton objective") {
  Model m;
  const TrainingSet ts = Singleton(1, 1, m);
  LearnConfig cfg;
  const PllObjective obj(m, ts, cfg);
  CHECK(obj.Value(std::vector<double>{50.0}) < obj.Value(std::vector<double>{10.0}));
  CHECK(obj.Value(std::vector<double>{200.0}) < obj.Value(std::vector<double>{50.0}));
  const LearnResult r = LearnWeights(obj, cfg);
  CHECK(r.converged);
  CHECK(std::isfinite(r.weights[0]));
  CHECK(r.weights[0] > 0.0);
}

TEST_CASE("symmetric singleton data") {
  Model m;
  const TrainingSet ts = Singleton(10, 5, m);
  LearnConfig cfg;
  cfg.prior_std = 1e150;
  CHECK(PllGradient(m, ts, std::vector<double>{0.0}, cfg)[0] == 0.0);
  cfg.prior_std = 10;
  const LearnResult r = LearnWeights(m, ts, cfg);
  CHECK(std::abs(r.weights[0]) < 0.01);
}

TEST_CASE("gradient matches finite differences") {
  damln::Rng rng(19);
  const TrainingSet fs_ts = FsTraining({4, 6});
  for (auto mode : {Mode::kDaMln, Mode::kMln}) {
    for (auto agg : {Aggregator::kMax, Aggregator::kSum}) {
      LearnConfig cfg;
      cfg.mode = mode;
      cfg.aggregator = agg;
      const PllObjective obj(Fs(), fs_ts, cfg);
      for (int t = 0; t < 5; ++t) {
        std::vector<double> w(5);
        for (double& x : w) x = oracle::Uniform(rng, -3, 3);
        CHECK(GradientMatches(obj, w));
      }
    }
  }
  for (int t = 0; t < 10; ++t) {
    const Model m = oracle::RandomModel(rng);
    Database db;
    for (const auto& g : oracle::AllAtoms(m, m.domain_map())) db.Assert(g, rng() % 2);
    const TrainingSet ts = TrainingSet::FromDatabases(m, {db});
    LearnConfig cfg;
    cfg.per_db_normalize = t % 2 == 0;
    const PllObjective obj(m, ts, cfg);
    std::vector<double> w(m.formulas.size());
    for (double& x : w) x = oracle::Uniform(rng, -2, 2);
    CHECK(GradientMatches(obj, w));
  }
}

TEST_CASE("modes agree when every connection vector is all ones") {
  const Model m = ParseModel(
      "person = {}\nSmokes(person)\nCancer(person)\n0 Smokes(x) => Cancer(x)\n0 Smokes(x)\n");
  std::vector<Database> dbs;
  for (int n : {5, 9}) dbs.push_back(ParseDatabase(SerializeDatabase(GenerateFs(n, {}, n).db), FsModel()));
  for (auto& db : dbs) {
    for (auto it = db.literals.begin(); it != db.literals.end();) {
      it = it->first.predicate == "Friends" ? db.literals.erase(it) : std::next(it);
    }
  }
  const TrainingSet ts = TrainingSet::FromDatabases(m, dbs);
  LearnConfig da, mln;
  mln.mode = Mode::kMln;
  const std::vector<double> w{0.8, -0.3};
  CHECK(PllGradient(m, ts, w, da) == PllGradient(m, ts, w, mln));
  CHECK(Pll(m, ts, w, da) == Pll(m, ts, w, mln));
}

TEST_CASE("learner output") {
  const TrainingSet ts = FsTraining({20, 40});
  LearnConfig cfg;
  const LearnResult r = LearnWeights(Fs(), ts, cfg);
  CHECK(r.converged);
  REQUIRE(r.weights.size() == 5);
  CHECK(r.weights[0] > 0.0);
  REQUIRE(r.trace.size() >= 2);
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    CHECK(r.trace[i].objective >= r.trace[i - 1].objective);
  }
  CHECK(r.trace.back().gradient_norm <= cfg.tolerance);
}

TEST_CASE("zero formulas") {
  const Model m = ParseModel("t = {A}\nR(t)\n");
  Database db;
  db.Assert({"R", {"A"}}, true);
  const LearnResult r = LearnWeights(m, TrainingSet::FromDatabases(m, {db}), LearnConfig{});
  CHECK(r.weights.empty());
  CHECK(r.converged);
}

TEST_CASE("database order does not matter") {
  const TrainingSet ts = FsTraining({4, 7, 10});
  TrainingSet reversed = ts;
  std::reverse(reversed.databases.begin(), reversed.databases.end());
  const std::vector<double> w{0.9, 1.4, -0.6, -0.2, -2.0};
  LearnConfig cfg;
  CHECK(Pll(Fs(), ts, w, cfg) == doctest::Approx(Pll(Fs(), reversed, w, cfg)).epsilon(1e-13));
}

TEST_CASE("scaling factors are per database") {
  const TrainingSet ts = FsTraining({4, 9});
  LearnConfig cfg;
  const std::vector<double> w{0.9, 1.4, -0.6, -0.2, -2.0};
  const PllObjective obj(Fs(), ts, cfg);
  CHECK(obj.scales(0) != obj.scales(1));
  for (std::size_t d : {0, 1}) {
    PllObjective global(Fs(), ts, cfg);
    global.OverrideScales(0, obj.scales(d));
    global.OverrideScales(1, obj.scales(d));
    CHECK(global.Value(w) != doctest::Approx(obj.Value(w)).epsilon(1e-9));
  }
}

TEST_CASE("single database mln learning matches reference gradient ascent") {
  const TrainingSet ts = FsTraining({6});
  LearnConfig cfg;
  cfg.mode = Mode::kMln;
  cfg.tolerance = 1e-9;
  cfg.max_iterations = 10000;
  const PllObjective obj(Fs(), ts, cfg);
  const LearnResult r = LearnWeights(obj, cfg);
  REQUIRE(r.converged);
  const std::vector<double> ref = ReferenceAscent(obj, cfg.tolerance);
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(r.weights[i] - ref[i]) <= 1e-6);
  CHECK(InfNorm(obj.Gradient(ref)) <= cfg.tolerance);
}

TEST_CASE("non-finite objective is reported") {
  Model m;
  const TrainingSet ts = Singleton(4, 2, m);
  LearnConfig cfg;
  cfg.prior_std = 1e-200;
  CHECK_THROWS_AS(LearnWeights(m, ts, cfg), Error);
  cfg.prior_std = -1;
  CHECK_THROWS_AS(PllObjective(m, ts, cfg), Error);
}

TEST_CASE("gradient ascent option reaches the same optimum") {
  const TrainingSet ts = FsTraining({6});
  LearnConfig cg;
  cg.tolerance = 1e-6;
  cg.max_iterations = 1000;
  LearnConfig ga = cg;
  ga.optimizer = Optimizer::kGradientAscent;
  ga.max_iterations = 200000;
  const PllObjective obj(Fs(), ts, cg);
  const LearnResult a = LearnWeights(obj, cg);
  const LearnResult b = LearnWeights(obj, ga);
  CHECK(a.converged);
  CHECK(b.converged);
  for (std::size_t i = 0; i < a.weights.size(); ++i) {
    CHECK(b.weights[i] == doctest::Approx(a.weights[i]).epsilon(1e-3));
  }
}
