#include <cmath>

#include "doctest.h"
#include "oracles.h"

#include "damln/error.h"
#include "damln/fs_benchmark.h"
#include "damln/grounder.h"

using namespace damln;

namespace {

const std::set<std::string> kAllFs{"Friends", "Smokes", "Cancer"};

Model Fs(std::vector<double> w = {1.1, 0.7, -0.4, 0.9, -1.3}) {
  return FsModel().WithWeights(w);
}

DomainMap People(int n) {
  DomainMap d;
  for (int i = 0; i < n; ++i) d["person"].push_back("P" + std::to_string(i));
  return d;
}

Model PQ(double w = 1.0) {
  return ParseModel("xt = {}\nyt = {}\nP(xt, yt)\nQ(xt)\n" + std::to_string(w) +
                    " P(x, y) => Q(x)\n");
}

DomainMap PQDomains(int nx, int ny) {
  DomainMap d;
  for (int i = 0; i < nx; ++i) d["xt"].push_back("X" + std::to_string(i));
  for (int i = 0; i < ny; ++i) d["yt"].push_back("Y" + std::to_string(i));
  return d;
}

template <typename Fn>
ErrorCode CodeOf(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kInvalidArgument;
}

World RandomWorld(const GroundNetwork& net, damln::Rng& rng) {
  World w(net);
  for (AtomId a : net.free_atoms()) w.Set(a, rng() % 2);
  return w;
}

std::set<std::string> AllPredicates(const Model& m) {
  std::set<std::string> out;
  for (const auto& p : m.predicates) out.insert(p.name);
  return out;
}

std::size_t FeaturesOf(const GroundNetwork& net, std::size_t formula) {
  std::size_t n = 0;
  for (FeatureId f = 0; f < net.num_features(); ++f) n += net.feature_formula(f) == formula;
  return n;
}

}  // namespace

TEST_CASE("connection vector examples") {
  const Model pq = PQ();
  CHECK(ComputeConnectionVector(pq.formulas[0].formula, pq.signature(),
                                {{"xt", 2}, {"yt", 2}}) == ConnectionVector{1, 2});
  const Model fs = Fs();
  for (std::size_t n : {1, 2, 7, 50}) {
    CHECK(ComputeConnectionVector(fs.formulas[0].formula, fs.signature(), {{"person", n}}) ==
          ConnectionVector{1, 1});
  }
  CHECK(ComputeConnectionVector(fs.formulas[1].formula, fs.signature(), {{"person", 7}}) ==
        ConnectionVector{1, 7, 7});
  CHECK(CodeOf([&] {
          ComputeConnectionVector(pq.formulas[0].formula, pq.signature(), {{"xt", 2}});
        }) == ErrorCode::kUnknownDomainSize);
}

TEST_CASE("scaling factor examples") {
  CHECK(ComputeScalingFactor({1, 2}, Aggregator::kMax).value == 2);
  CHECK(ComputeScalingFactor({1, 1}, Aggregator::kMax).value == 1);
  CHECK(ComputeScalingFactor({1, 7, 7}, Aggregator::kSum).value == 15);
  CHECK(CodeOf([] { ComputeScalingFactor({}, Aggregator::kMax); }) == ErrorCode::kEmptyVector);
}

TEST_CASE("connection counts match enumeration") {
  damln::Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const Model m = oracle::RandomModel(rng);
    const auto sig = m.signature();
    const auto domains = m.domain_map();
    for (const auto& wf : m.formulas) {
      const ConnectionVector v = ComputeConnectionVector(wf.formula, sig, SizesOf(domains));
      CHECK(v == oracle::Connections(wf.formula, sig, domains));
      for (auto agg : {Aggregator::kMax, Aggregator::kSum}) {
        const ScalingFactor s = ComputeScalingFactor(v, agg);
        CHECK(s.value >= 1);
        if (agg == Aggregator::kMax) {
          CHECK(std::find(v.begin(), v.end(), s.value) != v.end());
        }
      }
    }
  }
}

TEST_CASE("connection vectors grow with domains") {
  damln::Rng rng(8);
  for (int t = 0; t < 200; ++t) {
    const Model m = oracle::RandomModel(rng);
    const auto sig = m.signature();
    DomainSizes sizes = SizesOf(m.domain_map());
    DomainSizes bigger = sizes;
    for (auto& [name, n] : bigger) n += rng() % 3;
    for (const auto& wf : m.formulas) {
      const auto a = ComputeConnectionVector(wf.formula, sig, sizes);
      const auto b = ComputeConnectionVector(wf.formula, sig, bigger);
      REQUIRE(a.size() == b.size());
      for (std::size_t j = 0; j < a.size(); ++j) {
        CHECK(a[j] >= 1);
        CHECK(b[j] >= a[j]);
      }
    }
  }
}

TEST_CASE("count true groundings examples") {
  const Model m = ParseModel("person={A,B}\nSmokes(person)\nCancer(person)\n1 Smokes(x) => Cancer(x)\n");
  const auto sig = m.signature();
  const auto dm = m.domain_map();
  TruthAssignment all_false{{{"Smokes", {"A"}}, false}, {{"Smokes", {"B"}}, false},
                            {{"Cancer", {"A"}}, false}, {{"Cancer", {"B"}}, false}};
  CHECK(CountTrueGroundings(m.formulas[0], all_false, sig, dm) == 2);
  TruthAssignment one = all_false;
  one[{"Smokes", {"A"}}] = true;
  CHECK(CountTrueGroundings(m.formulas[0], one, sig, dm) == 1);
  TruthAssignment missing{{{"Smokes", {"A"}}, true}};
  CHECK(CodeOf([&] { CountTrueGroundings(m.formulas[0], missing, sig, dm); }) ==
        ErrorCode::kUnknownAtom);
}

TEST_CASE("friendship rule counts match substitution enumeration") {
  const Model fs = Fs();
  const DomainMap d = People(3);
  damln::Rng rng(17);
  for (int t = 0; t < 30; ++t) {
    TruthAssignment w;
    for (const auto& g : oracle::AllAtoms(fs, d)) w[g] = rng() % 2;
    const auto expected = oracle::CountTrue(fs.formulas[1].formula, fs.signature(), d,
                                            [&](const GroundAtom& g) { return w.at(g); });
    const auto n = CountTrueGroundings(fs.formulas[1], w, fs.signature(), d);
    CHECK(n == expected);
    CHECK(n <= 9);
  }
}

TEST_CASE("two-person network without evidence") {
  const Model fs = Fs();
  const GroundNetwork net =
      GroundNetwork::Build(fs, People(2), Database{}, kAllFs, {Mode::kDaMln});
  CHECK(net.num_atoms() == 8);
  CHECK(net.free_atoms().size() == 8);
  CHECK(FeaturesOf(net, 0) == 2);
  CHECK(FeaturesOf(net, 1) == 4);
  CHECK(FeaturesOf(net, 2) == 2);
  CHECK(FeaturesOf(net, 3) == 2);
  CHECK(FeaturesOf(net, 4) == 4);
  for (FeatureId f = 0; f < net.num_features(); ++f) {
    if (net.feature_formula(f) == 1) CHECK(net.feature_weight(f) == 0.7 / 2);
    if (net.feature_formula(f) == 0) CHECK(net.feature_weight(f) == 1.1);
  }
  CHECK(net.connection_vector(1) == ConnectionVector{1, 2, 2});
  CHECK(net.pruned_constant() == 0.0);
}

TEST_CASE("friendship features are pruned by false friendship evidence") {
  const Model fs = Fs();
  Database ev;
  const DomainMap people = People(2);
  for (const auto& a : people.at("person")) {
    for (const auto& b : people.at("person")) ev.Assert({"Friends", {a, b}}, false);
  }
  const GroundNetwork net =
      GroundNetwork::Build(fs, People(2), ev, {"Smokes", "Cancer"}, {Mode::kDaMln});
  CHECK(FeaturesOf(net, 1) == 0);
  CHECK(FeaturesOf(net, 4) == 0);
  CHECK(net.pruned_true_count(1) == 4);
  CHECK(net.pruned_true_count(4) == 0);
  CHECK(net.pruned_constant() == doctest::Approx(4 * 0.7 / 2));
  CHECK(net.free_atoms().size() == 4);
  for (FeatureId f = 0; f < net.num_features(); ++f) {
    bool touches_free = false;
    for (AtomId a : net.feature_atoms(f)) touches_free = touches_free || !net.is_evidence(a);
    CHECK(touches_free);
  }
}

TEST_CASE("index lists exactly the features containing each atom") {
  const Model fs = Fs();
  const GroundNetwork net =
      GroundNetwork::Build(fs, People(3), Database{}, kAllFs, {Mode::kDaMln});
  for (AtomId a = 0; a < net.num_atoms(); ++a) {
    std::set<FeatureId> expected;
    for (FeatureId f = 0; f < net.num_features(); ++f) {
      for (AtomId b : net.feature_atoms(f)) {
        if (b == a) expected.insert(f);
      }
    }
    const auto listed = net.features_of(a);
    CHECK(std::set<FeatureId>(listed.begin(), listed.end()) == expected);
    CHECK(listed.size() == expected.size());
  }
}

TEST_CASE("mln mode keeps raw weights") {
  const Model pq = PQ(1.25);
  const GroundNetwork net =
      GroundNetwork::Build(pq, PQDomains(2, 2), Database{}, {"P", "Q"}, {Mode::kMln});
  REQUIRE(net.num_features() > 0);
  for (FeatureId f = 0; f < net.num_features(); ++f) CHECK(net.feature_weight(f) == 1.25);
  const GroundNetwork da =
      GroundNetwork::Build(pq, PQDomains(2, 2), Database{}, {"P", "Q"}, {Mode::kDaMln});
  CHECK(da.effective_weight(0) == 1.25 / 2);
}

TEST_CASE("log weight examples") {
  const Model pq = PQ(1.5);
  const GroundNetwork net =
      GroundNetwork::Build(pq, PQDomains(2, 3), Database{}, {"P", "Q"}, {Mode::kDaMln});
  CHECK(net.scale(0) == 3.0);
  World w(net);
  w.Set(*net.FindAtom({"P", {"X0", "Y0"}}), true);
  w.Set(*net.FindAtom({"P", {"X0", "Y1"}}), true);
  CHECK(LogUnnormalizedWeight(net, w) == 2.0);

  const Model zero = Fs({0, 0, 0, 0, 0});
  const GroundNetwork zn =
      GroundNetwork::Build(zero, People(3), Database{}, kAllFs, {Mode::kDaMln});
  damln::Rng rng(4);
  for (int t = 0; t < 20; ++t) CHECK(LogUnnormalizedWeight(zn, RandomWorld(zn, rng)) == 0.0);
}

TEST_CASE("log weight matches unpruned recomputation") {
  damln::Rng rng(21);
  const DomainMap d = People(3);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> wts(5);
    for (double& x : wts) x = oracle::Uniform(rng, -2, 2);
    const Model fs = Fs(wts);
    Database ev;
    for (const auto& g : oracle::AllAtoms(fs, d)) {
      if (rng() % 3 == 0) ev.Assert(g, rng() % 2);
    }
    for (auto mode : {Mode::kDaMln, Mode::kMln}) {
      for (auto agg : {Aggregator::kMax, Aggregator::kSum}) {
        const GroundNetwork net = GroundNetwork::Build(fs, d, ev, kAllFs, {mode, agg});
        const auto scales = oracle::Scales(fs, d, mode, agg);
        const World w = RandomWorld(net, rng);
        CHECK(LogUnnormalizedWeight(net, w) ==
              doctest::Approx(oracle::LogWeight(fs, d, scales, w.ToAssignment())).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("pruning is sound on every consistent world") {
  damln::Rng rng(55);
  int checked = 0;
  for (int t = 0; t < 30; ++t) {
    oracle::ModelShape shape;
    shape.max_constants = 2;
    const Model m = oracle::RandomModel(rng, shape);
    const DomainMap d = m.domain_map();
    const auto atoms = oracle::AllAtoms(m, d);
    Database ev;
    for (const auto& g : atoms) {
      if (rng() % 2) ev.Assert(g, rng() % 2);
    }
    const GroundNetwork net = GroundNetwork::Build(m, d, ev, AllPredicates(m), {Mode::kDaMln});
    const auto& free = net.free_atoms();
    if (free.size() > 10) continue;
    const auto scales = oracle::Scales(m, d, Mode::kDaMln, Aggregator::kMax);
    for (std::size_t mask = 0; mask < (std::size_t{1} << free.size()); ++mask) {
      World w(net);
      for (std::size_t j = 0; j < free.size(); ++j) w.Set(free[j], (mask >> j) & 1);
      CHECK(LogUnnormalizedWeight(net, w) ==
            doctest::Approx(oracle::LogWeight(m, d, scales, w.ToAssignment())).epsilon(1e-12));
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("mln mode equals unit scales bit for bit") {
  damln::Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    const Model m = oracle::RandomModel(rng);
    const DomainMap d = m.domain_map();
    const auto preds = AllPredicates(m);
    const GroundNetwork mln = GroundNetwork::Build(m, d, Database{}, preds, {Mode::kMln});
    GroundNetwork da = GroundNetwork::Build(m, d, Database{}, preds, {Mode::kDaMln});
    da.SetScales(std::vector<double>(m.formulas.size(), 1.0));
    for (int k = 0; k < 5; ++k) {
      const World w = RandomWorld(mln, rng);
      CHECK(LogUnnormalizedWeight(mln, w.values()) == LogUnnormalizedWeight(da, w.values()));
    }
  }
}

TEST_CASE("grounding errors") {
  const Model fs = Fs();
  CHECK(CodeOf([&] {
          GroundNetwork::Build(fs, fs.domain_map(), Database{}, kAllFs, {Mode::kDaMln});
        }) == ErrorCode::kDomainEmpty);
  GroundingOptions tiny{Mode::kDaMln, Aggregator::kMax, 1024};
  CHECK(CodeOf([&] { GroundNetwork::Build(fs, People(30), Database{}, kAllFs, tiny); }) ==
        ErrorCode::kMemoryBudgetExceeded);
  Database outside;
  outside.Assert({"Smokes", {"Nobody"}}, true);
  CHECK(CodeOf([&] {
          GroundNetwork::Build(fs, People(2), outside, kAllFs, {Mode::kDaMln});
        }) == ErrorCode::kUnknownAtom);
  CHECK(CodeOf([&] {
          GroundNetwork::Build(fs, People(2), Database{}, {"Drinks"}, {Mode::kDaMln});
        }) == ErrorCode::kUnknownPredicate);
}

TEST_CASE("evidence atoms cannot be changed") {
  const Model fs = Fs();
  Database ev;
  ev.Assert({"Smokes", {"P0"}}, true);
  const GroundNetwork net = GroundNetwork::Build(fs, People(2), ev, kAllFs, {Mode::kDaMln});
  World w(net);
  const AtomId s0 = *net.FindAtom({"Smokes", {"P0"}});
  CHECK(w.value(s0));
  CHECK(CodeOf([&] { w.Set(s0, false); }) == ErrorCode::kEvidenceAtom);
}
