#include <functional>

#include "doctest.h"
#include "oracles.h"

#include "damln/error.h"
#include "damln/logic.h"
#include "damln/mln_io.h"

using namespace damln;

namespace {

Formula F(const Model& m, int i) { return m.formulas.at(i).formula; }

Model FsLike() {
  return ParseModel(
      "person = {A, B}\n"
      "Friends(person, person)\nSmokes(person)\nCancer(person)\n"
      "1 Smokes(x) => Cancer(x)\n"
      "1 Friends(x, y) => (Smokes(x) <=> Smokes(y))\n");
}

Model PQ() {
  return ParseModel("xt = {a1}\nyt = {b1}\nP(xt, yt)\nQ(xt)\n1 P(x, y) => Q(x)\n");
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

}  // namespace

TEST_CASE("free variables of the example formulas") {
  const Model fs = FsLike();
  const auto sig = fs.signature();
  CHECK(FreeVariables(F(fs, 0), sig) == std::vector<TypedVariable>{{"x", "person"}});
  CHECK(FreeVariables(F(fs, 1), sig) ==
        std::vector<TypedVariable>{{"x", "person"}, {"y", "person"}});

  const Model pq = PQ();
  CHECK(FreeVariables(F(pq, 0), pq.signature()) ==
        std::vector<TypedVariable>{{"x", "xt"}, {"y", "yt"}});
}

TEST_CASE("type conflict is an error") {
  const Model pq = PQ();
  Formula bad = Formula::And(Formula::MakeAtom({"P", {Term::Variable("x"), Term::Variable("y")}}),
                             Formula::MakeAtom({"Q", {Term::Variable("y")}}));
  CHECK(CodeOf([&] { FreeVariables(bad, pq.signature()); }) == ErrorCode::kTypeConflict);
}

TEST_CASE("type inference is deterministic") {
  damln::Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const Model m = oracle::RandomModel(rng);
    for (const auto& wf : m.formulas) {
      CHECK(FreeVariables(wf.formula, m.signature()) ==
            FreeVariables(wf.formula, m.signature()));
    }
  }
}

TEST_CASE("substitute examples") {
  const Model fs = FsLike();
  const Formula g = Substitute(F(fs, 0), {{"x", "A"}}, fs.signature(), fs.domain_map());
  CHECK(FormulaToString(g) == "Smokes(A) => Cancer(A)");

  Model pq = ParseModel("xt = {a}\nyt = {b}\nP(xt, yt)\nQ(xt)\n1 P(x, y) => Q(x)\n");
  const Formula h = Substitute(F(pq, 0), {{"x", "a"}, {"y", "b"}}, pq.signature(),
                               pq.domain_map());
  CHECK(h.is_ground());
  CHECK(h.children()[0].atom().arguments ==
        std::vector<Term>{Term::Constant("a"), Term::Constant("b")});
  CHECK(h.children()[1].atom().arguments == std::vector<Term>{Term::Constant("a")});

  CHECK(CodeOf([&] { Substitute(F(pq, 0), {{"x", "a"}}, pq.signature(), pq.domain_map()); }) ==
        ErrorCode::kIncompleteBinding);
  CHECK(CodeOf([&] {
          Substitute(F(pq, 0), {{"x", "b"}, {"y", "b"}}, pq.signature(), pq.domain_map());
        }) == ErrorCode::kWrongDomainConstant);
}

TEST_CASE("substitute leaves no free variables") {
  damln::Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const Model m = oracle::RandomModel(rng);
    const auto sig = m.signature();
    const auto domains = m.domain_map();
    for (const auto& wf : m.formulas) {
      for (const Binding& b : oracle::Bindings(oracle::Variables(wf.formula, sig), domains)) {
        const Formula g = Substitute(wf.formula, b, sig, domains);
        CHECK(g.is_ground());
        CHECK(FreeVariables(g, sig).empty());
      }
    }
  }
}

TEST_CASE("evaluate examples") {
  const Model fs = FsLike();
  const auto sig = fs.signature();
  const auto dm = fs.domain_map();
  const Formula imp = Substitute(F(fs, 0), {{"x", "A"}}, sig, dm);
  const GroundAtom sa{"Smokes", {"A"}}, ca{"Cancer", {"A"}};
  CHECK(Evaluate(imp, {{sa, false}, {ca, false}}));
  CHECK_FALSE(Evaluate(imp, {{sa, true}, {ca, false}}));

  const Formula fr = Substitute(F(fs, 1), {{"x", "A"}, {"y", "B"}}, sig, dm);
  CHECK(Evaluate(fr, {{{"Friends", {"A", "B"}}, true}, {sa, true}, {{"Smokes", {"B"}}, true}}));

  CHECK(CodeOf([&] { Evaluate(imp, {{sa, true}}); }) == ErrorCode::kUnknownAtom);
}

TEST_CASE("evaluate agrees with truth tables on small ground formulas") {
  // Ground formulas over at most four distinct atoms, every assignment.
  damln::Rng rng(99);
  const Model base = ParseModel("t = {A, B}\nR(t)\nS(t)\nZ\n0 Z\n");
  int checked = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<std::vector<std::string>> vars{{"x", "y"}};
    const Formula f = oracle::RandomFormula(rng, base, 3, vars);
    const Formula g =
        Substitute(f, {{"x", "A"}, {"y", "B"}}, base.signature(), base.domain_map());
    std::vector<GroundAtom> atoms;
    for (const Atom* a : g.AtomOccurrences()) {
      GroundAtom ga = ToGroundAtom(*a);
      if (std::find(atoms.begin(), atoms.end(), ga) == atoms.end()) atoms.push_back(ga);
    }
    if (atoms.size() > 4) continue;
    for (unsigned mask = 0; mask < (1u << atoms.size()); ++mask) {
      TruthAssignment w;
      for (std::size_t j = 0; j < atoms.size(); ++j) w[atoms[j]] = (mask >> j) & 1;
      const bool expected =
          oracle::Holds(g, {}, [&](const GroundAtom& a) { return w.at(a); });
      CHECK(Evaluate(g, w) == expected);
      ++checked;
    }
  }
  CHECK(checked > 500);
}

TEST_CASE("lexical convention for variables") {
  CHECK(IsVariableName("x"));
  CHECK(IsVariableName("person1"));
  CHECK_FALSE(IsVariableName("Anna"));
  CHECK_FALSE(IsVariableName("7"));
}

TEST_CASE("zero-arity atoms print without parentheses when ground") {
  CHECK(GroundAtom{"Rain", {}}.ToString() == "Rain");
  CHECK(GroundAtom{"F", {"A", "B"}}.ToString() == "F(A,B)");
}
