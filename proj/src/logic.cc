#include "damln/logic.h"

#include <algorithm>
#include <cctype>
#include <set>
#include <utility>

#include "damln/error.h"

namespace damln {
namespace {

int Precedence(Connective c) {
  switch (c) {
    case Connective::kIff: return 1;
    case Connective::kImplies: return 2;
    case Connective::kOr: return 3;
    case Connective::kAnd: return 4;
    case Connective::kNot: return 5;
    case Connective::kAtom: return 6;
  }
  return 0;
}

const char* Spelling(Connective c) {
  switch (c) {
    case Connective::kIff: return " <=> ";
    case Connective::kImplies: return " => ";
    case Connective::kOr: return " v ";
    case Connective::kAnd: return " ^ ";
    default: return "";
  }
}

void CollectOccurrences(const Formula& f, std::vector<const Atom*>& out) {
  if (f.is_atom()) {
    out.push_back(&f.atom());
    return;
  }
  for (const Formula& child : f.children()) CollectOccurrences(child, out);
}

const PredicateSchema& LookupSchema(const Signature& signature,
                                    const std::string& name) {
  auto it = signature.find(name);
  if (it == signature.end()) {
    throw Error(ErrorCode::kUnknownPredicate,
                "predicate '" + name + "' is not declared");
  }
  return it->second;
}

bool IsPlainConstant(const std::string& s) {
  if (s.empty()) return false;
  unsigned char first = static_cast<unsigned char>(s[0]);
  if (!(std::isupper(first) || std::isdigit(first))) return false;
  return std::all_of(s.begin(), s.end(), [](char ch) {
    unsigned char c = static_cast<unsigned char>(ch);
    return std::isalnum(c) || c == '_';
  });
}

void AppendFormula(const Formula& f, std::string& out);

void AppendChild(const Formula& child, bool needs_parens, std::string& out) {
  if (needs_parens) out += '(';
  AppendFormula(child, out);
  if (needs_parens) out += ')';
}

void AppendFormula(const Formula& f, std::string& out) {
  switch (f.kind()) {
    case Connective::kAtom:
      out += AtomToString(f.atom());
      return;
    case Connective::kNot: {
      out += '!';
      const Formula& child = f.children()[0];
      AppendChild(child, Precedence(child.kind()) < Precedence(f.kind()), out);
      return;
    }
    default: {
      const int own = Precedence(f.kind());
      const Formula& lhs = f.children()[0];
      const Formula& rhs = f.children()[1];
      const bool right_assoc = f.kind() == Connective::kImplies;
      const int lp = Precedence(lhs.kind());
      const int rp = Precedence(rhs.kind());
      AppendChild(lhs, lp < own || (lp == own && right_assoc), out);
      out += Spelling(f.kind());
      AppendChild(rhs, rp < own || (rp == own && !right_assoc), out);
      return;
    }
  }
}

bool EvaluateNode(const Formula& f, const TruthAssignment& world) {
  switch (f.kind()) {
    case Connective::kAtom: {
      if (!f.atom().is_ground()) {
        throw Error(ErrorCode::kIncompleteBinding,
                    "cannot evaluate non-ground atom " + AtomToString(f.atom()));
      }
      GroundAtom g = ToGroundAtom(f.atom());
      auto it = world.find(g);
      if (it == world.end()) {
        throw Error(ErrorCode::kUnknownAtom,
                    "no truth value for " + g.ToString());
      }
      return it->second;
    }
    case Connective::kNot:
      return !EvaluateNode(f.children()[0], world);
    case Connective::kAnd:
      return EvaluateNode(f.children()[0], world) &&
             EvaluateNode(f.children()[1], world);
    case Connective::kOr:
      return EvaluateNode(f.children()[0], world) ||
             EvaluateNode(f.children()[1], world);
    case Connective::kImplies:
      return !EvaluateNode(f.children()[0], world) ||
             EvaluateNode(f.children()[1], world);
    case Connective::kIff:
      return EvaluateNode(f.children()[0], world) ==
             EvaluateNode(f.children()[1], world);
  }
  return false;
}

}  // namespace

bool Atom::is_ground() const {
  return std::none_of(arguments.begin(), arguments.end(),
                      [](const Term& t) { return t.is_variable(); });
}

std::string GroundAtom::ToString() const {
  if (arguments.empty()) return predicate;
  std::string out = predicate + "(";
  for (std::size_t i = 0; i < arguments.size(); ++i) {
    if (i > 0) out += ',';
    out += ConstantToString(arguments[i]);
  }
  out += ')';
  return out;
}

Formula Formula::MakeAtom(Atom atom) {
  Formula f;
  f.kind_ = Connective::kAtom;
  f.atom_ = std::move(atom);
  return f;
}

Formula Formula::Not(Formula operand) {
  Formula f;
  f.kind_ = Connective::kNot;
  f.children_.push_back(std::move(operand));
  return f;
}

Formula Formula::Binary(Connective op, Formula lhs, Formula rhs) {
  if (op == Connective::kAtom || op == Connective::kNot) {
    throw Error(ErrorCode::kInvalidArgument, "not a binary connective");
  }
  Formula f;
  f.kind_ = op;
  f.children_.push_back(std::move(lhs));
  f.children_.push_back(std::move(rhs));
  return f;
}

Formula Formula::And(Formula lhs, Formula rhs) {
  return Binary(Connective::kAnd, std::move(lhs), std::move(rhs));
}
Formula Formula::Or(Formula lhs, Formula rhs) {
  return Binary(Connective::kOr, std::move(lhs), std::move(rhs));
}
Formula Formula::Implies(Formula lhs, Formula rhs) {
  return Binary(Connective::kImplies, std::move(lhs), std::move(rhs));
}
Formula Formula::Iff(Formula lhs, Formula rhs) {
  return Binary(Connective::kIff, std::move(lhs), std::move(rhs));
}

std::vector<const Atom*> Formula::AtomOccurrences() const {
  std::vector<const Atom*> out;
  CollectOccurrences(*this, out);
  return out;
}

bool Formula::is_ground() const {
  for (const Atom* a : AtomOccurrences()) {
    if (!a->is_ground()) return false;
  }
  return true;
}

bool IsVariableName(std::string_view name) {
  return !name.empty() && std::islower(static_cast<unsigned char>(name[0]));
}

void CheckAtom(const Atom& atom, const Signature& signature) {
  const PredicateSchema& schema = LookupSchema(signature, atom.predicate);
  if (schema.arity() != atom.arguments.size()) {
    throw Error(ErrorCode::kArityMismatch,
                "predicate '" + atom.predicate + "' expects " +
                    std::to_string(schema.arity()) + " argument(s), got " +
                    std::to_string(atom.arguments.size()));
  }
}

std::vector<TypedVariable> FreeVariables(const Formula& f,
                                         const Signature& signature) {
  std::vector<TypedVariable> out;
  for (const Atom* atom : f.AtomOccurrences()) {
    CheckAtom(*atom, signature);
    const PredicateSchema& schema = signature.at(atom->predicate);
    for (std::size_t k = 0; k < atom->arguments.size(); ++k) {
      const Term& term = atom->arguments[k];
      if (!term.is_variable()) continue;
      const std::string& type = schema.argument_types[k];
      auto it = std::find_if(out.begin(), out.end(), [&](const TypedVariable& v) {
        return v.name == term.name;
      });
      if (it == out.end()) {
        out.push_back({term.name, type});
      } else if (it->domain != type) {
        throw Error(ErrorCode::kTypeConflict,
                    "variable '" + term.name + "' used as both '" +
                        it->domain + "' and '" + type + "'");
      }
    }
  }
  return out;
}

Formula Substitute(const Formula& f, const Binding& binding,
                   const Signature& signature, const DomainMap& domains) {
  std::vector<TypedVariable> vars = FreeVariables(f, signature);
  for (const TypedVariable& v : vars) {
    auto bound = binding.find(v.name);
    if (bound == binding.end()) {
      throw Error(ErrorCode::kIncompleteBinding,
                  "variable '" + v.name + "' is unbound");
    }
    auto dom = domains.find(v.domain);
    if (dom == domains.end() ||
        std::find(dom->second.begin(), dom->second.end(), bound->second) ==
            dom->second.end()) {
      throw Error(ErrorCode::kWrongDomainConstant,
                  "constant '" + bound->second + "' is not in domain '" +
                      v.domain + "' of variable '" + v.name + "'");
    }
  }

  if (f.is_atom()) {
    Atom ground = f.atom();
    for (Term& t : ground.arguments) {
      if (t.is_variable()) t = Term::Constant(binding.at(t.name));
    }
    return Formula::MakeAtom(std::move(ground));
  }
  if (f.kind() == Connective::kNot) {
    return Formula::Not(Substitute(f.children()[0], binding, signature, domains));
  }
  return Formula::Binary(
      f.kind(), Substitute(f.children()[0], binding, signature, domains),
      Substitute(f.children()[1], binding, signature, domains));
}

GroundAtom ToGroundAtom(const Atom& atom) {
  GroundAtom g;
  g.predicate = atom.predicate;
  g.arguments.reserve(atom.arguments.size());
  for (const Term& t : atom.arguments) {
    if (t.is_variable()) {
      throw Error(ErrorCode::kIncompleteBinding,
                  "atom " + AtomToString(atom) + " is not ground");
    }
    g.arguments.push_back(t.name);
  }
  return g;
}

bool Evaluate(const Formula& ground, const TruthAssignment& world) {
  return EvaluateNode(ground, world);
}

std::string ConstantToString(const std::string& constant) {
  if (IsPlainConstant(constant)) return constant;
  std::string out = "\"";
  for (char c : constant) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

std::string AtomToString(const Atom& atom) {
  if (atom.arguments.empty()) return atom.predicate + "()";
  std::string out = atom.predicate + "(";
  for (std::size_t i = 0; i < atom.arguments.size(); ++i) {
    if (i > 0) out += ',';
    const Term& t = atom.arguments[i];
    out += t.is_variable() ? t.name : ConstantToString(t.name);
  }
  out += ')';
  return out;
}

std::string FormulaToString(const Formula& f) {
  std::string out;
  AppendFormula(f, out);
  return out;
}

}  // namespace damln
