#include "damln/mln_io.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "damln/error.h"

namespace damln {
namespace {

enum class Tok {
  kIdent,
  kQuoted,
  kNumber,
  kLParen,
  kRParen,
  kComma,
  kLBrace,
  kRBrace,
  kEquals,
  kNot,
  kAnd,
  kOr,
  kImplies,
  kIff,
  kEnd,
};

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  int column = 0;
};

bool IsIdentStart(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool IsIdentChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}
bool IsDigit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

// Removes a trailing `//` comment that is not inside a quoted constant.
std::string_view StripComment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '\\') ++i;
      else if (c == '"') quoted = false;
    } else if (c == '"') {
      quoted = true;
    } else if (c == '/' && i + 1 < line.size() && line[i + 1] == '/') {
      return line.substr(0, i);
    }
  }
  return line;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> SplitLines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

class Lexer {
 public:
  Lexer(std::string_view line, int line_no) : line_no_(line_no) {
    Tokenize(line);
  }

  const Token& Peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(pos_ + ahead, tokens_.size() - 1);
    return tokens_[i];
  }
  Token Next() {
    Token t = Peek();
    if (pos_ < tokens_.size() - 1) ++pos_;
    return t;
  }
  bool AtEnd() const { return Peek().kind == Tok::kEnd; }

  [[noreturn]] void Fail(const std::string& message) const {
    throw Error(ErrorCode::kSyntaxError, message, line_no_, Peek().column);
  }

  Token Expect(Tok kind, const char* what) {
    if (Peek().kind != kind) {
      Fail(std::string("expected ") + what + DescribeFound());
    }
    return Next();
  }

  std::string DescribeFound() const {
    const Token& t = Peek();
    if (t.kind == Tok::kEnd) return ", found end of line";
    return ", found '" + t.text + "'";
  }

  int line() const { return line_no_; }

 private:
  void Push(Tok kind, std::string text, int column) {
    tokens_.push_back({kind, std::move(text), column});
  }

  void Tokenize(std::string_view s) {
    std::size_t i = 0;
    auto starts_with = [&](std::string_view p) {
      return s.substr(i, p.size()) == p;
    };
    while (i < s.size()) {
      char c = s[i];
      const int col = static_cast<int>(i) + 1;
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else if (IsIdentStart(c)) {
        std::size_t j = i;
        while (j < s.size() && IsIdentChar(s[j])) ++j;
        Push(Tok::kIdent, std::string(s.substr(i, j - i)), col);
        i = j;
      } else if (IsDigit(c) ||
                 ((c == '-' || c == '+' || c == '.') && i + 1 < s.size() &&
                  (IsDigit(s[i + 1]) ||
                   (s[i + 1] == '.' && i + 2 < s.size() && IsDigit(s[i + 2]))))) {
        std::size_t j = i;
        if (s[j] == '-' || s[j] == '+') ++j;
        while (j < s.size() && IsDigit(s[j])) ++j;
        if (j < s.size() && s[j] == '.') {
          ++j;
          while (j < s.size() && IsDigit(s[j])) ++j;
        }
        if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
          std::size_t k = j + 1;
          if (k < s.size() && (s[k] == '-' || s[k] == '+')) ++k;
          if (k < s.size() && IsDigit(s[k])) {
            while (k < s.size() && IsDigit(s[k])) ++k;
            j = k;
          }
        }
        // Constants such as 1st or 42_b are a single token.
        while (j < s.size() && IsIdentChar(s[j])) ++j;
        Push(Tok::kNumber, std::string(s.substr(i, j - i)), col);
        i = j;
      } else if (c == '"') {
        std::string value;
        std::size_t j = i + 1;
        bool closed = false;
        while (j < s.size()) {
          if (s[j] == '\\' && j + 1 < s.size()) {
            value += s[j + 1];
            j += 2;
          } else if (s[j] == '"') {
            closed = true;
            ++j;
            break;
          } else {
            value += s[j++];
          }
        }
        if (!closed) {
          throw Error(ErrorCode::kSyntaxError, "unterminated quoted constant",
                      line_no_, col);
        }
        Push(Tok::kQuoted, value, col);
        i = j;
      } else if (starts_with("<=>")) {
        Push(Tok::kIff, "<=>", col);
        i += 3;
      } else if (starts_with("=>")) {
        Push(Tok::kImplies, "=>", col);
        i += 2;
      } else if (starts_with("⇔")) {
        Push(Tok::kIff, "⇔", col);
        i += 3;
      } else if (starts_with("⇒")) {
        Push(Tok::kImplies, "⇒", col);
        i += 3;
      } else if (starts_with("∧")) {
        Push(Tok::kAnd, "∧", col);
        i += 3;
      } else if (starts_with("∨")) {
        Push(Tok::kOr, "∨", col);
        i += 3;
      } else if (starts_with("¬")) {
        Push(Tok::kNot, "¬", col);
        i += 2;
      } else {
        Tok kind;
        switch (c) {
          case '(': kind = Tok::kLParen; break;
          case ')': kind = Tok::kRParen; break;
          case ',': kind = Tok::kComma; break;
          case '{': kind = Tok::kLBrace; break;
          case '}': kind = Tok::kRBrace; break;
          case '=': kind = Tok::kEquals; break;
          case '!': kind = Tok::kNot; break;
          case '^':
          case '&': kind = Tok::kAnd; break;
          case '|': kind = Tok::kOr; break;
          default:
            throw Error(ErrorCode::kSyntaxError,
                        std::string("unexpected character '") + c + "'",
                        line_no_, col);
        }
        Push(kind, std::string(1, c), col);
        ++i;
      }
    }
    Push(Tok::kEnd, "", static_cast<int>(s.size()) + 1);
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  int line_no_;
};

bool IsOrKeyword(const Lexer& lex) {
  return lex.Peek().kind == Tok::kIdent && lex.Peek().text == "v";
}

bool IsConstantToken(const Token& t) {
  return t.kind == Tok::kIdent || t.kind == Tok::kQuoted ||
         t.kind == Tok::kNumber;
}

class FormulaParser {
 public:
  explicit FormulaParser(Lexer& lex) : lex_(lex) {}

  Formula ParseIff() {
    Formula lhs = ParseImplies();
    while (lex_.Peek().kind == Tok::kIff) {
      lex_.Next();
      lhs = Formula::Iff(std::move(lhs), ParseImplies());
    }
    return lhs;
  }

 private:
  Formula ParseImplies() {
    Formula lhs = ParseOr();
    if (lex_.Peek().kind == Tok::kImplies) {
      lex_.Next();
      return Formula::Implies(std::move(lhs), ParseImplies());
    }
    return lhs;
  }

  Formula ParseOr() {
    Formula lhs = ParseAnd();
    while (lex_.Peek().kind == Tok::kOr || IsOrKeyword(lex_)) {
      lex_.Next();
      lhs = Formula::Or(std::move(lhs), ParseAnd());
    }
    return lhs;
  }

  Formula ParseAnd() {
    Formula lhs = ParseUnary();
    while (lex_.Peek().kind == Tok::kAnd) {
      lex_.Next();
      lhs = Formula::And(std::move(lhs), ParseUnary());
    }
    return lhs;
  }

  Formula ParseUnary() {
    if (++depth_ > kMaxDepth) lex_.Fail("formula nested too deeply");
    Formula out = ParseUnaryInner();
    --depth_;
    return out;
  }

  Formula ParseUnaryInner() {
    const Token& t = lex_.Peek();
    if (t.kind == Tok::kNot) {
      lex_.Next();
      return Formula::Not(ParseUnary());
    }
    if (t.kind == Tok::kLParen) {
      lex_.Next();
      Formula inner = ParseIff();
      lex_.Expect(Tok::kRParen, "')'");
      return inner;
    }
    if (t.kind == Tok::kIdent && !IsOrKeyword(lex_)) {
      Atom atom;
      atom.predicate = lex_.Next().text;
      if (lex_.Peek().kind == Tok::kLParen) {
        lex_.Next();
        if (lex_.Peek().kind != Tok::kRParen) {
          while (true) {
            atom.arguments.push_back(ParseTerm());
            if (lex_.Peek().kind != Tok::kComma) break;
            lex_.Next();
          }
        }
        lex_.Expect(Tok::kRParen, "')' or ','");
      }
      return Formula::MakeAtom(std::move(atom));
    }
    lex_.Fail("expected an atom, '!' or '('" + lex_.DescribeFound());
  }

  Term ParseTerm() {
    const Token& t = lex_.Peek();
    if (!IsConstantToken(t)) {
      lex_.Fail("expected a variable or constant" + lex_.DescribeFound());
    }
    Token tok = lex_.Next();
    if (tok.kind == Tok::kIdent && IsVariableName(tok.text)) {
      return Term::Variable(tok.text);
    }
    return Term::Constant(tok.text);
  }

  static constexpr int kMaxDepth = 512;
  Lexer& lex_;
  int depth_ = 0;
};

double ParseWeight(const Token& tok, int line) {
  const char* begin = tok.text.c_str();
  char* end = nullptr;
  double w = std::strtod(begin, &end);
  if (end != begin + tok.text.size()) {
    throw Error(ErrorCode::kSyntaxError, "malformed weight '" + tok.text + "'",
                line, tok.column);
  }
  if (!std::isfinite(w)) {
    throw Error(ErrorCode::kSyntaxError, "weight '" + tok.text + "' is not finite",
                line, tok.column);
  }
  return w;
}

// Re-throws an error that has no position with the given line attached.
template <typename Fn>
auto WithLine(int line, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.line() > 0) throw;
    std::string msg = e.what();
    std::string prefix = std::string(ErrorCodeName(e.code())) + ": ";
    if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
    throw Error(e.code(), msg, line);
  }
}

void ParseDirective(std::string_view body, int line, ModelSettings& settings) {
  std::istringstream in{std::string(body)};
  std::string key, value, extra;
  in >> key >> value;
  if (key.empty() || value.empty() || (in >> extra)) {
    throw Error(ErrorCode::kSyntaxError, "malformed directive", line);
  }
  if (key == "mode") {
    settings.mode = WithLine(line, [&] { return ParseMode(value); });
  } else if (key == "aggregator") {
    settings.aggregator = WithLine(line, [&] { return ParseAggregator(value); });
  } else {
    throw Error(ErrorCode::kSyntaxError, "unknown directive '#" + key + "'", line);
  }
}

std::vector<std::string> ParseConstantList(Lexer& lex) {
  std::vector<std::string> out;
  lex.Expect(Tok::kLBrace, "'{'");
  if (lex.Peek().kind != Tok::kRBrace) {
    while (true) {
      if (!IsConstantToken(lex.Peek())) {
        lex.Fail("expected a constant" + lex.DescribeFound());
      }
      out.push_back(lex.Next().text);
      if (lex.Peek().kind != Tok::kComma) break;
      lex.Next();
    }
  }
  lex.Expect(Tok::kRBrace, "'}' or ','");
  return out;
}

void ValidateFormula(const WeightedFormula& wf, const Model& model,
                     const Signature& sig, const DomainMap& domains) {
  FreeVariables(wf.formula, sig);
  for (const Atom* atom : wf.formula.AtomOccurrences()) {
    const PredicateSchema& schema = sig.at(atom->predicate);
    for (std::size_t k = 0; k < atom->arguments.size(); ++k) {
      const Term& t = atom->arguments[k];
      if (t.is_variable()) continue;
      const auto& consts = domains.at(schema.argument_types[k]);
      if (std::find(consts.begin(), consts.end(), t.name) == consts.end()) {
        throw Error(ErrorCode::kWrongDomainConstant,
                    "constant '" + t.name + "' is not in domain '" +
                        schema.argument_types[k] + "'");
      }
    }
  }
  (void)model;
}

GroundAtom ParseGroundAtomTokens(Lexer& lex) {
  GroundAtom atom;
  const Token& head = lex.Peek();
  if (head.kind != Tok::kIdent) {
    lex.Fail("expected a predicate name" + lex.DescribeFound());
  }
  atom.predicate = lex.Next().text;
  if (lex.Peek().kind == Tok::kLParen) {
    lex.Next();
    if (lex.Peek().kind != Tok::kRParen) {
      while (true) {
        if (!IsConstantToken(lex.Peek())) {
          lex.Fail("expected a constant" + lex.DescribeFound());
        }
        atom.arguments.push_back(lex.Next().text);
        if (lex.Peek().kind != Tok::kComma) break;
        lex.Next();
      }
    }
    lex.Expect(Tok::kRParen, "')' or ','");
  }
  return atom;
}

struct LiteralLine {
  GroundAtom atom;
  bool value = true;
  int line = 0;
  int column = 0;
};

// Shared line scanner for database files. Calls `on_literal` per literal and
// records closed-world directives into `db`. With a signature, directives
// must name declared predicates.
template <typename OnLiteral>
void ScanDatabase(std::string_view text, Database& db, const Signature* sig,
                  OnLiteral&& on_literal) {
  int line_no = 0;
  for (std::string_view raw : SplitLines(text)) {
    ++line_no;
    std::string_view line = Trim(StripComment(raw));
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream in{std::string(line.substr(1))};
      std::string key, pred, extra;
      in >> key >> pred;
      if ((key != "closed" && key != "open") || pred.empty() || (in >> extra)) {
        throw Error(ErrorCode::kSyntaxError, "malformed directive", line_no);
      }
      if (sig && !sig->count(pred)) {
        throw Error(ErrorCode::kUnknownPredicate,
                    "directive names undeclared predicate '" + pred + "'", line_no);
      }
      db.closed_world[pred] = key == "closed";
      continue;
    }
    Lexer lex(line, line_no);
    LiteralLine lit;
    lit.line = line_no;
    lit.column = lex.Peek().column;
    if (lex.Peek().kind == Tok::kNot) {
      lex.Next();
      lit.value = false;
    }
    lit.atom = ParseGroundAtomTokens(lex);
    if (!lex.AtEnd()) lex.Fail("unexpected trailing input" + lex.DescribeFound());
    on_literal(lit);
  }
}

void AssertAt(Database& db, const LiteralLine& lit) {
  WithLine(lit.line, [&] {
    db.Assert(lit.atom, lit.value);
    return 0;
  });
}

std::string FormatDouble(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

std::string_view ModeName(Mode mode) {
  return mode == Mode::kMln ? "mln" : "damln";
}

std::string_view AggregatorName(Aggregator a) {
  return a == Aggregator::kSum ? "sum" : "max";
}

Mode ParseMode(std::string_view text) {
  if (text == "damln" || text == "da-mln") return Mode::kDaMln;
  if (text == "mln") return Mode::kMln;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown mode '" + std::string(text) + "' (expected damln|mln)");
}

Aggregator ParseAggregator(std::string_view text) {
  if (text == "max") return Aggregator::kMax;
  if (text == "sum") return Aggregator::kSum;
  throw Error(ErrorCode::kInvalidArgument, "unknown aggregator '" +
                                               std::string(text) +
                                               "' (expected max|sum)");
}

Signature Model::signature() const {
  Signature sig;
  for (const PredicateSchema& p : predicates) sig.emplace(p.name, p);
  return sig;
}

DomainMap Model::domain_map() const {
  DomainMap out;
  for (const Domain& d : domains) out.emplace(d.name, d.constants);
  return out;
}

std::vector<double> Model::weights() const {
  std::vector<double> out;
  out.reserve(formulas.size());
  for (const WeightedFormula& f : formulas) out.push_back(f.weight);
  return out;
}

Model Model::WithWeights(const std::vector<double>& weights) const {
  if (weights.size() != formulas.size()) {
    throw Error(ErrorCode::kInvalidArgument, "weight vector has " +
                                                 std::to_string(weights.size()) +
                                                 " entries, model has " +
                                                 std::to_string(formulas.size()) +
                                                 " formulas");
  }
  Model out = *this;
  for (std::size_t i = 0; i < weights.size(); ++i) out.formulas[i].weight = weights[i];
  return out;
}

bool Database::IsClosedWorld(const std::string& predicate) const {
  auto it = closed_world.find(predicate);
  return it == closed_world.end() || it->second;
}

void Database::Assert(const GroundAtom& atom, bool value) {
  auto [it, inserted] = literals.emplace(atom, value);
  if (!inserted && it->second != value) {
    throw Error(ErrorCode::kDuplicateLiteral,
                atom.ToString() + " asserted both true and false");
  }
}

Model ParseModel(std::string_view text) {
  Model model;
  std::vector<int> predicate_lines;
  std::vector<int> formula_lines;
  std::set<std::string> domain_names;

  int line_no = 0;
  for (std::string_view raw : SplitLines(text)) {
    ++line_no;
    std::string_view line = Trim(StripComment(raw));
    if (line.empty()) continue;
    if (line.front() == '#') {
      ParseDirective(line.substr(1), line_no, model.settings);
      continue;
    }
    Lexer lex(line, line_no);
    const Token first = lex.Peek();
    if (first.kind == Tok::kNumber) {
      lex.Next();
      WeightedFormula wf{FormulaParser(lex).ParseIff(),
                         ParseWeight(first, line_no)};
      if (!lex.AtEnd()) lex.Fail("unexpected trailing input" + lex.DescribeFound());
      model.formulas.push_back(std::move(wf));
      formula_lines.push_back(line_no);
    } else if (first.kind == Tok::kIdent && lex.Peek(1).kind == Tok::kEquals) {
      lex.Next();
      lex.Next();
      Domain domain{first.text, ParseConstantList(lex)};
      if (!lex.AtEnd()) lex.Fail("unexpected trailing input" + lex.DescribeFound());
      if (!domain_names.insert(domain.name).second) {
        throw Error(ErrorCode::kSyntaxError,
                    "domain '" + domain.name + "' declared twice", line_no);
      }
      std::set<std::string> seen;
      for (const std::string& c : domain.constants) {
        if (!seen.insert(c).second) {
          throw Error(ErrorCode::kSyntaxError,
                      "constant '" + c + "' listed twice in domain '" +
                          domain.name + "'",
                      line_no);
        }
      }
      model.domains.push_back(std::move(domain));
    } else if (first.kind == Tok::kIdent) {
      lex.Next();
      if (first.text == "v") {
        throw Error(ErrorCode::kSyntaxError,
                    "'v' is reserved for disjunction", line_no, first.column);
      }
      PredicateSchema schema{first.text, {}};
      if (lex.Peek().kind == Tok::kLParen) {
        lex.Next();
        if (lex.Peek().kind != Tok::kRParen) {
          while (true) {
            schema.argument_types.push_back(
                lex.Expect(Tok::kIdent, "a domain name").text);
            if (lex.Peek().kind != Tok::kComma) break;
            lex.Next();
          }
        }
        lex.Expect(Tok::kRParen, "')' or ','");
      }
      if (!lex.AtEnd()) lex.Fail("unexpected trailing input" + lex.DescribeFound());
      for (const PredicateSchema& p : model.predicates) {
        if (p.name == schema.name) {
          throw Error(ErrorCode::kDuplicatePredicate,
                      "predicate '" + schema.name + "' declared twice", line_no);
        }
      }
      model.predicates.push_back(std::move(schema));
      predicate_lines.push_back(line_no);
    } else {
      lex.Fail("expected a domain, predicate declaration or weighted formula");
    }
  }

  for (std::size_t i = 0; i < model.predicates.size(); ++i) {
    for (const std::string& type : model.predicates[i].argument_types) {
      if (!domain_names.count(type)) {
        throw Error(ErrorCode::kUnknownDomain,
                    "predicate '" + model.predicates[i].name +
                        "' uses undeclared domain '" + type + "'",
                    predicate_lines[i]);
      }
    }
  }
  const Signature sig = model.signature();
  const DomainMap domains = model.domain_map();
  for (std::size_t i = 0; i < model.formulas.size(); ++i) {
    WithLine(formula_lines[i], [&] {
      ValidateFormula(model.formulas[i], model, sig, domains);
      return 0;
    });
  }
  return model;
}

std::string SerializeModel(const Model& model) {
  std::string out;
  out += "#mode " + std::string(ModeName(model.settings.mode)) + "\n";
  out += "#aggregator " + std::string(AggregatorName(model.settings.aggregator)) +
         "\n";
  for (const Domain& d : model.domains) {
    out += d.name + " = {";
    for (std::size_t i = 0; i < d.constants.size(); ++i) {
      if (i > 0) out += ", ";
      out += ConstantToString(d.constants[i]);
    }
    out += "}\n";
  }
  for (const PredicateSchema& p : model.predicates) {
    out += p.name + "(";
    for (std::size_t i = 0; i < p.argument_types.size(); ++i) {
      if (i > 0) out += ",";
      out += p.argument_types[i];
    }
    out += ")\n";
  }
  for (const WeightedFormula& wf : model.formulas) {
    out += FormatDouble("%.17g", wf.weight == 0.0 ? 0.0 : wf.weight);
    out += "  " + FormulaToString(wf.formula) + "\n";
  }
  return out;
}

Database ParseDatabase(std::string_view text, const Model& model,
                       const DatabaseOptions& options) {
  const Signature sig = model.signature();
  std::map<std::string, std::unordered_set<std::string>> known;
  for (const Domain& d : model.domains) {
    known[d.name].insert(d.constants.begin(), d.constants.end());
  }

  Database db;
  ScanDatabase(text, db, &sig, [&](const LiteralLine& lit) {
    auto it = sig.find(lit.atom.predicate);
    if (it == sig.end()) {
      throw Error(ErrorCode::kUnknownPredicate,
                  "predicate '" + lit.atom.predicate + "' is not declared",
                  lit.line, lit.column);
    }
    const PredicateSchema& schema = it->second;
    if (schema.arity() != lit.atom.arguments.size()) {
      throw Error(ErrorCode::kArityMismatch,
                  "predicate '" + schema.name + "' expects " +
                      std::to_string(schema.arity()) + " argument(s), got " +
                      std::to_string(lit.atom.arguments.size()),
                  lit.line, lit.column);
    }
    for (std::size_t k = 0; k < schema.arity(); ++k) {
      const std::string& type = schema.argument_types[k];
      const std::string& c = lit.atom.arguments[k];
      if (known[type].count(c)) continue;
      if (options.strict) {
        throw Error(ErrorCode::kWrongDomainConstant,
                    "constant '" + c + "' is not in domain '" + type + "'",
                    lit.line, lit.column);
      }
      known[type].insert(c);
      db.added_constants[type].push_back(c);
    }
    AssertAt(db, lit);
  });
  for (const auto& [domain, added] : db.added_constants) {
    spdlog::info("database extended domain '{}' with {} constant(s)", domain,
                 added.size());
  }
  return db;
}

Database ParseLiterals(std::string_view text) {
  Database db;
  ScanDatabase(text, db, nullptr, [&](const LiteralLine& lit) { AssertAt(db, lit); });
  return db;
}

std::string SerializeDatabase(const Database& db) {
  std::string out;
  for (const auto& [pred, closed] : db.closed_world) {
    out += (closed ? "#closed " : "#open ") + pred + "\n";
  }
  for (const auto& [atom, value] : db.literals) {
    if (!value) out += '!';
    out += atom.ToString();
    out += '\n';
  }
  return out;
}

DomainMap ResolveDomains(const Model& model, const Database& db) {
  DomainMap out = model.domain_map();
  for (const auto& [domain, added] : db.added_constants) {
    auto& consts = out[domain];
    consts.insert(consts.end(), added.begin(), added.end());
  }
  return out;
}

GroundAtom ParseGroundAtom(std::string_view text) {
  Lexer lex(Trim(text), 1);
  GroundAtom atom = ParseGroundAtomTokens(lex);
  if (!lex.AtEnd()) lex.Fail("unexpected trailing input" + lex.DescribeFound());
  return atom;
}

void WriteMarginals(const MarginalTable& marginals, std::ostream& out) {
  std::vector<std::pair<std::string, double>> rows;
  rows.reserve(marginals.size());
  for (const auto& [atom, p] : marginals) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "probability for " + atom.ToString() + " outside [0,1]");
    }
    rows.emplace_back(atom.ToString(), p);
  }
  std::sort(rows.begin(), rows.end());
  out << "atom,probability\n";
  for (const auto& [name, p] : rows) {
    out << name << ',' << FormatDouble("%.6f", p) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "failed writing marginals");
}

MarginalTable ParseMarginals(std::string_view csv) {
  MarginalTable out;
  int line_no = 0;
  for (std::string_view raw : SplitLines(csv)) {
    ++line_no;
    std::string_view line = Trim(raw);
    if (line.empty()) continue;
    if (line_no == 1 && line == "atom,probability") continue;
    std::size_t comma = line.rfind(',');
    if (comma == std::string_view::npos) {
      throw Error(ErrorCode::kSyntaxError, "expected 'atom,probability'", line_no);
    }
    GroundAtom atom = WithLine(line_no, [&] {
      return ParseGroundAtom(line.substr(0, comma));
    });
    std::string num(Trim(line.substr(comma + 1)));
    char* end = nullptr;
    double p = std::strtod(num.c_str(), &end);
    if (num.empty() || end != num.c_str() + num.size() || !(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::kSyntaxError, "bad probability '" + num + "'", line_no);
    }
    out[atom] = p;
  }
  return out;
}

void WriteResults(const std::vector<ExperimentRow>& rows, std::ostream& out) {
  out << "method,aggregator,train_sizes,test_size,trial,seed,auc_all,"
         "auc_cancer,auc_smokes\n";
  auto auc = [](double v) {
    return std::isfinite(v) ? FormatDouble("%.6f", v) : std::string("nan");
  };
  for (const ExperimentRow& r : rows) {
    std::string sizes;
    for (std::size_t i = 0; i < r.train_sizes.size(); ++i) {
      if (i > 0) sizes += ';';
      sizes += std::to_string(r.train_sizes[i]);
    }
    const bool failed = !r.error.empty();
    out << r.method << ',' << r.aggregator << ',' << sizes << ',' << r.test_size
        << ',' << r.trial << ',' << r.seed << ','
        << (failed ? "nan" : auc(r.auc_all)) << ','
        << (failed ? "nan" : auc(r.auc_cancer)) << ','
        << (failed ? "nan" : auc(r.auc_smokes)) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "failed writing results");
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void WriteFile(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::kIoError, "failed writing '" + path + "'");
}

}  // namespace damln
