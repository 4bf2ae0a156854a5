#include "opalg/context.hpp"

#include <algorithm>
#include <sstream>

#include "opalg/render.hpp"

namespace opalg {

namespace {

struct RuleSide {
  std::string sym;
  long pow = 1;
  std::vector<Index> vars;
};

RuleSide dissect_rule_side(const Expr& e) {
  RuleSide s;
  Expr base = e;
  if (e.is(NodeKind::Pow)) {
    if (!e.node().value.is_integer())
      throw Error(Error::Kind::Domain, "commutator rule wants an integer power");
    s.pow = e.node().value.num();
    base = e.node().kids[0];
  }
  if (base.is(NodeKind::Tensor)) {
    s.sym = base.node().name;
    s.vars = base.node().indices;
    return s;
  }
  if (base.is(NodeKind::OpFunc)) {
    s.sym = base.node().name;
    return s;
  }
  throw Error(Error::Kind::Domain, "commutator rule sides must be single operator atoms");
}

std::string rule_key(const std::string& a, long pa, const std::string& b, long pb) {
  return a + "^" + std::to_string(pa) + "|" + b + "^" + std::to_string(pb);
}

}  // namespace

AlgebraContext::AlgebraContext() {
  TensorDecl eps;
  eps.name = "eps";
  eps.arity = 3;
  eps.kind = SymKind::Structural;
  eps.symmetry = Symmetry::Antisymmetric;
  decls_["eps"] = eps;
  TensorDecl g;
  g.name = "g";
  g.arity = 2;
  g.kind = SymKind::Structural;
  g.symmetry = Symmetry::Symmetric;
  decls_["g"] = g;
}

AlgebraContext AlgebraContext::define(TensorDecl decl) const {
  auto it = decls_.find(decl.name);
  if (it != decls_.end()) {
    const TensorDecl& old = it->second;
    bool same = old.arity == decl.arity && old.kind == decl.kind &&
                old.symmetry == decl.symmetry && old.hermitian == decl.hermitian &&
                old.quantum == decl.quantum && old.position == decl.position &&
                old.invertible == decl.invertible && old.diffop == decl.diffop;
    if (!same)
      throw Error(Error::Kind::Domain, "conflicting redeclaration of '" + decl.name + "'");
    return *this;
  }
  AlgebraContext out = *this;
  out.decls_[decl.name] = std::move(decl);
  return out;
}

void AlgebraContext::index_rule(size_t id) {
  const CommutatorRule& r = rules_[id];
  rule_index_[rule_key(r.lsym, r.lpow, r.rsym, r.rpow)].push_back(id);
}

AlgebraContext AlgebraContext::add_rule(const Equation& rule) const {
  if (!rule.lhs.is(NodeKind::Commut))
    throw Error(Error::Kind::Domain, "rule left side must be a commutator");
  CommutatorRule r;
  RuleSide ls = dissect_rule_side(rule.lhs.node().kids[0]);
  RuleSide rs = dissect_rule_side(rule.lhs.node().kids[1]);
  r.lsym = ls.sym;
  r.lpow = ls.pow;
  r.lvars = ls.vars;
  r.rsym = rs.sym;
  r.rpow = rs.pow;
  r.rvars = rs.vars;
  r.templ = rule.rhs;
  r.zero = rule.rhs.is_zero();
  if (!decl(r.lsym) || !decl(r.rsym))
    throw Error(Error::Kind::UnknownSymbol, "rule references an undeclared operator");

  std::set<Index> bound(r.lvars.begin(), r.lvars.end());
  bound.insert(r.rvars.begin(), r.rvars.end());
  std::set<Index> fresh;
  for (const Expr& t : terms_of(rule.rhs)) {
    if (t.is_zero()) continue;
    for (const auto& [ix, c] : index_counts(t)) {
      if (bound.count(ix)) continue;
      if (c != 2)
        throw Error(Error::Kind::Domain,
                    "rule template index '" + ix + "' is neither bound nor a dummy pair");
      fresh.insert(ix);
    }
  }
  r.fresh.assign(fresh.begin(), fresh.end());

  // duplicate insertion is a no-op
  auto it = rule_index_.find(rule_key(r.lsym, r.lpow, r.rsym, r.rpow));
  if (it != rule_index_.end()) {
    for (size_t id : it->second) {
      const CommutatorRule& old = rules_[id];
      if (old.lvars.size() != r.lvars.size() || old.rvars.size() != r.rvars.size()) continue;
      if (old.fresh.size() != r.fresh.size()) continue;
      std::map<Index, Index> m;
      for (size_t i = 0; i < r.lvars.size(); ++i) m[r.lvars[i]] = old.lvars[i];
      for (size_t i = 0; i < r.rvars.size(); ++i) m[r.rvars[i]] = old.rvars[i];
      for (size_t i = 0; i < r.fresh.size(); ++i) m[r.fresh[i]] = old.fresh[i];
      if (structural_equal(rename_indices(r.templ, m), old.templ)) return *this;
    }
  }

  AlgebraContext out = *this;
  out.rules_.push_back(std::move(r));
  out.index_rule(out.rules_.size() - 1);
  return out;
}

AlgebraContext AlgebraContext::add_rules(const std::vector<Equation>& rules) const {
  AlgebraContext out = *this;
  for (const auto& r : rules) out = out.add_rule(r);
  return out;
}

AlgebraContext AlgebraContext::assume(const Assumption& fact) const {
  for (const auto& a : assumptions_) {
    if (a.sym == fact.sym && a.positive != fact.positive)
      throw Error(Error::Kind::Domain, "contradictory assumption on '" + fact.sym + "'");
  }
  AlgebraContext out = *this;
  out.assumptions_.push_back(fact);
  return out;
}

AlgebraContext AlgebraContext::set_diffop(const std::string& op, bool enabled,
                                          std::vector<std::string> coordinates) const {
  AlgebraContext out = *this;
  if (op.empty()) {
    out.diffops_.clear();
    return out;
  }
  if (enabled) {
    const TensorDecl& d = decl_checked(op);
    if (d.kind != SymKind::Operator)
      throw Error(Error::Kind::Domain, "'" + op + "' cannot act as a differential operator");
    if (coordinates.empty()) coordinates = {"x", "y", "z"};
    out.diffops_[op] = std::move(coordinates);
  } else {
    out.diffops_.erase(op);
  }
  return out;
}

AlgebraContext AlgebraContext::set_momentum_explicit(bool on) const {
  AlgebraContext out = *this;
  out.momentum_explicit_ = on;
  return out;
}

AlgebraContext AlgebraContext::set_potential_definition(const Equation& def) const {
  AlgebraContext out = *this;
  out.v_def_ = def;
  return out;
}

AlgebraContext AlgebraContext::set_budget(long budget) const {
  AlgebraContext out = *this;
  out.budget_ = budget;
  return out;
}

const TensorDecl* AlgebraContext::decl(const std::string& name) const {
  auto it = decls_.find(name);
  return it == decls_.end() ? nullptr : &it->second;
}

const TensorDecl& AlgebraContext::decl_checked(const std::string& name) const {
  const TensorDecl* d = decl(name);
  if (!d) throw Error(Error::Kind::UnknownSymbol, "undeclared symbol '" + name + "'");
  return *d;
}

std::optional<RuleMatch> AlgebraContext::find_rule(const std::string& sym_a, long pow_a,
                                                   const std::string& sym_b, long pow_b) const {
  auto it = rule_index_.find(rule_key(sym_a, pow_a, sym_b, pow_b));
  if (it != rule_index_.end() && !it->second.empty())
    return RuleMatch{&rules_[it->second.front()], false};
  it = rule_index_.find(rule_key(sym_b, pow_b, sym_a, pow_a));
  if (it != rule_index_.end() && !it->second.empty())
    return RuleMatch{&rules_[it->second.front()], true};
  return std::nullopt;
}

bool AlgebraContext::diffop_enabled(const std::string& op) const {
  return diffops_.count(op) > 0;
}

int AlgebraContext::sign_of(const std::string& sym) const {
  for (const auto& a : assumptions_) {
    if (a.sym == sym) return a.positive ? 1 : -1;
  }
  return 0;
}

int AlgebraContext::class_rank(const std::string& name) const {
  static const std::map<std::string, int> table = {
      {"X", 10}, {"V", 20}, {"p", 30}, {"L", 40}, {"Z", 50},
      {"M", 60}, {"J", 70}, {"K", 80}, {"H", 90}, {"G", 100},
  };
  auto it = table.find(name);
  if (it != table.end()) return it->second;
  const TensorDecl* d = decl(name);
  if (d && d->position) return 10;
  return 65;
}

std::string AlgebraContext::settings_echo() const {
  return "dimension = 3, metric = euclidean, spacetimeindices = lowercaselatin";
}

std::string AlgebraContext::decls_echo() const {
  static const std::vector<std::string> letters = {"k", "a,b", "a,b,c"};
  std::string out = "defined objects: ";
  bool first = true;
  for (const auto& [name, d] : decls_) {
    if (!first) out += ", ";
    first = false;
    out += name;
    if (d.arity > 0) out += "[" + letters[d.arity - 1] + "]";
  }
  return out;
}

std::string AlgebraContext::rules_echo() const {
  std::string out = "algebra rules: ";
  for (size_t i = 0; i < rules_.size(); ++i) {
    const CommutatorRule& r = rules_[i];
    Expr l = r.lvars.empty() ? (r.lpow == 1 ? opfunc(r.lsym) : pow(opfunc(r.lsym), Rational(r.lpow)))
                             : Expr(tensor(r.lsym, r.lvars));
    Expr rg = r.rvars.empty()
                  ? (r.rpow == 1 ? opfunc(r.rsym) : pow(opfunc(r.rsym), Rational(r.rpow)))
                  : Expr(tensor(r.rsym, r.rvars));
    if (i) out += "; ";
    out += render(Equation(commut(l, rg, true), r.templ));
  }
  if (rules_.empty()) out += "none";
  return out;
}

std::string AlgebraContext::diffops_echo() const {
  if (diffops_.empty()) return "differentialoperators = none";
  std::string out = "differentialoperators = {";
  bool first = true;
  for (const auto& [op, coords] : diffops_) {
    if (!first) out += ", ";
    first = false;
    out += "[" + op + ", [";
    for (size_t i = 0; i < coords.size(); ++i) {
      if (i) out += ", ";
      out += coords[i];
    }
    out += "]]";
  }
  return out + "}";
}

AlgebraContext standard_context() {
  AlgebraContext ctx;
  TensorDecl X;
  X.name = "X";
  X.arity = 1;
  X.hermitian = true;
  X.position = true;
  ctx = ctx.define(X);
  TensorDecl p;
  p.name = "p";
  p.arity = 1;
  p.hermitian = true;
  p.diffop = true;
  p.coordinates = {"x", "y", "z"};
  ctx = ctx.define(p);
  TensorDecl L;
  L.name = "L";
  L.arity = 1;
  L.hermitian = true;
  ctx = ctx.define(L);
  TensorDecl Z;
  Z.name = "Z";
  Z.arity = 1;
  Z.quantum = true;
  ctx = ctx.define(Z);
  TensorDecl V;
  V.name = "V";
  V.hermitian = true;
  V.position = true;
  V.invertible = true;
  ctx = ctx.define(V);
  TensorDecl G;
  G.name = "G";
  G.position = true;
  G.invertible = true;
  ctx = ctx.define(G);
  TensorDecl H;
  H.name = "H";
  H.hermitian = true;
  ctx = ctx.define(H);

  auto C = [](const Expr& a, const Expr& b) { return commut(a, b, true); };
  Expr ih = imaginary() * scalar("hbar");
  std::vector<Equation> rules = {
      {C(tensor("p", {"k"}), tensor("p", {"l"})), zero()},
      {C(tensor("X", {"k"}), tensor("p", {"l"})), ih * tensor("g", {"k", "l"})},
      {C(tensor("L", {"j"}), tensor("L", {"k"})),
       ih * tensor("eps", {"j", "k", "n"}) * tensor("L", {"n"})},
      {C(tensor("p", {"j"}), tensor("L", {"k"})),
       ih * tensor("eps", {"j", "k", "n"}) * tensor("p", {"n"})},
      {C(tensor("X", {"j"}), tensor("L", {"k"})),
       ih * tensor("eps", {"j", "k", "n"}) * tensor("X", {"n"})},
      {C(tensor("X", {"k"}), opfunc("V")), zero()},
  };
  return ctx.add_rules(rules);
}

}  // namespace opalg
