#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "opalg/expr.hpp"

namespace opalg {

enum class SymKind { Operator, CNumber, Structural };
enum class Symmetry { None, Antisymmetric, Symmetric };

struct TensorDecl {
  std::string name;
  int arity = 0;  // 0 for unindexed operators (V, G, H) and scalars
  SymKind kind = SymKind::Operator;
  Symmetry symmetry = Symmetry::None;
  bool hermitian = false;
  bool quantum = false;   // hermiticity unknown; dagger stays wrapped
  bool position = false;  // member of the mutually commuting position family
  bool invertible = false;
  bool diffop = false;  // may act as a differential operator
  std::vector<std::string> coordinates;
};

// [lsym^lpow(lvars), rsym^rpow(rvars)]_- = template. Template indices are
// either bound by lvars/rvars or listed in fresh (renamed per application).
struct CommutatorRule {
  std::string lsym;
  long lpow = 1;
  std::vector<Index> lvars;
  std::string rsym;
  long rpow = 1;
  std::vector<Index> rvars;
  Expr templ;
  std::vector<Index> fresh;
  bool zero = false;
};

struct RuleMatch {
  const CommutatorRule* rule = nullptr;
  bool reversed = false;  // matched as [B,A]: template negates
};

struct Assumption {
  std::string sym;
  bool positive = true;  // sym > 0 or sym < 0
};

class AlgebraContext {
 public:
  // Euclidean 3D with eps/g predeclared and the standard scalar inventory.
  AlgebraContext();

  AlgebraContext define(TensorDecl decl) const;
  AlgebraContext add_rule(const Equation& rule) const;
  AlgebraContext add_rules(const std::vector<Equation>& rules) const;
  AlgebraContext assume(const Assumption& fact) const;
  AlgebraContext set_diffop(const std::string& op, bool enabled,
                            std::vector<std::string> coordinates = {}) const;
  AlgebraContext set_momentum_explicit(bool on) const;
  AlgebraContext set_potential_definition(const Equation& def) const;  // V = (X_l^2)^(-1/2)
  AlgebraContext set_budget(long budget) const;

  const TensorDecl* decl(const std::string& name) const;
  const TensorDecl& decl_checked(const std::string& name) const;

  // rule lookup for the ordered pair (sym_a^pow_a, sym_b^pow_b)
  std::optional<RuleMatch> find_rule(const std::string& sym_a, long pow_a,
                                     const std::string& sym_b, long pow_b) const;
  const std::vector<CommutatorRule>& rules() const { return rules_; }

  bool diffop_enabled(const std::string& op) const;
  bool any_diffop_enabled() const { return !diffops_.empty(); }
  bool momentum_explicit() const { return momentum_explicit_; }
  const std::optional<Equation>& potential_definition() const { return v_def_; }

  // sign of a scalar symbol under the assumption set: +1, -1, or 0 (unknown)
  int sign_of(const std::string& sym) const;

  // canonical normal-ordering class of an operator symbol; lower sorts left
  int class_rank(const std::string& name) const;

  long budget() const { return budget_; }
  int dimension() const { return 3; }

  std::string settings_echo() const;
  std::string decls_echo() const;
  std::string rules_echo() const;
  std::string diffops_echo() const;

 private:
  std::map<std::string, TensorDecl> decls_;
  std::vector<CommutatorRule> rules_;
  std::map<std::string, std::vector<size_t>> rule_index_;  // key -> rule ids
  std::vector<Assumption> assumptions_;
  std::map<std::string, std::vector<std::string>> diffops_;
  bool momentum_explicit_ = false;
  std::optional<Equation> v_def_;
  long budget_ = 10000;

  void index_rule(size_t id);
};

// The standard hydrogen-problem configuration: X/p/L/V/G/H declared,
// Z quantum, the six fundamental commutator rules installed.
AlgebraContext standard_context();

}  // namespace opalg
