#include "opalg/simplify.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>

#include "opalg/render.hpp"

namespace opalg {

Expr expand_active_commutators(const Expr& e) {
  const Node& n = e.node();
  switch (n.kind) {
    case NodeKind::Add: {
      ExprVec out;
      for (const auto& k : n.kids) out.push_back(expand_active_commutators(k));
      return add(std::move(out));
    }
    case NodeKind::Mul: {
      ExprVec out;
      for (const auto& k : n.kids) out.push_back(expand_active_commutators(k));
      return mul(std::move(out));
    }
    case NodeKind::Pow:
      return pow(expand_active_commutators(n.kids[0]), n.value);
    case NodeKind::Commut: {
      Expr a = expand_active_commutators(n.kids[0]);
      Expr b = expand_active_commutators(n.kids[1]);
      if (!n.inert) return mul_refresh(a, b) - mul_refresh(b, a);
      // commuting prefactors leave an inert bracket bilinearly; a fully
      // commuting argument annihilates it
      b = refresh_dummies(b, all_index_names(a));
      auto split = [](const Expr& x) -> std::pair<Expr, Expr> {
        ExprVec ts = terms_of(x);
        if (ts.size() != 1 || ts[0].is_zero()) return {one(), x};
        Monomial m = monomial_from_term(ts[0]);
        if (m.ops.empty()) return {x, zero()};
        return {monomial_scalar_expr(m), monomial_word_expr(m, 0, m.ops.size())};
      };
      auto [sa, ca] = split(a);
      auto [sb, cb] = split(b);
      if (ca.is_zero() || cb.is_zero()) return zero();
      return mul({sa, sb, commut(ca, cb, true)});
    }
    case NodeKind::Deriv:
      return deriv(n.indices, expand_active_commutators(n.kids[0]));
    case NodeKind::Apply:
      return apply_node(n.name, n.indices, expand_active_commutators(n.kids[0]));
    case NodeKind::Dagger:
      return dagger_node(expand_active_commutators(n.kids[0]));
    default:
      return e;
  }
}

namespace {

struct Mode {
  bool rules = true;    // apply commutator rules / ordering
  bool eps_det = true;  // expand epsilon pairs via the metric determinant
};

struct Accum {
  Rational coeff;
  Monomial rep;         // coefficient 1
  std::string sort;     // graded-lex emission key
};

using AccumMap = std::map<std::string, Accum>;

// Expands the first epsilon pair sharing an index through
//   eps_{i1 i2 i3} eps_{j1 j2 j3} = sum_{s in S3} sgn(s) prod_t g_{i_t j_s(t)}
// pushing the six children; returns false when no pair shares an index.
bool eps_det_step(const Monomial& m, std::vector<Monomial>& work) {
  static const int perm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                 {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  static const int sgn[6] = {1, -1, -1, 1, 1, -1};
  for (size_t x = 0; x + 1 < m.eps.size(); ++x) {
    for (size_t y = x + 1; y < m.eps.size(); ++y) {
      bool shared = false;
      for (int s = 0; s < 3 && !shared; ++s)
        for (int t = 0; t < 3 && !shared; ++t)
          if (m.eps[x][s] == m.eps[y][t]) shared = true;
      if (!shared) continue;
      std::array<Index, 3> ei = m.eps[x];
      std::array<Index, 3> ej = m.eps[y];
      Monomial base = m;
      base.eps.erase(base.eps.begin() + y);
      base.eps.erase(base.eps.begin() + x);
      for (int p = 0; p < 6; ++p) {
        Monomial child = base;
        child.coeff *= Rational(sgn[p]);
        for (int t = 0; t < 3; ++t) child.gs.push_back({ei[t], ej[perm[p][t]]});
        work.push_back(std::move(child));
      }
      return true;
    }
  }
  return false;
}

// One normal-ordering action on the leftmost strictly rank-inverted adjacent
// pair: commuting swap, exact-power rule, or unit-rule Leibniz ladder.
// Corrections are appended to extra as expressions.
bool order_step(Monomial& m, const AlgebraContext& ctx, ExprVec& extra, long& budget) {
  auto& ops = m.ops;
  std::map<Index, int> counts = monomial_index_counts(m);
  for (size_t i = 0; i + 1 < ops.size(); ++i) {
    OpFactor& a = ops[i];
    OpFactor& b = ops[i + 1];
    int ra = factor_class_rank(a, ctx);
    int rb = factor_class_rank(b, ctx);
    bool inverted = ra > rb;
    if (!inverted && ra == rb) {
      // same class: order by name, then by index for free single-index
      // factors (dummy-based swaps would depend on arbitrary dummy names)
      if (a.name > b.name) {
        inverted = true;
      } else if (a.name == b.name && a.indices.size() == 1 && b.indices.size() == 1 &&
                 a.indices[0] > b.indices[0] && counts[a.indices[0]] == 1 &&
                 counts[b.indices[0]] == 1) {
        inverted = true;
      }
    }
    if (!inverted) continue;
    if (swap_with_rules(m, i, ctx, budget, extra)) return true;
    // no rule and not provably commuting: the pair stays put
  }
  return false;
}

// An epsilon-contracted adjacent pair of one operator equals half its
// commutator: when both pair indices live only on the two factors and inside
// a single epsilon, relabeling a<->b flips the monomial's sign, so the
// symmetric part cancels. Applies when a rule resolves the commutator.
bool antisym_step(const Monomial& m, const AlgebraContext& ctx, ExprVec& out) {
  std::map<Index, int> counts = monomial_index_counts(m);
  for (size_t i = 0; i + 1 < m.ops.size(); ++i) {
    const OpFactor& a = m.ops[i];
    const OpFactor& b = m.ops[i + 1];
    if (a.kind != OpFactor::Kind::TensorF || b.kind != OpFactor::Kind::TensorF) continue;
    if (a.name != b.name || !a.power.is_one() || !b.power.is_one()) continue;
    if (a.indices.size() != 1 || b.indices.size() != 1) continue;
    const Index& ia = a.indices[0];
    const Index& ib = b.indices[0];
    if (ia == ib || counts[ia] != 2 || counts[ib] != 2) continue;
    bool together = false;
    for (const auto& e : m.eps) {
      bool ha = e[0] == ia || e[1] == ia || e[2] == ia;
      bool hb = e[0] == ib || e[1] == ib || e[2] == ib;
      if (ha && hb) {
        together = true;
        break;
      }
    }
    if (!together) continue;
    auto rm = ctx.find_rule(a.name, 1, b.name, 1);
    if (!rm) continue;
    std::set<Index> host;
    for (const auto& [ix, c] : counts) host.insert(ix);
    Expr corr = rule_instance(*rm, a.indices, b.indices, host);
    Monomial half = m;
    half.coeff /= Rational(2);
    out.push_back(mul({monomial_scalar_expr(half), monomial_word_expr(m, 0, i), corr,
                       monomial_word_expr(m, i + 2, m.ops.size())}));
    return true;
  }
  return false;
}

std::string emit_sort_key(const Monomial& m, const AlgebraContext& ctx) {
  char deg[16];
  std::snprintf(deg, sizeof deg, "%04ld", operator_degree(m, ctx));
  std::string classw, indexw, scalarw;
  for (const auto& f : m.ops) {
    char r[8];
    std::snprintf(r, sizeof r, "%03d", factor_class_rank(f, ctx));
    classw += std::string(r) + f.name + "^" + f.power.str();
    if (f.slot.ptr()) classw += "(" + render(f.slot) + ")";
    classw += ";";
    for (const auto& i : f.indices) indexw += i + ",";
  }
  std::string structw;
  for (const auto& e : m.eps) structw += "e" + e[0] + e[1] + e[2];
  for (const auto& g : m.gs) structw += "g" + g[0] + g[1];
  scalarw += std::to_string(m.ipow);
  for (const auto& [b, e] : m.scalars) scalarw += render(b) + "^" + e.str() + ",";
  return std::string(deg) + "|" + classw + "|" + structw + indexw + "|" + scalarw;
}

void accumulate(AccumMap& out, const std::string& key, const Monomial& m,
                const AlgebraContext& ctx) {
  auto it = out.find(key);
  if (it != out.end()) {
    it->second.coeff += m.coeff;
    return;
  }
  Accum a;
  a.coeff = m.coeff;
  a.rep = m;
  a.rep.coeff = Rational(1);
  a.sort = emit_sort_key(a.rep, ctx) + "#" + key;
  out.emplace(key, std::move(a));
}

void push_expr_terms(const Expr& e, std::vector<Monomial>& work) {
  for (const Expr& t : terms_of(distribute(e))) {
    if (t.is_zero()) continue;
    work.push_back(monomial_from_term(t));
  }
}

void process_term(const Expr& term, const AlgebraContext& ctx, const Mode& mode, AccumMap& out) {
  long budget = ctx.budget();
  std::vector<Monomial> work;
  push_expr_terms(term, work);
  while (!work.empty()) {
    Monomial m = std::move(work.back());
    work.pop_back();
    ExprVec extra;
    for (;;) {
      normalize_structural(m);
      if (m.is_zero()) break;
      contract_metric(m, ctx.dimension());
      normalize_scalars(m, ctx);
      merge_adjacent_ops(m);
      if (mode.eps_det && eps_det_step(m, work)) {
        m.coeff = Rational(0);
        break;
      }
      if (mode.rules && antisym_step(m, ctx, extra)) {
        for (const Expr& x : extra) push_expr_terms(x, work);
        m.coeff = Rational(0);
        break;
      }
      if (!mode.rules || !order_step(m, ctx, extra, budget)) break;
      for (const Expr& x : extra) push_expr_terms(x, work);
      extra.clear();
    }
    if (m.is_zero()) continue;
    std::string key = canonicalize_dummies(m, ctx);
    if (key.empty() || m.is_zero()) continue;
    accumulate(out, key, m, ctx);
  }
}

Expr emit(const AccumMap& total) {
  std::vector<const Accum*> items;
  for (const auto& [k, a] : total)
    if (!a.coeff.is_zero()) items.push_back(&a);
  std::sort(items.begin(), items.end(),
            [](const Accum* x, const Accum* y) { return x->sort < y->sort; });
  ExprVec terms;
  for (const Accum* a : items) {
    Monomial m = a->rep;
    m.coeff = a->coeff;
    terms.push_back(monomial_to_expr(m));
  }
  if (terms.empty()) return zero();
  return add(std::move(terms));
}

Expr run_pipeline(const Expr& e, const AlgebraContext& ctx, const Mode& mode, bool parallel) {
  Expr ex = distribute(expand_active_commutators(e));
  ExprVec terms = terms_of(ex);
  const long n = static_cast<long>(terms.size());
  std::vector<AccumMap> locals(terms.size());
  std::vector<std::optional<Error>> errors(terms.size());
#if defined(OPALG_HAVE_OPENMP)
#pragma omp parallel for schedule(dynamic) if (parallel && n > 1)
#endif
  for (long ti = 0; ti < n; ++ti) {
    try {
      if (!terms[ti].is_zero()) process_term(terms[ti], ctx, mode, locals[ti]);
    } catch (const Error& err) {
      errors[ti] = err;
    } catch (const std::exception& ex2) {
      errors[ti] = Error(Error::Kind::Domain, ex2.what());
    }
  }
  (void)parallel;
  for (long ti = 0; ti < n; ++ti)
    if (errors[ti]) throw *errors[ti];
  AccumMap total;
  for (long ti = 0; ti < n; ++ti) {
    for (const auto& [key, a] : locals[ti]) {
      auto it = total.find(key);
      if (it == total.end())
        total.emplace(key, a);
      else
        it->second.coeff += a.coeff;
    }
  }
  return emit(total);
}

}  // namespace

Expr simplify(const Expr& e, const AlgebraContext& ctx) {
  return run_pipeline(e, ctx, Mode{true, true}, true);
}

Expr simplify_serial(const Expr& e, const AlgebraContext& ctx) {
  return run_pipeline(e, ctx, Mode{true, true}, false);
}

Equation simplify(const Equation& eq, const AlgebraContext& ctx) {
  return {simplify(eq.lhs, ctx), simplify(eq.rhs, ctx)};
}

Expr equalize_repeated_indices(const Expr& e, const AlgebraContext& ctx) {
  return run_pipeline(e, ctx, Mode{false, false}, true);
}

Equation equalize_repeated_indices(const Equation& eq, const AlgebraContext& ctx) {
  return {equalize_repeated_indices(eq.lhs, ctx), equalize_repeated_indices(eq.rhs, ctx)};
}

Expr epsilon_reduce(const Monomial& m, const AlgebraContext& ctx) {
  return run_pipeline(monomial_to_expr(m), ctx, Mode{false, true}, false);
}

Expr normal_order(const Monomial& m, const AlgebraContext& ctx) {
  return run_pipeline(monomial_to_expr(m), ctx, Mode{true, true}, false);
}

}  // namespace opalg
