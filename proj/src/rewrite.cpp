#include "opalg/rewrite.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>

#include "opalg/monomial.hpp"
#include "opalg/render.hpp"
#include "opalg/simplify.hpp"

namespace opalg {

namespace {

using Word = std::vector<OpFactor>;

std::set<Index> monomial_names(const Monomial& m) {
  std::set<Index> s;
  for (const auto& [i, c] : monomial_index_counts(m)) s.insert(i);
  return s;
}

Expr word_to_expr(const Word& w, size_t lo, size_t hi) {
  ExprVec fs;
  for (size_t i = lo; i < hi; ++i) fs.push_back(op_factor_to_expr(w[i]));
  return mul(std::move(fs));
}

bool simple_factor(const OpFactor& f) {
  return (f.kind == OpFactor::Kind::TensorF || f.kind == OpFactor::Kind::FuncF) &&
         f.power.is_integer();
}

// ---------------------------------------------------------------------------
// commutator

// [a, b] for single factors. Pairs no rule decides stay as an inert bracket.
Expr leaf_commutator(const OpFactor& a, const OpFactor& b, const std::set<Index>& host,
                     const AlgebraContext& ctx) {
  if (factors_commute(a, b, ctx)) return zero();
  if (simple_factor(a) && simple_factor(b)) {
    long pa = a.power.num();
    long pb = b.power.num();
    if (auto rm = ctx.find_rule(a.name, pa, b.name, pb))
      return rule_instance(*rm, a.indices, b.indices, host);
    if (pa >= 1 && pb >= 1) {
      if (auto rm = ctx.find_rule(a.name, 1, b.name, 1)) {
        // [A^m, B^n] = sum_{j<m, k<n} A^j B^k [A,B] B^(n-1-k) A^(m-1-j)
        ExprVec terms;
        for (long j = 0; j < pa; ++j)
          for (long k = 0; k < pb; ++k) {
            Expr corr = rule_instance(*rm, a.indices, b.indices, host);
            terms.push_back(mul({op_power_expr(a, j), op_power_expr(b, k), corr,
                                 op_power_expr(b, pb - 1 - k), op_power_expr(a, pa - 1 - j)}));
          }
        return add(std::move(terms));
      }
    }
  }
  return commut(op_factor_to_expr(a), op_factor_to_expr(b), true);
}

// Bilinear recursion [A1 R, B] = A1 [R, B] + [A1, B] R and its mirror,
// bottoming out in leaf pairs.
Expr word_commutator(const Word& wa, const Word& wb, const std::set<Index>& host,
                     const AlgebraContext& ctx) {
  if (wa.empty() || wb.empty()) return zero();
  if (wa.size() > 1) {
    Word head{wa.front()};
    Word rest(wa.begin() + 1, wa.end());
    return add({mul({op_factor_to_expr(wa.front()), word_commutator(rest, wb, host, ctx)}),
                mul({word_commutator(head, wb, host, ctx), word_to_expr(rest, 0, rest.size())})});
  }
  if (wb.size() > 1) {
    Word head{wb.front()};
    Word rest(wb.begin() + 1, wb.end());
    return add({mul({op_factor_to_expr(wb.front()), word_commutator(wa, rest, host, ctx)}),
                mul({word_commutator(wa, head, host, ctx), word_to_expr(rest, 0, rest.size())})});
  }
  return leaf_commutator(wa.front(), wb.front(), host, ctx);
}

Expr term_commutator(const Expr& ta, const Expr& tb, const AlgebraContext& ctx) {
  // the two terms may reuse each other's dummy names
  Expr a2 = refresh_dummies(ta, term_frees(tb));
  Expr b2 = refresh_dummies(tb, all_index_names(a2));
  Monomial ma = monomial_from_term(a2);
  Monomial mb = monomial_from_term(b2);
  std::set<Index> host = monomial_names(ma);
  for (const auto& i : monomial_names(mb)) host.insert(i);
  Expr w = word_commutator(ma.ops, mb.ops, host, ctx);
  if (w.is_zero()) return zero();
  return mul({monomial_scalar_expr(ma), monomial_scalar_expr(mb), w});
}

Expr commutator_rhs(const Expr& a, const Expr& b, const AlgebraContext& ctx) {
  Expr ea = distribute(expand_active_commutators(a));
  Expr eb = distribute(expand_active_commutators(b));
  ExprVec parts;
  for (const Expr& ta : terms_of(ea)) {
    if (ta.is_zero()) continue;
    for (const Expr& tb : terms_of(eb)) {
      if (tb.is_zero()) continue;
      parts.push_back(term_commutator(ta, tb, ctx));
    }
  }
  return simplify(add(std::move(parts)), ctx);
}

// ---------------------------------------------------------------------------
// substitute_tensor

struct Binding {
  std::map<Index, Index> map;
  std::set<Index> used;  // bound target names (injectivity)
};

struct SumPattern {
  std::vector<Monomial> alts;  // alts[0] anchors the search
  std::set<Index> dummies;     // pattern variables; other indices literal
  Expr rhs;
};

bool unify_index(const Index& pi, const Index& ti, const SumPattern& sp, Binding& b) {
  if (!sp.dummies.count(pi)) return pi == ti;  // free pattern indices: literal
  auto it = b.map.find(pi);
  if (it != b.map.end()) return it->second == ti;
  if (b.used.count(ti)) return false;
  b.map[pi] = ti;
  b.used.insert(ti);
  return true;
}

bool match_factor(const OpFactor& pf, const OpFactor& tf, const SumPattern& sp, Binding& b) {
  if (pf.kind != tf.kind || pf.name != tf.name || pf.power != tf.power) return false;
  if (pf.indices.size() != tf.indices.size()) return false;
  for (size_t k = 0; k < pf.indices.size(); ++k)
    if (!unify_index(pf.indices[k], tf.indices[k], sp, b)) return false;
  switch (pf.kind) {
    case OpFactor::Kind::DerivF:
    case OpFactor::Kind::ApplyF:
    case OpFactor::Kind::CommutF:
    case OpFactor::Kind::DaggerF:
      return structural_equal(rename_indices(pf.slot, b.map), tf.slot);
    default:
      return true;
  }
}

bool assign_triples(const std::vector<std::array<Index, 3>>& pe, size_t k,
                    const std::vector<std::array<Index, 3>>& te, const SumPattern& sp,
                    std::set<size_t>& taken, Binding& b) {
  if (k == pe.size()) return true;
  for (size_t t = 0; t < te.size(); ++t) {
    if (taken.count(t)) continue;
    Binding save = b;
    bool ok = true;
    for (int c = 0; c < 3 && ok; ++c) ok = unify_index(pe[k][c], te[t][c], sp, b);
    if (ok) {
      taken.insert(t);
      if (assign_triples(pe, k + 1, te, sp, taken, b)) return true;
      taken.erase(t);
    }
    b = save;
  }
  return false;
}

bool assign_pairs(const std::vector<std::array<Index, 2>>& pg, size_t k,
                  const std::vector<std::array<Index, 2>>& tg, const SumPattern& sp,
                  std::set<size_t>& taken, Binding& b) {
  if (k == pg.size()) return true;
  for (size_t t = 0; t < tg.size(); ++t) {
    if (taken.count(t)) continue;
    Binding save = b;
    bool ok = unify_index(pg[k][0], tg[t][0], sp, b) && unify_index(pg[k][1], tg[t][1], sp, b);
    if (ok) {
      taken.insert(t);
      if (assign_pairs(pg, k + 1, tg, sp, taken, b)) return true;
      taken.erase(t);
    }
    b = save;
  }
  return false;
}

struct AnchorMatch {
  Binding bind;
  std::set<size_t> eps_taken;
  std::set<size_t> gs_taken;
  std::optional<OpFactor> lead_rem;   // unconsumed power left of the match
  std::optional<OpFactor> trail_rem;  // unconsumed power right of the match
};

std::optional<AnchorMatch> match_at(const Monomial& pm, const Monomial& tm, size_t pos,
                                    const SumPattern& sp, bool allow_split) {
  AnchorMatch am;
  for (size_t k = 0; k < pm.ops.size(); ++k) {
    const OpFactor& pf = pm.ops[k];
    const OpFactor& tf = tm.ops[pos + k];
    if (match_factor(pf, tf, sp, am.bind)) continue;
    // a boundary factor may also match part of a higher integer power; the
    // remainder stays outside the replacement (A^q = A^(q-p) A^p)
    bool boundary = k == 0 || k + 1 == pm.ops.size();
    bool splittable = allow_split && boundary && pf.kind == tf.kind &&
                      (pf.kind == OpFactor::Kind::TensorF || pf.kind == OpFactor::Kind::FuncF) &&
                      pf.name == tf.name && pf.power.is_integer() && tf.power.is_integer() &&
                      pf.power.num() >= 1 && tf.power.num() > pf.power.num();
    if (!splittable) return std::nullopt;
    OpFactor part = tf;
    part.power = pf.power;
    if (!match_factor(pf, part, sp, am.bind)) return std::nullopt;
    OpFactor rem = tf;
    rem.power = tf.power - pf.power;
    if (k == 0 && pm.ops.size() > 1)
      am.lead_rem = rem;
    else
      am.trail_rem = rem;
  }
  if (!assign_triples(pm.eps, 0, tm.eps, sp, am.eps_taken, am.bind)) return std::nullopt;
  if (!assign_pairs(pm.gs, 0, tm.gs, sp, am.gs_taken, am.bind)) return std::nullopt;
  return am;
}

void subtract_scalar(std::vector<std::pair<Expr, Rational>>& scalars, const Expr& base,
                     const Rational& exp) {
  for (auto it = scalars.begin(); it != scalars.end(); ++it) {
    if (structural_equal(it->first, base)) {
      it->second -= exp;
      if (it->second.is_zero()) scalars.erase(it);
      return;
    }
  }
  scalars.emplace_back(base, -exp);
}

// target scalar part divided by the (matched) pattern scalar part, kept as a
// coefficient-only monomial plus the unmatched eps/g factors
Monomial scalar_ratio(const Monomial& tm, const Monomial& pm, const AnchorMatch& am) {
  Monomial r;
  r.coeff = tm.coeff / pm.coeff;
  r.ipow = ((tm.ipow - pm.ipow) % 4 + 4) % 4;
  r.scalars = tm.scalars;
  for (const auto& [b, e] : pm.scalars) subtract_scalar(r.scalars, b, e);
  for (size_t t = 0; t < tm.eps.size(); ++t)
    if (!am.eps_taken.count(t)) r.eps.push_back(tm.eps[t]);
  for (size_t t = 0; t < tm.gs.size(); ++t)
    if (!am.gs_taken.count(t)) r.gs.push_back(tm.gs[t]);
  return r;
}

// the alternative's expected appearance in the target: ratio * bound(alt),
// flanked by the anchor occurrence's prefix and suffix
Monomial expected_sibling(const Monomial& ratio, Monomial alt, const Binding& bind,
                          const SumPattern& sp, const Monomial& tm, size_t pos, size_t len) {
  std::map<Index, Index> sub = bind.map;
  std::set<Index> avoid = bind.used;
  for (const auto& [i, c] : monomial_index_counts(tm)) avoid.insert(i);
  for (const auto& [i, c] : monomial_index_counts(alt)) {
    if (sub.count(i)) continue;
    if (sp.dummies.count(i)) {
      // pattern dummy internal to this alternative: keep it clear of the
      // target's names (the comparison is canonical, the name is free)
      Index nf = fresh_index(avoid);
      avoid.insert(nf);
      sub[i] = nf;
    }
  }
  rename_monomial_indices(alt, sub);
  Monomial e;
  e.coeff = ratio.coeff * alt.coeff;
  e.ipow = (ratio.ipow + alt.ipow) % 4;
  e.scalars = ratio.scalars;
  for (const auto& [b, x] : alt.scalars) {
    bool merged = false;
    for (auto& [eb, ee] : e.scalars)
      if (structural_equal(eb, b)) {
        ee += x;
        merged = true;
        break;
      }
    if (!merged) e.scalars.emplace_back(b, x);
  }
  e.eps = ratio.eps;
  e.eps.insert(e.eps.end(), alt.eps.begin(), alt.eps.end());
  e.gs = ratio.gs;
  e.gs.insert(e.gs.end(), alt.gs.begin(), alt.gs.end());
  e.ops.assign(tm.ops.begin(), tm.ops.begin() + pos);
  e.ops.insert(e.ops.end(), alt.ops.begin(), alt.ops.end());
  e.ops.insert(e.ops.end(), tm.ops.begin() + pos + len, tm.ops.end());
  return e;
}

std::pair<std::string, Rational> canon_sig(Monomial m, const AlgebraContext& ctx) {
  normalize_structural(m);
  if (m.is_zero()) return {"", Rational(0)};
  std::string key = canonicalize_dummies(m, ctx);
  return {key, m.coeff};
}

SumPattern prepare_pattern(const Equation& id, const AlgebraContext& ctx) {
  SumPattern sp;
  for (const Expr& t : terms_of(distribute(expand_active_commutators(id.lhs)))) {
    Monomial m = monomial_from_term(t);
    if (m.is_zero()) continue;
    normalize_structural(m);
    // every pattern index is a variable: free indices are universally
    // quantified in an identity, so they bind to whatever the target carries
    for (const auto& [i, c] : monomial_index_counts(m)) sp.dummies.insert(i);
    sp.alts.push_back(std::move(m));
  }
  if (sp.alts.empty())
    throw Error(Error::Kind::Domain, "substitution pattern has an empty left-hand side");
  // anchor on the longest operator word: most selective first
  std::stable_sort(sp.alts.begin(), sp.alts.end(),
                   [](const Monomial& a, const Monomial& b) { return a.ops.size() > b.ops.size(); });
  sp.rhs = id.rhs;
  (void)ctx;
  return sp;
}

// one application of sp somewhere in terms; true when something was replaced
bool apply_pattern_once(const SumPattern& sp, std::vector<Expr>& terms,
                        const AlgebraContext& ctx) {
  const Monomial& anchor = sp.alts[0];
  for (size_t t = 0; t < terms.size(); ++t) {
    if (terms[t].is_zero()) continue;
    Monomial tm = monomial_from_term(terms[t]);
    if (tm.is_zero()) continue;
    normalize_structural(tm);
    if (tm.is_zero()) continue;
    if (anchor.ops.size() > tm.ops.size()) continue;
    for (size_t pos = 0; pos + anchor.ops.size() <= tm.ops.size(); ++pos) {
      // power splitting is sound only when no siblings must share the match
      auto am = match_at(anchor, tm, pos, sp, sp.alts.size() == 1);
      if (!am) continue;
      Monomial ratio = scalar_ratio(tm, anchor, *am);
      // locate the siblings of a sum pattern among the other terms
      std::vector<size_t> consumed;
      std::set<size_t> used_terms{t};
      bool all = true;
      for (size_t j = 1; j < sp.alts.size() && all; ++j) {
        Monomial want =
            expected_sibling(ratio, sp.alts[j], am->bind, sp, tm, pos, anchor.ops.size());
        auto sig = canon_sig(std::move(want), ctx);
        bool found = false;
        for (size_t u = 0; u < terms.size() && !found; ++u) {
          if (used_terms.count(u) || terms[u].is_zero()) continue;
          auto usig = canon_sig(monomial_from_term(terms[u]), ctx);
          if (usig.first == sig.first && usig.second == sig.second) {
            used_terms.insert(u);
            consumed.push_back(u);
            found = true;
          }
        }
        all = found;
      }
      if (!all) continue;
      // build the replacement: prefix * ratio * bound rhs * suffix
      std::set<Index> avoid = monomial_names(tm);
      for (const auto& [pi, ti] : am->bind.map) avoid.insert(ti);
      Expr rhs_inst = refresh_dummies(rename_indices(sp.rhs, am->bind.map), avoid);
      Expr prefix = monomial_word_expr(tm, 0, pos);
      if (am->lead_rem) prefix = mul({prefix, op_factor_to_expr(*am->lead_rem)});
      Expr suffix = monomial_word_expr(tm, pos + anchor.ops.size(), tm.ops.size());
      if (am->trail_rem) suffix = mul({op_factor_to_expr(*am->trail_rem), suffix});
      Expr repl = mul({monomial_scalar_expr(ratio), prefix, rhs_inst, suffix});
      std::sort(consumed.begin(), consumed.end(), std::greater<size_t>());
      size_t at = t;
      for (size_t u : consumed) {
        terms.erase(terms.begin() + u);
        if (u < at) --at;
      }
      // splice in distributed form so later passes see plain terms
      ExprVec pieces = terms_of(distribute(repl));
      terms.erase(terms.begin() + at);
      terms.insert(terms.begin() + at, pieces.begin(), pieces.end());
      return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// isolate helpers

// divides the term by the target monomial; nullopt when the target does not
// occur, throws when it occurs nonlinearly or with operator cofactors
std::optional<Expr> divide_by_target(const Monomial& m, const Monomial& tm) {
  Monomial cof;
  cof.coeff = m.coeff / tm.coeff;
  cof.ipow = ((m.ipow - tm.ipow) % 4 + 4) % 4;
  cof.scalars = m.scalars;
  cof.eps = m.eps;
  cof.gs = m.gs;
  if (!tm.ops.empty()) {
    if (m.ops == tm.ops) {
      // consumed entirely
    } else {
      for (size_t pos = 0; pos + tm.ops.size() <= m.ops.size(); ++pos) {
        bool sub = true;
        for (size_t k = 0; k < tm.ops.size() && sub; ++k)
          if (!(m.ops[pos + k] == tm.ops[k])) sub = false;
        if (sub)
          throw Error(Error::Kind::Domain,
                      "isolation target occurs with an operator-valued coefficient");
      }
      return std::nullopt;
    }
  } else {
    cof.ops = m.ops;  // scalar target: operator word is part of the cofactor
  }
  for (const auto& [b, e] : tm.scalars) {
    bool found = false;
    for (auto it = cof.scalars.begin(); it != cof.scalars.end(); ++it) {
      if (!structural_equal(it->first, b)) continue;
      if (it->second == e) {
        cof.scalars.erase(it);
        found = true;
        break;
      }
      throw Error(Error::Kind::Domain, "isolation target occurs nonlinearly");
    }
    if (!found) return std::nullopt;
  }
  for (const auto& e : tm.eps) {
    auto it = std::find(cof.eps.begin(), cof.eps.end(), e);
    if (it == cof.eps.end()) return std::nullopt;
    cof.eps.erase(it);
  }
  for (const auto& g : tm.gs) {
    auto it = std::find(cof.gs.begin(), cof.gs.end(), g);
    if (it == cof.gs.end()) return std::nullopt;
    cof.gs.erase(it);
  }
  if (!tm.ops.empty() || cof.ops.empty()) return monomial_scalar_expr(cof);
  return monomial_to_expr(cof);
}

// presents a scalar sum as content * (alpha s + beta)^2 when it is one
Expr tidy_scalar_sum(const Expr& c) {
  ExprVec ts = terms_of(c);
  if (ts.size() < 2) return c;
  std::vector<Monomial> ms;
  for (const auto& t : ts) {
    Monomial m = monomial_from_term(t);
    if (!m.ops.empty() || !m.eps.empty() || !m.gs.empty() || m.ipow != 0) return c;
    ms.push_back(std::move(m));
  }
  // content: coefficient gcd (negated when every term is negative) and the
  // scalar atoms common to all terms at their minimal exponent
  Rational g = ms[0].coeff.abs();
  bool allneg = true;
  for (const auto& m : ms) {
    g = gcd_rational(g, m.coeff.abs());
    if (!m.coeff.is_negative()) allneg = false;
  }
  if (allneg) g = -g;
  std::vector<std::pair<Expr, Rational>> common;
  for (const auto& [b, e] : ms[0].scalars) {
    Rational lo = e;
    for (size_t i = 1; i < ms.size(); ++i) {
      Rational found(0);
      for (const auto& [ob, oe] : ms[i].scalars)
        if (structural_equal(ob, b)) {
          found = oe;
          break;
        }
      if (found < lo) lo = found;
    }
    if (!lo.is_zero()) common.emplace_back(b, lo);
  }
  std::vector<Monomial> res = ms;
  for (auto& m : res) {
    m.coeff /= g;
    for (const auto& [b, e] : common) subtract_scalar(m.scalars, b, e);
  }
  // quadratic residue in one symbol: A s^2 + B s + C with B^2 = 4AC
  Expr sym;
  bool have_sym = false;
  Rational A(0), B(0), C0(0);
  for (const auto& m : res) {
    if (m.scalars.empty()) {
      if (!C0.is_zero()) return c;
      C0 = m.coeff;
      continue;
    }
    if (m.scalars.size() != 1) return c;
    const auto& [b, e] = m.scalars[0];
    if (!have_sym) {
      sym = b;
      have_sym = true;
    } else if (!structural_equal(sym, b)) {
      return c;
    }
    if (e == Rational(2)) {
      if (!A.is_zero()) return c;
      A = m.coeff;
    } else if (e == Rational(1)) {
      if (!B.is_zero()) return c;
      B = m.coeff;
    } else {
      return c;
    }
  }
  if (!have_sym || A.is_zero() || B * B != A * C0 * Rational(4)) return c;
  SqrtSplit sa = A.sqrt_split();
  if (!sa.inside.is_one()) return c;
  Rational alpha = sa.outside;
  Rational beta = B / (alpha * Rational(2));
  Monomial gm;
  gm.coeff = g;
  gm.scalars = common;
  Expr square = pow(add({mul({number(alpha), sym}), number(beta)}), Rational(2));
  return mul({monomial_scalar_expr(gm), square});
}

// ---------------------------------------------------------------------------
// factor helpers

struct SplitBasis {
  std::string key;  // canonical signature of the basis monomial
  Monomial rep;     // canonical representative, coefficient 1
};

// canonicalizes a split part in place to coefficient 1, returning {key, s}
// with original part == s * canonical part; s is 0 when the part vanishes
std::pair<std::string, Rational> canon_part(Monomial& part, const AlgebraContext& ctx) {
  part.coeff = Rational(1);
  normalize_structural(part);
  if (part.is_zero()) return {"", Rational(0)};
  std::string key = canonicalize_dummies(part, ctx);
  if (part.is_zero()) return {"", Rational(0)};
  Rational s = part.coeff;
  part.coeff = Rational(1);
  return {key, s};
}

size_t find_or_add(std::vector<SplitBasis>& v, const std::string& key, const Monomial& rep) {
  for (size_t k = 0; k < v.size(); ++k)
    if (v[k].key == key) return k;
  v.push_back({key, rep});
  return v.size() - 1;
}

// rank-1 bilinear split of the stripped middles; nullopt when none of the
// candidate split lengths gives a complete rank-1 coefficient matrix
std::optional<Expr> bilinear_split(const std::vector<Monomial>& mids, const AlgebraContext& ctx) {
  size_t maxlen = 0;
  for (const auto& m : mids) maxlen = std::max(maxlen, m.ops.size());
  for (int from_right = 1; from_right >= 0; --from_right) {
    for (size_t s = 1; s <= 3 && s <= maxlen; ++s) {
      std::vector<SplitBasis> rows, cols;
      std::map<std::pair<size_t, size_t>, Rational> mat;
      bool ok = true;
      size_t entries = 0;
      for (const auto& m : mids) {
        if (m.ops.size() < s) {
          ok = false;
          break;
        }
        // the fixed-length side takes s word factors, the commutative part
        // travels with the other side
        size_t cut = from_right ? m.ops.size() - s : s;
        Monomial left = m, right;
        left.ops.assign(m.ops.begin(), m.ops.begin() + cut);
        right.ops.assign(m.ops.begin() + cut, m.ops.end());
        if (!from_right) {
          std::swap(left.ipow, right.ipow);
          std::swap(left.scalars, right.scalars);
          std::swap(left.eps, right.eps);
          std::swap(left.gs, right.gs);
        }
        std::set<Index> ln = monomial_names(left), rn = monomial_names(right);
        bool crossing = false;
        for (const auto& i : rn)
          if (ln.count(i)) crossing = true;
        if (crossing) {
          ok = false;
          break;
        }
        auto [row_key, lsign] = canon_part(left, ctx);
        auto [col_key, rsign] = canon_part(right, ctx);
        if (lsign.is_zero() || rsign.is_zero()) {
          ok = false;
          break;
        }
        size_t r = find_or_add(rows, row_key, left);
        size_t cc = find_or_add(cols, col_key, right);
        Rational entry = m.coeff * lsign * rsign;
        auto [it, fresh] = mat.emplace(std::make_pair(r, cc), entry);
        if (!fresh) it->second += entry;
        ++entries;
      }
      if (!ok || rows.size() < 2 || cols.size() < 2) continue;
      if (entries != rows.size() * cols.size() || mat.size() != entries) continue;
      const Rational base = mat[{0, 0}];
      if (base.is_zero()) continue;
      bool rank1 = true;
      for (size_t r = 0; r < rows.size() && rank1; ++r)
        for (size_t cc = 0; cc < cols.size() && rank1; ++cc)
          if (mat[{r, cc}] * base != mat[{r, 0}] * mat[{0, cc}]) rank1 = false;
      if (!rank1) continue;
      // left coefficients u_r = mat[r,0]/base, right v_c = mat[0,c]; rescale
      // so the left ones are integral with content 1
      std::vector<Rational> u, v;
      for (size_t r = 0; r < rows.size(); ++r) u.push_back(mat[{r, 0}] / base);
      for (size_t cc = 0; cc < cols.size(); ++cc) v.push_back(mat[{0, cc}]);
      Rational lambda = u[0].abs();
      for (const auto& x : u) lambda = gcd_rational(lambda, x.abs());
      ExprVec ls, rs;
      for (size_t r = 0; r < rows.size(); ++r) {
        Monomial rep = rows[r].rep;
        rep.coeff = u[r] / lambda;
        ls.push_back(monomial_to_expr(rep));
      }
      for (size_t cc = 0; cc < cols.size(); ++cc) {
        Monomial rep = cols[cc].rep;
        rep.coeff = v[cc] * lambda;
        rs.push_back(monomial_to_expr(rep));
      }
      try {
        return mul({add(std::move(ls)), add(std::move(rs))});
      } catch (const Error&) {
        continue;  // a free index straddled the split between different terms
      }
    }
  }
  return std::nullopt;
}

Expr dagger_term(const Expr& t, const AlgebraContext& ctx);

OpFactor dagger_factor(const OpFactor& f, const AlgebraContext& ctx, Rational& sign);

}  // namespace

// ---------------------------------------------------------------------------
// public interface

FactorPattern pattern_from_expr(const Expr& e) {
  FactorPattern p;
  Expr base = e;
  if (e.is(NodeKind::Pow)) {
    p.power = e.node().value;
    base = e.node().kids[0];
  }
  switch (base.kind()) {
    case NodeKind::Tensor:
      p.name = base.node().name;
      if (base.node().indices.size() == 1) p.index = base.node().indices[0];
      return p;
    case NodeKind::OpFunc:
    case NodeKind::Scalar:
      p.name = base.node().name;
      return p;
    default:
      throw Error(Error::Kind::Parse, "unsupported factor pattern: " + render(e));
  }
}

Equation commutator(const Expr& a, const Expr& b, const AlgebraContext& ctx) {
  return Equation(commut(a, b, true), commutator_rhs(a, b, ctx));
}

Equation commutator(const Equation& a, const Equation& b, const AlgebraContext& ctx) {
  return Equation(commut(a.lhs, b.lhs, true), commutator_rhs(a.rhs, b.rhs, ctx));
}

Equation commutator(const Equation& a, const Expr& b, const AlgebraContext& ctx) {
  return Equation(commut(a.lhs, b, true), commutator_rhs(a.rhs, b, ctx));
}

Equation commutator(const Expr& a, const Equation& b, const AlgebraContext& ctx) {
  return Equation(commut(a, b.lhs, true), commutator_rhs(a, b.rhs, ctx));
}

Expr sort_products(const Expr& e, const ProductOrderSpec& spec, const AlgebraContext& ctx) {
  long budget = ctx.budget();
  std::vector<Expr> queue = terms_of(distribute(expand_active_commutators(e)));
  ExprVec out;
  auto prio = [&spec](const OpFactor& f) {
    for (size_t s = 0; s < spec.size(); ++s) {
      const FactorPattern& p = spec[s];
      bool named = f.kind == OpFactor::Kind::TensorF || f.kind == OpFactor::Kind::FuncF ||
                   f.kind == OpFactor::Kind::FieldPowF;
      if (!named || f.name != p.name || f.power != p.power) continue;
      if (p.index && !(f.indices.size() == 1 && f.indices[0] == *p.index)) continue;
      return s;
    }
    return spec.size();
  };
  for (size_t qi = 0; qi < queue.size(); ++qi) {
    if (queue[qi].is_zero()) continue;
    Monomial m = monomial_from_term(queue[qi]);
    if (m.is_zero()) continue;
    bool changed = true;
    while (changed) {
      changed = false;
      for (size_t i = 0; i + 1 < m.ops.size(); ++i) {
        if (prio(m.ops[i]) <= prio(m.ops[i + 1])) continue;
        ExprVec extra;
        if (!swap_with_rules(m, i, ctx, budget, extra))
          throw Error(Error::Kind::NoRule, "no rule to move " + m.ops[i + 1].name +
                                               " past " + m.ops[i].name);
        for (const Expr& x : extra) {
          for (const Expr& xt : terms_of(distribute(x)))
            if (!xt.is_zero()) queue.push_back(xt);
        }
        changed = true;
        break;
      }
    }
    out.push_back(monomial_to_expr(m));
  }
  return add(std::move(out));
}

Equation sort_products(const Equation& eq, const ProductOrderSpec& spec,
                       const AlgebraContext& ctx) {
  return Equation(sort_products(eq.lhs, spec, ctx), sort_products(eq.rhs, spec, ctx));
}

namespace {

Expr substitute_run(const std::vector<SumPattern>& pats, const Expr& target,
                    const AlgebraContext& ctx, long& guard);

// rewrites the interiors of inert brackets, daggers, derivatives, and
// operator applications, which the flat factor-run matcher cannot reach
Expr substitute_in_slots(const std::vector<SumPattern>& pats, const Expr& e,
                         const AlgebraContext& ctx, long& guard) {
  const Node& n = e.node();
  switch (n.kind) {
    case NodeKind::Add: {
      ExprVec out;
      for (const auto& k : n.kids) out.push_back(substitute_in_slots(pats, k, ctx, guard));
      return add(std::move(out));
    }
    case NodeKind::Mul: {
      ExprVec out;
      for (const auto& k : n.kids) out.push_back(substitute_in_slots(pats, k, ctx, guard));
      return mul(std::move(out));
    }
    case NodeKind::Pow:
      return pow(substitute_in_slots(pats, n.kids[0], ctx, guard), n.value);
    case NodeKind::Commut:
      return commut(substitute_run(pats, n.kids[0], ctx, guard),
                    substitute_run(pats, n.kids[1], ctx, guard), n.inert);
    case NodeKind::Dagger:
      return dagger_node(substitute_run(pats, n.kids[0], ctx, guard));
    case NodeKind::Deriv:
      return deriv(n.indices, substitute_run(pats, n.kids[0], ctx, guard));
    case NodeKind::Apply:
      return apply_node(n.name, n.indices, substitute_run(pats, n.kids[0], ctx, guard));
    default:
      return e;
  }
}

Expr substitute_run(const std::vector<SumPattern>& pats, const Expr& target,
                    const AlgebraContext& ctx, long& guard) {
  Expr seeded = substitute_in_slots(pats, target, ctx, guard);
  std::vector<Expr> terms = terms_of(distribute(expand_active_commutators(seeded)));
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& sp : pats) {
      if (apply_pattern_once(sp, terms, ctx)) {
        if (--guard < 0)
          throw Error(Error::Kind::Budget, "substitution did not reach a fixed point");
        changed = true;
        break;
      }
    }
  }
  ExprVec out;
  for (auto& t : terms)
    if (!t.is_zero()) out.push_back(t);
  return add(std::move(out));
}

}  // namespace

Expr substitute_tensor(const std::vector<Equation>& identities, const Expr& target,
                       const AlgebraContext& ctx) {
  std::vector<SumPattern> pats;
  pats.reserve(identities.size());
  for (const auto& id : identities) pats.push_back(prepare_pattern(id, ctx));
  long guard = ctx.budget();
  return substitute_run(pats, target, ctx, guard);
}

Equation substitute_tensor(const std::vector<Equation>& identities, const Equation& target,
                           const AlgebraContext& ctx) {
  return Equation(substitute_tensor(identities, target.lhs, ctx),
                  substitute_tensor(identities, target.rhs, ctx));
}

Expr substitute_tensor_indices(const std::vector<std::pair<Index, Index>>& renaming,
                               const Expr& target) {
  Expr cur = target;
  for (const auto& [src, dst] : renaming) {
    ExprVec out;
    for (const Expr& t : terms_of(cur)) {
      std::set<Index> fr = term_frees(t);
      if (!fr.count(src)) {
        out.push_back(t);
        continue;
      }
      if (fr.count(dst))
        throw Error(Error::Kind::Index,
                    "renaming " + src + " onto the existing free index " + dst);
      Expr t2 = t;
      if (term_dummies(t).count(dst)) {
        std::set<Index> avoid = all_index_names(t);
        avoid.insert(src);
        t2 = rename_indices(t2, {{dst, fresh_index(avoid)}});
      }
      out.push_back(rename_indices(t2, {{src, dst}}));
    }
    cur = add(std::move(out));
  }
  return cur;
}

Equation substitute_tensor_indices(const std::vector<std::pair<Index, Index>>& renaming,
                                   const Equation& target) {
  return Equation(substitute_tensor_indices(renaming, target.lhs),
                  substitute_tensor_indices(renaming, target.rhs));
}

namespace {

Expr subs_walk(const Expr& e, const Equation& id) {
  if (structural_equal(e, id.lhs)) return id.rhs;
  const Node& n = e.node();
  auto walk_kids = [&id](const ExprVec& kids) {
    ExprVec out;
    out.reserve(kids.size());
    for (const auto& k : kids) out.push_back(subs_walk(k, id));
    return out;
  };
  switch (n.kind) {
    case NodeKind::Add:
      return add(walk_kids(n.kids));
    case NodeKind::Mul:
      return mul(walk_kids(n.kids));
    case NodeKind::Pow:
      return pow(subs_walk(n.kids[0], id), n.value);
    case NodeKind::Commut:
      return commut(subs_walk(n.kids[0], id), subs_walk(n.kids[1], id), n.inert);
    case NodeKind::Dagger:
      return dagger_node(subs_walk(n.kids[0], id));
    case NodeKind::Deriv:
      return deriv(n.indices, subs_walk(n.kids[0], id));
    case NodeKind::Apply:
      return apply_node(n.name, n.indices, subs_walk(n.kids[0], id));
    default:
      return e;
  }
}

}  // namespace

Expr subs_syntactic(const std::vector<Equation>& identities, const Expr& target) {
  Expr cur = target;
  for (const auto& id : identities) cur = subs_walk(cur, id);
  return cur;
}

Equation subs_syntactic(const std::vector<Equation>& identities, const Equation& target) {
  return Equation(subs_syntactic(identities, target.lhs),
                  subs_syntactic(identities, target.rhs));
}

namespace {

// clears negative powers of a scalar target from every term, then requires
// the cleared equation to be linear in it
Equation isolate_scalar_atom(const Equation& eq, const Expr& target, const Expr& atom) {
  std::vector<Monomial> all;
  auto feed = [&](const Expr& side, int sign) {
    for (const Expr& t : terms_of(distribute(expand_active_commutators(side)))) {
      if (t.is_zero()) continue;
      Monomial m = monomial_from_term(t);
      if (m.is_zero()) continue;
      if (!m.ops.empty() || !m.eps.empty() || !m.gs.empty())
        throw Error(Error::Kind::Domain, "scalar isolation requires a scalar equation");
      if (sign < 0) m.coeff = -m.coeff;
      all.push_back(std::move(m));
    }
  };
  feed(eq.lhs, +1);
  feed(eq.rhs, -1);
  Rational emin(0);
  std::vector<Rational> exps;
  for (const auto& m : all) {
    Rational e(0);
    for (const auto& [b, x] : m.scalars)
      if (structural_equal(b, atom)) e = x;
    if (!e.is_integer())
      throw Error(Error::Kind::Domain, "isolation target carries a fractional power");
    exps.push_back(e);
    if (e < emin) emin = e;
  }
  ExprVec cofs, moved;
  for (size_t k = 0; k < all.size(); ++k) {
    Monomial m = all[k];
    Rational ee = exps[k] - emin;
    for (auto it = m.scalars.begin(); it != m.scalars.end(); ++it)
      if (structural_equal(it->first, atom)) {
        m.scalars.erase(it);
        break;
      }
    if (ee.is_zero()) {
      m.coeff = -m.coeff;
      moved.push_back(monomial_scalar_expr(m));
    } else if (ee.is_one()) {
      cofs.push_back(monomial_scalar_expr(m));
    } else {
      throw Error(Error::Kind::Domain, "isolation target occurs nonlinearly");
    }
  }
  if (cofs.empty())
    throw Error(Error::Kind::Domain, "isolation target does not occur in the equation");
  Expr c = tidy_scalar_sum(add(std::move(cofs)));
  Expr rhs = c.is_one() ? add(std::move(moved)) : mul({pow(c, Rational(-1)), add(std::move(moved))});
  return Equation(target, rhs);
}

}  // namespace

Equation isolate(const Equation& eq, const Expr& target, const AlgebraContext& ctx) {
  (void)ctx;
  if (target.is(NodeKind::Add))
    throw Error(Error::Kind::Domain, "isolation target must be a single monomial");
  Monomial tm = monomial_from_term(target);
  if (tm.is_zero()) throw Error(Error::Kind::Domain, "cannot isolate zero");
  if (tm.ops.empty() && tm.eps.empty() && tm.gs.empty() && tm.scalars.size() == 1 &&
      tm.scalars[0].second.is_one() && tm.coeff.is_one() && tm.ipow == 0)
    return isolate_scalar_atom(eq, target, tm.scalars[0].first);
  ExprVec cofs, moved;
  auto feed = [&](const Expr& side, int sign) {
    for (const Expr& t : terms_of(distribute(expand_active_commutators(side)))) {
      if (t.is_zero()) continue;
      Monomial m = monomial_from_term(t);
      if (m.is_zero()) continue;
      if (auto c = divide_by_target(m, tm)) {
        cofs.push_back(sign < 0 ? mul({integer(-1), *c}) : *c);
      } else {
        // moves across with the opposite sign
        moved.push_back(sign < 0 ? t : mul({integer(-1), t}));
      }
    }
  };
  feed(eq.lhs, +1);
  feed(eq.rhs, -1);
  if (cofs.empty())
    throw Error(Error::Kind::Domain, "isolation target does not occur in the equation");
  Expr c = tidy_scalar_sum(add(std::move(cofs)));
  Expr rhs = c.is_one() ? add(std::move(moved)) : mul({pow(c, Rational(-1)), add(std::move(moved))});
  return Equation(target, rhs);
}

Expr expand(const Expr& e) { return distribute(expand_active_commutators(e)); }

Equation expand(const Equation& eq) { return Equation(expand(eq.lhs), expand(eq.rhs)); }

Expr normal(const Expr& e, const AlgebraContext& ctx) {
  ExprVec out;
  for (const Expr& t : terms_of(distribute(expand_active_commutators(e)))) {
    Monomial m = monomial_from_term(t);
    normalize_scalars(m, ctx);
    if (m.is_zero()) continue;
    out.push_back(monomial_to_expr(m));
  }
  return add(std::move(out));
}

Equation normal(const Equation& eq, const AlgebraContext& ctx) {
  return Equation(normal(eq.lhs, ctx), normal(eq.rhs, ctx));
}

Expr factor(const Expr& e, const AlgebraContext& ctx) {
  std::vector<Monomial> ms;
  for (const Expr& t : terms_of(distribute(expand_active_commutators(e)))) {
    Monomial m = monomial_from_term(t);
    if (m.is_zero()) continue;
    normalize_scalars(m, ctx);
    if (!m.is_zero()) ms.push_back(std::move(m));
  }
  if (ms.size() < 2) return e;

  // stage 1: common commutative content
  Monomial content;
  content.coeff = ms[0].coeff.abs();
  bool allneg = true;
  int ipmin = 3;
  for (const auto& m : ms) {
    content.coeff = gcd_rational(content.coeff, m.coeff.abs());
    if (!m.coeff.is_negative()) allneg = false;
    ipmin = std::min(ipmin, m.ipow);
  }
  if (allneg) content.coeff = -content.coeff;
  content.ipow = ipmin;
  for (const auto& [b, x] : ms[0].scalars) {
    Rational lo = x;
    for (size_t i = 1; i < ms.size(); ++i) {
      Rational found(0);
      for (const auto& [ob, oe] : ms[i].scalars)
        if (structural_equal(ob, b)) {
          found = oe;
          break;
        }
      if (found < lo) lo = found;
    }
    if (!lo.is_zero()) content.scalars.emplace_back(b, lo);
  }
  for (auto& m : ms) {
    m.coeff /= content.coeff;
    m.ipow -= ipmin;
    for (const auto& [b, x] : content.scalars) subtract_scalar(m.scalars, b, x);
  }

  // stage 2: common operator word prefix and suffix
  size_t minlen = ms[0].ops.size();
  for (const auto& m : ms) minlen = std::min(minlen, m.ops.size());
  size_t npre = 0;
  while (npre < minlen) {
    bool same = true;
    for (const auto& m : ms)
      if (!(m.ops[npre] == ms[0].ops[npre])) same = false;
    if (!same) break;
    ++npre;
  }
  size_t npost = 0;
  while (npre + npost < minlen) {
    bool same = true;
    for (const auto& m : ms)
      if (!(m.ops[m.ops.size() - 1 - npost] == ms[0].ops[ms[0].ops.size() - 1 - npost]))
        same = false;
    if (!same) break;
    ++npost;
  }
  Word pre(ms[0].ops.begin(), ms[0].ops.begin() + npre);
  Word post(ms[0].ops.end() - npost, ms[0].ops.end());
  for (auto& m : ms) {
    m.ops.erase(m.ops.begin(), m.ops.begin() + npre);
    m.ops.erase(m.ops.end() - npost, m.ops.end());
  }

  bool got_content = !content.coeff.is_one() || content.ipow > 0 || !content.scalars.empty();
  bool got_word = npre > 0 || npost > 0;

  // stage 3: rank-1 bilinear split of the remainder
  std::optional<Expr> split = bilinear_split(ms, ctx);
  if (!split && !got_content && !got_word) return e;
  Expr midsum;
  if (split) {
    midsum = *split;
  } else {
    ExprVec mids;
    for (const auto& m : ms) mids.push_back(monomial_to_expr(m));
    midsum = add(std::move(mids));
  }
  try {
    return mul({monomial_scalar_expr(content), word_to_expr(pre, 0, pre.size()), midsum,
                word_to_expr(post, 0, post.size())});
  } catch (const Error&) {
    return e;
  }
}

Equation factor(const Equation& eq, const AlgebraContext& ctx) {
  return Equation(factor(eq.lhs, ctx), factor(eq.rhs, ctx));
}

namespace {

// adjoint of a single factor; multiplies sign by -1 for inert commutators
OpFactor dagger_factor(const OpFactor& f, const AlgebraContext& ctx, Rational& sign) {
  auto hermitian = [&ctx](const std::string& name) {
    const TensorDecl* d = ctx.decl(name);
    return d && d->hermitian;
  };
  OpFactor out = f;
  switch (f.kind) {
    case OpFactor::Kind::TensorF:
    case OpFactor::Kind::FuncF:
      if (hermitian(f.name)) return out;
      out.kind = OpFactor::Kind::DaggerF;
      out.slot = op_factor_to_expr(f);
      out.name.clear();
      out.indices.clear();
      out.power = Rational(1);
      return out;
    case OpFactor::Kind::FieldPowF:
      // powers of X_l^2 are hermitian
      return out;
    case OpFactor::Kind::DerivF: {
      ExprVec ts;
      for (const Expr& t : terms_of(f.slot)) ts.push_back(dagger_term(t, ctx));
      out.slot = add(std::move(ts));
      return out;
    }
    case OpFactor::Kind::CommutF: {
      // [a, b]^+ = [b^+, a^+] = -[a^+, b^+]
      const Node& n = f.slot.node();
      Expr a = n.kids[0], b = n.kids[1];
      ExprVec as, bs;
      for (const Expr& t : terms_of(a)) as.push_back(dagger_term(t, ctx));
      for (const Expr& t : terms_of(b)) bs.push_back(dagger_term(t, ctx));
      out.slot = commut(add(std::move(as)), add(std::move(bs)), n.inert);
      sign *= Rational(-1);
      return out;
    }
    case OpFactor::Kind::DaggerF: {
      // involution: unwrap
      Monomial m = monomial_from_term(f.slot);
      if (m.ops.size() == 1 && m.coeff.is_one() && m.ipow == 0 && m.scalars.empty() &&
          m.eps.empty() && m.gs.empty())
        return m.ops[0];
      out.slot = f.slot;
      return out;
    }
    case OpFactor::Kind::ApplyF:
    default:
      out.kind = OpFactor::Kind::DaggerF;
      out.slot = op_factor_to_expr(f);
      out.name.clear();
      out.indices.clear();
      out.power = Rational(1);
      return out;
  }
}

Expr dagger_term(const Expr& t, const AlgebraContext& ctx) {
  Monomial m = monomial_from_term(t);
  if (m.is_zero()) return zero();
  Monomial out;
  out.coeff = m.coeff;
  out.ipow = m.ipow;
  if (m.ipow % 2 == 1) out.coeff = -out.coeff;  // conjugate i^k = (-1)^k i^k
  out.scalars = m.scalars;
  out.eps = m.eps;
  out.gs = m.gs;
  Rational sign(1);
  for (auto it = m.ops.rbegin(); it != m.ops.rend(); ++it)
    out.ops.push_back(dagger_factor(*it, ctx, sign));
  out.coeff *= sign;
  return monomial_to_expr(out);
}

}  // namespace

Expr dagger(const Expr& e, const AlgebraContext& ctx) {
  ExprVec out;
  for (const Expr& t : terms_of(distribute(expand_active_commutators(e))))
    out.push_back(dagger_term(t, ctx));
  return add(std::move(out));
}

Equation dagger(const Equation& eq, const AlgebraContext& ctx) {
  return Equation(dagger(eq.lhs, ctx), dagger(eq.rhs, ctx));
}

}  // namespace opalg
