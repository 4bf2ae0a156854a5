#include "opalg/oracle.hpp"

#include <algorithm>
#include <optional>
#include <sstream>

namespace opalg {
namespace {

ScalarPart scalar_one() { return ScalarPart{}; }

ScalarPart negated(ScalarPart s) {
  s.coeff = -s.coeff;
  return s;
}

std::string render_scalar_part(const ScalarPart& s, bool lead) {
  std::ostringstream os;
  Rational c = s.coeff;
  if (c.is_negative()) {
    os << (lead ? "-" : " - ");
    c = -c;
  } else if (!lead) {
    os << " + ";
  }
  std::vector<std::string> parts;
  if (!(c == Rational(1))) parts.push_back(c.str());
  if (s.ipow == 1) parts.push_back("i");
  if (s.ipow == 2) parts.push_back("i^2");
  if (s.ipow == 3) parts.push_back("i^3");
  for (const auto& [n, e] : s.scalars) {
    if (e == Rational(1))
      parts.push_back(n);
    else
      parts.push_back(n + "^" + e.str());
  }
  for (size_t i = 0; i < parts.size(); ++i) os << (i ? "*" : "") << parts[i];
  return os.str();
}

int levi(int a, int b, int c) { return (a - b) * (b - c) * (c - a) / 2; }

// ---------------------------------------------------------------------------
// expansion into components

CompSum one_term(ScalarPart s) {
  CompTerm t;
  t.s = std::move(s);
  return {std::move(t)};
}

CompSum comp_mul(const CompSum& x, const CompSum& y) {
  CompSum out;
  out.reserve(x.size() * y.size());
  for (const auto& a : x)
    for (const auto& b : y) {
      CompTerm t;
      t.s = scalar_mul(a.s, b.s);
      if (t.s.is_zero()) continue;
      t.word = a.word;
      t.word.insert(t.word.end(), b.word.begin(), b.word.end());
      out.push_back(std::move(t));
    }
  return out;
}

CompSum comp_neg(CompSum x) {
  for (auto& t : x) t.s.coeff = -t.s.coeff;
  return x;
}

int comp_of(const Index& ix, const std::map<Index, int>& asg) {
  auto it = asg.find(ix);
  if (it == asg.end())
    throw Error(Error::Kind::Index, "free index '" + ix + "' left uninstantiated");
  return it->second;
}

// matches Pow(Pow(coord tensor, 2), q) with the inner index scoped
bool is_square_pow(const Expr& e) {
  if (!e.is(NodeKind::Pow)) return false;
  const Expr& b = e.node().kids[0];
  return b.is(NodeKind::Pow) && b.node().value == Rational(2) &&
         b.node().kids[0].is(NodeKind::Tensor) && b.node().kids[0].node().indices.size() == 1;
}

struct PotentialInfo {
  std::string name;   // defined field
  std::string coord;  // coordinate tensor name
  Rational expo;      // defining exponent e in name = (coord^2)^e
};

std::optional<PotentialInfo> potential_info(const AlgebraContext& ctx) {
  const auto& def = ctx.potential_definition();
  if (!def) return std::nullopt;
  if (!def->lhs.is(NodeKind::OpFunc) || !is_square_pow(def->rhs)) return std::nullopt;
  Rational e = def->rhs.node().value;
  if (e.is_zero()) return std::nullopt;
  return PotentialInfo{def->lhs.node().name, def->rhs.node().kids[0].node().kids[0].node().name,
                       e};
}

// power of the defined field equivalent to (coord^2)^q, when integral
CompSum square_as_potential(const PotentialInfo& pi, const Rational& q) {
  Rational k = q / pi.expo;
  if (!k.is_integer())
    throw Error(Error::Kind::Domain, "coordinate square power " + q.str() +
                                         " is not an integral power of the defined field");
  if (k.num() == 0) return one_term(scalar_one());
  CompTerm t;
  t.word.push_back({pi.name, {}, k.num()});
  return {std::move(t)};
}

CompSum walk(const Expr& e, const AlgebraContext& ctx, const std::map<Index, int>& asg);

CompSum walk_pow(const Expr& e, const AlgebraContext& ctx, const std::map<Index, int>& asg) {
  const Expr& b = e.node().kids[0];
  const Rational& q = e.node().value;
  if (b.is(NodeKind::Scalar)) {
    ScalarPart s;
    s.scalars[b.node().name] = q;
    return one_term(std::move(s));
  }
  if (is_square_pow(e)) {
    auto pi = potential_info(ctx);
    if (pi && pi->coord == b.node().kids[0].node().name) return square_as_potential(*pi, q);
    if (q.is_integer() && q.num() > 0) {
      // no definition to fold into: expand (c1^2 + c2^2 + c3^2)^q literally
      CompSum base;
      const std::string& nm = b.node().kids[0].node().name;
      for (int c = 1; c <= 3; ++c) {
        CompTerm t;
        t.word.push_back({nm, {c}, 1});
        t.word.push_back({nm, {c}, 1});
        base.push_back(std::move(t));
      }
      CompSum out = base;
      for (long r = 1; r < q.num(); ++r) out = comp_mul(out, base);
      return out;
    }
    throw Error(Error::Kind::Domain,
                "cannot expand coordinate square power without a field definition");
  }
  if (b.is(NodeKind::Tensor) || b.is(NodeKind::OpFunc)) {
    if (!q.is_integer())
      throw Error(Error::Kind::Domain, "fractional operator power outside the component algebra");
    std::vector<int> comps;
    for (const auto& ix : b.node().indices) comps.push_back(comp_of(ix, asg));
    CompSum out = one_term(scalar_one());
    if (q.num() > 0) {
      for (long r = 0; r < q.num(); ++r) out[0].word.push_back({b.node().name, comps, 1});
    } else if (q.num() < 0) {
      out[0].word.push_back({b.node().name, comps, q.num()});
    }
    return out;
  }
  if (q.is_integer() && q.num() > 0) {
    CompSum base = walk(b, ctx, asg);
    CompSum out = base;
    for (long r = 1; r < q.num(); ++r) out = comp_mul(out, base);
    return out;
  }
  throw Error(Error::Kind::Domain, "power outside the component algebra");
}

CompSum walk(const Expr& e, const AlgebraContext& ctx, const std::map<Index, int>& asg) {
  const Node& n = e.node();
  switch (n.kind) {
    case NodeKind::Number: {
      if (n.value.is_zero()) return {};
      ScalarPart s;
      s.coeff = n.value;
      return one_term(std::move(s));
    }
    case NodeKind::Scalar: {
      ScalarPart s;
      s.scalars[n.name] = Rational(1);
      return one_term(std::move(s));
    }
    case NodeKind::ScalarFunc: {
      ScalarPart s;
      s.scalars[n.name + "(" + n.farg + ")"] = Rational(1);
      return one_term(std::move(s));
    }
    case NodeKind::Imaginary: {
      ScalarPart s;
      s.ipow = 1;
      return one_term(std::move(s));
    }
    case NodeKind::Add: {
      CompSum out;
      for (const auto& k : n.kids) {
        CompSum part = walk(k, ctx, asg);
        out.insert(out.end(), part.begin(), part.end());
      }
      return out;
    }
    case NodeKind::Mul: {
      CompSum out = one_term(scalar_one());
      for (const auto& k : n.kids) out = comp_mul(out, walk(k, ctx, asg));
      return out;
    }
    case NodeKind::Pow:
      return walk_pow(e, ctx, asg);
    case NodeKind::Tensor: {
      if (n.name == "eps") {
        int sgn = levi(comp_of(n.indices[0], asg), comp_of(n.indices[1], asg),
                       comp_of(n.indices[2], asg));
        if (sgn == 0) return {};
        ScalarPart s;
        s.coeff = Rational(sgn);
        return one_term(std::move(s));
      }
      if (n.name == "g") {
        if (comp_of(n.indices[0], asg) != comp_of(n.indices[1], asg)) return {};
        return one_term(scalar_one());
      }
      CompTerm t;
      std::vector<int> comps;
      for (const auto& ix : n.indices) comps.push_back(comp_of(ix, asg));
      t.word.push_back({n.name, std::move(comps), 1});
      return {std::move(t)};
    }
    case NodeKind::OpFunc: {
      CompTerm t;
      t.word.push_back({n.name, {}, 1});
      return {std::move(t)};
    }
    case NodeKind::Commut: {
      CompSum a = walk(n.kids[0], ctx, asg);
      CompSum b = walk(n.kids[1], ctx, asg);
      CompSum out = comp_mul(a, b);
      CompSum ba = comp_neg(comp_mul(b, a));
      out.insert(out.end(), ba.begin(), ba.end());
      return out;
    }
    default:
      throw Error(Error::Kind::Domain, "content outside the component algebra");
  }
}

// ---------------------------------------------------------------------------
// canonical merge

using TermKey = std::tuple<std::vector<CompFactor>, int, std::map<std::string, Rational>>;

CompSum merge_terms(const CompSum& in) {
  std::map<TermKey, Rational> acc;
  for (const auto& t : in) {
    if (t.s.is_zero()) continue;
    acc[TermKey{t.word, t.s.ipow, t.s.scalars}] += t.s.coeff;
  }
  CompSum out;
  for (const auto& [k, c] : acc) {
    if (c.is_zero()) continue;
    CompTerm t;
    t.word = std::get<0>(k);
    t.s.coeff = c;
    t.s.ipow = std::get<1>(k);
    t.s.scalars = std::get<2>(k);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

ScalarPart scalar_mul(const ScalarPart& x, const ScalarPart& y) {
  ScalarPart out;
  out.coeff = x.coeff * y.coeff;
  int t = x.ipow + y.ipow;
  if (t % 4 >= 2) out.coeff = -out.coeff;
  out.ipow = t % 2;
  if (t % 4 == 3) out.ipow = 1;
  out.scalars = x.scalars;
  for (const auto& [n, e] : y.scalars) {
    Rational& v = out.scalars[n];
    v += e;
    if (v.is_zero()) out.scalars.erase(n);
  }
  return out;
}

namespace {

// Commutator branches carry their own dummy scopes; opening them first (with
// collision-safe products) lets the per-term sweep see every dummy.
Expr open_commutators(const Expr& e) {
  const Node& n = e.node();
  switch (n.kind) {
    case NodeKind::Commut: {
      Expr a = open_commutators(n.kids[0]);
      Expr b = open_commutators(n.kids[1]);
      return mul_refresh(a, b) - mul_refresh(b, a);
    }
    case NodeKind::Add:
    case NodeKind::Mul: {
      ExprVec kids;
      for (const auto& k : n.kids) kids.push_back(open_commutators(k));
      return n.kind == NodeKind::Add ? add(std::move(kids)) : mul(std::move(kids));
    }
    case NodeKind::Pow:
      return pow(open_commutators(n.kids[0]), n.value);
    default:
      return e;
  }
}

}  // namespace

CompSum expand_components(const Expr& e, const AlgebraContext& ctx,
                          const std::map<Index, int>& assignment) {
  CompSum out;
  for (const Expr& term : terms_of(distribute(open_commutators(e)))) {
    if (term.is_zero()) continue;
    std::set<Index> dums = term_dummies(term);
    if (dums.size() > 4)
      throw Error(Error::Kind::Budget, "more than four dummies in one term");
    std::vector<Index> dv(dums.begin(), dums.end());
    long total = 1;
    for (size_t i = 0; i < dv.size(); ++i) total *= 3;
    for (long nassign = 0; nassign < total; ++nassign) {
      std::map<Index, int> asg = assignment;
      long v = nassign;
      for (const auto& d : dv) {
        asg[d] = int(v % 3) + 1;
        v /= 3;
      }
      CompSum part = walk(term, ctx, asg);
      out.insert(out.end(), part.begin(), part.end());
    }
  }
  return merge_terms(out);
}

namespace {

// ---------------------------------------------------------------------------
// component normal ordering

std::tuple<int, std::string, std::vector<int>> atom_key(const CompFactor& f,
                                                        const AlgebraContext& ctx) {
  return {ctx.class_rank(f.name), f.name, f.comps};
}

bool atom_position(const CompFactor& f, const AlgebraContext& ctx) {
  const TensorDecl* d = ctx.decl(f.name);
  return d && d->position;
}

bool atom_invertible(const CompFactor& f, const AlgebraContext& ctx) {
  const TensorDecl* d = ctx.decl(f.name);
  return d && d->invertible;
}

// [a, b] instantiated from the context rules, independent of the symbolic
// pipeline's template binding
std::optional<CompSum> component_commutator(const CompFactor& a, const CompFactor& b,
                                            const AlgebraContext& ctx) {
  auto rm = ctx.find_rule(a.name, a.power, b.name, b.power);
  if (!rm) return std::nullopt;
  const CommutatorRule& r = *rm->rule;
  if (r.zero) return CompSum{};
  std::map<Index, int> asg;
  const std::vector<int>& lc = rm->reversed ? b.comps : a.comps;
  const std::vector<int>& rc = rm->reversed ? a.comps : b.comps;
  for (size_t i = 0; i < r.lvars.size() && i < lc.size(); ++i) asg[r.lvars[i]] = lc[i];
  for (size_t i = 0; i < r.rvars.size() && i < rc.size(); ++i) asg[r.rvars[i]] = rc[i];
  CompSum out = expand_components(r.templ, ctx, asg);
  if (rm->reversed) out = comp_neg(out);
  return out;
}

std::vector<CompFactor> slice(const std::vector<CompFactor>& w, size_t lo, size_t hi) {
  return {w.begin() + lo, w.begin() + hi};
}

void push_with(std::vector<CompTerm>& work, const CompTerm& t, size_t i,
               const CompSum& middle, const std::vector<CompFactor>& pre_extra,
               const std::vector<CompFactor>& post_extra, const ScalarPart& scale) {
  // queues t with ops[i..i+2) replaced by pre_extra + (middle term) + post_extra
  for (const auto& c : middle) {
    CompTerm nt;
    nt.s = scalar_mul(scalar_mul(t.s, c.s), scale);
    if (nt.s.is_zero()) continue;
    nt.word = slice(t.word, 0, i);
    nt.word.insert(nt.word.end(), pre_extra.begin(), pre_extra.end());
    nt.word.insert(nt.word.end(), c.word.begin(), c.word.end());
    nt.word.insert(nt.word.end(), post_extra.begin(), post_extra.end());
    auto rest = slice(t.word, i + 2, t.word.size());
    nt.word.insert(nt.word.end(), rest.begin(), rest.end());
    work.push_back(std::move(nt));
  }
}

void end_merge(CompTerm& t) {
  std::vector<CompFactor> out;
  for (const auto& f : t.word) {
    if (!out.empty() && out.back().name == f.name && out.back().comps == f.comps) {
      out.back().power += f.power;
      if (out.back().power == 0) out.pop_back();
    } else {
      out.push_back(f);
    }
  }
  t.word = std::move(out);
}

// Recombines c1^2 + c2^2 + c3^2 coordinate triples into the defined field,
// so that both representations of the radial square meet in one canonical
// form. Terms must already be merged and sorted (coordinates lead the word).
bool contract_coordinate_squares(CompSum& sum, const PotentialInfo& pi) {
  Rational inv_e = Rational(pi.expo.den(), pi.expo.num());
  // candidate: term index -> (signature, comp); signature is the term with
  // one c^2 factor removed and the rest of the coordinate run kept
  struct Cand {
    size_t term;
    int comp;
  };
  std::map<TermKey, std::vector<Cand>> buckets;
  for (size_t ti = 0; ti < sum.size(); ++ti) {
    const CompTerm& t = sum[ti];
    for (size_t fi = 0; fi < t.word.size(); ++fi) {
      const CompFactor& f = t.word[fi];
      if (f.name != pi.coord || f.power < 2) continue;
      std::vector<CompFactor> sig = t.word;
      if (f.power == 2)
        sig.erase(sig.begin() + fi);
      else
        sig[fi].power -= 2;
      buckets[TermKey{sig, t.s.ipow, t.s.scalars}].push_back(
          {ti, f.comps.empty() ? 0 : f.comps[0]});
    }
  }
  std::vector<bool> consumed(sum.size(), false);
  CompSum added;
  for (const auto& [key, cands] : buckets) {
    // need all three components with one equal coefficient
    std::map<int, size_t> by_comp;
    for (const auto& c : cands)
      if (!consumed[c.term]) by_comp[c.comp] = c.term;
    if (by_comp.size() != 3) continue;
    Rational c1 = sum[by_comp[1]].s.coeff;
    if (sum[by_comp[2]].s.coeff != c1 || sum[by_comp[3]].s.coeff != c1) continue;
    for (int c = 1; c <= 3; ++c) consumed[by_comp[c]] = true;
    CompTerm nt;
    nt.word = std::get<0>(key);
    nt.s.coeff = c1;
    nt.s.ipow = std::get<1>(key);
    nt.s.scalars = std::get<2>(key);
    nt.word.push_back({pi.name, {}, inv_e.num()});
    added.push_back(std::move(nt));
  }
  if (added.empty()) return false;
  CompSum out;
  for (size_t ti = 0; ti < sum.size(); ++ti)
    if (!consumed[ti]) out.push_back(sum[ti]);
  out.insert(out.end(), added.begin(), added.end());
  sum = std::move(out);
  return true;
}

CompSum normal_order_pass(CompSum ce, const AlgebraContext& ctx, long& budget) {
  std::vector<CompTerm> work(std::move(ce));
  CompSum done;
  while (!work.empty()) {
    CompTerm t = std::move(work.back());
    work.pop_back();
    if (t.s.is_zero()) continue;
    if (--budget < 0)
      throw Error(Error::Kind::Budget, "component normal ordering exceeded its budget");
    bool acted = false;
    for (size_t i = 0; i + 1 < t.word.size(); ++i) {
      const CompFactor a = t.word[i];
      const CompFactor b = t.word[i + 1];
      if (a.name == b.name && a.comps == b.comps) continue;
      if (!(atom_key(b, ctx) < atom_key(a, ctx))) continue;
      // out of order: swap with corrections
      if (auto corr = component_commutator(a, b, ctx)) {
        push_with(work, t, i, *corr, {}, {}, scalar_one());
        std::swap(t.word[i], t.word[i + 1]);
        work.push_back(std::move(t));
        acted = true;
        break;
      }
      if (atom_position(a, ctx) && atom_position(b, ctx)) {
        std::swap(t.word[i], t.word[i + 1]);
        work.push_back(std::move(t));
        acted = true;
        break;
      }
      if (b.power < 0 && a.power == 1 && atom_invertible(b, ctx)) {
        CompFactor ub{b.name, b.comps, 1};
        auto corr = component_commutator(a, ub, ctx);
        if (corr) {
          // a b^k = b^-1 a b^(k+1) - b^-1 [a,b] b^k
          CompFactor binv{b.name, b.comps, -1};
          CompTerm moved = t;
          moved.word[i] = binv;
          moved.word[i + 1] = a;
          if (b.power + 1 != 0)
            moved.word.insert(moved.word.begin() + i + 2, {b.name, b.comps, b.power + 1});
          work.push_back(std::move(moved));
          ScalarPart minus;
          minus.coeff = Rational(-1);
          push_with(work, t, i, *corr, {binv}, {{b.name, b.comps, b.power}}, minus);
          acted = true;
          break;
        }
      }
      throw Error(Error::Kind::NoRule,
                  "no component rule for the pair " + a.name + ", " + b.name);
    }
    if (!acted) {
      end_merge(t);
      done.push_back(std::move(t));
    }
  }
  return merge_terms(done);
}

}  // namespace

CompSum component_normal_order(CompSum ce, const AlgebraContext& ctx) {
  long budget = ctx.budget();
  CompSum out = normal_order_pass(std::move(ce), ctx, budget);
  auto pi = potential_info(ctx);
  if (pi && !pi->expo.is_zero() && Rational(pi->expo.den(), pi->expo.num()).is_integer()) {
    while (contract_coordinate_squares(out, *pi))
      out = normal_order_pass(std::move(out), ctx, budget);
  }
  return out;
}

std::string render_components(const CompSum& ce) {
  if (ce.empty()) return "0";
  std::ostringstream os;
  bool lead = true;
  for (const auto& t : ce) {
    std::string s = render_scalar_part(t.s, lead);
    os << s;
    bool bare = s.empty() || s == "-" || s == " - " || s == " + ";
    for (size_t i = 0; i < t.word.size(); ++i) {
      const CompFactor& f = t.word[i];
      if (i || !bare) os << "*";
      os << f.name;
      if (!f.comps.empty()) {
        os << "(";
        for (size_t c = 0; c < f.comps.size(); ++c) os << (c ? "," : "") << f.comps[c];
        os << ")";
      }
      if (f.power != 1) os << "^" << f.power;
    }
    if (t.word.empty() && bare) os << "1";
    lead = false;
  }
  return os.str();
}

namespace {

std::string render_assignment(const std::vector<Index>& frees, const std::map<Index, int>& asg) {
  if (frees.empty()) return "no free indices";
  std::ostringstream os;
  for (size_t i = 0; i < frees.size(); ++i)
    os << (i ? ", " : "") << frees[i] << "=" << asg.at(frees[i]);
  return os.str();
}

CompSum comp_subtract(const CompSum& a, const CompSum& b) {
  CompSum all = a;
  for (auto t : b) {
    t.s.coeff = -t.s.coeff;
    all.push_back(std::move(t));
  }
  return merge_terms(all);
}

Verdict check_assignments(const Expr& a, const Expr& b, const AlgebraContext& ctx,
                          bool parallel) {
  std::set<Index> frees;
  try {
    std::set<Index> fa = free_indices_checked(a);
    std::set<Index> fb = free_indices_checked(b);
    frees.insert(fa.begin(), fa.end());
    frees.insert(fb.begin(), fb.end());
  } catch (const Error& e) {
    return {VerdictKind::Inconclusive, e.what()};
  }
  if (frees.size() > 4) return {VerdictKind::Inconclusive, "more than four free indices"};
  std::vector<Index> fv(frees.begin(), frees.end());
  long total = 1;
  for (size_t i = 0; i < fv.size(); ++i) total *= 3;
  std::vector<Verdict> res;
  res.resize(size_t(total));
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long n = 0; n < total; ++n) {
    std::map<Index, int> asg;
    long v = n;
    for (const auto& ix : fv) {
      asg[ix] = int(v % 3) + 1;
      v /= 3;
    }
    try {
      CompSum ca = component_normal_order(expand_components(a, ctx, asg), ctx);
      CompSum cb = component_normal_order(expand_components(b, ctx, asg), ctx);
      CompSum diff = comp_subtract(ca, cb);
      if (diff.empty()) {
        res[size_t(n)] = {VerdictKind::Equal, ""};
      } else {
        res[size_t(n)] = {VerdictKind::Unequal, "at " + render_assignment(fv, asg) +
                                                    ": residual " + render_components(diff)};
      }
    } catch (const Error& e) {
      res[size_t(n)] = {VerdictKind::Inconclusive, e.what()};
    }
  }
  for (const auto& r : res)
    if (r.kind == VerdictKind::Unequal) return r;
  for (const auto& r : res)
    if (r.kind == VerdictKind::Inconclusive) return r;
  return {VerdictKind::Equal, "all " + std::to_string(total) + " assignments agree"};
}

}  // namespace

Verdict equivalence_check(const Expr& a, const Expr& b, const AlgebraContext& ctx) {
  return check_assignments(a, b, ctx, true);
}

Verdict equivalence_check(const Equation& eq, const AlgebraContext& ctx) {
  return check_assignments(eq.lhs, eq.rhs, ctx, true);
}

Verdict equivalence_check_serial(const Expr& a, const Expr& b, const AlgebraContext& ctx) {
  return check_assignments(a, b, ctx, false);
}

// ---------------------------------------------------------------------------
// functional representation

namespace {

// key: exponents of x, y, z, r plus the i-power and symbol part of the
// coefficient; z-exponent is kept in {0,1} via z^2 = r^2 - x^2 - y^2
using FKey = std::tuple<long, long, long, long, int, std::map<std::string, Rational>>;
using FuncSum = std::map<FKey, Rational>;

void add_elem(FuncSum& f, long a, long b, long c, long m, const ScalarPart& s) {
  if (s.coeff.is_zero()) return;
  if (c >= 2) {
    add_elem(f, a, b, c - 2, m + 2, s);
    add_elem(f, a + 2, b, c - 2, m, negated(s));
    add_elem(f, a, b + 2, c - 2, m, negated(s));
    return;
  }
  FKey k{a, b, c, m, s.ipow, s.scalars};
  auto [it, fresh] = f.try_emplace(k, Rational(0));
  (void)fresh;
  it->second += s.coeff;
  if (it->second.is_zero()) f.erase(k);
}

ScalarPart part_of(const FKey& k, const Rational& coeff) {
  ScalarPart s;
  s.coeff = coeff;
  s.ipow = std::get<4>(k);
  s.scalars = std::get<5>(k);
  return s;
}

FuncSum mul_coord(const FuncSum& f, int coord) {
  FuncSum out;
  for (const auto& [k, c] : f) {
    auto [a, b, cz, m, ip, sc] = k;
    if (coord == 1) a += 1;
    if (coord == 2) b += 1;
    if (coord == 3) cz += 1;
    add_elem(out, a, b, cz, m, part_of(k, c));
  }
  return out;
}

FuncSum mul_rpow(const FuncSum& f, long dm) {
  FuncSum out;
  for (const auto& [k, c] : f) {
    auto [a, b, cz, m, ip, sc] = k;
    add_elem(out, a, b, cz, m + dm, part_of(k, c));
  }
  return out;
}

FuncSum derive(const FuncSum& f, int coord) {
  FuncSum out;
  for (const auto& [k, c] : f) {
    auto [a, b, cz, m, ip, sc] = k;
    long ex = coord == 1 ? a : coord == 2 ? b : cz;
    if (ex != 0) {
      ScalarPart s = part_of(k, c * Rational(ex));
      if (coord == 1) add_elem(out, a - 1, b, cz, m, s);
      if (coord == 2) add_elem(out, a, b - 1, cz, m, s);
      if (coord == 3) add_elem(out, a, b, cz - 1, m, s);
    }
    if (m != 0) {
      ScalarPart s = part_of(k, c * Rational(m));
      if (coord == 1) add_elem(out, a + 1, b, cz, m - 2, s);
      if (coord == 2) add_elem(out, a, b + 1, cz, m - 2, s);
      if (coord == 3) add_elem(out, a, b, cz + 1, m - 2, s);
    }
  }
  return out;
}

FuncSum scale_by(const FuncSum& f, const ScalarPart& s) {
  FuncSum out;
  for (const auto& [k, c] : f) {
    auto [a, b, cz, m, ip, sc] = k;
    add_elem(out, a, b, cz, m, scalar_mul(part_of(k, c), s));
  }
  return out;
}

FuncSum momentum(const FuncSum& f, int coord) {
  ScalarPart s;
  s.coeff = Rational(-1);
  s.ipow = 1;
  s.scalars["hbar"] = Rational(1);
  return scale_by(derive(f, coord), s);
}

// L(comp) as eps_{comp,m,n} X_m p_n
FuncSum angular(const FuncSum& f, int comp) {
  FuncSum out;
  for (int mm = 1; mm <= 3; ++mm)
    for (int nn = 1; nn <= 3; ++nn) {
      int sgn = levi(comp, mm, nn);
      if (sgn == 0) continue;
      ScalarPart s;
      s.coeff = Rational(sgn);
      FuncSum part = scale_by(mul_coord(momentum(f, nn), mm), s);
      for (const auto& [k, c] : part) {
        auto [a, b, cz, m, ip, sc] = k;
        add_elem(out, a, b, cz, m, part_of(k, c));
      }
    }
  return out;
}

FuncSum func_apply_factor(const CompFactor& f, const FuncSum& in, const AlgebraContext& ctx,
                          const std::optional<PotentialInfo>& pi) {
  const TensorDecl* d = ctx.decl(f.name);
  if (!d) throw Error(Error::Kind::Domain, "no declaration for " + f.name);
  if (d->position && d->arity == 1) {
    if (f.power < 1)
      throw Error(Error::Kind::Domain, "negative coordinate power is not representable");
    FuncSum out = in;
    for (long r = 0; r < f.power; ++r) out = mul_coord(out, f.comps[0]);
    return out;
  }
  if (d->diffop && d->arity == 1) {
    if (f.power < 1)
      throw Error(Error::Kind::Domain, "negative operator power is not representable");
    FuncSum out = in;
    for (long r = 0; r < f.power; ++r) out = momentum(out, f.comps[0]);
    return out;
  }
  if (f.name == "L" && d->arity == 1) {
    if (f.power < 1)
      throw Error(Error::Kind::Domain, "negative operator power is not representable");
    FuncSum out = in;
    for (long r = 0; r < f.power; ++r) out = angular(out, f.comps[0]);
    return out;
  }
  if (d->arity == 0 && d->position && pi && pi->name == f.name) {
    Rational dm = Rational(2) * pi->expo * Rational(f.power);
    if (!dm.is_integer())
      throw Error(Error::Kind::Domain, "field power outside the closed family");
    return mul_rpow(in, dm.num());
  }
  throw Error(Error::Kind::Domain, "operator " + f.name + " is not representable");
}

FuncSum func_apply_term(const CompTerm& t, const BasisElement& el, const AlgebraContext& ctx,
                        const std::optional<PotentialInfo>& pi) {
  FuncSum cur;
  add_elem(cur, el.a, el.b, el.c, el.m, scalar_one());
  for (size_t i = t.word.size(); i > 0; --i)
    cur = func_apply_factor(t.word[i - 1], cur, ctx, pi);
  return scale_by(cur, t.s);
}

FuncSum func_apply(const CompSum& sum, const BasisElement& el, const AlgebraContext& ctx,
                   const std::optional<PotentialInfo>& pi) {
  FuncSum out;
  for (const auto& t : sum) {
    FuncSum part = func_apply_term(t, el, ctx, pi);
    for (const auto& [k, c] : part) {
      auto [a, b, cz, m, ip, sc] = k;
      add_elem(out, a, b, cz, m, part_of(k, c));
    }
  }
  return out;
}

std::string render_basis(const BasisElement& el) {
  std::ostringstream os;
  bool any = false;
  auto put = [&](const char* n, long e) {
    if (e == 0) return;
    if (any) os << "*";
    os << n;
    if (e != 1) os << "^" << e;
    any = true;
  };
  put("x", el.a);
  put("y", el.b);
  put("z", el.c);
  put("r", el.m);
  if (!any) os << "1";
  return os.str();
}

std::string render_func_sum(const FuncSum& f) {
  if (f.empty()) return "0";
  std::ostringstream os;
  bool lead = true;
  for (const auto& [k, c] : f) {
    auto [a, b, cz, m, ip, sc] = k;
    ScalarPart s = part_of(k, c);
    os << render_scalar_part(s, lead);
    BasisElement el{a, b, cz, m};
    std::string base = render_basis(el);
    if (base != "1") os << "*" << base;
    lead = false;
  }
  return os.str();
}

}  // namespace

std::vector<BasisElement> default_basis_sample() {
  return {
      {0, 0, 0, 0}, {1, 0, 0, 0}, {0, 1, 0, 0},  {0, 0, 1, 0},
      {2, 0, 0, 0}, {1, 1, 0, 0}, {1, 1, 1, 0},  {2, 1, 0, 0},
      {0, 0, 0, -1}, {1, 0, 0, -1}, {0, 1, 0, -3}, {1, 1, 0, -3},
  };
}

Verdict functional_check(const Equation& identity, const AlgebraContext& ctx) {
  return functional_check(identity, ctx, default_basis_sample());
}

Verdict functional_check(const Equation& identity, const AlgebraContext& ctx,
                         const std::vector<BasisElement>& sample) {
  std::set<Index> frees;
  try {
    std::set<Index> fa = free_indices_checked(identity.lhs);
    std::set<Index> fb = free_indices_checked(identity.rhs);
    frees.insert(fa.begin(), fa.end());
    frees.insert(fb.begin(), fb.end());
  } catch (const Error& e) {
    return {VerdictKind::Inconclusive, e.what()};
  }
  if (frees.size() > 4) return {VerdictKind::Inconclusive, "more than four free indices"};
  std::vector<Index> fv(frees.begin(), frees.end());
  long total = 1;
  for (size_t i = 0; i < fv.size(); ++i) total *= 3;
  auto pi = potential_info(ctx);
  long checks = 0;
  for (long n = 0; n < total; ++n) {
    std::map<Index, int> asg;
    long v = n;
    for (const auto& ix : fv) {
      asg[ix] = int(v % 3) + 1;
      v /= 3;
    }
    try {
      CompSum ca = expand_components(identity.lhs, ctx, asg);
      CompSum cb = expand_components(identity.rhs, ctx, asg);
      for (const auto& el : sample) {
        FuncSum fa = func_apply(ca, el, ctx, pi);
        FuncSum fb = func_apply(cb, el, ctx, pi);
        for (const auto& [k, c] : fb) {
          auto [a, b, cz, m, ip, sc] = k;
          add_elem(fa, a, b, cz, m, negated(part_of(k, c)));
        }
        if (!fa.empty())
          return {VerdictKind::Unequal, "on " + render_basis(el) + " at " +
                                            render_assignment(fv, asg) + ": residual " +
                                            render_func_sum(fa)};
        ++checks;
      }
    } catch (const Error& e) {
      return {VerdictKind::Inconclusive, e.what()};
    }
  }
  return {VerdictKind::Equal,
          "all " + std::to_string(checks) + " sample applications agree"};
}

}  // namespace opalg
