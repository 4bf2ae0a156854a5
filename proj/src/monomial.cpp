#include "opalg/monomial.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "opalg/render.hpp"

namespace opalg {

bool OpFactor::operator==(const OpFactor& o) const {
  return kind == o.kind && name == o.name && indices == o.indices && power == o.power &&
         ((slot.ptr() == nullptr) == (o.slot.ptr() == nullptr)) &&
         (slot.ptr() == nullptr || structural_equal(slot, o.slot));
}

namespace {

bool is_field_square(const Expr& e) {
  // Pow(X_l, 2) with the index paired inside: the contracted square X_l^2
  return e.is(NodeKind::Pow) && e.node().value == Rational(2) &&
         e.node().kids[0].is(NodeKind::Tensor) && e.node().kids[0].node().indices.size() == 1;
}

void push_op_factor(Monomial& m, const Expr& f) {
  OpFactor of;
  Expr base = f;
  Rational power(1);
  if (f.is(NodeKind::Pow)) {
    base = f.node().kids[0];
    power = f.node().value;
    if (is_field_square(base)) {
      of.kind = OpFactor::Kind::FieldPowF;
      of.name = base.node().kids[0].node().name;
      of.power = power;
      m.ops.push_back(std::move(of));
      return;
    }
  }
  switch (base.kind()) {
    case NodeKind::Tensor: {
      const Node& n = base.node();
      if (n.name == "eps") {
        if (n.indices.size() != 3) throw Error(Error::Kind::Arity, "eps wants three indices");
        if (!power.is_one()) throw Error(Error::Kind::Domain, "eps cannot carry a power");
        m.eps.push_back({n.indices[0], n.indices[1], n.indices[2]});
        return;
      }
      if (n.name == "g") {
        if (n.indices.size() != 2) throw Error(Error::Kind::Arity, "g wants two indices");
        if (!power.is_one()) throw Error(Error::Kind::Domain, "g cannot carry a power");
        m.gs.push_back({n.indices[0], n.indices[1]});
        return;
      }
      if (!power.is_integer())
        throw Error(Error::Kind::Domain, "operator power must be an integer");
      of.kind = OpFactor::Kind::TensorF;
      of.name = n.name;
      of.indices = n.indices;
      of.power = power;
      break;
    }
    case NodeKind::OpFunc:
      if (!power.is_integer())
        throw Error(Error::Kind::Domain, "operator power must be an integer");
      of.kind = OpFactor::Kind::FuncF;
      of.name = base.node().name;
      of.power = power;
      break;
    case NodeKind::Deriv:
      of.kind = OpFactor::Kind::DerivF;
      of.indices = base.node().indices;
      of.slot = base.node().kids[0];
      if (!power.is_one()) throw Error(Error::Kind::Domain, "derivative factors carry no power");
      break;
    case NodeKind::Apply:
      of.kind = OpFactor::Kind::ApplyF;
      of.name = base.node().name;
      of.indices = base.node().indices;
      of.slot = base.node().kids[0];
      if (!power.is_one()) throw Error(Error::Kind::Domain, "applications carry no power");
      break;
    case NodeKind::Commut:
      if (!base.node().inert)
        throw Error(Error::Kind::Domain, "active commutator reached the monomial layer");
      of.kind = OpFactor::Kind::CommutF;
      of.slot = base;
      if (!power.is_one()) throw Error(Error::Kind::Domain, "commutator factors carry no power");
      break;
    case NodeKind::Dagger:
      of.kind = OpFactor::Kind::DaggerF;
      of.slot = base.node().kids[0];
      if (!power.is_one()) throw Error(Error::Kind::Domain, "dagger factors carry no power");
      break;
    default:
      throw Error(Error::Kind::Domain, "term is not in distributed form");
  }
  m.ops.push_back(std::move(of));
}

}  // namespace

Monomial monomial_from_term(const Expr& term) {
  Monomial m;
  for (const Expr& f : factors_of(term)) {
    switch (f.kind()) {
      case NodeKind::Number:
        m.coeff *= f.node().value;
        break;
      case NodeKind::Imaginary:
        m.ipow = (m.ipow + 1) % 4;
        break;
      case NodeKind::Add:
        throw Error(Error::Kind::Domain, "term is not in distributed form");
      default:
        if (is_commuting_scalar(f)) {
          if (f.is(NodeKind::Pow)) {
            push_scalar(m, f.node().kids[0], f.node().value);
          } else {
            push_scalar(m, f, Rational(1));
          }
        } else {
          push_op_factor(m, f);
        }
    }
  }
  return m;
}

Expr op_factor_to_expr(const OpFactor& f) {
  switch (f.kind) {
    case OpFactor::Kind::TensorF:
      return pow(tensor(f.name, f.indices), f.power);
    case OpFactor::Kind::FuncF:
      return pow(opfunc(f.name), f.power);
    case OpFactor::Kind::FieldPowF:
      return pow(pow(tensor(f.name, {"l"}), Rational(2)), f.power);
    case OpFactor::Kind::DerivF:
      return deriv(f.indices, f.slot);
    case OpFactor::Kind::ApplyF:
      return apply_node(f.name, f.indices, f.slot);
    case OpFactor::Kind::CommutF:
      return f.slot;
    case OpFactor::Kind::DaggerF:
      return dagger_node(f.slot);
  }
  return one();
}

Expr monomial_to_expr(const Monomial& m) {
  ExprVec fs;
  fs.push_back(number(m.coeff));
  for (int k = 0; k < m.ipow; ++k) fs.push_back(imaginary());
  for (const auto& [base, exp] : m.scalars) fs.push_back(pow(base, exp));
  for (const auto& e : m.eps) fs.push_back(tensor("eps", {e[0], e[1], e[2]}));
  for (const auto& g : m.gs) fs.push_back(tensor("g", {g[0], g[1]}));
  for (const auto& f : m.ops) fs.push_back(op_factor_to_expr(f));
  return mul(std::move(fs));
}

std::map<Index, int> monomial_index_counts(const Monomial& m) {
  std::map<Index, int> counts;
  for (const auto& e : m.eps)
    for (const auto& i : e) ++counts[i];
  for (const auto& g : m.gs)
    for (const auto& i : g) ++counts[i];
  for (const auto& f : m.ops) {
    switch (f.kind) {
      case OpFactor::Kind::TensorF: {
        long reps = std::abs(f.power.num());
        for (const auto& i : f.indices) counts[i] += static_cast<int>(reps);
        break;
      }
      case OpFactor::Kind::FieldPowF:
        break;
      case OpFactor::Kind::DerivF:
      case OpFactor::Kind::ApplyF: {
        for (const auto& i : f.indices) ++counts[i];
        if (f.slot.ptr())
          for (const auto& [i, c] : index_counts(f.slot)) counts[i] += c;
        break;
      }
      case OpFactor::Kind::CommutF:
      case OpFactor::Kind::DaggerF:
        if (f.slot.ptr())
          for (const auto& [i, c] : index_counts(f.slot)) counts[i] += c;
        break;
      default:
        break;
    }
  }
  return counts;
}

void rename_monomial_indices(Monomial& m, const std::map<Index, Index>& sub) {
  if (sub.empty()) return;
  auto ren = [&](Index& i) {
    auto it = sub.find(i);
    if (it != sub.end()) i = it->second;
  };
  for (auto& e : m.eps)
    for (auto& i : e) ren(i);
  for (auto& g : m.gs)
    for (auto& i : g) ren(i);
  for (auto& f : m.ops) {
    for (auto& i : f.indices) ren(i);
    if (f.slot.ptr()) f.slot = rename_indices(f.slot, sub);
    if (f.kind == OpFactor::Kind::DerivF) std::sort(f.indices.begin(), f.indices.end());
  }
}

void push_scalar(Monomial& m, const Expr& base, const Rational& exp) {
  if (exp.is_zero()) return;
  if (base.is_number()) {
    if (exp.is_integer()) {
      m.coeff *= base.node().value.pow(exp.num());
      return;
    }
  }
  for (auto& [b, e] : m.scalars) {
    if (structural_equal(b, base)) {
      e += exp;
      return;
    }
  }
  m.scalars.emplace_back(base, exp);
}

void merge_adjacent_ops(Monomial& m) {
  std::vector<OpFactor> out;
  for (auto& f : m.ops) {
    if (!out.empty()) {
      OpFactor& prev = out.back();
      bool mergeable = false;
      if (prev.kind == f.kind) {
        switch (f.kind) {
          case OpFactor::Kind::TensorF:
            mergeable = prev.name == f.name && prev.indices == f.indices;
            break;
          case OpFactor::Kind::FuncF:
            mergeable = prev.name == f.name;
            break;
          case OpFactor::Kind::FieldPowF:
            mergeable = prev.name == f.name;
            break;
          default:
            break;
        }
      }
      if (mergeable) {
        prev.power += f.power;
        if (prev.power.is_zero()) out.pop_back();
        continue;
      }
    }
    if ((f.kind == OpFactor::Kind::TensorF || f.kind == OpFactor::Kind::FuncF ||
         f.kind == OpFactor::Kind::FieldPowF) &&
        f.power.is_zero())
      continue;
    out.push_back(f);
  }
  m.ops = std::move(out);
}

int factor_class_rank(const OpFactor& f, const AlgebraContext& ctx) {
  switch (f.kind) {
    case OpFactor::Kind::TensorF:
      return ctx.class_rank(f.name);
    case OpFactor::Kind::FuncF:
      return ctx.class_rank(f.name);
    case OpFactor::Kind::FieldPowF: {
      int r = ctx.class_rank(f.name);
      return (r == 10 || r == 20 || r == 100) ? 15 : r;
    }
    case OpFactor::Kind::DerivF:
      if (f.slot.ptr() && f.slot.is(NodeKind::OpFunc)) {
        if (f.slot.node().name == "V") return 25;
        if (f.slot.node().name == "G") return 110;
      }
      return 115;
    case OpFactor::Kind::ApplyF:
      return 120;
    case OpFactor::Kind::CommutF:
      return 125;
    case OpFactor::Kind::DaggerF:
      return 50;
  }
  return 130;
}

namespace {

bool position_rank(int r) {
  return r == 10 || r == 15 || r == 20 || r == 25 || r == 100 || r == 110;
}

}  // namespace

bool factors_commute(const OpFactor& a, const OpFactor& b, const AlgebraContext& ctx) {
  if (a == b) return true;
  int ra = factor_class_rank(a, ctx);
  int rb = factor_class_rank(b, ctx);
  if (position_rank(ra) && position_rank(rb)) return true;
  bool simple_a = a.kind == OpFactor::Kind::TensorF || a.kind == OpFactor::Kind::FuncF;
  bool simple_b = b.kind == OpFactor::Kind::TensorF || b.kind == OpFactor::Kind::FuncF;
  if (simple_a && simple_b) {
    auto rm = ctx.find_rule(a.name, 1, b.name, 1);
    if (rm && rm->rule->zero) return true;
  }
  return false;
}

std::string factor_sort_key(const OpFactor& f, const AlgebraContext& ctx) {
  int r = factor_class_rank(f, ctx);
  std::string key = std::to_string(r / 100) + std::to_string((r / 10) % 10) +
                    std::to_string(r % 10) + "|" + f.name + "|";
  for (const auto& i : f.indices) key += i + ",";
  key += "|" + f.power.str();
  if (f.slot.ptr()) key += "|" + render(f.slot);
  return key;
}

long operator_degree(const Monomial& m, const AlgebraContext& ctx) {
  long deg = 0;
  for (const auto& f : m.ops) {
    int r = factor_class_rank(f, ctx);
    if (position_rank(r)) continue;
    if (f.kind == OpFactor::Kind::TensorF || f.kind == OpFactor::Kind::FuncF) {
      deg += std::abs(f.power.num());
    } else {
      deg += 1;
    }
  }
  return deg;
}

void normalize_structural(Monomial& m) {
  if (m.is_zero()) return;
  for (auto& e : m.eps) {
    if (e[0] == e[1] || e[0] == e[2] || e[1] == e[2]) {
      m.coeff = Rational(0);
      return;
    }
    // insertion-sort the triple, tracking parity
    int swaps = 0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2 - i; ++j)
        if (e[j + 1] < e[j]) {
          std::swap(e[j], e[j + 1]);
          ++swaps;
        }
    if (swaps % 2) m.coeff = -m.coeff;
  }
  std::sort(m.eps.begin(), m.eps.end());
  for (auto& g : m.gs)
    if (g[1] < g[0]) std::swap(g[0], g[1]);
  std::sort(m.gs.begin(), m.gs.end());
  std::sort(m.scalars.begin(), m.scalars.end(),
            [](const auto& a, const auto& b) { return compare(a.first, b.first) < 0; });
}

void contract_metric(Monomial& m, int dimension) {
  bool changed = true;
  while (changed && !m.is_zero()) {
    changed = false;
    for (size_t gi = 0; gi < m.gs.size(); ++gi) {
      Index a = m.gs[gi][0];
      Index b = m.gs[gi][1];
      if (a == b) {
        m.coeff *= Rational(dimension);
        m.gs.erase(m.gs.begin() + gi);
        changed = true;
        break;
      }
      std::map<Index, int> counts = monomial_index_counts(m);
      if (counts[a] == 2) {
        m.gs.erase(m.gs.begin() + gi);
        rename_monomial_indices(m, {{a, b}});
        changed = true;
        break;
      }
      if (counts[b] == 2) {
        m.gs.erase(m.gs.begin() + gi);
        rename_monomial_indices(m, {{b, a}});
        changed = true;
        break;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// scalar normalization

namespace {

struct ScalarAccum {
  Monomial* m;
  const AlgebraContext* ctx;
  std::vector<std::pair<Expr, Rational>> atoms;

  void add_ipow(int k) { m->ipow = ((m->ipow + k) % 4 + 4) % 4; }

  void atom(const Expr& base, const Rational& exp) {
    if (exp.is_zero()) return;
    for (auto& [b, e] : atoms) {
      if (structural_equal(b, base)) {
        e += exp;
        return;
      }
    }
    atoms.emplace_back(base, exp);
  }

  // is base of the shape (-1) * sym?
  static const Expr* negated_symbol(const Expr& base) {
    if (!base.is(NodeKind::Mul)) return nullptr;
    const ExprVec& ks = base.node().kids;
    if (ks.size() != 2 || !ks[0].is_number()) return nullptr;
    if (ks[0].node().value != Rational(-1)) return nullptr;
    if (!ks[1].is(NodeKind::Scalar)) return nullptr;
    return &ks[1];
  }

  void push(const Expr& base, const Rational& exp) {
    if (exp.is_zero()) return;
    switch (base.kind()) {
      case NodeKind::Number: {
        const Rational& r = base.node().value;
        if (exp.is_integer()) {
          m->coeff *= r.pow(exp.num());
          return;
        }
        if (exp.den() == 2) {
          // r^(k+1/2) = r^k * sqrt(r); sqrt splits into square part and
          // squarefree remainder, with sqrt(-1) = i
          long k = (exp.num() - 1) / 2;
          auto sp = r.sqrt_split();
          m->coeff *= r.pow(k) * sp.outside;
          Rational in = sp.inside;
          if (in.is_negative()) {
            add_ipow(1);
            in = -in;
          }
          if (!in.is_one()) atom(number(in), Rational(1, 2));
          return;
        }
        atom(base, exp);
        return;
      }
      case NodeKind::Imaginary: {
        if (exp.is_integer()) {
          add_ipow(static_cast<int>(((exp.num() % 4) + 4) % 4));
          return;
        }
        atom(base, exp);
        return;
      }
      case NodeKind::Pow:
        push(base.node().kids[0], base.node().value * exp);
        return;
      case NodeKind::Mul: {
        if (exp.is_integer()) {
          for (const Expr& f : base.node().kids) {
            if (f.is(NodeKind::Pow))
              push(f.node().kids[0], f.node().value * exp);
            else
              push(f, exp);
          }
          return;
        }
        if (const Expr* s = negated_symbol(base)) {
          // (-sym)^exp stays atomic when sym is known negative
          if (ctx->sign_of(s->node().name) < 0) {
            atom(base, exp);
            return;
          }
          if (ctx->sign_of(s->node().name) > 0 && exp.den() == 2) {
            // radicand is negative: pull out i
            add_ipow(exp.num() >= 0 ? static_cast<int>(exp.num() % 4)
                                    : static_cast<int>(((exp.num() % 4) + 4) % 4));
            push(*s, exp);
            return;
          }
          atom(base, exp);
          return;
        }
        if (exp.den() == 2) {
          // split sqrt of a product when every factor's sign is known
          bool splittable = true;
          for (const Expr& f : base.node().kids) {
            Expr fb = f.is(NodeKind::Pow) ? f.node().kids[0] : f;
            if (fb.is_number()) continue;
            if (fb.is(NodeKind::Scalar) && ctx->sign_of(fb.node().name) != 0) continue;
            if (const Expr* s = negated_symbol(fb); s && ctx->sign_of(s->node().name) != 0)
              continue;
            splittable = false;
            break;
          }
          if (splittable) {
            for (const Expr& f : base.node().kids) {
              if (f.is(NodeKind::Pow))
                push(f.node().kids[0], f.node().value * exp);
              else
                push(f, exp);
            }
            return;
          }
        }
        atom(base, exp);
        return;
      }
      case NodeKind::Scalar: {
        int sg = ctx->sign_of(base.node().name);
        if (sg < 0 && !exp.is_integer() && exp.den() == 2) {
          // sym^(t/2) = i^t * (-sym)^(t/2) for sym < 0
          add_ipow(static_cast<int>(((exp.num() % 4) + 4) % 4));
          atom(mul({integer(-1), base}), exp);
          return;
        }
        atom(base, exp);
        return;
      }
      default:
        atom(base, exp);
    }
  }

  void finalize() {
    // merge sym and (-sym) atoms via the integer-exponent one
    bool changed = true;
    while (changed) {
      changed = false;
      for (size_t i = 0; i < atoms.size() && !changed; ++i) {
        const Expr* s = negated_symbol(atoms[i].first);
        if (!s) continue;
        const Rational& e = atoms[i].second;
        // a lone integer power of (-sym) folds to sym with a sign
        bool partner = false;
        for (size_t j = 0; j < atoms.size(); ++j) {
          if (j == i) continue;
          if (atoms[j].first.is(NodeKind::Scalar) &&
              atoms[j].first.node().name == s->node().name) {
            partner = true;
            if (atoms[j].second.is_integer()) {
              if (atoms[j].second.num() % 2 != 0) m->coeff = -m->coeff;
              atoms[i].second += atoms[j].second;
              atoms.erase(atoms.begin() + j);
              changed = true;
            }
            break;
          }
        }
        if (!changed && !partner && e.is_integer()) {
          if (e.num() % 2 != 0) m->coeff = -m->coeff;
          Expr plain = *s;
          Rational ee = e;
          atoms.erase(atoms.begin() + i);
          if (!ee.is_zero()) atom(plain, ee);
          changed = true;
        }
      }
    }
    std::vector<std::pair<Expr, Rational>> out;
    for (auto& [b, e] : atoms) {
      if (e.is_zero()) continue;
      if (b.is_number() && e.is_integer()) {
        m->coeff *= b.node().value.pow(e.num());
        continue;
      }
      out.emplace_back(b, e);
    }
    m->scalars = std::move(out);
    if (m->ipow >= 2) {
      m->coeff = -m->coeff;
      m->ipow -= 2;
    }
  }
};

}  // namespace

void normalize_scalars(Monomial& m, const AlgebraContext& ctx) {
  if (m.is_zero()) return;
  ScalarAccum acc{&m, &ctx, {}};
  auto scalars = std::move(m.scalars);
  m.scalars.clear();
  for (const auto& [b, e] : scalars) acc.push(b, e);
  acc.finalize();
}

Expr monomial_scalar_expr(const Monomial& m) {
  ExprVec fs;
  fs.push_back(number(m.coeff));
  for (int k = 0; k < m.ipow; ++k) fs.push_back(imaginary());
  for (const auto& [b, e] : m.scalars) fs.push_back(pow(b, e));
  for (const auto& e : m.eps) fs.push_back(tensor("eps", {e[0], e[1], e[2]}));
  for (const auto& g : m.gs) fs.push_back(tensor("g", {g[0], g[1]}));
  return mul(std::move(fs));
}

Expr monomial_word_expr(const Monomial& m, size_t lo, size_t hi) {
  ExprVec fs;
  for (size_t i = lo; i < hi; ++i) fs.push_back(op_factor_to_expr(m.ops[i]));
  return mul(std::move(fs));
}

Expr op_power_expr(const OpFactor& f, long p) {
  if (p == 0) return one();
  if (f.kind == OpFactor::Kind::TensorF) return pow(tensor(f.name, f.indices), Rational(p));
  return pow(opfunc(f.name), Rational(p));
}

bool swap_with_rules(Monomial& m, size_t i, const AlgebraContext& ctx, long& budget,
                     ExprVec& extra) {
  auto& ops = m.ops;
  const OpFactor& a = ops[i];
  const OpFactor& b = ops[i + 1];
  if (factors_commute(a, b, ctx)) {
    std::swap(ops[i], ops[i + 1]);
    return true;
  }
  auto simple = [](const OpFactor& f) {
    return (f.kind == OpFactor::Kind::TensorF || f.kind == OpFactor::Kind::FuncF) &&
           f.power.is_integer();
  };
  if (!simple(a) || !simple(b)) return false;
  long pa = a.power.num();
  long pb = b.power.num();
  std::set<Index> host;
  for (const auto& [ix, c] : monomial_index_counts(m)) host.insert(ix);
  if (auto rm = ctx.find_rule(a.name, pa, b.name, pb)) {
    if (--budget < 0) throw Error(Error::Kind::Budget, "rewrite budget exhausted");
    Expr corr = rule_instance(*rm, a.indices, b.indices, host);
    extra.push_back(mul({monomial_scalar_expr(m), monomial_word_expr(m, 0, i), corr,
                         monomial_word_expr(m, i + 2, ops.size())}));
    std::swap(ops[i], ops[i + 1]);
    return true;
  }
  if (pa >= 1 && pb >= 1) {
    if (auto rm = ctx.find_rule(a.name, 1, b.name, 1)) {
      // [A^m, B^n] = sum_{j<m, k<n} A^j B^k [A,B] B^(n-1-k) A^(m-1-j)
      budget -= pa * pb;
      if (budget < 0) throw Error(Error::Kind::Budget, "rewrite budget exhausted");
      for (long j = 0; j < pa; ++j)
        for (long k = 0; k < pb; ++k) {
          Expr corr = rule_instance(*rm, a.indices, b.indices, host);
          extra.push_back(mul({monomial_scalar_expr(m), monomial_word_expr(m, 0, i),
                               op_power_expr(a, j), op_power_expr(b, k), corr,
                               op_power_expr(b, pb - 1 - k), op_power_expr(a, pa - 1 - j),
                               monomial_word_expr(m, i + 2, ops.size())}));
        }
      std::swap(ops[i], ops[i + 1]);
      return true;
    }
  }
  return false;
}

Expr rule_instance(const RuleMatch& rm, const std::vector<Index>& ai,
                   const std::vector<Index>& bi, const std::set<Index>& host) {
  const CommutatorRule& r = *rm.rule;
  const std::vector<Index>& li = rm.reversed ? bi : ai;
  const std::vector<Index>& ri = rm.reversed ? ai : bi;
  if (r.lvars.size() != li.size() || r.rvars.size() != ri.size())
    throw Error(Error::Kind::Arity, "rule arity does not match the factors");
  std::map<Index, Index> sub;
  for (size_t t = 0; t < li.size(); ++t) sub[r.lvars[t]] = li[t];
  for (size_t t = 0; t < ri.size(); ++t) sub[r.rvars[t]] = ri[t];
  std::set<Index> avoid = host;
  avoid.insert(li.begin(), li.end());
  avoid.insert(ri.begin(), ri.end());
  collect_index_names(r.templ, avoid);
  for (const auto& f : r.fresh) {
    Index nf = fresh_index(avoid);
    avoid.insert(nf);
    sub[f] = nf;
  }
  Expr corr = rename_indices(r.templ, sub);
  return rm.reversed ? mul({integer(-1), corr}) : corr;
}

// ---------------------------------------------------------------------------
// canonical dummy naming

namespace {

// lexicographically least word reachable by provably-commuting adjacent swaps
void foata_minimize(std::vector<OpFactor>& ops, const AlgebraContext& ctx) {
  std::vector<OpFactor> rest = std::move(ops);
  std::vector<OpFactor> out;
  out.reserve(rest.size());
  while (!rest.empty()) {
    size_t best = rest.size();
    std::string best_key;
    for (size_t j = 0; j < rest.size(); ++j) {
      bool movable = true;
      for (size_t i = 0; i < j && movable; ++i) {
        if (!factors_commute(rest[i], rest[j], ctx)) movable = false;
      }
      if (!movable) continue;
      std::string key = factor_sort_key(rest[j], ctx);
      if (best == rest.size() || key < best_key) {
        best = j;
        best_key = std::move(key);
      }
    }
    out.push_back(rest[best]);
    rest.erase(rest.begin() + best);
  }
  ops = std::move(out);
}

}  // namespace

std::string monomial_key(const Monomial& m, const AlgebraContext& ctx) {
  std::string key = "i" + std::to_string(m.ipow) + ";";
  for (const auto& [b, e] : m.scalars) key += render(b) + "^" + e.str() + ",";
  key += ";";
  for (const auto& e : m.eps) key += "e[" + e[0] + "," + e[1] + "," + e[2] + "]";
  key += ";";
  for (const auto& g : m.gs) key += "g[" + g[0] + "," + g[1] + "]";
  key += ";";
  for (const auto& f : m.ops) key += factor_sort_key(f, ctx) + " ";
  return key;
}

std::string canonicalize_dummies(Monomial& m, const AlgebraContext& ctx) {
  if (m.is_zero()) return "";
  std::map<Index, int> counts = monomial_index_counts(m);
  std::vector<Index> dummies;
  std::set<Index> frees;
  for (const auto& [i, c] : counts) {
    if (c == 2) dummies.push_back(i);
    else if (c == 1) frees.insert(i);
    else if (c > 2)
      throw Error(Error::Kind::Index, "index '" + i + "' appears more than twice in a term");
  }
  std::vector<Index> letters;
  {
    std::set<Index> used = frees;
    while (letters.size() < dummies.size()) {
      Index f = fresh_index(used);
      used.insert(f);
      letters.push_back(f);
    }
  }

  Rational coeff = m.coeff;
  m.coeff = Rational(1);

  auto candidate = [&](const std::vector<Index>& order, Monomial& work) {
    std::map<Index, Index> sub;
    for (size_t i = 0; i < order.size(); ++i) sub[order[i]] = "#" + letters[i];
    rename_monomial_indices(work, sub);
    sub.clear();
    for (const auto& l : letters) sub["#" + l] = l;
    rename_monomial_indices(work, sub);
    normalize_structural(work);
    if (work.is_zero()) return std::string();
    foata_minimize(work.ops, ctx);
    merge_adjacent_ops(work);
    return monomial_key(work, ctx);
  };

  if (dummies.size() > 6) {
    Monomial work = m;
    std::string key = candidate(dummies, work);
    work.coeff = work.coeff * coeff;
    m = work;
    return key;
  }

  // Every bijective renaming of the dummies names the same quantity, up to
  // the sign picked up when epsilon triples are re-sorted.  If any candidate
  // word is reachable with both signs the quantity equals its own negative.
  std::vector<Index> order = dummies;
  std::map<std::string, int> seen_sign;
  std::string best_key;
  Monomial best;
  bool have_best = false;
  do {
    Monomial work = m;
    std::string key = candidate(order, work);
    if (key.empty()) {
      m.coeff = Rational(0);
      return "";
    }
    int sign = work.coeff.is_negative() ? -1 : 1;
    auto [it, fresh] = seen_sign.emplace(key, sign);
    if (!fresh && it->second != sign) {
      m.coeff = Rational(0);
      return "";
    }
    if (!have_best || key < best_key) {
      best_key = key;
      best = std::move(work);
      have_best = true;
    }
  } while (std::next_permutation(order.begin(), order.end()));

  best.coeff = best.coeff * coeff;
  m = std::move(best);
  return best_key;
}

}  // namespace opalg
