#include "opalg/diffop.hpp"

#include <string>
#include <vector>

#include "opalg/monomial.hpp"
#include "opalg/render.hpp"

namespace opalg {
namespace {

bool is_position_decl(const std::string& name, const AlgebraContext& ctx) {
  const TensorDecl* d = ctx.decl(name);
  return d && d->position;
}

// matches (X_l^2): a squared power of a position coordinate tensor
bool is_coordinate_square(const Expr& e, const AlgebraContext& ctx) {
  if (!e.is(NodeKind::Pow) || e.node().value != Rational(2)) return false;
  const Expr& b = e.node().kids[0];
  return b.is(NodeKind::Tensor) && b.node().indices.size() == 1 &&
         is_position_decl(b.node().name, ctx);
}

// the registered definition, decomposed as name = (coordinate square)^e
struct PotentialDef {
  std::string name;   // the defined field
  std::string coord;  // the coordinate tensor it is built from
  Rational expo;      // the defining exponent e
};

std::optional<PotentialDef> potential_def(const AlgebraContext& ctx) {
  const auto& def = ctx.potential_definition();
  if (!def) return std::nullopt;
  const Expr& lhs = def->lhs;
  const Expr& rhs = def->rhs;
  if (!lhs.is(NodeKind::OpFunc) || !rhs.is(NodeKind::Pow)) return std::nullopt;
  if (!is_coordinate_square(rhs.node().kids[0], ctx)) return std::nullopt;
  Rational e = rhs.node().value;
  if (e.is_zero()) return std::nullopt;
  return PotentialDef{lhs.node().name, rhs.node().kids[0].node().kids[0].node().name, e};
}

// d/dX_n of name^q where name = (X_l^2)^e: the power rule gives
// 2 e q (X_l^2)^(eq-1) X_n, folded back into powers of the field itself.
Expr potential_power_grad(const PotentialDef& def, const Rational& q, const Index& n) {
  Rational inv_e = Rational(def.expo.den(), def.expo.num());
  Rational coeff = Rational(2) * def.expo * q;
  return mul({number(coeff), pow(opfunc(def.name), q - inv_e), tensor(def.coord, {n})});
}

// Structural derivative with respect to the coordinate indexed by n. With
// resolve set, powers of the defined potential rewrite through their
// definition; otherwise they stay as symbolic derivatives, which is what
// operator application displays.
Expr diff(const Index& n, const Expr& f, const AlgebraContext& ctx, bool resolve) {
  if (is_commuting_scalar(f)) return zero();
  const Node& nd = f.node();
  switch (nd.kind) {
    case NodeKind::Number:
    case NodeKind::Scalar:
    case NodeKind::ScalarFunc:
    case NodeKind::Imaginary:
      return zero();
    case NodeKind::Add: {
      ExprVec terms;
      for (const auto& t : nd.kids) terms.push_back(diff(n, t, ctx, resolve));
      return add(std::move(terms));
    }
    case NodeKind::Mul: {
      ExprVec terms;
      for (size_t i = 0; i < nd.kids.size(); ++i) {
        Expr d = diff(n, nd.kids[i], ctx, resolve);
        if (d.is_zero()) continue;
        ExprVec fs;
        for (size_t j = 0; j < i; ++j) fs.push_back(nd.kids[j]);
        fs.push_back(d);
        for (size_t j = i + 1; j < nd.kids.size(); ++j) fs.push_back(nd.kids[j]);
        terms.push_back(mul(std::move(fs)));
      }
      return add(std::move(terms));
    }
    case NodeKind::Pow: {
      const Expr& b = nd.kids[0];
      const Rational& q = nd.value;
      if (is_coordinate_square(b, ctx))
        return mul({number(Rational(2) * q), pow(b, q - Rational(1)),
                    tensor(b.node().kids[0].node().name, {n})});
      if (b.is(NodeKind::Tensor) && q == Rational(2) && b.node().indices.size() == 1 &&
          is_position_decl(b.node().name, ctx))
        return mul({integer(2), tensor(b.node().name, {n})});
      if (b.is(NodeKind::OpFunc) && is_position_decl(b.node().name, ctx)) {
        if (resolve) {
          auto def = potential_def(ctx);
          if (def && def->name == b.node().name) return potential_power_grad(*def, q, n);
        }
        // chain rule with the inner derivative kept symbolic
        return mul({number(q), pow(b, q - Rational(1)), deriv({n}, b)});
      }
      break;
    }
    case NodeKind::Tensor: {
      if (nd.name == "g" || nd.name == "eps") return zero();
      if (nd.indices.size() == 1 && is_position_decl(nd.name, ctx))
        return tensor("g", {n, nd.indices[0]});
      break;
    }
    case NodeKind::OpFunc: {
      if (is_position_decl(nd.name, ctx)) {
        if (resolve) {
          auto def = potential_def(ctx);
          if (def && def->name == nd.name) return potential_power_grad(*def, Rational(1), n);
        }
        return deriv({n}, f);
      }
      break;
    }
    case NodeKind::Deriv:
      return deriv({n}, f);
    default:
      break;
  }
  throw Error(Error::Kind::Domain,
              "cannot differentiate " + render(f) + ": not a function of position");
}

bool mentions_enabled_diffop(const Expr& e, const AlgebraContext& ctx) {
  const Node& n = e.node();
  if ((n.kind == NodeKind::Tensor || n.kind == NodeKind::Apply) && ctx.diffop_enabled(n.name))
    return true;
  for (const auto& k : n.kids)
    if (mentions_enabled_diffop(k, ctx)) return true;
  return false;
}

// Commutators whose body mentions a registered operator cannot stay opaque:
// the application has to see the factors, so they expand to AB - BA. Inert
// ones expand too.
Expr expand_operator_commutators(const Expr& e, const AlgebraContext& ctx) {
  const Node& n = e.node();
  switch (n.kind) {
    case NodeKind::Commut: {
      Expr a = expand_operator_commutators(n.kids[0], ctx);
      Expr b = expand_operator_commutators(n.kids[1], ctx);
      if (mentions_enabled_diffop(a, ctx) || mentions_enabled_diffop(b, ctx))
        return mul_refresh(a, b) - mul_refresh(b, a);
      return commut(a, b, n.inert);
    }
    case NodeKind::Add:
    case NodeKind::Mul: {
      ExprVec kids;
      for (const auto& k : n.kids) kids.push_back(expand_operator_commutators(k, ctx));
      return n.kind == NodeKind::Add ? add(std::move(kids)) : mul(std::move(kids));
    }
    case NodeKind::Pow:
      return pow(expand_operator_commutators(n.kids[0], ctx), n.value);
    case NodeKind::Dagger:
      return dagger_node(expand_operator_commutators(n.kids[0], ctx));
    case NodeKind::Deriv:
      return deriv(n.indices, expand_operator_commutators(n.kids[0], ctx));
    case NodeKind::Apply:
      return apply_node(n.name, n.indices, expand_operator_commutators(n.kids[0], ctx));
    default:
      return e;
  }
}

Expr explicit_application(const Index& n, const Expr& arg, const AlgebraContext& ctx) {
  return mul({integer(-1), imaginary(), scalar("hbar"), diff(n, arg, ctx, false)});
}

// bottom-up rewrite of inert applications once the explicit representation
// is switched on
Expr evaluate_inert_applications(const Expr& e, const AlgebraContext& ctx) {
  const Node& n = e.node();
  ExprVec kids;
  kids.reserve(n.kids.size());
  for (const auto& k : n.kids) kids.push_back(evaluate_inert_applications(k, ctx));
  switch (n.kind) {
    case NodeKind::Add:
      return add(std::move(kids));
    case NodeKind::Mul:
      return mul(std::move(kids));
    case NodeKind::Pow:
      return pow(kids[0], n.value);
    case NodeKind::Commut:
      return commut(kids[0], kids[1], n.inert);
    case NodeKind::Dagger:
      return dagger_node(kids[0]);
    case NodeKind::Deriv:
      return deriv(n.indices, kids[0]);
    case NodeKind::Apply:
      if (ctx.diffop_enabled(n.name))
        return explicit_application(n.indices[0], kids[0], ctx);
      return apply_node(n.name, n.indices, kids[0]);
    default:
      return e;
  }
}

// true for a word factor that acts as a differential operator
bool is_diffop_factor(const OpFactor& f, const AlgebraContext& ctx) {
  return f.kind == OpFactor::Kind::TensorF && ctx.diffop_enabled(f.name) &&
         f.power.is_integer() && f.power.num() >= 1;
}

Expr apply_term(const Expr& term, const AlgebraContext& ctx) {
  Monomial m = monomial_from_term(term);
  if (m.is_zero()) return zero();
  // fold the word from the right; a differential operator swallows the
  // product accumulated so far, anything else is prepended as a factor
  Expr tail = one();
  for (size_t i = m.ops.size(); i > 0; --i) {
    const OpFactor& f = m.ops[i - 1];
    if (is_diffop_factor(f, ctx) && !tail.is_one()) {
      for (long r = 0; r < f.power.num(); ++r) {
        if (ctx.momentum_explicit())
          tail = explicit_application(f.indices[0], tail, ctx);
        else
          tail = apply_node(f.name, f.indices, tail);
      }
    } else {
      tail = mul({op_factor_to_expr(f), tail});
    }
  }
  return mul({monomial_scalar_expr(m), tail});
}

}  // namespace

Expr grad(const Index& n, const Expr& f, const AlgebraContext& ctx) {
  ExprVec out;
  for (const Expr& t : terms_of(distribute(f))) out.push_back(diff(n, t, ctx, true));
  return add(std::move(out));
}

Expr apply_diffops(const Expr& e, const AlgebraContext& ctx) {
  if (!ctx.any_diffop_enabled())
    throw Error(Error::Kind::Domain, "differential-operator registry is not enabled");
  Expr pre = expand_operator_commutators(e, ctx);
  if (ctx.momentum_explicit()) pre = evaluate_inert_applications(pre, ctx);
  ExprVec out;
  for (const Expr& t : terms_of(distribute(pre))) out.push_back(apply_term(t, ctx));
  return add(std::move(out));
}

Equation apply_diffops(const Equation& eq, const AlgebraContext& ctx) {
  return {apply_diffops(eq.lhs, ctx), apply_diffops(eq.rhs, ctx)};
}

AlgebraContext enable_explicit_momentum(const AlgebraContext& ctx, bool on) {
  return ctx.set_momentum_explicit(on);
}

Expr test_function_eliminate(const Expr& e, const AlgebraContext& ctx) {
  ExprVec out;
  std::string expect;
  for (const Expr& t : terms_of(distribute(e))) {
    Monomial m = monomial_from_term(t);
    if (m.is_zero()) continue;
    if (m.ops.empty() || m.ops.back().kind != OpFactor::Kind::FuncF ||
        m.ops.back().power != Rational(1))
      throw Error(Error::Kind::Domain,
                  "cannot cancel the test function: a term does not end in one: " + render(t));
    const std::string& name = m.ops.back().name;
    const TensorDecl* d = ctx.decl(name);
    if (!d || !d->invertible)
      throw Error(Error::Kind::Domain, "trailing factor " + name + " is not invertible");
    if (expect.empty())
      expect = name;
    else if (expect != name)
      throw Error(Error::Kind::Domain, "terms end in different trailing functions: " + expect +
                                           " and " + name);
    m.ops.pop_back();
    ExprVec fs = {monomial_scalar_expr(m)};
    for (const auto& f : m.ops) fs.push_back(op_factor_to_expr(f));
    out.push_back(mul(std::move(fs)));
  }
  return add(std::move(out));
}

Equation test_function_eliminate(const Equation& eq, const AlgebraContext& ctx) {
  return {test_function_eliminate(eq.lhs, ctx), test_function_eliminate(eq.rhs, ctx)};
}

}  // namespace opalg
