#include "opalg/render.hpp"

#include <sstream>

namespace opalg {

namespace {

// plain-format precedence levels, for minimal parenthesization
enum Prec { PrecAdd = 0, PrecMul = 1, PrecUnary = 2, PrecPow = 3, PrecAtom = 4 };

std::string plain(const Expr& e, int parent_prec);

std::string join_indices(const std::vector<Index>& idx) {
  std::string s;
  for (size_t i = 0; i < idx.size(); ++i) {
    if (i) s += ",";
    s += idx[i];
  }
  return s;
}

std::string plain_number(const Rational& r) {
  std::string s = std::to_string(r.num());
  if (r.den() != 1) s += "/" + std::to_string(r.den());
  return s;
}

std::string plain_pow(const Expr& base, const Rational& exp, int parent_prec) {
  std::string b = plain(base, PrecPow + 1);  // force parens on non-atoms
  std::string out;
  if (exp.is_integer() && exp.num() > 0) {
    out = b + "^" + std::to_string(exp.num());
  } else {
    out = b + "^(" + plain_number(exp) + ")";
  }
  if (parent_prec > PrecPow) return "(" + out + ")";
  return out;
}

std::string plain(const Expr& e, int parent_prec) {
  const Node& n = e.node();
  switch (n.kind) {
    case NodeKind::Number: {
      std::string s = plain_number(n.value);
      bool needs = (n.value.is_negative() && parent_prec > PrecAdd) ||
                   (n.value.den() != 1 && parent_prec >= PrecPow);
      return needs ? "(" + s + ")" : s;
    }
    case NodeKind::Scalar:
      return n.name;
    case NodeKind::ScalarFunc:
      return n.name + "(" + n.farg + ")";
    case NodeKind::Imaginary:
      return "i";
    case NodeKind::Tensor:
      return n.name + "[" + join_indices(n.indices) + "]";
    case NodeKind::OpFunc:
      return n.name;
    case NodeKind::Commut:
      return std::string(n.inert ? "%" : "") + "Commutator(" + plain(n.kids[0], PrecAdd) + "," +
             plain(n.kids[1], PrecAdd) + ")";
    case NodeKind::Dagger:
      return "Dagger(" + plain(n.kids[0], PrecAdd) + ")";
    case NodeKind::Deriv:
      return "d_[" + join_indices(n.indices) + "](" + plain(n.kids[0], PrecAdd) + ")";
    case NodeKind::Apply:
      return n.name + "[" + join_indices(n.indices) + "](" + plain(n.kids[0], PrecAdd) + ")";
    case NodeKind::Pow:
      return plain_pow(n.kids[0], n.value, parent_prec);
    case NodeKind::Mul: {
      // pull a leading -1 out as a sign
      std::string out;
      size_t start = 0;
      bool neg = false;
      if (n.kids[0].is_number()) {
        Rational c = n.kids[0].node().value;
        if (c.is_negative()) {
          neg = true;
          c = -c;
        }
        if (c.is_one() && n.kids.size() > 1) {
          start = 1;
        } else {
          out = plain_number(c);
          start = 1;
        }
      }
      for (size_t i = start; i < n.kids.size(); ++i) {
        if (!out.empty()) out += "*";
        out += plain(n.kids[i], PrecMul + 1);
      }
      if (neg) out = "-" + out;
      int prec = neg ? PrecAdd : PrecMul;
      if (parent_prec > prec) return "(" + out + ")";
      return out;
    }
    case NodeKind::Add: {
      std::string out;
      for (size_t i = 0; i < n.kids.size(); ++i) {
        auto [c, rest] = split_coefficient(n.kids[i]);
        if (i == 0) {
          out += plain(n.kids[i], PrecAdd);
        } else if (c.is_negative()) {
          Expr pos = c == Rational(-1) ? rest : mul({number(-c), rest});
          out += " - " + plain(pos, PrecAdd + 1);
        } else {
          out += " + " + plain(n.kids[i], PrecAdd + 1);
        }
      }
      if (parent_prec > PrecAdd) return "(" + out + ")";
      return out;
    }
  }
  return "?";
}

// ---------------------------------------------------------------------------
// LaTeX

std::string latex(const Expr& e, int parent_prec);

std::string latex_name(const std::string& name) {
  if (name == "hbar") return "\\hbar";
  if (name == "kappa") return "\\kappa";
  if (name == "eps") return "\\varepsilon";
  if (name == "m_e") return "m_e";
  return name;
}

std::string latex_indices(const std::vector<Index>& idx) {
  std::string s = "_{";
  for (size_t i = 0; i < idx.size(); ++i) {
    if (i) s += " ";
    s += idx[i];
  }
  return s + "}";
}

std::string latex_number(const Rational& r) {
  if (r.den() == 1) return std::to_string(r.num());
  std::string sign = r.is_negative() ? "-" : "";
  return sign + "\\tfrac{" + std::to_string(std::abs(r.num())) + "}{" + std::to_string(r.den()) +
         "}";
}

std::string latex_exponent(const Rational& r) {
  if (r.den() == 1) return std::to_string(r.num());
  return std::string(r.is_negative() ? "-" : "") + std::to_string(std::abs(r.num())) + "/" +
         std::to_string(r.den());
}

std::string latex(const Expr& e, int parent_prec) {
  const Node& n = e.node();
  switch (n.kind) {
    case NodeKind::Number: {
      std::string s = latex_number(n.value);
      if (n.value.is_negative() && parent_prec > PrecAdd) return "\\left(" + s + "\\right)";
      return s;
    }
    case NodeKind::Scalar:
      return latex_name(n.name);
    case NodeKind::ScalarFunc:
      return latex_name(n.name) + "(" + n.farg + ")";
    case NodeKind::Imaginary:
      return "i";
    case NodeKind::Tensor:
      return latex_name(n.name) + latex_indices(n.indices);
    case NodeKind::OpFunc:
      return n.name;
    case NodeKind::Commut:
      return "\\left[" + latex(n.kids[0], PrecAdd) + ", " + latex(n.kids[1], PrecAdd) +
             "\\right]_{-}";
    case NodeKind::Dagger: {
      std::string inner = latex(n.kids[0], PrecAtom);
      return inner + "^{\\dagger}";
    }
    case NodeKind::Deriv: {
      // paired indices render as the box (Laplacian) operator
      std::string out;
      size_t i = 0;
      const auto& ix = n.indices;  // sorted at construction
      std::string boxes;
      while (i < ix.size()) {
        if (i + 1 < ix.size() && ix[i] == ix[i + 1]) {
          boxes += "\\Box ";
          i += 2;
        } else {
          out += "\\partial_{" + ix[i] + "}";
          ++i;
        }
      }
      return out + boxes + "\\!\\left(" + latex(n.kids[0], PrecAdd) + "\\right)";
    }
    case NodeKind::Apply:
      return latex_name(n.name) + latex_indices(n.indices) + "\\!\\left(" +
             latex(n.kids[0], PrecAdd) + "\\right)";
    case NodeKind::Pow: {
      const Expr& b = n.kids[0];
      if (n.value == Rational(1, 2)) return "\\sqrt{" + latex(b, PrecAdd) + "}";
      bool atom = b.is(NodeKind::Scalar) || b.is(NodeKind::OpFunc) || b.is(NodeKind::Tensor) ||
                  b.is(NodeKind::ScalarFunc);
      std::string bs = atom ? latex(b, PrecAtom) : "\\left(" + latex(b, PrecAdd) + "\\right)";
      return bs + "^{" + latex_exponent(n.value) + "}";
    }
    case NodeKind::Mul: {
      std::string out;
      size_t start = 0;
      bool neg = false;
      if (n.kids[0].is_number()) {
        Rational c = n.kids[0].node().value;
        if (c.is_negative()) {
          neg = true;
          c = -c;
        }
        if (!(c.is_one() && n.kids.size() > 1)) out = latex_number(c);
        start = 1;
      }
      for (size_t i = start; i < n.kids.size(); ++i) {
        if (!out.empty()) out += "\\,";
        out += latex(n.kids[i], PrecMul + 1);
      }
      if (neg) out = "-" + out;
      int prec = neg ? PrecAdd : PrecMul;
      if (parent_prec > prec) return "\\left(" + out + "\\right)";
      return out;
    }
    case NodeKind::Add: {
      std::string out;
      for (size_t i = 0; i < n.kids.size(); ++i) {
        auto [c, rest] = split_coefficient(n.kids[i]);
        if (i == 0) {
          out += latex(n.kids[i], PrecAdd);
        } else if (c.is_negative()) {
          Expr pos = c == Rational(-1) ? rest : mul({number(-c), rest});
          out += " - " + latex(pos, PrecAdd + 1);
        } else {
          out += " + " + latex(n.kids[i], PrecAdd + 1);
        }
      }
      if (parent_prec > PrecAdd) return "\\left(" + out + "\\right)";
      return out;
    }
  }
  return "?";
}

}  // namespace

std::string render(const Expr& e, Format fmt) {
  return fmt == Format::Plain ? plain(e, PrecAdd) : latex(e, PrecAdd);
}

std::string render(const Equation& eq, Format fmt) {
  return render(eq.lhs, fmt) + " = " + render(eq.rhs, fmt);
}

}  // namespace opalg
