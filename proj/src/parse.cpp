#include "opalg/parse.hpp"

#include <cctype>

namespace opalg {

namespace {

[[noreturn]] void fail(size_t pos, const std::string& msg) {
  throw Error(Error::Kind::Parse, msg + " (at position " + std::to_string(pos) + ")");
}

}  // namespace

std::vector<Token> tokenize(const std::string& src) {
  std::vector<Token> out;
  size_t i = 0;
  auto push = [&](Token::Kind k, size_t pos, std::string text = {}, std::int64_t v = 0) {
    out.push_back(Token{k, std::move(text), v, pos});
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    size_t pos = i;
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::int64_t v = 0;
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) {
        v = v * 10 + (src[i] - '0');
        ++i;
      }
      push(Token::Kind::Int, pos, src.substr(pos, i - pos), v);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) {
        ++i;
      }
      push(Token::Kind::Ident, pos, src.substr(pos, i - pos));
      continue;
    }
    ++i;
    switch (c) {
      case '[': push(Token::Kind::LBracket, pos); break;
      case ']': push(Token::Kind::RBracket, pos); break;
      case '(': push(Token::Kind::LParen, pos); break;
      case ')': push(Token::Kind::RParen, pos); break;
      case '{': push(Token::Kind::LBrace, pos); break;
      case '}': push(Token::Kind::RBrace, pos); break;
      case ',': push(Token::Kind::Comma, pos); break;
      case ';': push(Token::Kind::Semicolon, pos); break;
      case '+': push(Token::Kind::Plus, pos); break;
      case '-': push(Token::Kind::Minus, pos); break;
      case '*': push(Token::Kind::Star, pos); break;
      case '/': push(Token::Kind::Slash, pos); break;
      case '^': push(Token::Kind::Caret, pos); break;
      case '=': push(Token::Kind::Equals, pos); break;
      case '%': push(Token::Kind::Percent, pos); break;
      case '>': push(Token::Kind::Gt, pos); break;
      case '<': push(Token::Kind::Lt, pos); break;
      default: fail(pos, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back(Token{Token::Kind::End, "", 0, src.size()});
  return out;
}

const Token& TokenStream::expect(Token::Kind k, const std::string& what) {
  if (!at(k)) fail(peek().pos, "expected " + what);
  return next();
}

namespace {

bool is_opfunc_name(const std::string& s) { return s == "V" || s == "G" || s == "H"; }

Expr parse_sum(TokenStream& ts);

std::vector<Index> parse_index_list(TokenStream& ts) {
  ts.expect(Token::Kind::LBracket, "'['");
  std::vector<Index> idx;
  while (true) {
    const Token& t = ts.expect(Token::Kind::Ident, "index name");
    idx.push_back(t.text);
    if (!ts.accept(Token::Kind::Comma)) break;
  }
  ts.expect(Token::Kind::RBracket, "']'");
  return idx;
}

Rational parse_rational_exponent(TokenStream& ts) {
  bool paren = ts.accept(Token::Kind::LParen);
  bool neg = ts.accept(Token::Kind::Minus);
  const Token& numt = ts.expect(Token::Kind::Int, "exponent");
  std::int64_t num = numt.ival;
  std::int64_t den = 1;
  if (paren && ts.accept(Token::Kind::Slash)) {
    den = ts.expect(Token::Kind::Int, "exponent denominator").ival;
  }
  if (paren) ts.expect(Token::Kind::RParen, "')'");
  return Rational(neg ? -num : num, den);
}

Expr parse_primary(TokenStream& ts) {
  const Token& t = ts.peek();
  switch (t.kind) {
    case Token::Kind::Int: {
      ts.next();
      return integer(t.ival);
    }
    case Token::Kind::LParen: {
      ts.next();
      Expr e = parse_sum(ts);
      ts.expect(Token::Kind::RParen, "')'");
      return e;
    }
    case Token::Kind::Percent: {
      ts.next();
      const Token& id = ts.expect(Token::Kind::Ident, "'Commutator' after '%'");
      if (id.text != "Commutator") fail(id.pos, "only Commutator may be inert");
      ts.expect(Token::Kind::LParen, "'('");
      Expr a = parse_sum(ts);
      ts.expect(Token::Kind::Comma, "','");
      Expr b = parse_sum(ts);
      ts.expect(Token::Kind::RParen, "')'");
      return commut(a, b, true);
    }
    case Token::Kind::Ident: {
      ts.next();
      const std::string& name = t.text;
      if (name == "d_") {
        std::vector<Index> idx = parse_index_list(ts);
        ts.expect(Token::Kind::LParen, "'('");
        Expr target = parse_sum(ts);
        ts.expect(Token::Kind::RParen, "')'");
        return deriv(std::move(idx), target);
      }
      if (name == "sqrt" && ts.at(Token::Kind::LParen)) {
        ts.next();
        Expr arg = parse_sum(ts);
        ts.expect(Token::Kind::RParen, "')'");
        return pow(arg, Rational(1, 2));
      }
      if (ts.at(Token::Kind::LBracket)) {
        std::vector<Index> idx = parse_index_list(ts);
        if (ts.at(Token::Kind::LParen)) {
          ts.next();
          Expr arg = parse_sum(ts);
          ts.expect(Token::Kind::RParen, "')'");
          return apply_node(name, std::move(idx), arg);
        }
        return tensor(name, std::move(idx));
      }
      if (ts.at(Token::Kind::LParen)) {
        if (name == "Commutator") {
          ts.next();
          Expr a = parse_sum(ts);
          ts.expect(Token::Kind::Comma, "','");
          Expr b = parse_sum(ts);
          ts.expect(Token::Kind::RParen, "')'");
          return commut(a, b, false);
        }
        if (name == "Dagger") {
          ts.next();
          Expr a = parse_sum(ts);
          ts.expect(Token::Kind::RParen, "')'");
          return dagger_node(a);
        }
        if (is_opfunc_name(name)) {
          // suppressed-argument form V(X), G(X)
          ts.next();
          ts.expect(Token::Kind::Ident, "suppressed argument");
          ts.expect(Token::Kind::RParen, "')'");
          return opfunc(name);
        }
        // scalar function atom such as E(n)
        ts.next();
        const Token& arg = ts.expect(Token::Kind::Ident, "scalar function argument");
        ts.expect(Token::Kind::RParen, "')'");
        return scalar_func(name, arg.text);
      }
      if (is_opfunc_name(name)) return opfunc(name);
      if (name == "i") return imaginary();
      return scalar(name);
    }
    default:
      fail(t.pos, "expected an expression");
  }
}

Expr parse_power(TokenStream& ts) {
  Expr base = parse_primary(ts);
  while (ts.accept(Token::Kind::Caret)) {
    Rational e = parse_rational_exponent(ts);
    base = pow(base, e);
  }
  return base;
}

Expr parse_product(TokenStream& ts) {
  Expr acc = parse_power(ts);
  while (true) {
    if (ts.accept(Token::Kind::Star)) {
      acc = mul({acc, parse_power(ts)});
    } else if (ts.accept(Token::Kind::Slash)) {
      acc = mul({acc, pow(parse_power(ts), Rational(-1))});
    } else {
      return acc;
    }
  }
}

Expr parse_sum(TokenStream& ts) {
  bool neg = false;
  if (ts.accept(Token::Kind::Minus)) neg = true;
  ts.accept(Token::Kind::Plus);
  Expr acc = parse_product(ts);
  if (neg) acc = -acc;
  while (true) {
    if (ts.accept(Token::Kind::Plus)) {
      acc = acc + parse_product(ts);
    } else if (ts.accept(Token::Kind::Minus)) {
      acc = acc - parse_product(ts);
    } else {
      return acc;
    }
  }
}

}  // namespace

Expr parse_expr(TokenStream& ts) { return parse_sum(ts); }

Expr parse_expr(const std::string& src) {
  TokenStream ts(src);
  Expr e = parse_sum(ts);
  if (!ts.done()) fail(ts.peek().pos, "trailing input");
  return e;
}

Equation parse_equation(const std::string& src) {
  TokenStream ts(src);
  Expr lhs = parse_sum(ts);
  ts.expect(Token::Kind::Equals, "'='");
  Expr rhs = parse_sum(ts);
  if (!ts.done()) fail(ts.peek().pos, "trailing input");
  return Equation(lhs, rhs);
}

}  // namespace opalg
