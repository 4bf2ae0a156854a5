#pragma once

#include <string>
#include <vector>

#include "opalg/expr.hpp"

namespace opalg {

struct Token {
  enum class Kind {
    Ident,
    Int,
    LBracket,
    RBracket,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semicolon,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Equals,
    Percent,
    Gt,
    Lt,
    End,
  };
  Kind kind;
  std::string text;
  std::int64_t ival = 0;
  size_t pos = 0;
};

std::vector<Token> tokenize(const std::string& src);

class TokenStream {
 public:
  explicit TokenStream(const std::string& src) : toks_(tokenize(src)) {}
  const Token& peek(size_t ahead = 0) const {
    size_t j = i_ + ahead;
    return j < toks_.size() ? toks_[j] : toks_.back();
  }
  const Token& next() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }
  bool at(Token::Kind k) const { return peek().kind == k; }
  bool accept(Token::Kind k) {
    if (!at(k)) return false;
    next();
    return true;
  }
  const Token& expect(Token::Kind k, const std::string& what);
  bool done() const { return at(Token::Kind::End); }
  size_t save() const { return i_; }
  void restore(size_t s) { i_ = s; }

 private:
  std::vector<Token> toks_;
  size_t i_ = 0;
};

// Expression grammar: identifiers, T[a,b] indexing, + - * / ^,
// Commutator(A,B), %Commutator(A,B), Dagger(A), d_[n](f), p[n](f)
// applications, and `=` at top level for equations.
Expr parse_expr(TokenStream& ts);
Expr parse_expr(const std::string& src);
Equation parse_equation(const std::string& src);

}  // namespace opalg
