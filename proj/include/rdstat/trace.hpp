#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rdstat/error.hpp"

// Loop-annotated trace model. A trace is a flat token stream in which loop
// structure is kept inline: '[N' opens a loop that runs N times, ']' closes
// it, and everything else is a memory reference. Array references spell out
// the iterators they are indexed with ("tmp_array-i-j" is tmp[i][j]); plain
// identifiers are scalar references.
//
// A loop is bound to its control variable by position: the scalar token
// immediately preceding '[N' names the iterator (the front end always emits
// the pair, e.g. 'i', '[100').

namespace rdstat {

enum class TokenKind { Scalar, LoopBegin, LoopEnd, Array };

struct Token {
  TokenKind kind = TokenKind::Scalar;
  std::string name;                  // scalar or array identifier
  std::vector<std::string> indices;  // array iterators, in index order
  std::int64_t trip = 0;             // LoopBegin trip count

  static Token scalar(std::string n) { return {TokenKind::Scalar, std::move(n), {}, 0}; }
  static Token loop_begin(std::int64_t trip) { return {TokenKind::LoopBegin, {}, {}, trip}; }
  static Token loop_end() { return {TokenKind::LoopEnd, {}, {}, 0}; }
  static Token array(std::string n, std::vector<std::string> idx) {
    return {TokenKind::Array, std::move(n), std::move(idx), 0};
  }

  bool operator==(const Token&) const = default;
};

struct AnnotatedTrace {
  std::vector<Token> tokens;

  bool operator==(const AnnotatedTrace&) const = default;
};

namespace detail {

inline bool is_ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
inline bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

inline bool is_identifier(std::string_view s) {
  if (s.empty() || !is_ident_start(s[0])) return false;
  for (char c : s)
    if (!is_ident_char(c)) return false;
  return true;
}

// Classify one lexeme. The array marker is the first "_array-"; what follows
// is a dash-separated iterator list.
inline Token lex_token(std::string_view text) {
  if (text == "]") return Token::loop_end();
  if (!text.empty() && text[0] == '[') {
    std::string_view digits = text.substr(1);
    std::int64_t trip = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), trip);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || trip <= 0)
      fail(Fault::BadTripCount, "bad loop trip count in token \"" + std::string(text) + "\"");
    return Token::loop_begin(trip);
  }
  static constexpr std::string_view kMarker = "_array-";
  if (auto pos = text.find(kMarker); pos != std::string_view::npos) {
    std::string_view name = text.substr(0, pos);
    std::string_view rest = text.substr(pos + kMarker.size());
    std::vector<std::string> indices;
    while (true) {
      auto dash = rest.find('-');
      std::string_view part = dash == std::string_view::npos ? rest : rest.substr(0, dash);
      if (!is_identifier(part))
        fail(Fault::MalformedToken, "bad array index in token \"" + std::string(text) + "\"");
      indices.emplace_back(part);
      if (dash == std::string_view::npos) break;
      rest = rest.substr(dash + 1);
    }
    if (!is_identifier(name))
      fail(Fault::MalformedToken, "bad array name in token \"" + std::string(text) + "\"");
    return Token::array(std::string(name), std::move(indices));
  }
  if (!is_identifier(text))
    fail(Fault::MalformedToken, "unrecognized token \"" + std::string(text) + "\"");
  return Token::scalar(std::string(text));
}

// Split raw text into lexemes. Two accepted shapes: the bracketed
// single-quoted list the tracer prints, or bare whitespace/comma separated
// tokens (one per line works).
inline std::vector<std::string> split_lexemes(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\r' || text[i] == '\n'))
      ++i;
  };
  skip_ws();
  if (i >= text.size()) return out;

  // Peek past a leading '[' to tell the quoted-list shape from a bare
  // "[100" first token.
  bool quoted_list = false;
  if (text[i] == '[') {
    std::size_t j = i + 1;
    while (j < text.size() && (text[j] == ' ' || text[j] == '\t' || text[j] == '\r' || text[j] == '\n'))
      ++j;
    quoted_list = j < text.size() && (text[j] == '\'' || text[j] == ']');
  }

  if (quoted_list) {
    ++i; // consume '['
    while (true) {
      skip_ws();
      if (i >= text.size()) fail(Fault::MalformedToken, "unterminated trace list");
      if (text[i] == ']') {
        ++i;
        break;
      }
      if (text[i] == ',') { // tolerate stray/trailing commas
        ++i;
        continue;
      }
      if (text[i] != '\'')
        fail(Fault::MalformedToken, "expected quoted token in trace list");
      std::size_t close = text.find('\'', i + 1);
      if (close == std::string_view::npos)
        fail(Fault::MalformedToken, "unterminated quoted token");
      if (close == i + 1) fail(Fault::MalformedToken, "empty token in trace list");
      out.emplace_back(text.substr(i + 1, close - i - 1));
      i = close + 1;
    }
    skip_ws();
    if (i != text.size())
      fail(Fault::MalformedToken, "trailing content after trace list");
    return out;
  }

  while (i < text.size()) {
    std::size_t start = i;
    while (i < text.size() && text[i] != ' ' && text[i] != '\t' && text[i] != '\r' &&
           text[i] != '\n' && text[i] != ',')
      ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\r' ||
                               text[i] == '\n' || text[i] == ','))
      ++i;
  }
  return out;
}

} // namespace detail

// Parse trace text into tokens and validate structure: loops balance, trip
// counts are positive, and every iterator named by an array reference is
// bound by an enclosing loop.
inline AnnotatedTrace parse_trace(std::string_view text) {
  AnnotatedTrace trace;
  for (const std::string& lexeme : detail::split_lexemes(text))
    trace.tokens.push_back(detail::lex_token(lexeme));

  // Loops may legally lack a binding scalar (nothing precedes '[N' at the
  // very start); they just bind no iterator, and only array indexing cares.
  std::vector<std::string> bound;
  const Token* prev = nullptr;
  for (const Token& tok : trace.tokens) {
    switch (tok.kind) {
      case TokenKind::LoopBegin:
        bound.push_back(prev && prev->kind == TokenKind::Scalar ? prev->name : std::string{});
        break;
      case TokenKind::LoopEnd:
        if (bound.empty()) fail(Fault::UnbalancedLoops, "loop end without a matching begin");
        bound.pop_back();
        break;
      case TokenKind::Array:
        for (const std::string& idx : tok.indices)
          if (std::find(bound.begin(), bound.end(), idx) == bound.end())
            fail(Fault::UnboundIndex,
                 "array reference " + tok.name + " indexes \"" + idx +
                     "\" which no enclosing loop binds");
        break;
      case TokenKind::Scalar:
        break;
    }
    prev = &tok;
  }
  if (!bound.empty()) fail(Fault::UnbalancedLoops, "unclosed loop at end of trace");
  return trace;
}

inline std::string serialize_token(const Token& tok) {
  switch (tok.kind) {
    case TokenKind::Scalar:
      return tok.name;
    case TokenKind::LoopBegin:
      return "[" + std::to_string(tok.trip);
    case TokenKind::LoopEnd:
      return "]";
    case TokenKind::Array: {
      std::string out = tok.name + "_array";
      for (const std::string& idx : tok.indices) out += "-" + idx;
      return out;
    }
  }
  fail(Fault::Internal, "unreachable token kind");
}

// Canonical text form: ['tok', 'tok', ...]
inline std::string serialize_trace(const AnnotatedTrace& trace) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < trace.tokens.size(); ++i) {
    if (i) out << ", ";
    out << '\'' << serialize_token(trace.tokens[i]) << '\'';
  }
  out << ']';
  return out.str();
}

// ---------------------------------------------------------------------------
// Block separation: cut the trace into maximal top-level loop spans (Loop
// blocks) and the token runs between them (Plain blocks).

enum class BlockKind { Plain, Loop };

struct Block {
  BlockKind kind = BlockKind::Plain;
  int ordinal = 0;
  int depth = 0;             // max loop nesting inside; 0 for Plain
  std::vector<Token> tokens; // contiguous slice of the source trace
  // Iterator bound to the block's outermost loop. The binding scalar sits in
  // the preceding Plain block, so it is recorded here at separation time.
  std::string outer_iterator;
};

inline std::vector<Block> separate_blocks(const AnnotatedTrace& trace) {
  std::vector<Block> blocks;
  const auto& toks = trace.tokens;
  std::size_t i = 0;
  while (i < toks.size()) {
    if (toks[i].kind == TokenKind::LoopBegin) {
      Block blk;
      blk.kind = BlockKind::Loop;
      blk.ordinal = static_cast<int>(blocks.size());
      if (i > 0 && toks[i - 1].kind == TokenKind::Scalar) blk.outer_iterator = toks[i - 1].name;
      int depth = 0, max_depth = 0;
      std::size_t j = i;
      do {
        if (toks[j].kind == TokenKind::LoopBegin) {
          ++depth;
          max_depth = std::max(max_depth, depth);
        } else if (toks[j].kind == TokenKind::LoopEnd) {
          --depth;
        }
        blk.tokens.push_back(toks[j]);
        ++j;
      } while (depth > 0 && j < toks.size());
      if (depth != 0) fail(Fault::UnbalancedLoops, "unclosed loop in block separation");
      blk.depth = max_depth;
      blocks.push_back(std::move(blk));
      i = j;
    } else {
      Block blk;
      blk.kind = BlockKind::Plain;
      blk.ordinal = static_cast<int>(blocks.size());
      while (i < toks.size() && toks[i].kind != TokenKind::LoopBegin) {
        if (toks[i].kind == TokenKind::LoopEnd)
          fail(Fault::UnbalancedLoops, "loop end outside any loop");
        blk.tokens.push_back(toks[i]);
        ++i;
      }
      blocks.push_back(std::move(blk));
    }
  }
  return blocks;
}

} // namespace rdstat
