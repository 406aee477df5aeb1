#include "pomp/dsl.hpp"

#include <charconv>
#include <sstream>
#include <utility>

#include "pomp/errors.hpp"

namespace pomp {
namespace {

constexpr std::array<std::string_view, kNumActions> kActionNames = {
    "move", "turnLeft", "turnRight", "putMarker", "pickMarker"};
constexpr std::array<std::string_view, kNumPerceptions> kPerceptionNames = {
    "frontIsClear", "leftIsClear", "rightIsClear", "markersPresent",
    "noMarkersPresent"};

struct Keyword {
  std::string_view text;
  TokenKind kind;
};
constexpr std::array<Keyword, 20> kKeywords = {{
    {"DEF", TokenKind::kDef},       {"run", TokenKind::kRun},
    {"m(", TokenKind::kMOpen},      {"m)", TokenKind::kMClose},
    {"WHILE", TokenKind::kWhile},   {"REPEAT", TokenKind::kRepeat},
    {"IF", TokenKind::kIf},         {"IFELSE", TokenKind::kIfElse},
    {"ELSE", TokenKind::kElse},     {"c(", TokenKind::kCOpen},
    {"c)", TokenKind::kCClose},     {"w(", TokenKind::kWOpen},
    {"w)", TokenKind::kWClose},     {"r(", TokenKind::kROpen},
    {"r)", TokenKind::kRClose},     {"i(", TokenKind::kIOpen},
    {"i)", TokenKind::kIClose},     {"e(", TokenKind::kEOpen},
    {"e)", TokenKind::kEClose},     {"not", TokenKind::kNot},
}};

std::string_view KeywordText(TokenKind kind) {
  for (const auto& k : kKeywords)
    if (k.kind == kind) return k.text;
  switch (kind) {
    case TokenKind::kCount: return "R=<count>";
    case TokenKind::kAction: return "<action>";
    case TokenKind::kPerception: return "<perception>";
    default: return "?";
  }
}

std::optional<Token> Classify(std::string_view lex) {
  for (const auto& k : kKeywords)
    if (k.text == lex) return Token{k.kind, 0, std::string(lex)};
  for (int i = 0; i < kNumActions; ++i)
    if (kActionNames[i] == lex) return Token{TokenKind::kAction, i, std::string(lex)};
  for (int i = 0; i < kNumPerceptions; ++i)
    if (kPerceptionNames[i] == lex)
      return Token{TokenKind::kPerception, i, std::string(lex)};
  if (lex == "markerPresent")
    return Token{TokenKind::kPerception,
                 static_cast<int>(Perception::kMarkersPresent), std::string(lex)};
  if (lex == "noMarkerPresent")
    return Token{TokenKind::kPerception,
                 static_cast<int>(Perception::kNoMarkersPresent),
                 std::string(lex)};
  if (lex.size() > 2 && lex.substr(0, 2) == "R=") {
    int n = 0;
    auto digits = lex.substr(2);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (ec == std::errc() && ptr == digits.data() + digits.size())
      return Token{TokenKind::kCount, n, std::string(lex)};
  }
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(const std::vector<Token>& tokens) : tokens_(tokens) {}

  Program ParseProgram() {
    Expect(TokenKind::kDef);
    Expect(TokenKind::kRun);
    Expect(TokenKind::kMOpen);
    auto body = ParseBlock(TokenKind::kMClose);
    Expect(TokenKind::kMClose);
    if (pos_ != tokens_.size())
      throw SyntaxError(Position(), "end of input", tokens_[pos_].lexeme);
    return Program(std::move(body));
  }

 private:
  int Position() const { return static_cast<int>(pos_) + 1; }

  std::string Found() const {
    return pos_ < tokens_.size() ? tokens_[pos_].lexeme : "<end>";
  }

  bool At(TokenKind kind) const {
    return pos_ < tokens_.size() && tokens_[pos_].kind == kind;
  }

  const Token& Expect(TokenKind kind) {
    if (!At(kind))
      throw SyntaxError(Position(), std::string(KeywordText(kind)), Found());
    return tokens_[pos_++];
  }

  // One or more statements up to (not including) `close`.
  StatementPtr ParseBlock(TokenKind close) {
    std::vector<StatementPtr> stmts;
    do {
      stmts.push_back(ParseStatement());
    } while (!At(close) && pos_ < tokens_.size());
    StatementPtr result = stmts.back();
    for (auto it = stmts.rbegin() + 1; it != stmts.rend(); ++it)
      result = MakeSeq(*it, result);
    return result;
  }

  Condition ParseCondition() {
    Expect(TokenKind::kCOpen);
    Condition c;
    if (At(TokenKind::kNot)) {
      ++pos_;
      Expect(TokenKind::kCOpen);
      c.perception = static_cast<Perception>(Expect(TokenKind::kPerception).value);
      c.negated = true;
      Expect(TokenKind::kCClose);
    } else {
      c.perception = static_cast<Perception>(Expect(TokenKind::kPerception).value);
    }
    Expect(TokenKind::kCClose);
    return c;
  }

  StatementPtr ParseStatement() {
    if (pos_ >= tokens_.size())
      throw SyntaxError(Position(), "statement", "<end>");
    const Token& t = tokens_[pos_];
    switch (t.kind) {
      case TokenKind::kAction:
        ++pos_;
        return MakeAct(static_cast<Action>(t.value));
      case TokenKind::kWhile: {
        ++pos_;
        Condition c = ParseCondition();
        Expect(TokenKind::kWOpen);
        auto body = ParseBlock(TokenKind::kWClose);
        Expect(TokenKind::kWClose);
        return MakeWhile(c, std::move(body));
      }
      case TokenKind::kRepeat: {
        ++pos_;
        int where = Position();
        const Token& count = Expect(TokenKind::kCount);
        if (count.value < kMinRepeat || count.value > kMaxRepeat)
          throw SyntaxError(where, "repeat count in [0, 19]", count.lexeme);
        Expect(TokenKind::kROpen);
        auto body = ParseBlock(TokenKind::kRClose);
        Expect(TokenKind::kRClose);
        return MakeRepeat(count.value, std::move(body));
      }
      case TokenKind::kIf: {
        ++pos_;
        Condition c = ParseCondition();
        Expect(TokenKind::kIOpen);
        auto body = ParseBlock(TokenKind::kIClose);
        Expect(TokenKind::kIClose);
        return MakeIf(c, std::move(body));
      }
      case TokenKind::kIfElse: {
        ++pos_;
        Condition c = ParseCondition();
        Expect(TokenKind::kIOpen);
        auto then_body = ParseBlock(TokenKind::kIClose);
        Expect(TokenKind::kIClose);
        Expect(TokenKind::kElse);
        Expect(TokenKind::kEOpen);
        auto else_body = ParseBlock(TokenKind::kEClose);
        Expect(TokenKind::kEClose);
        return MakeIfElse(c, std::move(then_body), std::move(else_body));
      }
      default:
        throw SyntaxError(Position(), "statement", t.lexeme);
    }
  }

  const std::vector<Token>& tokens_;
  std::size_t pos_ = 0;
};

void EmitCondition(const Condition& c, std::vector<std::string>& out) {
  out.emplace_back("c(");
  if (c.negated) {
    out.emplace_back("not");
    out.emplace_back("c(");
  }
  out.emplace_back(PerceptionName(c.perception));
  if (c.negated) out.emplace_back("c)");
  out.emplace_back("c)");
}

void EmitStatement(const Statement& s, std::vector<std::string>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Act>) {
          out.emplace_back(ActionName(n.action));
        } else if constexpr (std::is_same_v<T, Seq>) {
          EmitStatement(*n.first, out);
          EmitStatement(*n.second, out);
        } else if constexpr (std::is_same_v<T, While>) {
          out.emplace_back("WHILE");
          EmitCondition(n.cond, out);
          out.emplace_back("w(");
          EmitStatement(*n.body, out);
          out.emplace_back("w)");
        } else if constexpr (std::is_same_v<T, Repeat>) {
          out.emplace_back("REPEAT");
          out.push_back("R=" + std::to_string(n.count));
          out.emplace_back("r(");
          EmitStatement(*n.body, out);
          out.emplace_back("r)");
        } else if constexpr (std::is_same_v<T, If>) {
          out.emplace_back("IF");
          EmitCondition(n.cond, out);
          out.emplace_back("i(");
          EmitStatement(*n.body, out);
          out.emplace_back("i)");
        } else {
          out.emplace_back("IFELSE");
          EmitCondition(n.cond, out);
          out.emplace_back("i(");
          EmitStatement(*n.then_body, out);
          out.emplace_back("i)");
          out.emplace_back("ELSE");
          out.emplace_back("e(");
          EmitStatement(*n.else_body, out);
          out.emplace_back("e)");
        }
      },
      s.node);
}

int ConditionTokens(const Condition& c) { return c.negated ? 6 : 3; }

}  // namespace

std::string_view ActionName(Action a) {
  return kActionNames[static_cast<int>(a)];
}

std::string_view PerceptionName(Perception p) {
  return kPerceptionNames[static_cast<int>(p)];
}

std::optional<Action> ActionFromName(std::string_view name) {
  for (int i = 0; i < kNumActions; ++i)
    if (kActionNames[i] == name) return static_cast<Action>(i);
  return std::nullopt;
}

bool StructurallyEqual(const Statement& a, const Statement& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, Act>) {
          return x.action == y.action;
        } else if constexpr (std::is_same_v<T, Seq>) {
          return StructurallyEqual(*x.first, *y.first) &&
                 StructurallyEqual(*x.second, *y.second);
        } else if constexpr (std::is_same_v<T, Repeat>) {
          return x.count == y.count && StructurallyEqual(*x.body, *y.body);
        } else if constexpr (std::is_same_v<T, IfElse>) {
          return x.cond == y.cond && StructurallyEqual(*x.then_body, *y.then_body) &&
                 StructurallyEqual(*x.else_body, *y.else_body);
        } else {
          return x.cond == y.cond && StructurallyEqual(*x.body, *y.body);
        }
      },
      a.node);
}

StatementPtr MakeAct(Action a) {
  return std::make_shared<const Statement>(Statement{Act{a}});
}

StatementPtr MakeSeq(StatementPtr first, StatementPtr second) {
  if (const auto* s = std::get_if<Seq>(&first->node))
    return MakeSeq(s->first, MakeSeq(s->second, std::move(second)));
  return std::make_shared<const Statement>(
      Statement{Seq{std::move(first), std::move(second)}});
}

StatementPtr MakeWhile(Condition c, StatementPtr body) {
  return std::make_shared<const Statement>(Statement{While{c, std::move(body)}});
}

StatementPtr MakeRepeat(int count, StatementPtr body) {
  return std::make_shared<const Statement>(
      Statement{Repeat{count, std::move(body)}});
}

StatementPtr MakeIf(Condition c, StatementPtr body) {
  return std::make_shared<const Statement>(Statement{If{c, std::move(body)}});
}

StatementPtr MakeIfElse(Condition c, StatementPtr then_body,
                        StatementPtr else_body) {
  return std::make_shared<const Statement>(
      Statement{IfElse{c, std::move(then_body), std::move(else_body)}});
}

int TokenCount(const Statement& s) {
  return std::visit(
      [](const auto& n) -> int {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Act>) {
          return 1;
        } else if constexpr (std::is_same_v<T, Seq>) {
          return TokenCount(*n.first) + TokenCount(*n.second);
        } else if constexpr (std::is_same_v<T, Repeat>) {
          return 4 + TokenCount(*n.body);
        } else if constexpr (std::is_same_v<T, IfElse>) {
          return 6 + ConditionTokens(n.cond) + TokenCount(*n.then_body) +
                 TokenCount(*n.else_body);
        } else {
          return 3 + ConditionTokens(n.cond) + TokenCount(*n.body);
        }
      },
      s.node);
}

Program::Program(StatementPtr body)
    : body_(std::move(body)), token_length_(4 + TokenCount(*body_)) {}

std::vector<Token> Tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::istringstream in{std::string(text)};
  std::string lex;
  int position = 0;
  while (in >> lex) {
    ++position;
    auto tok = Classify(lex);
    if (!tok) throw UnknownToken(position, lex);
    tokens.push_back(std::move(*tok));
  }
  return tokens;
}

Program Parse(const std::vector<Token>& tokens) {
  return Parser(tokens).ParseProgram();
}

Program Parse(std::string_view text) { return Parse(Tokenize(text)); }

std::vector<std::string> EmitTokens(const Program& program) {
  std::vector<std::string> out{"DEF", "run", "m("};
  EmitStatement(program.body(), out);
  out.emplace_back("m)");
  return out;
}

std::string Emit(const Program& program) {
  std::string text;
  for (const auto& t : EmitTokens(program)) {
    if (!text.empty()) text += ' ';
    text += t;
  }
  return text;
}

}  // namespace pomp
