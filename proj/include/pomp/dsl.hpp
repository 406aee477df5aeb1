#ifndef POMP_DSL_HPP_
#define POMP_DSL_HPP_

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pomp {

enum class Action : std::uint8_t {
  kMove,
  kTurnLeft,
  kTurnRight,
  kPutMarker,
  kPickMarker,
};
inline constexpr int kNumActions = 5;
inline constexpr std::array<Action, kNumActions> kAllActions = {
    Action::kMove, Action::kTurnLeft, Action::kTurnRight, Action::kPutMarker,
    Action::kPickMarker};

enum class Perception : std::uint8_t {
  kFrontIsClear,
  kLeftIsClear,
  kRightIsClear,
  kMarkersPresent,
  kNoMarkersPresent,
};
inline constexpr int kNumPerceptions = 5;

struct Condition {
  Perception perception = Perception::kFrontIsClear;
  bool negated = false;
  friend bool operator==(const Condition&, const Condition&) = default;
};

std::string_view ActionName(Action a);
std::string_view PerceptionName(Perception p);
std::optional<Action> ActionFromName(std::string_view name);

// Inclusive bounds for REPEAT counts.
inline constexpr int kMinRepeat = 0;
inline constexpr int kMaxRepeat = 19;

struct Statement;
using StatementPtr = std::shared_ptr<const Statement>;

struct Act {
  Action action;
};
struct Seq {
  StatementPtr first;
  StatementPtr second;
};
struct While {
  Condition cond;
  StatementPtr body;
};
struct Repeat {
  int count;
  StatementPtr body;
};
struct If {
  Condition cond;
  StatementPtr body;
};
struct IfElse {
  Condition cond;
  StatementPtr then_body;
  StatementPtr else_body;
};

// Immutable AST node. Children are shared so copies are cheap.
struct Statement {
  std::variant<Act, Seq, While, Repeat, If, IfElse> node;
};

bool StructurallyEqual(const Statement& a, const Statement& b);

StatementPtr MakeAct(Action a);
// Builds a right-associated sequence; a left operand that is itself a Seq
// gets rotated so the result stays canonical.
StatementPtr MakeSeq(StatementPtr first, StatementPtr second);
StatementPtr MakeWhile(Condition c, StatementPtr body);
StatementPtr MakeRepeat(int count, StatementPtr body);
StatementPtr MakeIf(Condition c, StatementPtr body);
StatementPtr MakeIfElse(Condition c, StatementPtr then_body,
                        StatementPtr else_body);

class Program {
 public:
  explicit Program(StatementPtr body);

  const Statement& body() const { return *body_; }
  const StatementPtr& body_ptr() const { return body_; }
  int token_length() const { return token_length_; }

  friend bool operator==(const Program& a, const Program& b) {
    return StructurallyEqual(*a.body_, *b.body_);
  }

 private:
  StatementPtr body_;
  int token_length_;
};

enum class TokenKind : std::uint8_t {
  kDef,
  kRun,
  kMOpen,
  kMClose,
  kWhile,
  kRepeat,
  kIf,
  kIfElse,
  kElse,
  kCOpen,
  kCClose,
  kWOpen,
  kWClose,
  kROpen,
  kRClose,
  kIOpen,
  kIClose,
  kEOpen,
  kEClose,
  kNot,
  kCount,  // R=n
  kAction,
  kPerception,
};

struct Token {
  TokenKind kind;
  int value = 0;  // repeat count, Action or Perception index
  std::string lexeme;
  friend bool operator==(const Token& a, const Token& b) {
    return a.kind == b.kind && a.value == b.value;
  }
};

std::vector<Token> Tokenize(std::string_view text);
Program Parse(const std::vector<Token>& tokens);
Program Parse(std::string_view text);
std::string Emit(const Program& program);
std::vector<std::string> EmitTokens(const Program& program);

// Number of concrete tokens a statement contributes.
int TokenCount(const Statement& s);

}  // namespace pomp

#endif  // POMP_DSL_HPP_
