#include <gtest/gtest.h>

#include "pomp/dsl.hpp"
#include "pomp/errors.hpp"
#include "pomp/progspace.hpp"

namespace pomp {
namespace {

TEST(Tokenize, SplitsOnWhitespace) {
  auto tokens = Tokenize("DEF run m( move m)");
  ASSERT_EQ(tokens.size(), 5u);
  EXPECT_EQ(tokens[0].kind, TokenKind::kDef);
  EXPECT_EQ(tokens[1].kind, TokenKind::kRun);
  EXPECT_EQ(tokens[2].kind, TokenKind::kMOpen);
  EXPECT_EQ(tokens[3].kind, TokenKind::kAction);
  EXPECT_EQ(tokens[3].value, static_cast<int>(Action::kMove));
  EXPECT_EQ(tokens[4].kind, TokenKind::kMClose);
}

TEST(Tokenize, WhileConstructFromSeesawListing) {
  // WHILE c( markersPresent c) w( pickMarker w) is seven lexemes.
  auto tokens = Tokenize("WHILE c( markersPresent c) w( pickMarker w)");
  EXPECT_EQ(tokens.size(), 7u);
}

TEST(Tokenize, UnknownTokenReportsOneBasedPosition) {
  try {
    Tokenize("move foo");
    FAIL() << "expected UnknownToken";
  } catch (const UnknownToken& e) {
    EXPECT_EQ(e.position(), 2);
    EXPECT_EQ(e.lexeme(), "foo");
  }
}

TEST(Tokenize, RepeatCountsMustBeDecimal) {
  EXPECT_THROW(Tokenize("R=x"), UnknownToken);
  EXPECT_THROW(Tokenize("R="), UnknownToken);
  EXPECT_EQ(Tokenize("R=17")[0].value, 17);
}

TEST(Parse, SingleAction) {
  Program p = Parse("DEF run m( move m)");
  ASSERT_TRUE(std::holds_alternative<Act>(p.body().node));
  EXPECT_EQ(std::get<Act>(p.body().node).action, Action::kMove);
  EXPECT_EQ(p.token_length(), 5);
}

TEST(Parse, RepeatZero) {
  Program p = Parse("DEF run m( REPEAT R=0 r( pickMarker r) m)");
  const auto& rep = std::get<Repeat>(p.body().node);
  EXPECT_EQ(rep.count, 0);
  EXPECT_EQ(std::get<Act>(rep.body->node).action, Action::kPickMarker);
}

TEST(Parse, IfElse) {
  Program p = Parse(
      "DEF run m( IFELSE c( noMarkersPresent c) i( move i) ELSE e( pickMarker e) m)");
  const auto& node = std::get<IfElse>(p.body().node);
  EXPECT_EQ(node.cond.perception, Perception::kNoMarkersPresent);
  EXPECT_FALSE(node.cond.negated);
  EXPECT_EQ(std::get<Act>(node.then_body->node).action, Action::kMove);
  EXPECT_EQ(std::get<Act>(node.else_body->node).action, Action::kPickMarker);
}

TEST(Parse, SingularSpellingsNormalizeToPlural) {
  Program a = Parse("DEF run m( IF c( markerPresent c) i( move i) m)");
  Program b = Parse("DEF run m( IF c( markersPresent c) i( move i) m)");
  EXPECT_EQ(a, b);
  EXPECT_EQ(Emit(a), "DEF run m( IF c( markersPresent c) i( move i) m)");
  Program c = Parse("DEF run m( IF c( not c( noMarkerPresent c) c) i( move i) m)");
  EXPECT_EQ(Emit(c), "DEF run m( IF c( not c( noMarkersPresent c) c) i( move i) m)");
}

TEST(Parse, RejectsRepeatCountsOutsideRange) {
  EXPECT_NO_THROW(Parse("DEF run m( REPEAT R=19 r( move r) m)"));
  try {
    Parse("DEF run m( REPEAT R=20 r( move r) m)");
    FAIL() << "expected SyntaxError";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.position(), 5);
    EXPECT_EQ(e.found(), "R=20");
  }
}

TEST(Parse, SyntaxErrorsCarryPositionAndExpectation) {
  try {
    Parse("DEF run m( WHILE c( move c) w( move w) m)");
    FAIL() << "expected SyntaxError";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.position(), 6);
    EXPECT_EQ(e.found(), "move");
  }
  EXPECT_THROW(Parse("DEF run m( m)"), SyntaxError);
  EXPECT_THROW(Parse("DEF run m( move"), SyntaxError);
  EXPECT_THROW(Parse("DEF run m( move m) move"), SyntaxError);
  EXPECT_THROW(Parse("run m( move m)"), SyntaxError);
}

TEST(Parse, SequencesAreRightAssociated) {
  Program p = Parse("DEF run m( move turnLeft putMarker m)");
  const auto& outer = std::get<Seq>(p.body().node);
  EXPECT_TRUE(std::holds_alternative<Act>(outer.first->node));
  EXPECT_TRUE(std::holds_alternative<Seq>(outer.second->node));
}

TEST(MakeSeq, RotatesLeftNestedSequences) {
  auto a = MakeAct(Action::kMove);
  auto b = MakeAct(Action::kTurnLeft);
  auto c = MakeAct(Action::kPickMarker);
  auto left_nested = MakeSeq(MakeSeq(a, b), c);
  auto right_nested = MakeSeq(a, MakeSeq(b, c));
  EXPECT_TRUE(StructurallyEqual(*left_nested, *right_nested));
}

TEST(Emit, SingleAction) {
  EXPECT_EQ(Emit(Program(MakeAct(Action::kMove))), "DEF run m( move m)");
}

TEST(Emit, FarmerStyleRepeat) {
  Condition not_right{Perception::kRightIsClear, true};
  Program p(MakeRepeat(17, MakeIf(not_right, MakeSeq(MakeAct(Action::kPutMarker),
                                                      MakeAct(Action::kMove)))));
  std::string text = Emit(p);
  EXPECT_NE(text.find("REPEAT R=17 r("), std::string::npos);
  EXPECT_EQ(text,
            "DEF run m( REPEAT R=17 r( IF c( not c( rightIsClear c) c) i( putMarker move "
            "i) r) m)");
  EXPECT_EQ(p.token_length(), static_cast<int>(Tokenize(text).size()));
}

TEST(RoundTrip, CorpusProgramsSurviveParseEmit) {
  auto corpus = SamplePrograms(10000, 42);
  for (const auto& p : corpus) {
    std::string text = Emit(p);
    Program q = Parse(text);
    ASSERT_EQ(p, q) << text;
    ASSERT_EQ(EmitTokens(q), EmitTokens(p));
    ASSERT_EQ(p.token_length(), static_cast<int>(Tokenize(text).size()));
  }
}

TEST(RoundTrip, TokenizeReproducesEmittedTokens) {
  for (const auto& p : SamplePrograms(500, 7)) {
    auto lexemes = EmitTokens(p);
    auto tokens = Tokenize(Emit(p));
    ASSERT_EQ(tokens.size(), lexemes.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) ASSERT_EQ(tokens[i].lexeme, lexemes[i]);
  }
}

}  // namespace
}  // namespace pomp
