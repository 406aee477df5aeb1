#include "pomp/progspace.hpp"

#include <algorithm>
#include <cmath>

#include "pomp/errors.hpp"
#include "pomp/rng.hpp"

namespace pomp {
namespace {

constexpr int kWrapperTokens = 4;  // DEF run m( ... m)
constexpr int kPlainCondTokens = 3;
constexpr int kNegatedCondTokens = 6;

int MinTokens(Production p) {
  switch (p) {
    case Production::kAction: return 1;
    case Production::kStmtStmt: return 2;
    case Production::kRepeat: return 5;
    case Production::kWhile:
    case Production::kIf: return 4 + kPlainCondTokens;
    case Production::kIfElse: return 8 + kPlainCondTokens;
  }
  return 1;
}

int Choose(double u, int n) { return std::clamp(static_cast<int>(u * n), 0, n - 1); }

class Deriver {
 public:
  Deriver(const ChoiceSource& source, const GrammarProbabilities& grammar,
          DerivationStats* stats)
      : source_(source), grammar_(grammar), stats_(stats) {}

  StatementPtr Statement(std::uint64_t a, int budget) {
    Production p = Draw(source_(a, 0));
    if (stats_ != nullptr) ++stats_->drawn[static_cast<int>(p)];
    if (MinTokens(p) > budget) p = Production::kAction;
    double v = source_(a, 1);
    switch (p) {
      case Production::kAction:
        return MakeAct(static_cast<Action>(Choose(v, kNumActions)));
      case Production::kStmtStmt: {
        auto left = Statement(2 * a + 1, budget - 1);
        auto right = Statement(2 * a + 2, budget - TokenCount(*left));
        return MakeSeq(std::move(left), std::move(right));
      }
      case Production::kRepeat: {
        int count = Choose(v, kMaxRepeat - kMinRepeat + 1) + kMinRepeat;
        return MakeRepeat(count, Statement(2 * a + 1, budget - 4));
      }
      case Production::kWhile:
      case Production::kIf: {
        auto [cond, cost] = Cond(v, budget - 4);
        auto body = Statement(2 * a + 1, budget - 3 - cost);
        return p == Production::kWhile ? MakeWhile(cond, std::move(body))
                                       : MakeIf(cond, std::move(body));
      }
      case Production::kIfElse: {
        auto [cond, cost] = Cond(v, budget - 8);
        auto then_body = Statement(2 * a + 1, budget - 7 - cost);
        auto else_body = Statement(2 * a + 2, budget - 6 - cost - TokenCount(*then_body));
        return MakeIfElse(cond, std::move(then_body), std::move(else_body));
      }
    }
    return MakeAct(Action::kMove);
  }

 private:
  Production Draw(double u) const {
    double cum = 0.0;
    for (int i = 0; i < kNumProductions; ++i) {
      cum += grammar_.p[i];
      if (u < cum) return static_cast<Production>(i);
    }
    return static_cast<Production>(kNumProductions - 1);
  }

  // Ten-way choice: five plain perceptions then their negations. A negation
  // that does not fit `room` tokens falls back to the plain form.
  static std::pair<Condition, int> Cond(double v, int room) {
    int k = Choose(v, 2 * kNumPerceptions);
    Condition c{static_cast<Perception>(k % kNumPerceptions), k >= kNumPerceptions};
    if (c.negated && room < kNegatedCondTokens) c.negated = false;
    return {c, c.negated ? kNegatedCondTokens : kPlainCondTokens};
  }

  const ChoiceSource& source_;
  const GrammarProbabilities& grammar_;
  DerivationStats* stats_;
};

}  // namespace

double Squash(double z) { return 0.5 * (1.0 + std::tanh(z)); }

Program Derive(const ChoiceSource& source, const GrammarProbabilities& grammar,
               DerivationStats* stats) {
  Deriver d(source, grammar, stats);
  return Program(d.Statement(0, kMaxProgramTokens - kWrapperTokens));
}

Program Decode(const LatentVector& z) {
  ChoiceSource source = [&z](std::uint64_t a, int slot) {
    return Squash(z[(2 * a + static_cast<std::uint64_t>(slot)) % kLatentDim]);
  };
  return Derive(source);
}

std::vector<Program> SamplePrograms(int count, std::uint64_t seed, DerivationStats* stats) {
  Rng rng(seed);
  ChoiceSource source = [&rng](std::uint64_t, int) { return rng.Uniform(); };
  std::vector<Program> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(Derive(source, {}, stats));
  return out;
}

double CosineSimilarity(const LatentVector& a, const LatentVector& b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (int i = 0; i < kLatentDim; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ZeroVector();
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace pomp
