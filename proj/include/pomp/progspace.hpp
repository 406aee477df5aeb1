#ifndef POMP_PROGSPACE_HPP_
#define POMP_PROGSPACE_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "pomp/dsl.hpp"

namespace pomp {

inline constexpr int kLatentDim = 256;
using LatentVector = std::array<double, kLatentDim>;

// Maximum concrete tokens of a generated program, including the
// DEF run m( ... m) wrapper.
inline constexpr int kMaxProgramTokens = 40;

enum class Production : std::uint8_t { kWhile, kRepeat, kStmtStmt, kAction, kIf, kIfElse };
inline constexpr int kNumProductions = 6;

struct GrammarProbabilities {
  // Inverse-CDF order: WHILE, REPEAT, STMT_STMT, ACTION, IF, IFELSE.
  std::array<double, kNumProductions> p = {0.15, 0.03, 0.5, 0.2, 0.08, 0.04};
};

// Supplies the uniform draw in [0, 1) for a derivation node. `address` is
// the node's heap position (children of a are 2a+1 and 2a+2); `slot` is 0
// for the production choice and 1 for the sub-choice.
using ChoiceSource = std::function<double(std::uint64_t address, int slot)>;

struct DerivationStats {
  // Production drawn at each node, before any budget forcing.
  std::array<long, kNumProductions> drawn{};
};

// Walks the grammar from the root with a token budget of
// kMaxProgramTokens. Productions that cannot fit the remaining budget are
// forced to ACTION.
Program Derive(const ChoiceSource& source, const GrammarProbabilities& grammar = {},
               DerivationStats* stats = nullptr);

// Squashes z_i into [0, 1) with 0.5 * (1 + tanh z_i).
double Squash(double z);

// Deterministic latent-to-program map: node (a, slot) reads coordinate
// (2a + slot) mod 256.
Program Decode(const LatentVector& z);

std::vector<Program> SamplePrograms(int count, std::uint64_t seed,
                                    DerivationStats* stats = nullptr);

// Throws ZeroVector if either vector has zero norm.
double CosineSimilarity(const LatentVector& a, const LatentVector& b);

}  // namespace pomp

#endif  // POMP_PROGSPACE_HPP_
