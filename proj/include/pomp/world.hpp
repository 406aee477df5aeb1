#ifndef POMP_WORLD_HPP_
#define POMP_WORLD_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "pomp/dsl.hpp"

namespace pomp {

enum class Heading : std::uint8_t { kNorth, kEast, kSouth, kWest };

inline Heading TurnLeft(Heading h) {
  return static_cast<Heading>((static_cast<int>(h) + 3) % 4);
}
inline Heading TurnRight(Heading h) {
  return static_cast<Heading>((static_cast<int>(h) + 1) % 4);
}
char HeadingChar(Heading h);
std::string_view HeadingName(Heading h);

// Row 0 is the top of the grid.
struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

Cell Step(Cell c, Heading h);

inline constexpr int kMaxMarkers = 8;

// What a primitive action did to the world, for task reward hooks.
struct ActionEffect {
  Cell from;
  Cell to;
  bool moved = false;
  bool blocked = false;     // move attempted into a wall or boundary
  int markers_before = 0;   // at the agent cell, before put/pick
  int markers_after = 0;
};

class GridWorld {
 public:
  GridWorld() = default;
  GridWorld(int height, int width);

  int height() const { return height_; }
  int width() const { return width_; }

  bool InBounds(Cell c) const {
    return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_;
  }
  // Out-of-bounds cells read as walls.
  bool IsWall(Cell c) const { return !InBounds(c) || walls_[Index(c)] != 0; }
  void SetWall(Cell c, bool wall) { walls_[Index(c)] = wall ? 1 : 0; }
  int Markers(Cell c) const { return InBounds(c) ? markers_[Index(c)] : 0; }
  void SetMarkers(Cell c, int n);
  int TotalMarkers() const;

  Cell agent() const { return agent_; }
  Heading heading() const { return heading_; }
  void SetAgent(Cell c, Heading h) {
    agent_ = c;
    heading_ = h;
  }

  bool FrontIsClear() const { return !IsWall(Step(agent_, heading_)); }
  bool LeftIsClear() const { return !IsWall(Step(agent_, pomp::TurnLeft(heading_))); }
  bool RightIsClear() const { return !IsWall(Step(agent_, pomp::TurnRight(heading_))); }
  bool MarkersPresent() const { return Markers(agent_) > 0; }
  bool Evaluate(Perception p) const;
  bool Evaluate(const Condition& c) const { return Evaluate(c.perception) != c.negated; }

  // Karel semantics: blocked moves, empty picks and puts beyond the cap are
  // no-ops.
  ActionEffect Apply(Action a);

  // '#' wall, '.' empty, digit marker count, heading glyph on the agent cell.
  std::string Render() const;
  // Parses a rendered grid. Agent glyphs sit on zero-marker cells.
  static GridWorld FromRows(const std::vector<std::string>& rows);

  friend bool operator==(const GridWorld&, const GridWorld&) = default;

 private:
  int Index(Cell c) const { return c.row * width_ + c.col; }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> walls_;
  std::vector<std::uint8_t> markers_;
  Cell agent_;
  Heading heading_ = Heading::kEast;
};

}  // namespace pomp

#endif  // POMP_WORLD_HPP_
