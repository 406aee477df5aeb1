#include "pomp/world.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace pomp {

char HeadingChar(Heading h) {
  switch (h) {
    case Heading::kNorth: return '^';
    case Heading::kEast: return '>';
    case Heading::kSouth: return 'v';
    case Heading::kWest: return '<';
  }
  return '?';
}

std::string_view HeadingName(Heading h) {
  switch (h) {
    case Heading::kNorth: return "N";
    case Heading::kEast: return "E";
    case Heading::kSouth: return "S";
    case Heading::kWest: return "W";
  }
  return "?";
}

Cell Step(Cell c, Heading h) {
  switch (h) {
    case Heading::kNorth: return {c.row - 1, c.col};
    case Heading::kEast: return {c.row, c.col + 1};
    case Heading::kSouth: return {c.row + 1, c.col};
    case Heading::kWest: return {c.row, c.col - 1};
  }
  return c;
}

GridWorld::GridWorld(int height, int width)
    : height_(height),
      width_(width),
      walls_(static_cast<std::size_t>(height * width), 0),
      markers_(static_cast<std::size_t>(height * width), 0) {
  if (height <= 0 || width <= 0) throw std::invalid_argument("empty grid");
}

void GridWorld::SetMarkers(Cell c, int n) {
  markers_[Index(c)] = static_cast<std::uint8_t>(std::clamp(n, 0, kMaxMarkers));
}

int GridWorld::TotalMarkers() const {
  return std::accumulate(markers_.begin(), markers_.end(), 0);
}

bool GridWorld::Evaluate(Perception p) const {
  switch (p) {
    case Perception::kFrontIsClear: return FrontIsClear();
    case Perception::kLeftIsClear: return LeftIsClear();
    case Perception::kRightIsClear: return RightIsClear();
    case Perception::kMarkersPresent: return MarkersPresent();
    case Perception::kNoMarkersPresent: return !MarkersPresent();
  }
  return false;
}

ActionEffect GridWorld::Apply(Action a) {
  ActionEffect e;
  e.from = agent_;
  e.to = agent_;
  switch (a) {
    case Action::kMove: {
      Cell next = Step(agent_, heading_);
      if (IsWall(next)) {
        e.blocked = true;
      } else {
        agent_ = next;
        e.to = next;
        e.moved = true;
      }
      break;
    }
    case Action::kTurnLeft:
      heading_ = pomp::TurnLeft(heading_);
      break;
    case Action::kTurnRight:
      heading_ = pomp::TurnRight(heading_);
      break;
    case Action::kPutMarker:
      e.markers_before = Markers(agent_);
      SetMarkers(agent_, e.markers_before + 1);
      break;
    case Action::kPickMarker:
      e.markers_before = Markers(agent_);
      SetMarkers(agent_, e.markers_before - 1);
      break;
  }
  e.markers_after = Markers(agent_);
  return e;
}

std::string GridWorld::Render() const {
  std::string out;
  out.reserve(static_cast<std::size_t>((width_ + 1) * height_));
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      Cell cell{r, c};
      if (cell == agent_) {
        out += HeadingChar(heading_);
      } else if (IsWall(cell)) {
        out += '#';
      } else if (int m = Markers(cell); m > 0) {
        out += static_cast<char>('0' + m);
      } else {
        out += '.';
      }
    }
    out += '\n';
  }
  return out;
}

GridWorld GridWorld::FromRows(const std::vector<std::string>& rows) {
  if (rows.empty()) throw std::invalid_argument("empty grid");
  GridWorld w(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (int r = 0; r < w.height_; ++r) {
    if (static_cast<int>(rows[r].size()) != w.width_)
      throw std::invalid_argument("ragged grid rows");
    for (int c = 0; c < w.width_; ++c) {
      char ch = rows[r][c];
      Cell cell{r, c};
      if (ch == '#') {
        w.SetWall(cell, true);
      } else if (ch >= '1' && ch <= '8') {
        w.SetMarkers(cell, ch - '0');
      } else if (ch == '^' || ch == '>' || ch == 'v' || ch == '<') {
        Heading h = ch == '^' ? Heading::kNorth
                    : ch == '>' ? Heading::kEast
                    : ch == 'v' ? Heading::kSouth
                                : Heading::kWest;
        w.SetAgent(cell, h);
      }
    }
  }
  return w;
}

}  // namespace pomp
