#include "subtask_forge/domains.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace subtask_forge {

namespace {

constexpr std::array<std::pair<int, int>, 4> kMoves{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};

void check_walk(const WalkOptions& walk) {
  if (!(walk.lambda > 0.0) || !std::isfinite(walk.lambda)) {
    throw InvalidInput("lambda must be positive");
  }
  if (!std::isfinite(walk.r_step)) throw InvalidInput("r_step must be finite");
  if (!(walk.twin_weight > 0.0) || !std::isfinite(walk.twin_weight)) {
    throw InvalidInput("twin_weight must be positive");
  }
}

// Uniform walk over the listed successors plus a boundary twin per state.
Lmdp random_walk_lmdp(const std::vector<std::vector<std::size_t>>& successors,
                      std::vector<std::string> interior_labels, const WalkOptions& walk) {
  const auto n = static_cast<Index>(successors.size());
  std::vector<Eigen::Triplet<double>> inner;
  std::vector<Eigen::Triplet<double>> exits;
  for (Index s = 0; s < n; ++s) {
    const auto& next = successors[static_cast<std::size_t>(s)];
    const double share = 1.0 / (static_cast<double>(next.size()) + walk.twin_weight);
    for (std::size_t i : next) inner.emplace_back(static_cast<Index>(i), s, share);
    exits.emplace_back(s, s, walk.twin_weight * share);
  }
  Lmdp l;
  l.space.n_interior = static_cast<std::size_t>(n);
  l.space.n_boundary = static_cast<std::size_t>(n);
  l.space.labels = std::move(interior_labels);
  for (Index s = 0; s < n; ++s) {
    l.space.labels.push_back("exit:" + l.space.labels[static_cast<std::size_t>(s)]);
  }
  l.dynamics.interior.resize(n, n);
  l.dynamics.interior.setFromTriplets(inner.begin(), inner.end());
  l.dynamics.boundary.resize(n, n);
  l.dynamics.boundary.setFromTriplets(exits.begin(), exits.end());
  l.dynamics.interior.makeCompressed();
  l.dynamics.boundary.makeCompressed();
  l.r_interior = Vector::Constant(n, walk.r_step);
  l.lambda = walk.lambda;
  return l;
}

std::string cell_label(Cell c) { return "r" + std::to_string(c.row) + "c" + std::to_string(c.col); }

}  // namespace

std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::rooms: return "rooms";
    case DomainKind::taxi: return "taxi";
    case DomainKind::ring: return "ring";
  }
  return "unknown";
}

std::string to_string(RoomsLayout layout) {
  return layout == RoomsLayout::grid ? "grid" : "snake";
}

DomainKind DomainSpec::kind() const {
  if (std::holds_alternative<RoomsSpec>(params)) return DomainKind::rooms;
  if (std::holds_alternative<TaxiSpec>(params)) return DomainKind::taxi;
  return DomainKind::ring;
}

int room_quadrant(const RoomsSpec& spec, int room) {
  const int half_rows = (spec.room_rows + 1) / 2;
  const int half_cols = (spec.room_cols + 1) / 2;
  const int rr = room / spec.room_cols;
  const int rc = room % spec.room_cols;
  return (rr / half_rows) * 2 + rc / half_cols;
}

Domain build_rooms(const RoomsSpec& spec, const WalkOptions& walk) {
  check_walk(walk);
  if (spec.room_rows < 1 || spec.room_cols < 1) {
    throw InvalidInput("room_rows and room_cols must be at least 1");
  }
  if (spec.room_size < 2) throw InvalidInput("room_size must be at least 2");
  const int size = spec.room_size;
  const int rows = spec.room_rows * size;
  const int cols = spec.room_cols * size;
  const int mid = size / 2;
  auto room_of = [&](Cell c) { return (c.row / size) * spec.room_cols + c.col / size; };
  // Position of a room along the serpentine path.
  auto path_order = [&](int room) {
    const int rr = room / spec.room_cols;
    const int rc = room % spec.room_cols;
    return rr * spec.room_cols + (rr % 2 == 0 ? rc : spec.room_cols - 1 - rc);
  };
  auto open = [&](Cell a, Cell b) {
    const int ra = room_of(a);
    const int rb = room_of(b);
    if (ra == rb) return true;
    if (spec.layout == RoomsLayout::snake && std::abs(path_order(ra) - path_order(rb)) != 1) {
      return false;
    }
    // Same row: crossing a vertical wall; same column: crossing a horizontal one.
    return a.row == b.row ? (a.row % size) == mid : (a.col % size) == mid;
  };

  Domain d;
  d.spec.params = spec;
  d.spec.walk = walk;
  d.grid_rows = rows;
  d.grid_cols = cols;
  d.n_regions = spec.room_rows * spec.room_cols;
  std::vector<std::vector<std::size_t>> successors;
  std::vector<std::string> labels;
  std::set<std::size_t> doorway;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Cell here{r, c};
      const auto s = static_cast<std::size_t>(r * cols + c);
      std::vector<std::size_t> next;
      for (auto [dr, dc] : kMoves) {
        const Cell there{r + dr, c + dc};
        if (there.row < 0 || there.row >= rows || there.col < 0 || there.col >= cols) continue;
        if (!open(here, there)) continue;
        const auto t = static_cast<std::size_t>(there.row * cols + there.col);
        next.push_back(t);
        if (room_of(here) != room_of(there)) {
          doorway.insert(s);
          if (s < t) ++d.doorway_pairs;
        }
      }
      successors.push_back(std::move(next));
      labels.push_back(cell_label(here));
      d.cells.push_back(here);
      d.region.push_back(room_of(here));
    }
  }
  d.doorway_states.assign(doorway.begin(), doorway.end());
  d.lmdp = random_walk_lmdp(successors, std::move(labels), walk);
  return d;
}

Domain build_taxi(const TaxiSpec& spec, const WalkOptions& walk) {
  check_walk(walk);
  const int side = spec.grid_side;
  if (side < 2) throw InvalidInput("taxi grid_side must be at least 2");
  auto in_grid = [side](Cell c) { return c.row >= 0 && c.row < side && c.col >= 0 && c.col < side; };
  for (std::size_t i = 0; i < spec.depots.size(); ++i) {
    if (!in_grid(spec.depots[i])) {
      throw InvalidInput("taxi depot " + std::to_string(i) + " is outside the grid");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (spec.depots[i] == spec.depots[j]) throw InvalidInput("taxi depots must be distinct");
    }
  }
  for (const auto& [a, b] : spec.walls) {
    if (!in_grid(a) || !in_grid(b) || std::abs(a.row - b.row) + std::abs(a.col - b.col) != 1) {
      throw InvalidInput("taxi wall must separate two adjacent in-grid cells");
    }
  }
  auto blocked = [&](Cell a, Cell b) {
    return std::any_of(spec.walls.begin(), spec.walls.end(), [&](const auto& w) {
      return (w.first == a && w.second == b) || (w.first == b && w.second == a);
    });
  };
  const int cells_per_block = side * side;
  auto index = [&](Cell c, int loc) {
    return static_cast<std::size_t>(loc * cells_per_block + c.row * side + c.col);
  };
  static constexpr std::array<const char*, 5> kLocNames{"A", "B", "C", "D", "*"};

  Domain d;
  d.spec.params = spec;
  d.spec.walk = walk;
  d.grid_rows = side;
  d.grid_cols = side;
  d.n_regions = 5;
  std::vector<std::vector<std::size_t>> successors;
  std::vector<std::string> labels;
  for (int loc = 0; loc < 5; ++loc) {
    for (int r = 0; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        const Cell here{r, c};
        std::vector<std::size_t> next;
        for (auto [dr, dc] : kMoves) {
          const Cell there{r + dr, c + dc};
          if (!in_grid(there) || blocked(here, there)) continue;
          next.push_back(index(there, loc));
        }
        if (loc < kTaxiInTaxi && spec.depots[static_cast<std::size_t>(loc)] == here) {
          next.push_back(index(here, kTaxiInTaxi));
          ++d.pickup_edges;
        }
        if (loc == kTaxiInTaxi) {
          for (int dep = 0; dep < 4; ++dep) {
            if (spec.depots[static_cast<std::size_t>(dep)] == here) {
              next.push_back(index(here, dep));
              ++d.dropoff_edges;
            }
          }
        }
        successors.push_back(std::move(next));
        labels.push_back(cell_label(here) + "/" + kLocNames[static_cast<std::size_t>(loc)]);
        d.cells.push_back(here);
        d.region.push_back(loc);
      }
    }
  }
  d.lmdp = random_walk_lmdp(successors, std::move(labels), walk);
  return d;
}

Domain build_ring(const RingSpec& spec, const WalkOptions& walk) {
  check_walk(walk);
  if (spec.n < 3) throw InvalidInput("ring n must be at least 3");
  Domain d;
  d.spec.params = spec;
  d.spec.walk = walk;
  d.grid_rows = 1;
  d.grid_cols = spec.n;
  d.n_regions = spec.n;
  std::vector<std::vector<std::size_t>> successors;
  std::vector<std::string> labels;
  const auto n = static_cast<std::size_t>(spec.n);
  for (std::size_t s = 0; s < n; ++s) {
    successors.push_back({(s + n - 1) % n, (s + 1) % n});
    labels.push_back("p" + std::to_string(s));
    d.cells.push_back({0, static_cast<int>(s)});
    d.region.push_back(static_cast<int>(s));
  }
  d.lmdp = random_walk_lmdp(successors, std::move(labels), walk);
  return d;
}

Domain build_domain(const DomainSpec& spec) {
  return std::visit(
      [&](const auto& p) -> Domain {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RoomsSpec>) {
          return build_rooms(p, spec.walk);
        } else if constexpr (std::is_same_v<T, TaxiSpec>) {
          return build_taxi(p, spec.walk);
        } else {
          return build_ring(p, spec.walk);
        }
      },
      spec.params);
}

}  // namespace subtask_forge
