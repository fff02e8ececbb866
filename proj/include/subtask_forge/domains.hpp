#pragma once

#include <array>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "subtask_forge/lmdp.hpp"

namespace subtask_forge {

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

enum class RoomsLayout { grid, snake };

/// A room_rows x room_cols arrangement of square rooms with room_size cells
/// per side. Doorways sit at the middle of shared walls; in the snake layout
/// only rooms consecutive along the boustrophedon path are connected.
struct RoomsSpec {
  int room_rows = 4;
  int room_cols = 4;
  int room_size = 5;
  RoomsLayout layout = RoomsLayout::grid;
};

/// Single-passenger taxi. Passenger locations are the four depots plus
/// "in taxi". A wall blocks movement between the two cells it separates.
struct TaxiSpec {
  int grid_side = 5;
  std::array<Cell, 4> depots{{{0, 0}, {0, 4}, {4, 0}, {4, 4}}};
  std::vector<std::pair<Cell, Cell>> walls{{{3, 0}, {3, 1}}, {{4, 0}, {4, 1}},
                                           {{0, 1}, {0, 2}}, {{1, 1}, {1, 2}},
                                           {{3, 2}, {3, 3}}, {{4, 2}, {4, 3}}};
};

struct RingSpec {
  int n = 256;
};

/// Passive random-walk parameters shared by every generator. The boundary twin
/// of each interior state receives twin_weight times one neighbour share.
struct WalkOptions {
  double r_step = -0.03;
  double lambda = 1.0;
  double twin_weight = 0.5;
};

enum class DomainKind { rooms, taxi, ring };

std::string to_string(DomainKind kind);
std::string to_string(RoomsLayout layout);

struct DomainSpec {
  std::variant<RoomsSpec, TaxiSpec, RingSpec> params;
  WalkOptions walk;

  DomainKind kind() const;
};

/// A generated Lmdp plus the geometry needed for labelling and rendering.
/// Boundary state b is the absorbing twin of interior state b.
struct Domain {
  DomainSpec spec;
  Lmdp lmdp;
  /// Grid cell of each interior state (ring: row 0, col = position).
  std::vector<Cell> cells;
  /// Ground-truth region per interior state: room index, passenger location
  /// (0..3 depots, 4 in taxi) or ring position.
  std::vector<int> region;
  int n_regions = 0;
  int grid_rows = 0;
  int grid_cols = 0;
  /// Rooms: interior states adjacent to a doorway edge.
  std::vector<std::size_t> doorway_states;
  std::size_t doorway_pairs = 0;
  /// Taxi: counts of pick-up and drop-off edges.
  std::size_t pickup_edges = 0;
  std::size_t dropoff_edges = 0;
};

inline constexpr int kTaxiInTaxi = 4;

Domain build_rooms(const RoomsSpec& spec, const WalkOptions& walk = {});
Domain build_taxi(const TaxiSpec& spec, const WalkOptions& walk = {});
Domain build_ring(const RingSpec& spec, const WalkOptions& walk = {});
Domain build_domain(const DomainSpec& spec);

/// Quadrant (0..3, row-major) of a room in a rooms domain.
int room_quadrant(const RoomsSpec& spec, int room);

}  // namespace subtask_forge
