#pragma once

#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsg/freespace.hpp"
#include "tsg/geometry.hpp"
#include "tsg/walls.hpp"

namespace tsg {

enum class RoomKind { FourWall, TwoWall };
enum class RoomStrategyKind { Flush, Timer };

std::string to_string(RoomKind k);
std::string to_string(RoomStrategyKind s);
RoomStrategyKind parse_strategy(std::string_view s);

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct RoomsConfig {
  RoomStrategyKind strategy = RoomStrategyKind::Flush;
  double tau_w = 0.8;
  double tau_psi_deg = 30.0;
  double timer_interval = 10.0;
  double rho = 0.5;
  double assoc_center_dist = 1.0;
  double assoc_axis_deg = 20.0;
  double pair_angle_deg = 15.0;   // antiparallel tolerance of an opposing pair
  double perp_tol_deg = 15.0;     // deviation from 90 degrees between two pairs
  double perp_score_ratio = 0.5;  // second pair needs this fraction of the best pair's support
  int min_pair_support = 3;
  double extent_margin = 1.0;
  /// Added to rho when selecting candidate walls: cluster nodes never come
  /// closer than the clustering clearance to an obstacle.
  double node_clearance = 0.45;
  double snapshot_radius = 2.0;

  void validate() const;
};

struct Room {
  int id = -1;
  RoomKind kind = RoomKind::TwoWall;
  Vec2 center = Vec2::Zero();
  double axis = 0.0;  // in [0, pi): normal direction of the first wall pair
  std::pair<double, double> extents{0.0, 0.0};  // (along axis, across axis); second is kUnbounded for TWO_WALL
  std::vector<int> wall_ids;                    // pairs: (a0, b0[, a1, b1])
  /// TWO_WALL only: observed interval along the corridor direction
  /// (axis + pi/2), relative to center.
  std::pair<double, double> span{0.0, 0.0};
  std::vector<int> keyframes;

  Vec2 axis_dir() const { return {std::cos(axis), std::sin(axis)}; }
  Vec2 across_dir() const { return {-std::sin(axis), std::cos(axis)}; }
};

/// Oriented rectangle used for overlap scoring.
struct RoomFootprint {
  Vec2 center;
  double axis;
  double len_a;
  double len_b;
  double area() const { return len_a * len_b; }
};

/// FOUR_WALL rooms as-is; TWO_WALL rooms truncated to the observed span.
/// Throws UnboundedRoom when no span was observed.
RoomFootprint footprint(const Room& r);

struct FlushState {
  bool initialized = false;
  double last_width = 0.0;
  double last_axis = 0.0;
  double tau_w = 0.8;
  double tau_psi = deg2rad(30.0);

  // Buffer since the last flush.
  std::map<std::pair<long, long>, Vec2> nodes;  // keyed by centimeter grid to dedupe
  std::set<int> wall_ids;
  std::vector<int> keyframes;

  bool empty() const { return nodes.empty(); }
  void clear();
  void add_nodes(const std::vector<Vec2>& pts);
};

/// True iff the width changed by more than tau_w or the axis (mod pi) by
/// more than tau_psi relative to the values recorded at the last flush.
/// An uninitialized state never fires.
bool should_flush(const FlushState& state, double width, double axis);

std::optional<Room> extract_room(const std::vector<Vec2>& nodes, const std::vector<WallLandmark>& landmarks,
                                 const RoomsConfig& cfg = {});
std::optional<Room> extract_room(const FreeSpaceCluster& cluster, const std::vector<WallLandmark>& landmarks,
                                 const RoomsConfig& cfg = {});

/// Id of the existing room of the same kind within the center and axis
/// gates (nearest center wins); nullopt means a new room. FOUR_WALL axes are
/// compared modulo pi/2, which accounts for swapped extents.
std::optional<int> associate_room(const Room& candidate, const std::vector<Room>& rooms, const RoomsConfig& cfg = {});

/// Same gate as associate_room for a single pair of rooms.
bool rooms_compatible(const Room& a, const Room& b, const RoomsConfig& cfg = {});

struct RoomEvent {
  double t = 0.0;
  int keyframe = 0;
  int traverse = 0;
  Room room;  // candidate geometry, id set by association
  bool redetected = false;
};

nlohmann::json room_to_json(const Room& r);
nlohmann::json room_event_json(const RoomEvent& e);

/// Per-keyframe input to a strategy.
struct KeyframeInput {
  int keyframe = 0;
  double t = 0.0;
  std::vector<Vec2> nodes;          // cluster nodes near the robot
  std::optional<WidthAxis> aisle;   // nullopt when the cluster was degenerate
  std::set<int> observed_walls;
};

/// Flush or timer strategy. Each call returns the candidate room produced at
/// that step, if any; ids are assigned by the caller.
class RoomStrategy {
 public:
  explicit RoomStrategy(const RoomsConfig& cfg);

  std::optional<Room> step(const KeyframeInput& in, const std::vector<WallLandmark>& landmarks);
  /// End of a traverse: the flush strategy extracts whatever is buffered and
  /// resets its reference indicators; the timer strategy does nothing.
  std::optional<Room> end_traverse(const std::vector<WallLandmark>& landmarks);

  const FlushState& state() const { return state_; }

 private:
  std::optional<Room> flush(const std::vector<WallLandmark>& landmarks);

  RoomsConfig cfg_;
  FlushState state_;
  std::optional<double> last_flush_t_;
};

/// Runs a strategy over a recorded keyframe stream (single traverse) and
/// returns the candidate rooms in emission order.
std::vector<Room> run_room_strategy(const RoomsConfig& cfg, const std::vector<KeyframeInput>& stream,
                                    const std::vector<WallLandmark>& landmarks);

}  // namespace tsg
