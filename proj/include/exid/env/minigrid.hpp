#pragma once

#include <array>
#include <optional>
#include <cstdint>
#include <vector>

#include "exid/common/rng.hpp"
#include "exid/env/environment.hpp"

namespace exid::env {

enum class Cell : std::uint8_t { empty, wall, ball, goal, lava };

/// Object codes as they appear in observations (MiniGrid object ids divided by 10).
namespace code {
inline constexpr double unseen = 0.0;
inline constexpr double empty = 0.1;
inline constexpr double wall = 0.2;
inline constexpr double ball = 0.6;
inline constexpr double goal = 0.8;
inline constexpr double lava = 0.9;
}  // namespace code

double object_code(Cell cell);

/// Flat observation layout: a 7x7 egocentric view with two channels (object code, object state),
/// flattened cell-major as index = (lateral * 7 + depth) * 2 + channel.
///   depth 6 is the agent's row, depth 5 the row in front of it;
///   lateral 3 is the agent's column, lateral 2 is to its right and lateral 4 to its left.
/// Hence index 52 = cell in front, 40 = cell to the right, 68 = cell to the left.
namespace view {
inline constexpr int kSize = 7;
inline constexpr int kChannels = 2;
inline constexpr int kObsDim = kSize * kSize * kChannels;
inline constexpr int kFront = 52;
inline constexpr int kRight = 40;
inline constexpr int kLeft = 68;
constexpr int index(int lateral, int depth, int channel) { return (lateral * kSize + depth) * kChannels + channel; }
}  // namespace view

enum Action : int { turn_left = 0, turn_right = 1, forward = 2 };

struct GridPos {
  int x = 0;
  int y = 0;
  bool operator==(const GridPos&) const = default;
};

/// Shared grid-world mechanics: three actions (turn left, turn right, forward), partial egocentric
/// view with wall occlusion, reward 1 - 0.9 * steps / max_steps on reaching the goal.
class GridWorld : public Environment {
 public:
  Observation reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  int elapsed_steps() const override { return steps_; }

  int width() const { return width_; }
  int height() const { return height_; }
  Cell cell(int x, int y) const;
  GridPos agent_position() const { return agent_; }
  int agent_direction() const { return dir_; }  // 0 east, 1 south, 2 west, 3 north
  GridPos front_position() const;
  Observation observation() const;

  /// Test hooks: overwrite layout or agent pose after reset.
  void set_cell(int x, int y, Cell cell);
  void set_agent(GridPos pos, int dir);

 protected:
  GridWorld(int width, int height) : width_(width), height_(height) {}

  virtual void generate(Rng& rng) = 0;
  /// Called before the agent acts; returns true when moving forward this step counts as a collision.
  virtual bool before_action(int action);

  void clear_grid();
  void wall_border();
  /// Uniformly samples a free cell inside [top, top + size) that is not the agent cell; nullopt after max_tries.
  std::optional<GridPos> sample_free_cell(GridPos top, GridPos size, int max_tries = -1);

  int width_;
  int height_;
  std::vector<Cell> cells_;
  GridPos agent_;
  int dir_ = 0;
  int steps_ = 0;
  bool ready_ = false;
  bool done_ = false;
  Rng rng_;
};

/// MiniGrid-Dynamic-Obstacles-Random-6x6: random start pose, four balls that step to a random
/// free neighbouring cell every turn; moving forward into a ball or wall ends the episode.
class DynamicObstacles final : public GridWorld {
 public:
  DynamicObstacles() : GridWorld(6, 6) {}
  static const EnvSpec& static_spec();
  const EnvSpec& spec() const override { return static_spec(); }
  const std::vector<GridPos>& obstacles() const { return obstacles_; }

 protected:
  void generate(Rng& rng) override;
  bool before_action(int action) override;

 private:
  std::vector<GridPos> obstacles_;
};

/// MiniGrid-LavaGapS7: a vertical lava strip with one gap between a fixed start and the goal.
class LavaGap final : public GridWorld {
 public:
  LavaGap() : GridWorld(7, 7) {}
  static const EnvSpec& static_spec();
  const EnvSpec& spec() const override { return static_spec(); }

 protected:
  void generate(Rng& rng) override;
};

}  // namespace exid::env
