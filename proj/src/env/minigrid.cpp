#include <array>
#include <string>

#include "exid/common/error.hpp"
#include "exid/env/minigrid.hpp"

namespace exid::env {
namespace {

constexpr std::array<GridPos, 4> kDirVec = {{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};

bool see_behind(Cell c) { return c != Cell::wall; }
bool can_overlap(Cell c) { return c == Cell::empty || c == Cell::goal || c == Cell::lava; }

EnvSpec make_grid_spec(std::string id, int max_steps) {
  EnvSpec s;
  s.env_id = std::move(id);
  s.obs_dim = view::kObsDim;
  s.n_actions = 3;
  s.obs_bounds.assign(view::kObsDim, Interval{0.0, 1.0});
  s.max_steps = max_steps;
  s.action_names = {"left", "right", "forward"};
  s.feature_names = {{"front", view::kFront}, {"right", view::kRight}, {"left", view::kLeft}};
  s.discrete_observations = true;
  return s;
}

}  // namespace

double object_code(Cell cell) {
  switch (cell) {
    case Cell::empty:
      return code::empty;
    case Cell::wall:
      return code::wall;
    case Cell::ball:
      return code::ball;
    case Cell::goal:
      return code::goal;
    case Cell::lava:
      return code::lava;
  }
  return code::unseen;
}

Cell GridWorld::cell(int x, int y) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return Cell::wall;
  return cells_[static_cast<std::size_t>(y * width_ + x)];
}

void GridWorld::set_cell(int x, int y, Cell c) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) throw UsageError("set_cell: outside the grid");
  cells_[static_cast<std::size_t>(y * width_ + x)] = c;
}

void GridWorld::set_agent(GridPos pos, int dir) {
  if (pos.x < 0 || pos.y < 0 || pos.x >= width_ || pos.y >= height_ || dir < 0 || dir > 3) {
    throw UsageError("set_agent: invalid pose");
  }
  agent_ = pos;
  dir_ = dir;
}

GridPos GridWorld::front_position() const {
  return {agent_.x + kDirVec[static_cast<std::size_t>(dir_)].x, agent_.y + kDirVec[static_cast<std::size_t>(dir_)].y};
}

void GridWorld::clear_grid() { cells_.assign(static_cast<std::size_t>(width_ * height_), Cell::empty); }

void GridWorld::wall_border() {
  for (int x = 0; x < width_; ++x) {
    set_cell(x, 0, Cell::wall);
    set_cell(x, height_ - 1, Cell::wall);
  }
  for (int y = 0; y < height_; ++y) {
    set_cell(0, y, Cell::wall);
    set_cell(width_ - 1, y, Cell::wall);
  }
}

std::optional<GridPos> GridWorld::sample_free_cell(GridPos top, GridPos size, int max_tries) {
  top.x = std::max(top.x, 0);
  top.y = std::max(top.y, 0);
  const int x_end = std::min(top.x + size.x, width_);
  const int y_end = std::min(top.y + size.y, height_);
  for (int tries = 0; max_tries < 0 || tries < max_tries; ++tries) {
    GridPos p{top.x + uniform_int(rng_, x_end - top.x), top.y + uniform_int(rng_, y_end - top.y)};
    if (cell(p.x, p.y) != Cell::empty) continue;
    if (p == agent_) continue;
    return p;
  }
  return std::nullopt;
}

Observation GridWorld::reset(std::uint64_t seed) {
  rng_.seed(derive_seed(seed, spec().env_id + ".reset"));
  clear_grid();
  agent_ = {-1, -1};
  dir_ = 0;
  generate(rng_);
  steps_ = 0;
  ready_ = true;
  done_ = false;
  return observation();
}

bool GridWorld::before_action(int) { return false; }

StepResult GridWorld::step(int action) {
  if (!ready_) throw UsageError(spec().env_id + ": step before reset");
  if (done_) throw UsageError(spec().env_id + ": step on a finished episode");
  if (action < 0 || action >= 3) throw UsageError(spec().env_id + ": action out of range");

  const bool collision_if_forward = before_action(action);
  ++steps_;
  double reward = 0.0;
  bool terminated = false;

  if (action == turn_left) {
    dir_ = (dir_ + 3) % 4;
  } else if (action == turn_right) {
    dir_ = (dir_ + 1) % 4;
  } else {
    const GridPos fwd = front_position();
    const Cell target = cell(fwd.x, fwd.y);
    if (can_overlap(target)) agent_ = fwd;
    if (target == Cell::goal) {
      terminated = true;
      reward = 1.0 - 0.9 * (static_cast<double>(steps_) / spec().max_steps);
    } else if (target == Cell::lava) {
      terminated = true;
    }
    if (collision_if_forward) {
      terminated = true;
      reward = 0.0;
    }
  }

  const bool truncated = !terminated && steps_ >= spec().max_steps;
  done_ = terminated || truncated;
  return {observation(), reward, done_, truncated};
}

Observation GridWorld::observation() const {
  constexpr int n = view::kSize;
  // Build the view in MiniGrid orientation: mx grows to the agent's right, my grows towards the agent.
  const GridPos f = kDirVec[static_cast<std::size_t>(dir_)];
  const GridPos r = kDirVec[static_cast<std::size_t>((dir_ + 1) % 4)];
  std::array<std::array<Cell, n>, n> grid{};
  for (int mx = 0; mx < n; ++mx) {
    for (int my = 0; my < n; ++my) {
      const int ahead = (n - 1) - my;
      const int lateral = mx - n / 2;
      grid[mx][my] = cell(agent_.x + f.x * ahead + r.x * lateral, agent_.y + f.y * ahead + r.y * lateral);
    }
  }
  const int ax = n / 2;
  const int ay = n - 1;
  grid[ax][ay] = Cell::empty;

  // Occlusion: MiniGrid's process_vis sweep.
  std::array<std::array<bool, n>, n> vis{};
  vis[ax][ay] = true;
  for (int j = n - 1; j >= 0; --j) {
    for (int i = 0; i < n - 1; ++i) {
      if (!vis[i][j] || !see_behind(grid[i][j])) continue;
      vis[i + 1][j] = true;
      if (j > 0) {
        vis[i + 1][j - 1] = true;
        vis[i][j - 1] = true;
      }
    }
    for (int i = n - 1; i > 0; --i) {
      if (!vis[i][j] || !see_behind(grid[i][j])) continue;
      vis[i - 1][j] = true;
      if (j > 0) {
        vis[i - 1][j - 1] = true;
        vis[i][j - 1] = true;
      }
    }
  }

  Observation obs(view::kObsDim, 0.0);
  for (int mx = 0; mx < n; ++mx) {
    for (int my = 0; my < n; ++my) {
      if (!vis[mx][my]) continue;
      const int lateral = (n - 1) - mx;  // mirrored so that index 40 is the agent's right
      obs[static_cast<std::size_t>(view::index(lateral, my, 0))] = object_code(grid[mx][my]);
      // channel 1 (object state) is always 0: these layouts have no doors
    }
  }
  return obs;
}

const EnvSpec& DynamicObstacles::static_spec() {
  static const EnvSpec spec = make_grid_spec("minigrid-dynobs-6x6", 4 * 6 * 6);
  return spec;
}

void DynamicObstacles::generate(Rng& rng) {
  wall_border();
  set_cell(width_ - 2, height_ - 2, Cell::goal);
  agent_ = *sample_free_cell({0, 0}, {width_, height_});
  dir_ = uniform_int(rng, 4);
  obstacles_.clear();
  for (int i = 0; i < 4; ++i) {
    auto pos = sample_free_cell({0, 0}, {width_, height_}, 100);
    if (!pos) break;
    set_cell(pos->x, pos->y, Cell::ball);
    obstacles_.push_back(*pos);
  }
}

bool DynamicObstacles::before_action(int) {
  const GridPos fwd = front_position();
  const Cell front = cell(fwd.x, fwd.y);
  const bool not_clear = front != Cell::empty && front != Cell::goal;
  for (auto& ball : obstacles_) {
    auto next = sample_free_cell({ball.x - 1, ball.y - 1}, {3, 3}, 100);
    if (!next) continue;
    set_cell(next->x, next->y, Cell::ball);
    set_cell(ball.x, ball.y, Cell::empty);
    ball = *next;
  }
  return not_clear;
}

const EnvSpec& LavaGap::static_spec() {
  static const EnvSpec spec = make_grid_spec("minigrid-lavagap-7x7", 4 * 7 * 7);
  return spec;
}

void LavaGap::generate(Rng& rng) {
  wall_border();
  agent_ = {1, 1};
  dir_ = 0;
  set_cell(width_ - 2, height_ - 2, Cell::goal);
  const GridPos gap{2 + uniform_int(rng, width_ - 4), 1 + uniform_int(rng, height_ - 2)};
  for (int y = 1; y < height_ - 1; ++y) set_cell(gap.x, y, Cell::lava);
  set_cell(gap.x, gap.y, Cell::empty);
}

}  // namespace exid::env
