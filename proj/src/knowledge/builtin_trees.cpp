#include "exid/knowledge/builtin_trees.hpp"

#include <string>

#include "exid/common/error.hpp"
#include "exid/knowledge/dsl.hpp"

namespace exid::knowledge {
namespace {

// Keep in sync with trees/*.tree (a unit test compares them).

constexpr std::string_view kMountainCar = R"(@env mountaincar
# Rock left at the bottom of the valley while momentum is low, otherwise drive right.
(if (pos > -0.5)
  (act right)
  (if (vel < 0.01)
    (act left)
    (act right)))
)";

// Thresholds are a reconstruction: lean threshold 0.02 rad, edge zone |x| > 1.0.
constexpr std::string_view kCartPole = R"(@env cartpole
# Push towards the side the pole leans to; near an edge, counter the cart velocity to recenter.
(if (x < -1)
  (if (x_dot < 0)
    (act right)
    (if (theta > 0.02)
      (act right)
      (if (theta < -0.02)
        (act left)
        (if (theta_dot > 0)
          (act right)
          (act left)))))
  (if (x > 1)
    (if (x_dot > 0)
      (act left)
      (if (theta > 0.02)
        (act right)
        (if (theta < -0.02)
          (act left)
          (if (theta_dot > 0)
            (act right)
            (act left)))))
    (if (theta > 0.02)
      (act right)
      (if (theta < -0.02)
        (act left)
        (if (theta_dot > 0)
          (act right)
          (act left))))))
)";

// Cell codes: 0.1 empty, 0.2 wall, 0.6 ball, 0.8 goal. Blocked means wall or ball.
constexpr std::string_view kDynamicObstacles = R"(@env minigrid-dynobs-6x6
# Turn away from a wall or ball ahead (left first, right when the left is blocked too).
(if (front > 0.15)
  (if (front < 0.65)
    (if (left > 0.15)
      (if (left < 0.65)
        (act right)
        (act left))
      (act left))
    (act forward))
  (act forward))
)";

// Cell codes: 0.1 empty, 0.2 wall, 0.8 goal, 0.9 lava. Blocked means wall or lava.
constexpr std::string_view kLavaGap = R"(@env minigrid-lavagap-7x7
# Turn away from lava or a wall ahead (left first, right when the left is blocked too).
(if (front > 0.85)
  (if (left > 0.85)
    (act right)
    (if (left > 0.15)
      (if (left < 0.25)
        (act right)
        (act left))
      (act left)))
  (if (front > 0.15)
    (if (front < 0.25)
      (if (left > 0.85)
        (act right)
        (if (left > 0.15)
          (if (left < 0.25)
            (act right)
            (act left))
          (act left)))
      (act forward))
    (act forward)))
)";

}  // namespace

std::string_view builtin_tree_text(std::string_view env_id) {
  if (env_id == "mountaincar") return kMountainCar;
  if (env_id == "cartpole") return kCartPole;
  if (env_id == "minigrid-dynobs-6x6") return kDynamicObstacles;
  if (env_id == "minigrid-lavagap-7x7") return kLavaGap;
  throw LookupError("no built-in domain-knowledge tree for '" + std::string(env_id) + "'");
}

DecisionTree builtin_tree(std::string_view env_id) { return parse_tree(builtin_tree_text(env_id)); }

}  // namespace exid::knowledge
