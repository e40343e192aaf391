#pragma once

#include "lrta/scene/scene.hpp"

namespace lrta::testing {

/// girl#0 --holding--> hamburger#1
inline SymbolicScene girl_hamburger() {
  SymbolicScene s;
  s.scene_id = "fixture";
  SymbolicObject girl;
  girl.id = 0;
  girl.category = "girl";
  girl.attributes = {{"color", "red"}, {"material", "rubber"}, {"size", "large"}};
  girl.box = {0.1, 0.1, 0.2, 0.3};
  SymbolicObject food;
  food.id = 1;
  food.category = "hamburger";
  food.attributes = {{"color", "yellow"}, {"material", "plastic"}, {"size", "small"}};
  food.box = {0.5, 0.5, 0.1, 0.1};
  s.objects = {girl, food};
  s.relations = {{0, "holding", 1}};
  return s;
}

}  // namespace lrta::testing
