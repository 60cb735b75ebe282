#include "cral/classes.hpp"

#include <cmath>

#include "cral/errors.hpp"

namespace cral {

std::string_view to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::kPedestrian:
      return "pedestrian";
    case ObjectClass::kCyclist:
      return "cyclist";
    case ObjectClass::kCar:
      return "car";
  }
  return "unknown";
}

std::optional<ObjectClass> parse_class(std::string_view name) {
  for (ObjectClass c : kAllClasses) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

ClassTable ClassTable::defaults() {
  ClassTable t;
  t.set(ObjectClass::kPedestrian, {1.70, 0.02});
  t.set(ObjectClass::kCyclist, {1.75, 0.04});
  t.set(ObjectClass::kCar, {1.55, 0.07});
  return t;
}

void ClassTable::validate() const {
  for (ObjectClass c : kAllClasses) {
    const ClassMeta& m = at(c);
    if (!(m.avg_height > 0.0) || !std::isfinite(m.avg_height)) {
      throw ConfigError("classes." + std::string(to_string(c)) + ".avg_height must be positive");
    }
    if (!(m.kappa > 0.0) || !std::isfinite(m.kappa)) {
      throw ConfigError("classes." + std::string(to_string(c)) + ".kappa must be positive");
    }
  }
}

}  // namespace cral
