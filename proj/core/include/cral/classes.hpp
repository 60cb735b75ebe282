#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace cral {

enum class ObjectClass { kPedestrian = 0, kCyclist = 1, kCar = 2 };

inline constexpr std::array<ObjectClass, 3> kAllClasses{ObjectClass::kPedestrian,
                                                        ObjectClass::kCyclist, ObjectClass::kCar};

std::string_view to_string(ObjectClass c);
std::optional<ObjectClass> parse_class(std::string_view name);

/// Per-class constants: average physical height (meters) used to raise CFAR
/// lines, and the OLS localization tolerance kappa.
struct ClassMeta {
  double avg_height = 1.0;
  double kappa = 0.05;
};

class ClassTable {
 public:
  /// pedestrian 1.70 m / 0.02, cyclist 1.75 m / 0.04, car 1.55 m / 0.07.
  static ClassTable defaults();

  const ClassMeta& at(ObjectClass c) const { return meta_[static_cast<std::size_t>(c)]; }
  void set(ObjectClass c, ClassMeta m) { meta_[static_cast<std::size_t>(c)] = m; }

  /// Throws ConfigError when any height or kappa is not positive.
  void validate() const;

 private:
  std::array<ClassMeta, 3> meta_{};
};

}  // namespace cral
