#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rarr {

// The closed activity set. Serialized as lowercase snake-case strings.
enum class ActivityLabel : int {
  Walking = 0,
  Showering = 1,
  MedicationIntake = 2,
  MedicationRefilling = 3,
};

inline constexpr int kNumLabels = 4;

inline constexpr std::array<ActivityLabel, kNumLabels> all_labels() {
  return {ActivityLabel::Walking, ActivityLabel::Showering,
          ActivityLabel::MedicationIntake, ActivityLabel::MedicationRefilling};
}

inline std::string to_string(ActivityLabel l) {
  switch (l) {
    case ActivityLabel::Walking: return "walking";
    case ActivityLabel::Showering: return "showering";
    case ActivityLabel::MedicationIntake: return "medication_intake";
    case ActivityLabel::MedicationRefilling: return "medication_refilling";
  }
  throw std::invalid_argument("invalid ActivityLabel");
}

inline ActivityLabel parse_label(std::string_view s) {
  if (s == "walking") return ActivityLabel::Walking;
  if (s == "showering") return ActivityLabel::Showering;
  if (s == "medication_intake") return ActivityLabel::MedicationIntake;
  if (s == "medication_refilling") return ActivityLabel::MedicationRefilling;
  throw std::invalid_argument("unknown activity label: " + std::string(s));
}

enum class Modality : int {
  NearSurfaceAudio = 0,
  OnSurfaceVibration = 1,
};

inline std::string to_string(Modality m) {
  switch (m) {
    case Modality::NearSurfaceAudio: return "near_surface_audio";
    case Modality::OnSurfaceVibration: return "on_surface_vibration";
  }
  throw std::invalid_argument("invalid Modality");
}

inline Modality parse_modality(std::string_view s) {
  if (s == "near_surface_audio") return Modality::NearSurfaceAudio;
  if (s == "on_surface_vibration") return Modality::OnSurfaceVibration;
  throw std::invalid_argument("unknown modality: " + std::string(s));
}

}  // namespace rarr
