#include "flcrmf/augment.hpp"

#include <cmath>
#include <string>

#include "flcrmf/error.hpp"

namespace flcrmf {

double frailty_score(const AugmentSubject& subject, const AugmentConfig& config) {
  double score = 0.0;
  if (subject.age > config.age_threshold) score += config.age_points;
  if (subject.bmi > config.bmi_high || subject.bmi < config.bmi_low) score += config.bmi_points;
  if (subject.chd == 1) score += config.chd_points;
  if (const auto it = config.race_points.find(subject.race); it != config.race_points.end()) {
    score += it->second;
  }
  return score;
}

std::vector<AugmentedSubject> frailty_augment(const std::vector<AugmentSubject>& table,
                                              const AugmentConfig& config) {
  std::vector<AugmentedSubject> out;
  out.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const AugmentSubject& s = table[i];
    if (!std::isfinite(s.time) || s.time < 0.0) {
      throw InputError("row " + std::to_string(i + 1) + ": negative or non-finite time");
    }
    AugmentedSubject a{s, frailty_score(s, config)};
    if (a.score >= config.severe_threshold) {
      a.subject.time = config.severe_factor * s.time;
    } else if (a.score >= config.moderate_threshold) {
      a.subject.time = config.moderate_factor * s.time;
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace flcrmf
