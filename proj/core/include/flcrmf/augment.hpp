#pragma once

#include <map>
#include <string>
#include <vector>

namespace flcrmf {

/// Risk-factor columns used by the frailty-score augmentation of tabular
/// survival data.
struct AugmentSubject {
  double age = 0.0;
  double bmi = 0.0;
  int chd = 0;
  std::string race;
  double time = 0.0;
};

/// Point values and cut-offs of the additive frailty score. The point values
/// are configurable choices; the shrinkage rule (×0.4 at score >= 5, ×0.2 at
/// score >= 7) is fixed by default but overridable.
struct AugmentConfig {
  double age_threshold = 65.0;
  double bmi_high = 40.0;
  double bmi_low = 18.5;
  double age_points = 2.0;
  double bmi_points = 2.0;
  double chd_points = 3.0;
  std::map<std::string, double> race_points = {{"Non-Hispanic Black", 2.0},
                                               {"Mexican American", 2.0}};
  double moderate_threshold = 5.0;
  double moderate_factor = 0.4;
  double severe_threshold = 7.0;
  double severe_factor = 0.2;
};

struct AugmentedSubject {
  AugmentSubject subject;  ///< copy with the shrunken time
  double score = 0.0;
};

double frailty_score(const AugmentSubject& subject, const AugmentConfig& config);

/// Scores every subject and shrinks survival times of high-score subjects;
/// the severe rule supersedes the moderate one.
std::vector<AugmentedSubject> frailty_augment(const std::vector<AugmentSubject>& table,
                                              const AugmentConfig& config);

}  // namespace flcrmf
