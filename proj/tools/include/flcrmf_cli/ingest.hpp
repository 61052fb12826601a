#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "flcrmf/pipeline.hpp"
#include "flcrmf_cli/csv.hpp"

namespace flcrmf::cli {

/// Subjects file: columns `id`, `time`, `status`, optionally `group`, and any
/// number of scalar covariates. A covariate column where no cell is numeric
/// is categorical and expands into indicators for every level except the
/// first in sorted order (the reference). A column mixing numbers and text
/// is rejected.
///
/// Curves file: the first row holds a label cell followed by the grid
/// points; each further row is `id, x(s_1), ..., x(s_J)`.
struct DatasetBundle {
  FunctionalSurvivalData data;
  std::vector<std::string> ids;
  std::vector<std::string> covariate_names;
  std::vector<std::string> group_labels;  ///< empty for unshared frailty
};

DatasetBundle ingest_tables(const CsvTable& subjects, const CsvTable& curves);
DatasetBundle ingest(const std::filesystem::path& subjects, const std::filesystem::path& curves);

/// Renders a bundle back into the two CSV files (numeric covariates only).
std::string subjects_csv(const DatasetBundle& bundle);
std::string curves_csv(const DatasetBundle& bundle);

}  // namespace flcrmf::cli
