#include "flcrmf_cli/ingest.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "flcrmf/error.hpp"

namespace flcrmf::cli {

namespace {

std::string cell_ref(const char* file, std::size_t row, const std::string& column) {
  // Row numbers count the header as line 1.
  return std::string(file) + " line " + std::to_string(row + 2) + ", column '" + column + "'";
}

long require_column(const CsvTable& table, const char* name) {
  const long c = table.column(name);
  if (c < 0) throw InputError(std::string("subjects file lacks the '") + name + "' column");
  return c;
}

}  // namespace

DatasetBundle ingest_tables(const CsvTable& subjects, const CsvTable& curves) {
  const long id_col = require_column(subjects, "id");
  const long time_col = require_column(subjects, "time");
  const long status_col = require_column(subjects, "status");
  const long group_col = subjects.column("group");
  const auto n = subjects.rows.size();
  if (n < 2) throw InputError("subjects file needs at least two rows");

  std::vector<std::string> ids;
  std::vector<std::string> covariate_names;
  std::vector<std::string> group_labels;
  std::vector<SurvivalRecord> records;
  std::unordered_map<std::string, std::size_t> position;
  std::map<std::string, Eigen::Index> group_index;
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = subjects.rows[r];
    const std::string& id = row[static_cast<std::size_t>(id_col)];
    if (id.empty()) throw InputError(cell_ref("subjects", r, "id") + ": empty id");
    if (!position.emplace(id, r).second) throw InputError("duplicate subject id '" + id + "'");
    ids.push_back(id);

    SurvivalRecord rec;
    rec.time = parse_number(row[static_cast<std::size_t>(time_col)], cell_ref("subjects", r, "time"));
    if (rec.time <= 0.0) throw InputError(cell_ref("subjects", r, "time") + ": time must be positive");
    const double status =
        parse_number(row[static_cast<std::size_t>(status_col)], cell_ref("subjects", r, "status"));
    if (status != 0.0 && status != 1.0) {
      throw InputError(cell_ref("subjects", r, "status") + ": status must be 0 or 1");
    }
    rec.status = static_cast<int>(status);
    if (group_col >= 0) {
      const std::string& label = row[static_cast<std::size_t>(group_col)];
      if (label.empty()) throw InputError(cell_ref("subjects", r, "group") + ": empty group");
      const auto [it, inserted] =
          group_index.emplace(label, static_cast<Eigen::Index>(group_labels.size()));
      if (inserted) group_labels.push_back(label);
      rec.group = it->second;
    } else {
      rec.group = static_cast<Eigen::Index>(r);
    }
    records.push_back(rec);
  }

  // Covariates: numeric columns pass through, text columns are reference coded.
  std::vector<Eigen::VectorXd> columns;
  for (std::size_t c = 0; c < subjects.header.size(); ++c) {
    const auto cl = static_cast<long>(c);
    if (cl == id_col || cl == time_col || cl == status_col || cl == group_col) continue;
    const std::string& name = subjects.header[c];
    std::size_t numeric = 0;
    for (const auto& row : subjects.rows) numeric += is_number(row[c]) ? 1 : 0;
    if (numeric == n) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(n));
      for (std::size_t r = 0; r < n; ++r) {
        v(static_cast<Eigen::Index>(r)) = parse_number(subjects.rows[r][c], cell_ref("subjects", r, name));
      }
      columns.push_back(std::move(v));
      covariate_names.push_back(name);
    } else if (numeric == 0) {
      std::set<std::string> levels;
      for (std::size_t r = 0; r < n; ++r) {
        if (subjects.rows[r][c].empty()) throw InputError(cell_ref("subjects", r, name) + ": missing value");
        levels.insert(subjects.rows[r][c]);
      }
      for (auto it = std::next(levels.begin()); it != levels.end(); ++it) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(n));
        for (std::size_t r = 0; r < n; ++r) v(static_cast<Eigen::Index>(r)) = subjects.rows[r][c] == *it ? 1.0 : 0.0;
        columns.push_back(std::move(v));
        covariate_names.push_back(name + "=" + *it);
      }
    } else {
      for (std::size_t r = 0; r < n; ++r) {
        parse_number(subjects.rows[r][c], cell_ref("subjects", r, name));
      }
    }
  }
  Eigen::MatrixXd Z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) Z.col(static_cast<Eigen::Index>(k)) = columns[k];

  // Curves.
  if (curves.header.size() < 2) throw InputError("curves file header must hold the grid points");
  const auto J = static_cast<Eigen::Index>(curves.header.size() - 1);
  Eigen::VectorXd points(J);
  for (Eigen::Index j = 0; j < J; ++j) {
    points(j) = parse_number(curves.header[static_cast<std::size_t>(j + 1)],
                             "curves header, grid column " + std::to_string(j + 1));
  }

  Eigen::MatrixXd values(static_cast<Eigen::Index>(n), J);
  std::vector<bool> seen(n, false);
  for (std::size_t r = 0; r < curves.rows.size(); ++r) {
    const auto& row = curves.rows[r];
    const auto it = position.find(row[0]);
    if (it == position.end()) throw InputError("curves file has id '" + row[0] + "' not in the subjects file");
    if (seen[it->second]) throw InputError("curves file repeats id '" + row[0] + "'");
    seen[it->second] = true;
    for (Eigen::Index j = 0; j < J; ++j) {
      values(static_cast<Eigen::Index>(it->second), j) = parse_number(
          row[static_cast<std::size_t>(j + 1)],
          "curves line " + std::to_string(r + 2) + ", grid column " + std::to_string(j + 1));
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    if (!seen[r]) throw InputError("curves file is missing id '" + ids[r] + "'");
  }
  const Eigen::Index n_groups = group_col >= 0 ? static_cast<Eigen::Index>(group_labels.size()) : 0;
  return DatasetBundle{
      FunctionalSurvivalData{SamplingGrid::trapezoid(points), RawCurves{std::move(values)},
                             std::move(records), std::move(Z), n_groups},
      std::move(ids), std::move(covariate_names), std::move(group_labels)};
}

DatasetBundle ingest(const std::filesystem::path& subjects, const std::filesystem::path& curves) {
  return ingest_tables(read_csv(subjects), read_csv(curves));
}

std::string subjects_csv(const DatasetBundle& bundle) {
  std::string out = "id,time,status";
  const bool shared = bundle.data.n_groups > 0;
  if (shared) out += ",group";
  for (const auto& name : bundle.covariate_names) out += "," + csv_field(name);
  out += "\n";
  for (std::size_t i = 0; i < bundle.data.records.size(); ++i) {
    const auto& rec = bundle.data.records[i];
    out += csv_field(bundle.ids[i]) + "," + format_number(rec.time) + "," + std::to_string(rec.status);
    if (shared) out += "," + csv_field(bundle.group_labels[static_cast<std::size_t>(rec.group)]);
    for (Eigen::Index k = 0; k < bundle.data.Z.cols(); ++k) {
      out += "," + format_number(bundle.data.Z(static_cast<Eigen::Index>(i), k));
    }
    out += "\n";
  }
  return out;
}

std::string curves_csv(const DatasetBundle& bundle) {
  std::string out = "id";
  const auto& points = bundle.data.grid.points();
  for (Eigen::Index j = 0; j < points.size(); ++j) out += "," + format_number(points(j));
  out += "\n";
  const auto& values = bundle.data.curves.values;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    out += csv_field(bundle.ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < values.cols(); ++j) out += "," + format_number(values(i, j));
    out += "\n";
  }
  return out;
}

}  // namespace flcrmf::cli
