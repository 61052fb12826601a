#include "flcrmf_cli/report.hpp"

#include "flcrmf/error.hpp"
#include "flcrmf_cli/csv.hpp"

namespace flcrmf::cli {

namespace {

Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json vector_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (const double x : v) a.push_back(x);
  return a;
}

const Json& field(const Json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) throw InputError(std::string("fit.json lacks '") + key + "'");
  return doc.at(key);
}

Eigen::VectorXd read_vector(const Json& doc, const char* key) {
  const Json& a = field(doc, key);
  if (!a.is_array()) throw InputError(std::string("fit.json '") + key + "' must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw InputError(std::string("fit.json '") + key + "' holds a non-number");
    v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  }
  return v;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

template <typename T>
T read_scalar(const Json& doc, const char* key) {
  try {
    return field(doc, key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError(std::string("fit.json '") + key + "' has the wrong type");
  }
}

std::string metrics_fields(const MetricsRecord& m) {
  return format_number(m.ci_in) + "," + format_number(m.ci_out) + "," + format_number(m.mse_gamma) +
         "," + format_number(m.imse_beta) + "," + format_number(m.censor_rate);
}

}  // namespace

Json to_json(const FitReport& report) {
  const FrailtyFit& f = report.fit;
  Json doc;
  doc["covariates"] = report.covariates;
  doc["K"] = report.K;
  doc["fpca_threshold"] = report.fpca_threshold;
  doc["frailty_enabled"] = f.frailty_enabled;
  doc["gamma_hat"] = vector_json(f.gamma_hat);
  doc["beta_coef_hat"] = vector_json(f.beta_coef_hat);
  doc["alpha_hat"] = f.alpha_hat;
  doc["w_hat"] = vector_json(f.w_hat);
  doc["baseline"] = Json{{"times", vector_json(f.baseline.times)}, {"values", vector_json(f.baseline.values)}};
  doc["diagnostics"] = Json{{"inner_iters", f.diagnostics.inner_iterations},
                            {"outer_iters", f.diagnostics.outer_iterations},
                            {"converged", f.diagnostics.converged},
                            {"final_ppl", f.diagnostics.final_ppl}};
  return doc;
}

FitReport fit_report_from_json(const Json& doc) {
  FitReport report;
  report.covariates = read_scalar<std::vector<std::string>>(doc, "covariates");
  report.K = read_scalar<Eigen::Index>(doc, "K");
  report.fpca_threshold = read_scalar<double>(doc, "fpca_threshold");
  FrailtyFit& f = report.fit;
  f.frailty_enabled = read_scalar<bool>(doc, "frailty_enabled");
  f.gamma_hat = read_vector(doc, "gamma_hat");
  f.beta_coef_hat = read_vector(doc, "beta_coef_hat");
  f.alpha_hat = read_scalar<double>(doc, "alpha_hat");
  f.w_hat = read_vector(doc, "w_hat");
  const Json& baseline = field(doc, "baseline");
  f.baseline.times = to_std(read_vector(baseline, "times"));
  f.baseline.values = to_std(read_vector(baseline, "values"));
  if (f.baseline.times.size() != f.baseline.values.size()) throw InputError("fit.json baseline arrays differ in length");
  const Json& diag = field(doc, "diagnostics");
  f.diagnostics.inner_iterations = read_scalar<std::vector<int>>(diag, "inner_iters");
  f.diagnostics.outer_iterations = read_scalar<int>(diag, "outer_iters");
  f.diagnostics.converged = read_scalar<bool>(diag, "converged");
  f.diagnostics.final_ppl = read_scalar<double>(diag, "final_ppl");
  if (report.K != f.beta_coef_hat.size()) throw InputError("fit.json K does not match beta_coef_hat");
  return report;
}

std::string render_fit_json(const FitReport& report) { return to_json(report).dump(2) + "\n"; }

std::string beta_csv(const CoefficientFunction& beta) {
  std::string out = "s,beta\n";
  const auto& s = beta.grid.points();
  for (Eigen::Index j = 0; j < s.size(); ++j) out += format_number(s(j)) + "," + format_number(beta.values(j)) + "\n";
  return out;
}

std::string eigen_csv(const FpcaBasis& basis) {
  std::string out = "k,lambda";
  for (Eigen::Index j = 0; j < basis.eigenfunctions.cols(); ++j) out += ",phi_" + std::to_string(j + 1);
  out += "\n";
  for (Eigen::Index k = 0; k < basis.max_components(); ++k) {
    out += std::to_string(k + 1) + "," + format_number(basis.eigenvalues(k));
    for (Eigen::Index j = 0; j < basis.eigenfunctions.cols(); ++j) out += "," + format_number(basis.eigenfunctions(k, j));
    out += "\n";
  }
  return out;
}

std::string bootstrap_long_csv(const BootstrapResult& result) {
  std::string out = "replicate,s,beta_hat\n";
  for (std::size_t b = 0; b < result.curves.size(); ++b) {
    const auto& c = result.curves[b];
    const std::string id = std::to_string(result.replicate_ids[b]);
    for (Eigen::Index j = 0; j < c.values.size(); ++j) {
      out += id + "," + format_number(c.grid.points()(j)) + "," + format_number(c.values(j)) + "\n";
    }
  }
  return out;
}

std::string bootstrap_summary_csv(const SamplingGrid& grid, const BootstrapSummary& summary) {
  std::string out = "s,mean,p025,p50,p975\n";
  for (Eigen::Index j = 0; j < grid.size(); ++j) {
    out += format_number(grid.points()(j)) + "," + format_number(summary.mean(j)) + "," +
           format_number(summary.p025(j)) + "," + format_number(summary.p50(j)) + "," +
           format_number(summary.p975(j)) + "\n";
  }
  return out;
}

std::string table1_csv(const StudyResult& study) {
  std::string out =
      "tau,phi,n,method,ci_in,ci_out,mse,imse,psi,se_ci_in,se_ci_out,se_mse,se_imse,se_psi,"
      "replications,converged\n";
  for (const auto& row : study.table) {
    out += format_number(row.tau) + "," + format_number(row.phi) + "," + std::to_string(row.n) + "," +
           row.method + "," + metrics_fields(row.mean) + "," + metrics_fields(row.se) + "," +
           std::to_string(row.replications) + "," + std::to_string(row.converged) + "\n";
  }
  return out;
}

std::string replications_csv(const StudyResult& study) {
  std::string out =
      "tau,phi,n,replicate,method,ci_in,ci_out,mse,imse,psi,K,alpha_hat,outer_iters,converged,failed\n";
  for (const auto& cell : study.cells) {
    const std::string prefix = format_number(cell.config.tau) + "," + format_number(cell.config.phi) + "," +
                               std::to_string(cell.config.n) + ",";
    for (const auto& rep : cell.replicates) {
      const std::string id = std::to_string(rep.replicate) + ",";
      const std::string failed = rep.failed ? "1" : "0";
      out += prefix + id + "FLCRM-F," + metrics_fields(rep.frailty) + "," + std::to_string(rep.K_selected) +
             "," + format_number(rep.alpha_hat) + "," + std::to_string(rep.outer_iterations) + "," +
             (rep.frailty_converged ? "1" : "0") + "," + failed + "\n";
      if (rep.no_frailty) {
        out += prefix + id + "FLCRM," + metrics_fields(*rep.no_frailty) + "," + std::to_string(rep.K_selected) +
               ",0,1," + (rep.no_frailty_converged ? "1" : "0") + "," + failed + "\n";
      }
    }
  }
  return out;
}

}  // namespace flcrmf::cli
