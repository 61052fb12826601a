#include "flcrmf/inference.hpp"

#include <algorithm>
#include <boost/random/uniform_int_distribution.hpp>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>

#include "flcrmf/error.hpp"
#include "flcrmf/parallel.hpp"
#include "flcrmf/pipeline.hpp"

namespace flcrmf {

CoefficientFunction reconstruct_beta(const Eigen::VectorXd& beta_coef, const FpcaBasis& basis,
                                     const SamplingGrid& grid) {
  if (beta_coef.size() != basis.K) {
    throw InputError("β coefficient length " + std::to_string(beta_coef.size()) +
                     " does not match K = " + std::to_string(basis.K));
  }
  if (basis.eigenfunctions.cols() != grid.size()) throw InputError("FPCA basis does not match grid");
  return CoefficientFunction{grid, basis.eigenfunctions.topRows(basis.K).transpose() * beta_coef};
}

double mse_gamma(const Eigen::VectorXd& gamma_hat, const Eigen::VectorXd& gamma_true) {
  if (gamma_hat.size() != gamma_true.size()) throw InputError("γ̂ and γ differ in length");
  return (gamma_hat - gamma_true).squaredNorm();
}

double imse_beta(const CoefficientFunction& beta_hat, const Eigen::VectorXd& beta_true_on_grid) {
  if (beta_true_on_grid.size() != beta_hat.grid.size() ||
      beta_hat.values.size() != beta_hat.grid.size()) {
    throw InputError("β̂ and β are not on the same grid");
  }
  return beta_hat.grid.integrate((beta_hat.values - beta_true_on_grid).array().square().matrix());
}

// ---------------------------------------------------------------------------
// Concordance
// ---------------------------------------------------------------------------

double ConcordanceCounts::index() const {
  if (comparable == 0) throw InputError("concordance undefined: no comparable pairs");
  return (static_cast<double>(concordant) + 0.5 * static_cast<double>(tied_risk)) /
         static_cast<double>(comparable);
}

namespace {

class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t i) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  /// Number of inserted ranks < i.
  std::int64_t prefix(std::size_t i) const {
    std::int64_t s = 0;
    for (; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<std::int64_t> tree_;
};

}  // namespace

ConcordanceCounts concordance_counts(const std::vector<SurvivalRecord>& records,
                                     const Eigen::VectorXd& risk) {
  const auto n = records.size();
  if (static_cast<Eigen::Index>(n) != risk.size()) throw InputError("risk length does not match records");
  if (!risk.allFinite()) throw InputError("risk scores must be finite");

  std::vector<double> levels(risk.data(), risk.data() + risk.size());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    rank[i] = static_cast<std::size_t>(
        std::lower_bound(levels.begin(), levels.end(), risk(static_cast<Eigen::Index>(i))) - levels.begin());
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return records[a].time > records[b].time; });

  ConcordanceCounts counts;
  Fenwick later(levels.size());
  std::int64_t inserted = 0;
  std::size_t pos = 0;
  while (pos < n) {
    std::size_t end = pos;
    while (end < n && records[order[end]].time == records[order[pos]].time) ++end;
    for (std::size_t a = pos; a < end; ++a) {
      const std::size_t i = order[a];
      if (records[i].status != 1) continue;
      const std::int64_t below = later.prefix(rank[i]);
      const std::int64_t at_or_below = later.prefix(rank[i] + 1);
      counts.concordant += below;
      counts.tied_risk += at_or_below - below;
      counts.comparable += inserted;
    }
    for (std::size_t a = pos; a < end; ++a) later.add(rank[order[a]]);
    inserted += static_cast<std::int64_t>(end - pos);
    pos = end;
  }
  return counts;
}

double concordance(const std::vector<SurvivalRecord>& records, const Eigen::VectorXd& risk) {
  return concordance_counts(records, risk).index();
}

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

std::vector<Eigen::Index> resample_with_replacement(Eigen::Index n, CounterRng& rng) {
  boost::random::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (auto& i : idx) i = pick(rng);
  return idx;
}

std::vector<Eigen::Index> identity_resample(Eigen::Index n, CounterRng& /*rng*/) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  return idx;
}

namespace {

FunctionalSurvivalData subset(const FunctionalSurvivalData& data,
                              const std::vector<Eigen::Index>& rows) {
  const auto m = static_cast<Eigen::Index>(rows.size());
  FunctionalSurvivalData out{data.grid, RawCurves{Eigen::MatrixXd(m, data.curves.values.cols())},
                             {}, Eigen::MatrixXd(m, data.Z.cols()), 0};
  out.records.reserve(rows.size());
  std::map<Eigen::Index, Eigen::Index> group_map;
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index src = rows[static_cast<std::size_t>(r)];
    if (src < 0 || src >= data.n()) throw InputError("resample index out of range");
    out.curves.values.row(r) = data.curves.values.row(src);
    out.Z.row(r) = data.Z.row(src);
    SurvivalRecord rec = data.records[static_cast<std::size_t>(src)];
    if (data.n_groups > 0) {
      const auto [it, inserted] =
          group_map.emplace(rec.group, static_cast<Eigen::Index>(group_map.size()));
      rec.group = it->second;
    }
    out.records.push_back(rec);
  }
  if (data.n_groups > 0) out.n_groups = static_cast<Eigen::Index>(group_map.size());
  return out;
}

}  // namespace

BootstrapResult bootstrap_beta(const FunctionalSurvivalData& data, const PipelineConfig& config,
                               const BootstrapOptions& options) {
  if (options.replicates < 1) throw InputError("bootstrap needs at least one replicate");
  const auto B = static_cast<std::size_t>(options.replicates);
  std::vector<std::optional<CoefficientFunction>> curves(B);

  parallel_for(B, options.jobs, [&](std::size_t b) {
    CounterRng rng = CounterRng::substream(options.seed, {static_cast<std::uint64_t>(b)});
    const FunctionalSurvivalData sample = subset(data, options.resampler(data.n(), rng));
    const bool has_event = std::any_of(sample.records.begin(), sample.records.end(),
                                       [](const SurvivalRecord& r) { return r.status == 1; });
    if (!has_event) return;
    try {
      curves[b] = run_pipeline(sample, config).beta_hat;
    } catch (const NumericalError&) {
    } catch (const InputError&) {
    }
  });

  BootstrapResult result;
  for (std::size_t b = 0; b < B; ++b) {
    if (!curves[b]) {
      ++result.skipped;
      continue;
    }
    result.replicate_ids.push_back(static_cast<int>(b));
    result.curves.push_back(std::move(*curves[b]));
  }
  result.pointwise_mean = Eigen::VectorXd::Zero(data.grid.size());
  if (!result.curves.empty()) {
    for (const auto& c : result.curves) result.pointwise_mean += c.values;
    result.pointwise_mean /= static_cast<double>(result.curves.size());
  }
  return result;
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw InputError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BootstrapSummary summarize_bootstrap(const BootstrapResult& result) {
  if (result.curves.empty()) throw NumericalError("no successful bootstrap replicates");
  const Eigen::Index J = result.pointwise_mean.size();
  BootstrapSummary s;
  s.mean = result.pointwise_mean;
  s.p025.resize(J);
  s.p50.resize(J);
  s.p975.resize(J);
  s.variance.resize(J);
  std::vector<double> column(result.curves.size());
  for (Eigen::Index j = 0; j < J; ++j) {
    double ss = 0.0;
    for (std::size_t b = 0; b < result.curves.size(); ++b) {
      column[b] = result.curves[b].values(j);
      ss += (column[b] - s.mean(j)) * (column[b] - s.mean(j));
    }
    s.variance(j) = column.size() > 1 ? ss / static_cast<double>(column.size() - 1) : 0.0;
    s.p025(j) = quantile(column, 0.025);
    s.p50(j) = quantile(column, 0.5);
    s.p975(j) = quantile(column, 0.975);
  }
  return s;
}

}  // namespace flcrmf
