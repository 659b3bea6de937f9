#pragma once

#include <eiv/bench/config.hpp>
#include <eiv/penalty.hpp>
#include <eiv/regularity.hpp>
#include <eiv/simgen.hpp>
#include <eiv/solver.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace eiv::bench {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

CovarianceSpec<double> make_cov(const ExperimentConfig& cfg);
TruthSpec<double> make_truth_spec(const ExperimentConfig& cfg);
PenaltyFamily<double> make_family(const ExperimentConfig& cfg, const std::string& name,
                                  double lambda);

/// (R_q, q) of the configured truth: (rank, 0) or (radius, q).
std::pair<double, double> truth_lq(const ExperimentConfig& cfg);

/// Replication truths and datasets come from streams derived from
/// (run.seed, replication), so any subset of replications can be rerun.
Matrix<double> replication_truth(const ExperimentConfig& cfg, long replication);
std::uint64_t data_seed(const ExperimentConfig& cfg, long replication, long n);
Dataset<double> replication_dataset(const ExperimentConfig& cfg, long replication, long n);

/// One row of persisted results. NaN marks a value that does not apply.
struct ResultRecord {
  std::string config_hash;
  long replication = 0;
  long n = 0;
  std::string corruption;
  std::string penalty;
  std::string method;         // corrected | naive
  std::string status = "ok";  // ok | numerical_error | input_error | config_error
  std::string message;
  double lambda = kNaN;
  double omega = kNaN;
  double frob_error = kNaN;
  double nuclear_error = kNaN;
  long rank = -1;
  long iterations = 0;
  bool converged = false;
  double final_residual = kNaN;
  double objective = kNaN;
  double kappa = kNaN;
  double xi = kNaN;
  double eps_stat_bar = kNaN;
  bool theory_applicable = false;
  double bound_frob_sq = kNaN;
  double bound_nuclear = kNaN;
  std::string trace_path;
  double wall_seconds = kNaN;
};

nlohmann::json to_json(const ResultRecord& r, bool timing);
std::string results_csv_header(bool timing);
std::string results_csv_row(const ResultRecord& r, bool timing);

struct FitOutcome {
  ResultRecord record;
  Matrix<double> theta_hat;
  SolverTrace<double> trace;
};

/// Lambda and omega for one dataset and family under the configured policy,
/// always chosen on the corrected surrogate.
LambdaOmega<double> choose_lambda_omega(const ExperimentConfig& cfg, const Dataset<double>& ds,
                                        std::shared_ptr<const SurrogatePair<double>> corrected,
                                        const std::string& family);

/// Builds the corrected surrogate (with the estimated rho if requested).
std::shared_ptr<const SurrogatePair<double>> corrected_surrogate(const ExperimentConfig& cfg,
                                                                 const Dataset<double>& ds);

/// Fits `pair` with one family at (lambda, omega) and fills a record.
/// Numerical and input failures are captured in record.status.
FitOutcome fit_with(const ExperimentConfig& cfg, const Dataset<double>& ds,
                    std::shared_ptr<const SurrogatePair<double>> pair,
                    const std::string& family, const std::string& method,
                    const LambdaOmega<double>& choice);

/// Writes the dataset directory for replication 0 at the first bench.n.
void run_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out);

/// Fits the dataset in `data_dir` with the single configured family and
/// writes theta_hat.csv, record.json and trace.csv to `out`.
FitOutcome run_fit(const ExperimentConfig& cfg, const std::filesystem::path& data_dir,
                   const std::filesystem::path& out);

/// Sweep over bench.n x replications x families x {corrected, naive};
/// writes results.csv and summary.csv (and traces/ when enabled).
std::vector<ResultRecord> run_bench(const ExperimentConfig& cfg, const std::filesystem::path& out);

struct AuditRow {
  long replication = 0;
  long n = 0;
  AuditReport report;
  double grad_opnorm = kNaN;
  double grad_maxabs = kNaN;
  double grad_scale = kNaN;  // phi * sqrt((log d1 + log d2) / N)
};

struct AuditSummary {
  std::vector<AuditRow> rows;
  long total_trials = 0;
  long total_violations = 0;
  std::vector<long> n_values;
  std::vector<double> median_opnorm;  // per n_values entry
  std::vector<double> median_ratio;   // median opnorm / grad_scale per n
  std::vector<double> step_ratio;     // median_opnorm[k+1] / median_opnorm[k]
};

/// RSC/RSM audit and gradient-at-truth scaling; writes audit.csv and
/// audit.json when `out` is non-empty.
AuditSummary run_audit(const ExperimentConfig& cfg, const std::filesystem::path& out);

double median(std::vector<double> values);
double quantile(std::vector<double> values, double p);

}  // namespace eiv::bench
