#include <eiv/bench/experiments.hpp>

#include <eiv/bench/csv.hpp>
#include <eiv/bench/dataset_io.hpp>
#include <eiv/bench/pool.hpp>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <tuple>

namespace eiv::bench {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kTruthTag = 1;
constexpr std::uint64_t kDataTag = 2;
constexpr std::uint64_t kAuditTag = 3;

std::string cell(double x) { return std::isnan(x) ? "" : format_double(x); }

json number(double x) { return std::isnan(x) ? json(nullptr) : json(x); }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

Dataset<double> subset(const Dataset<double>& ds, Index begin, Index count) {
  Dataset<double> part = ds;
  part.observed = ds.observed.middleRows(begin, count);
  if (ds.clean.size() > 0) part.clean = ds.clean.middleRows(begin, count);
  if (ds.mask.size() > 0) part.mask = ds.mask.middleRows(begin, count);
  part.y = ds.y.segment(begin, count);
  return part;
}

RegularityParams<double> params_for(const ExperimentConfig& cfg, const Dataset<double>& ds,
                                    const CovarianceSpec<double>& cov) {
  const double fro = ds.theta_star.size() > 0 ? ds.theta_star.norm() : 0.0;
  return regularity_params(cov, ds.d1, ds.d2, ds.samples(), ds.corruption, cfg.c0, fro);
}

CovarianceSpec<double> effective_cov(const ExperimentConfig& cfg, const Dataset<double>& ds) {
  CovarianceSpec<double> cov = ds.cov;
  if (ds.corruption == Corruption::Missing && cfg.estimate_rho) {
    cov.rho = std::min(estimate_missing_rate(ds.mask), 1.0 - 1e-9);
  }
  return cov;
}

std::string trace_csv(const SolverTrace<double>& trace) {
  std::string text = "iteration,objective,residual\n";
  for (std::size_t t = 0; t < trace.objective.size(); ++t) {
    text += std::to_string(t) + "," + format_double(trace.objective[t]) + ",";
    if (t < trace.residual.size()) text += format_double(trace.residual[t]);
    text += "\n";
  }
  return text;
}

}  // namespace

double quantile(std::vector<double> values, double p) {
  values.erase(std::remove_if(values.begin(), values.end(),
                              [](double x) { return std::isnan(x); }),
               values.end());
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

CovarianceSpec<double> make_cov(const ExperimentConfig& cfg) {
  const Index m = cfg.d1 * cfg.d2;
  CovarianceSpec<double> cov;
  cov.sigma_x = cfg.sigma_x == "toeplitz" ? CovOperator<double>::toeplitz(m, 1.0, cfg.sigma_x_corr)
                                          : CovOperator<double>::scaled_identity(m, 1.0);
  const bool additive = cfg.corruption == Corruption::Additive;
  cov.sigma_w = CovOperator<double>::scaled_identity(m, additive ? cfg.sigma_w * cfg.sigma_w : 0.0);
  cov.rho = additive ? 0.0 : cfg.rho;
  cov.sigma_eps = cfg.sigma_eps;
  cov.validate();
  return cov;
}

TruthSpec<double> make_truth_spec(const ExperimentConfig& cfg) {
  TruthSpec<double> spec;
  spec.d1 = cfg.d1;
  spec.d2 = cfg.d2;
  spec.scale = cfg.scale;
  if (cfg.truth_mode == "near") {
    spec.mode = NearLowRank{cfg.q, cfg.radius, cfg.decay};
  } else {
    spec.mode = ExactRank{cfg.rank};
  }
  return spec;
}

PenaltyFamily<double> make_family(const ExperimentConfig& cfg, const std::string& name,
                                  double lambda) {
  if (name == "nuclear") return PenaltyFamily<double>::nuclear(lambda);
  if (name == "scad") return PenaltyFamily<double>::scad(lambda, cfg.scad_a);
  if (name == "mcp") return PenaltyFamily<double>::mcp(lambda, cfg.mcp_b);
  throw ConfigError("unknown penalty family '" + name + "'");
}

std::pair<double, double> truth_lq(const ExperimentConfig& cfg) {
  if (cfg.truth_mode == "near") return {cfg.radius, cfg.q};
  return {static_cast<double>(cfg.rank), 0.0};
}

Matrix<double> replication_truth(const ExperimentConfig& cfg, long replication) {
  Rng rng = derive_stream(cfg.seed, static_cast<std::uint64_t>(replication), kTruthTag);
  return gen_truth(make_truth_spec(cfg), rng);
}

std::uint64_t data_seed(const ExperimentConfig& cfg, long replication, long n) {
  Rng rng = derive_stream(cfg.seed, static_cast<std::uint64_t>(replication),
                          kDataTag + (static_cast<std::uint64_t>(n) << 8));
  return rng();
}

Dataset<double> replication_dataset(const ExperimentConfig& cfg, long replication, long n) {
  return gen_dataset(replication_truth(cfg, replication), make_cov(cfg), n, cfg.corruption,
                     data_seed(cfg, replication, n));
}

std::shared_ptr<const SurrogatePair<double>> corrected_surrogate(const ExperimentConfig& cfg,
                                                                 const Dataset<double>& ds) {
  if (ds.corruption == Corruption::Additive) {
    return std::make_shared<const SurrogatePair<double>>(corrected_pair(ds));
  }
  const CovarianceSpec<double> cov = effective_cov(cfg, ds);
  return std::make_shared<const SurrogatePair<double>>(
      build_missing(ds.observed, ds.mask, ds.y, cov.rho, ds.d1, ds.d2));
}

LambdaOmega<double> choose_lambda_omega(const ExperimentConfig& cfg, const Dataset<double>& ds,
                                        std::shared_ptr<const SurrogatePair<double>> corrected,
                                        const std::string& family) {
  if (cfg.policy == "fixed") return {cfg.lambda, cfg.omega, {}};
  const CovarianceSpec<double> cov = effective_cov(cfg, ds);
  if (cfg.policy == "oracle") {
    if (ds.theta_star.size() == 0) {
      throw ConfigError("oracle lambda policy needs theta_star; use policy=grid or fixed");
    }
    return select_lambda_omega<double>(corrected, params_for(cfg, ds, cov), ds.theta_star,
                                       OraclePolicy{cfg.margin});
  }

  const Index n = ds.samples();
  const Index n_val = std::max<Index>(
      1, static_cast<Index>(std::llround(cfg.validation_fraction * static_cast<double>(n))));
  if (n - n_val < 1) throw ConfigError("grid policy: too few samples for a validation split");
  const Dataset<double> train = subset(ds, 0, n - n_val);
  const Dataset<double> valid = subset(ds, n - n_val, n_val);
  auto train_pair = corrected_surrogate(cfg, train);
  GridPolicy<double> grid;
  const double hi = op_norm(grad_loss(*train_pair, Matrix<double>::Zero(ds.d1, ds.d2)));
  if (!(hi > 0)) throw ConfigError("grid policy: zero gradient at the origin");
  grid.lambdas = log_grid(hi, cfg.grid_ratio, static_cast<int>(cfg.grid_points));
  grid.omega = cfg.omega;
  grid.validation = corrected_surrogate(cfg, valid);
  grid.family = make_family(cfg, family, 1.0);
  const auto params = params_for(cfg, train, cov);
  grid.solver.v = cfg.v > 0 ? cfg.v
                            : default_step_inverse(*train_pair, params, grid.family.mu());
  grid.solver.max_iters = static_cast<int>(cfg.max_iters);
  grid.solver.tol_residual = cfg.tol;
  return select_lambda_omega<double>(train_pair, params, std::nullopt, grid);
}

FitOutcome fit_with(const ExperimentConfig& cfg, const Dataset<double>& ds,
                    std::shared_ptr<const SurrogatePair<double>> pair,
                    const std::string& family, const std::string& method,
                    const LambdaOmega<double>& choice) {
  const auto start = std::chrono::steady_clock::now();
  FitOutcome out;
  ResultRecord& rec = out.record;
  rec.config_hash = config_hash(cfg);
  rec.n = ds.samples();
  rec.corruption = to_string(ds.corruption);
  rec.penalty = family;
  rec.method = method;
  rec.lambda = choice.lambda;
  rec.omega = choice.omega;
  try {
    const ProblemSpec<double> spec{pair, lift(make_family(cfg, family, choice.lambda)),
                                   choice.omega};
    const auto params = params_for(cfg, ds, effective_cov(cfg, ds));
    SolverOptions<double> opts;
    opts.v = cfg.v > 0 ? cfg.v : default_step_inverse(*pair, params, spec.penalty.mu());
    opts.max_iters = static_cast<int>(cfg.max_iters);
    opts.tol_residual = cfg.tol;
    auto result = solve(spec, opts);
    out.theta_hat = std::move(result.theta_hat);
    out.trace = std::move(result.trace);
    rec.iterations = out.trace.iterations();
    rec.converged = out.trace.converged_at.has_value();
    rec.final_residual = out.trace.residual.empty() ? 0.0 : out.trace.residual.back();
    rec.objective = out.trace.objective.back();
    rec.rank = matrix_rank(out.theta_hat);
    if (ds.theta_star.size() > 0) {
      const Matrix<double> err = out.theta_hat - ds.theta_star;
      const auto nrm = norms(err);
      rec.frob_error = nrm.frobenius;
      rec.nuclear_error = nrm.nuclear;
      const auto [r_q, q] = truth_lq(cfg);
      const auto diag = theory_diag(spec, params, r_q, q, out.theta_hat, ds.theta_star, opts.v,
                                    out.trace.objective.front() - out.trace.objective.back());
      rec.kappa = diag.kappa;
      rec.xi = diag.xi;
      rec.eps_stat_bar = diag.eps_stat_bar;
      rec.theory_applicable = diag.applicable;
      if (params.alpha1 > spec.penalty.mu()) {
        const auto bound = recovery_bound(params, spec.lambda(), spec.penalty.mu(), r_q, q);
        rec.bound_frob_sq = bound.frob_sq;
        rec.bound_nuclear = bound.nuclear;
      }
    }
    if (!rec.converged) {
      spdlog::debug("{} {} n={} rep={} stopped at max_iters", family, method, rec.n,
                    rec.replication);
    }
  } catch (const DivergenceError<double>& e) {
    rec.status = "numerical_error";
    rec.message = e.what();
    out.trace = e.trace();
    rec.iterations = out.trace.iterations();
  } catch (const NumericalError& e) {
    rec.status = "numerical_error";
    rec.message = e.what();
  } catch (const InputError& e) {
    rec.status = "input_error";
    rec.message = e.what();
  } catch (const ConfigError& e) {
    rec.status = "config_error";
    rec.message = e.what();
  }
  if (cfg.timing) {
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return out;
}

json to_json(const ResultRecord& r, bool timing) {
  json j;
  j["config_hash"] = r.config_hash;
  j["replication"] = r.replication;
  j["n"] = r.n;
  j["corruption"] = r.corruption;
  j["penalty"] = r.penalty;
  j["method"] = r.method;
  j["status"] = r.status;
  j["message"] = r.message;
  j["lambda"] = number(r.lambda);
  j["omega"] = number(r.omega);
  j["frob_error"] = number(r.frob_error);
  j["nuclear_error"] = number(r.nuclear_error);
  j["rank"] = r.rank;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["final_residual"] = number(r.final_residual);
  j["objective"] = number(r.objective);
  j["kappa"] = number(r.kappa);
  j["xi"] = number(r.xi);
  j["eps_stat_bar"] = number(r.eps_stat_bar);
  j["theory_applicable"] = r.theory_applicable;
  j["bound_frob_sq"] = number(r.bound_frob_sq);
  j["bound_nuclear"] = number(r.bound_nuclear);
  j["trace_path"] = r.trace_path;
  if (timing) j["wall_seconds"] = number(r.wall_seconds);
  return j;
}

std::string results_csv_header(bool timing) {
  std::string h =
      "config_hash,replication,n,corruption,penalty,method,status,lambda,omega,frob_error,"
      "nuclear_error,rank,iterations,converged,final_residual,objective,kappa,xi,eps_stat_bar,"
      "theory_applicable,bound_frob_sq,bound_nuclear,trace_path,message";
  if (timing) h += ",wall_seconds";
  return h + "\n";
}

std::string results_csv_row(const ResultRecord& r, bool timing) {
  std::string row = r.config_hash + "," + std::to_string(r.replication) + "," +
                    std::to_string(r.n) + "," + r.corruption + "," + r.penalty + "," +
                    r.method + "," + r.status + "," + cell(r.lambda) + "," + cell(r.omega) +
                    "," + cell(r.frob_error) + "," + cell(r.nuclear_error) + "," +
                    std::to_string(r.rank) + "," + std::to_string(r.iterations) + "," +
                    (r.converged ? "1" : "0") + "," + cell(r.final_residual) + "," +
                    cell(r.objective) + "," + cell(r.kappa) + "," + cell(r.xi) + "," +
                    cell(r.eps_stat_bar) + "," + (r.theory_applicable ? "1" : "0") + "," +
                    cell(r.bound_frob_sq) + "," + cell(r.bound_nuclear) + "," +
                    csv_escape(r.trace_path) + "," + csv_escape(r.message);
  if (timing) row += "," + cell(r.wall_seconds);
  return row + "\n";
}

void run_simulate(const ExperimentConfig& cfg, const fs::path& out) {
  const long n = cfg.n_list.front();
  spdlog::info("simulate: d1={} d2={} N={} corruption={}", cfg.d1, cfg.d2, n,
               to_string(cfg.corruption));
  write_dataset(out, replication_dataset(cfg, 0, n), cfg);
}

FitOutcome run_fit(const ExperimentConfig& cfg, const fs::path& data_dir, const fs::path& out) {
  if (cfg.families.size() != 1) {
    throw ConfigError("fit takes exactly one penalty family");
  }
  const Dataset<double> ds = read_dataset(data_dir);
  const std::string family = cfg.families.front();
  auto pair = corrected_surrogate(cfg, ds);
  const auto choice = choose_lambda_omega(cfg, ds, pair, family);
  spdlog::info("fit: {} lambda={} omega={}", family, choice.lambda, choice.omega);
  FitOutcome fit = fit_with(cfg, ds, pair, family, "corrected", choice);
  fit.record.trace_path = "trace.csv";
  write_text(out / "trace.csv", trace_csv(fit.trace));
  if (fit.theta_hat.size() > 0) write_matrix(out / "theta_hat.csv", fit.theta_hat);
  write_text(out / "record.json", to_json(fit.record, cfg.timing).dump(2) + "\n");
  if (fit.record.status == "numerical_error") throw NumericalError(fit.record.message);
  if (fit.record.status == "input_error") throw InputError(fit.record.message);
  return fit;
}

std::vector<ResultRecord> run_bench(const ExperimentConfig& cfg, const fs::path& out) {
  struct Task {
    long n;
    long rep;
  };
  std::vector<Task> tasks;
  for (long n : cfg.n_list)
    for (long rep = 0; rep < cfg.replications; ++rep) tasks.push_back({n, rep});

  std::vector<std::vector<ResultRecord>> slots(tasks.size());
  spdlog::info("bench: {} datasets x {} families on {} jobs", tasks.size(), cfg.families.size(),
               cfg.jobs);
  parallel_for(tasks.size(), cfg.jobs, [&](std::size_t i) {
    const auto [n, rep] = tasks[i];
    const Dataset<double> ds = replication_dataset(cfg, rep, n);
    auto corrected = corrected_surrogate(cfg, ds);
    std::shared_ptr<const SurrogatePair<double>> naive;
    if (cfg.naive) naive = std::make_shared<const SurrogatePair<double>>(naive_pair(ds));
    for (const auto& family : cfg.families) {
      std::vector<std::pair<std::string, std::shared_ptr<const SurrogatePair<double>>>> methods{
          {"corrected", corrected}};
      if (naive) methods.emplace_back("naive", naive);
      std::optional<LambdaOmega<double>> choice;
      std::string failure;
      try {
        choice = choose_lambda_omega(cfg, ds, corrected, family);
      } catch (const std::exception& e) {
        failure = e.what();
      }
      for (const auto& [method, pair] : methods) {
        FitOutcome fit;
        if (choice) {
          fit = fit_with(cfg, ds, pair, family, method, *choice);
        } else {
          fit.record.config_hash = config_hash(cfg);
          fit.record.n = n;
          fit.record.corruption = to_string(cfg.corruption);
          fit.record.penalty = family;
          fit.record.method = method;
          fit.record.status = "config_error";
          fit.record.message = failure;
        }
        fit.record.replication = rep;
        if (cfg.traces && !fit.trace.objective.empty()) {
          const std::string name = "traces/n" + std::to_string(n) + "_rep" +
                                   std::to_string(rep) + "_" + family + "_" + method + ".csv";
          write_text(out / name, trace_csv(fit.trace));
          fit.record.trace_path = name;
        }
        if (fit.record.status != "ok") {
          spdlog::warn("bench: n={} rep={} {} {} failed: {}", n, rep, family, method,
                       fit.record.message);
        }
        slots[i].push_back(std::move(fit.record));
      }
    }
  });

  std::vector<ResultRecord> records;
  for (auto& slot : slots)
    for (auto& r : slot) records.push_back(std::move(r));

  std::string table = results_csv_header(cfg.timing);
  for (const auto& r : records) table += results_csv_row(r, cfg.timing);
  write_text(out / "results.csv", table);

  using Key = std::tuple<long, std::string, std::string>;
  std::map<Key, std::vector<const ResultRecord*>> groups;
  for (const auto& r : records) groups[{r.n, r.penalty, r.method}].push_back(&r);
  std::string summary =
      "config_hash,n,corruption,penalty,method,count,failures,frob_median,frob_q25,frob_q75,"
      "nuclear_median,iterations_median,lambda_median\n";
  for (const auto& [key, rows] : groups) {
    std::vector<double> frob, nuc, iters, lam;
    long failures = 0;
    for (const auto* r : rows) {
      if (r->status != "ok") {
        ++failures;
        continue;
      }
      frob.push_back(r->frob_error);
      nuc.push_back(r->nuclear_error);
      iters.push_back(static_cast<double>(r->iterations));
      lam.push_back(r->lambda);
    }
    summary += config_hash(cfg) + "," + std::to_string(std::get<0>(key)) + "," +
               to_string(cfg.corruption) + "," + std::get<1>(key) + "," + std::get<2>(key) +
               "," + std::to_string(rows.size()) + "," + std::to_string(failures) + "," +
               cell(median(frob)) + "," + cell(quantile(frob, 0.25)) + "," +
               cell(quantile(frob, 0.75)) + "," + cell(median(nuc)) + "," +
               cell(median(iters)) + "," + cell(median(lam)) + "\n";
  }
  write_text(out / "summary.csv", summary);
  return records;
}

AuditSummary run_audit(const ExperimentConfig& cfg, const fs::path& out) {
  struct Task {
    long n;
    long rep;
  };
  std::vector<Task> tasks;
  for (long n : cfg.n_list)
    for (long rep = 0; rep < cfg.replications; ++rep) tasks.push_back({n, rep});

  AuditSummary summary;
  summary.rows.resize(tasks.size());
  parallel_for(tasks.size(), cfg.jobs, [&](std::size_t i) {
    const auto [n, rep] = tasks[i];
    const Dataset<double> ds = replication_dataset(cfg, rep, n);
    auto pair = corrected_surrogate(cfg, ds);
    const auto params = params_for(cfg, ds, effective_cov(cfg, ds));
    AuditRow row;
    row.n = n;
    row.replication = rep;
    Rng rng = derive_stream(cfg.seed, static_cast<std::uint64_t>(rep),
                            kAuditTag + (static_cast<std::uint64_t>(n) << 8));
    row.report = audit_rsc_rsm(*pair, params, static_cast<int>(cfg.trials), rng(),
                               std::optional<Matrix<double>>(ds.theta_star));
    const auto grad = grad_opnorm_at_truth(*pair, ds.theta_star);
    row.grad_opnorm = grad.opnorm;
    row.grad_maxabs = grad.maxabs;
    row.grad_scale = params.phi * std::sqrt((std::log(static_cast<double>(cfg.d1)) +
                                             std::log(static_cast<double>(cfg.d2))) /
                                            static_cast<double>(n));
    summary.rows[i] = row;
  });

  std::string table =
      "replication,n,trials,sta_rsc_violations,alg_rsc_violations,alg_rsm_violations,"
      "grad_opnorm,grad_maxabs,grad_scale\n";
  for (const auto& row : summary.rows) {
    summary.total_trials += 3L * row.report.trials;
    summary.total_violations += row.report.sta_rsc_violations +
                                row.report.alg_rsc_violations + row.report.alg_rsm_violations;
    table += std::to_string(row.replication) + "," + std::to_string(row.n) + "," +
             std::to_string(row.report.trials) + "," +
             std::to_string(row.report.sta_rsc_violations) + "," +
             std::to_string(row.report.alg_rsc_violations) + "," +
             std::to_string(row.report.alg_rsm_violations) + "," + cell(row.grad_opnorm) +
             "," + cell(row.grad_maxabs) + "," + cell(row.grad_scale) + "\n";
  }
  json per_n = json::array();
  for (long n : cfg.n_list) {
    std::vector<double> opn, ratio;
    long violations = 0;
    for (const auto& row : summary.rows) {
      if (row.n != n) continue;
      opn.push_back(row.grad_opnorm);
      ratio.push_back(row.grad_opnorm / row.grad_scale);
      violations += row.report.sta_rsc_violations + row.report.alg_rsc_violations +
                    row.report.alg_rsm_violations;
    }
    summary.n_values.push_back(n);
    summary.median_opnorm.push_back(median(opn));
    summary.median_ratio.push_back(median(ratio));
    per_n.push_back({{"n", n},
                     {"violations", violations},
                     {"median_grad_opnorm", number(summary.median_opnorm.back())},
                     {"median_grad_ratio", number(summary.median_ratio.back())}});
  }
  for (std::size_t k = 0; k + 1 < summary.median_opnorm.size(); ++k) {
    summary.step_ratio.push_back(summary.median_opnorm[k + 1] / summary.median_opnorm[k]);
  }
  if (!out.empty()) {
    json report;
    report["config_hash"] = config_hash(cfg);
    report["trials_per_condition"] = cfg.trials;
    report["total_checks"] = summary.total_trials;
    report["total_violations"] = summary.total_violations;
    report["per_n"] = per_n;
    json steps = json::array();
    for (double s : summary.step_ratio) steps.push_back(number(s));
    report["grad_opnorm_step_ratio"] = steps;
    write_text(out / "audit.csv", table);
    write_text(out / "audit.json", report.dump(2) + "\n");
  }
  return summary;
}

}  // namespace eiv::bench
