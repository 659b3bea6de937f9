#include <eiv/bench/dataset_io.hpp>

#include <eiv/bench/csv.hpp>

#include <nlohmann/json.hpp>

#include <cstdio>

namespace eiv::bench {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string indexed(const char* prefix, Index i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%06ld.csv", prefix, static_cast<long>(i));
  return buf;
}

template <typename T>
T field(const json& j, const char* key, const fs::path& path) {
  if (!j.contains(key)) throw IoError(path.string() + ": manifest lacks '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw IoError(path.string() + ": manifest field '" + key + "' has the wrong type");
  }
}

}  // namespace

void write_dataset(const fs::path& dir, const Dataset<double>& ds,
                   const ExperimentConfig& cfg) {
  const Index n = ds.samples();
  json manifest;
  manifest["format_version"] = 1;
  manifest["d1"] = ds.d1;
  manifest["d2"] = ds.d2;
  manifest["samples"] = n;
  manifest["corruption"] = to_string(ds.corruption);
  manifest["sigma_x"] = cfg.sigma_x;
  manifest["sigma_x_corr"] = cfg.sigma_x_corr;
  manifest["sigma_w"] = ds.corruption == Corruption::Additive ? cfg.sigma_w : 0.0;
  manifest["rho"] = ds.cov.rho;
  manifest["sigma_eps"] = ds.cov.sigma_eps;
  manifest["seed"] = ds.seed;
  manifest["config_hash"] = config_hash(cfg);
  manifest["has_theta_star"] = ds.theta_star.size() > 0;

  for (Index i = 0; i < n; ++i) {
    write_matrix(dir / "samples" / indexed("Z", i), ds.observed_sample(i));
    if (ds.corruption == Corruption::Missing) {
      const MissingMask row = ds.mask.row(i);
      write_mask(dir / "mask" / indexed("M", i),
                 Eigen::Map<const MissingMask>(row.data(), ds.d1, ds.d2));
    }
  }
  write_matrix(dir / "y.csv", ds.y);
  if (ds.theta_star.size() > 0) write_matrix(dir / "theta_star.csv", ds.theta_star);
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset<double> read_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  json manifest;
  try {
    manifest = json::parse(read_text(manifest_path));
  } catch (const json::parse_error& e) {
    throw IoError(manifest_path.string() + ": " + e.what());
  }
  Dataset<double> ds;
  ds.d1 = field<long>(manifest, "d1", manifest_path);
  ds.d2 = field<long>(manifest, "d2", manifest_path);
  const long n = field<long>(manifest, "samples", manifest_path);
  const auto corruption = field<std::string>(manifest, "corruption", manifest_path);
  if (ds.d1 < 1 || ds.d2 < 1 || n < 1) throw IoError(manifest_path.string() + ": bad shape");
  if (corruption != "additive" && corruption != "missing") {
    throw IoError(manifest_path.string() + ": unknown corruption '" + corruption + "'");
  }
  ds.corruption = corruption == "additive" ? Corruption::Additive : Corruption::Missing;
  ds.seed = field<std::uint64_t>(manifest, "seed", manifest_path);

  const Index m = ds.d1 * ds.d2;
  const auto sigma_x = field<std::string>(manifest, "sigma_x", manifest_path);
  const double corr = field<double>(manifest, "sigma_x_corr", manifest_path);
  const double sigma_w = field<double>(manifest, "sigma_w", manifest_path);
  try {
    ds.cov.sigma_x = sigma_x == "toeplitz"
                         ? CovOperator<double>::toeplitz(m, 1.0, corr)
                         : CovOperator<double>::scaled_identity(m, 1.0);
    ds.cov.sigma_w = CovOperator<double>::scaled_identity(m, sigma_w * sigma_w);
    ds.cov.rho = field<double>(manifest, "rho", manifest_path);
    ds.cov.sigma_eps = field<double>(manifest, "sigma_eps", manifest_path);
    ds.cov.validate();
  } catch (const InputError& e) {
    throw IoError(manifest_path.string() + ": " + e.what());
  }

  ds.observed.resize(n, m);
  if (ds.corruption == Corruption::Missing) ds.mask.resize(n, m);
  for (Index i = 0; i < n; ++i) {
    const Matrix<double> z = read_matrix(dir / "samples" / indexed("Z", i));
    if (z.rows() != ds.d1 || z.cols() != ds.d2) {
      throw IoError("sample " + std::to_string(i) + " has the wrong shape");
    }
    ds.observed.row(i) = vec(z).transpose();
    if (ds.corruption == Corruption::Missing) {
      const MissingMask mk = read_mask(dir / "mask" / indexed("M", i));
      if (mk.rows() != ds.d1 || mk.cols() != ds.d2) {
        throw IoError("mask " + std::to_string(i) + " has the wrong shape");
      }
      ds.mask.row(i) = Eigen::Map<const Eigen::Array<bool, 1, Eigen::Dynamic>>(mk.data(), m);
    }
  }
  const Matrix<double> y = read_matrix(dir / "y.csv");
  if (y.rows() != n || y.cols() != 1) throw IoError("y.csv must be N x 1");
  ds.y = y.col(0);
  if (fs::exists(dir / "theta_star.csv")) {
    ds.theta_star = read_matrix(dir / "theta_star.csv");
    if (ds.theta_star.rows() != ds.d1 || ds.theta_star.cols() != ds.d2) {
      throw IoError("theta_star.csv has the wrong shape");
    }
  }
  return ds;
}

}  // namespace eiv::bench
