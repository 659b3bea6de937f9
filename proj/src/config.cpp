#include <eiv/bench/config.hpp>

#include <eiv/types.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

namespace eiv::bench {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  std::string out = s.substr(first, last - first + 1);
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw ConfigError("invalid value '" + value + "' for " + key);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  T out{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  if (ec != std::errc() || ptr != end || s.empty()) bad_value(key, text);
  return out;
}

double parse_real(const std::string& key, const std::string& text) {
  const double x = parse_number<double>(key, text);
  if (!std::isfinite(x)) bad_value(key, text);
  return x;
}

bool parse_bool(const std::string& key, const std::string& text) {
  std::string s = trim(text);
  std::transform(s.begin(), s.end(), s.begin(), ::tolower);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  bad_value(key, text);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += items[i];
  }
  return out;
}

std::string choice(const std::string& key, const std::string& text,
                   std::initializer_list<const char*> allowed) {
  const std::string s = trim(text);
  for (const char* a : allowed) {
    if (s == a) return s;
  }
  bad_value(key, text);
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
  bool affects_results = true;
};

#define EIV_LONG(member)                                                       \
  Field {                                                                      \
    [](ExperimentConfig& c, const std::string& k, const std::string& v) {      \
      c.member = parse_number<long>(k, v);                                     \
    },                                                                         \
        [](const ExperimentConfig& c) { return std::to_string(c.member); }     \
  }
#define EIV_REAL(member)                                                       \
  Field {                                                                      \
    [](ExperimentConfig& c, const std::string& k, const std::string& v) {      \
      c.member = parse_real(k, v);                                             \
    },                                                                         \
        [](const ExperimentConfig& c) { return format_double(c.member); }      \
  }
#define EIV_BOOL(member)                                                       \
  Field {                                                                      \
    [](ExperimentConfig& c, const std::string& k, const std::string& v) {      \
      c.member = parse_bool(k, v);                                             \
    },                                                                         \
        [](const ExperimentConfig& c) {                                        \
          return std::string(c.member ? "true" : "false");                     \
        }                                                                      \
  }
#define EIV_CHOICE(member, ...)                                                \
  Field {                                                                      \
    [](ExperimentConfig& c, const std::string& k, const std::string& v) {      \
      c.member = choice(k, v, {__VA_ARGS__});                                  \
    },                                                                         \
        [](const ExperimentConfig& c) { return c.member; }                     \
  }

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["problem.d1"] = EIV_LONG(d1);
    t["problem.d2"] = EIV_LONG(d2);
    t["problem.corruption"] = Field{
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.corruption = choice(k, v, {"additive", "missing"}) == "additive"
                             ? Corruption::Additive
                             : Corruption::Missing;
        },
        [](const ExperimentConfig& c) { return std::string(to_string(c.corruption)); }};

    t["truth.mode"] = EIV_CHOICE(truth_mode, "exact", "near");
    t["truth.rank"] = EIV_LONG(rank);
    t["truth.scale"] = EIV_REAL(scale);
    t["truth.q"] = EIV_REAL(q);
    t["truth.radius"] = EIV_REAL(radius);
    t["truth.decay"] = EIV_REAL(decay);

    t["noise.sigma_x"] = EIV_CHOICE(sigma_x, "identity", "toeplitz");
    t["noise.sigma_x_corr"] = EIV_REAL(sigma_x_corr);
    t["noise.sigma_w"] = EIV_REAL(sigma_w);
    t["noise.rho"] = EIV_REAL(rho);
    t["noise.sigma_eps"] = EIV_REAL(sigma_eps);
    t["noise.estimate_rho"] = EIV_BOOL(estimate_rho);

    t["penalty.families"] = Field{
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.families.clear();
          for (const auto& item : split_list(v)) {
            c.families.push_back(choice(k, item, {"nuclear", "scad", "mcp"}));
          }
        },
        [](const ExperimentConfig& c) { return join(c.families); }};
    t["penalty.a"] = EIV_REAL(scad_a);
    t["penalty.b"] = EIV_REAL(mcp_b);

    t["lambda.policy"] = EIV_CHOICE(policy, "oracle", "grid", "fixed");
    t["lambda.margin"] = EIV_REAL(margin);
    t["lambda.c0"] = EIV_REAL(c0);
    t["lambda.lambda"] = EIV_REAL(lambda);
    t["lambda.omega"] = EIV_REAL(omega);
    t["lambda.grid_points"] = EIV_LONG(grid_points);
    t["lambda.grid_ratio"] = EIV_REAL(grid_ratio);
    t["lambda.validation_fraction"] = EIV_REAL(validation_fraction);

    t["solver.v"] = EIV_REAL(v);
    t["solver.max_iters"] = EIV_LONG(max_iters);
    t["solver.tol"] = EIV_REAL(tol);

    t["bench.n"] = Field{
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.n_list.clear();
          for (const auto& item : split_list(v)) {
            c.n_list.push_back(parse_number<long>(k, item));
          }
        },
        [](const ExperimentConfig& c) {
          std::vector<std::string> items;
          for (long n : c.n_list) items.push_back(std::to_string(n));
          return join(items);
        }};
    t["bench.replications"] = EIV_LONG(replications);
    t["bench.naive"] = EIV_BOOL(naive);

    t["audit.trials"] = EIV_LONG(trials);

    t["run.seed"] = Field{
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.seed = parse_number<std::uint64_t>(k, v);
        },
        [](const ExperimentConfig& c) { return std::to_string(c.seed); }};
    Field jobs = EIV_LONG(jobs);
    jobs.affects_results = false;
    t["run.jobs"] = jobs;
    t["run.out"] = Field{
        [](ExperimentConfig& c, const std::string&, const std::string& v) {
          c.out = trim(v);
        },
        [](const ExperimentConfig& c) { return c.out; }, false};

    t["output.timing"] = EIV_BOOL(timing);
    t["output.traces"] = EIV_BOOL(traces);
    return t;
  }();
  return table;
}

#undef EIV_LONG
#undef EIV_REAL
#undef EIV_BOOL
#undef EIV_CHOICE

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [name, field] : fields()) keys.push_back(name);
  return keys;
}

void set_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = fields().find(trim(key));
  if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(cfg, it->first, value);
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(d1 >= 1 && d2 >= 1, "problem.d1 and problem.d2 must be >= 1");
  require(rank >= 1 && rank <= std::min(d1, d2), "truth.rank must lie in [1, min(d1, d2)]");
  require(scale > 0, "truth.scale must be > 0");
  require(q > 0 && q <= 1, "truth.q must lie in (0, 1]");
  require(radius > 0, "truth.radius must be > 0");
  require(decay > 0, "truth.decay must be > 0");
  require(std::abs(sigma_x_corr) < 1, "noise.sigma_x_corr must satisfy |corr| < 1");
  require(sigma_w >= 0, "noise.sigma_w must be >= 0");
  require(rho >= 0 && rho < 1, "noise.rho must lie in [0, 1)");
  require(sigma_eps >= 0, "noise.sigma_eps must be >= 0");
  require(!families.empty(), "penalty.families must list at least one family");
  require(scad_a > 2, "penalty.a must be > 2");
  require(mcp_b > 0, "penalty.b must be > 0");
  require(margin > 0, "lambda.margin must be > 0");
  require(c0 >= 0, "lambda.c0 must be >= 0");
  require(lambda >= 0 && omega >= 0, "lambda.lambda and lambda.omega must be >= 0");
  if (policy == "fixed") {
    require(lambda > 0 && omega > 0, "fixed policy needs lambda.lambda > 0 and lambda.omega > 0");
  }
  if (policy == "grid") {
    require(omega > 0, "grid policy needs lambda.omega > 0");
    require(grid_points >= 1, "lambda.grid_points must be >= 1");
    require(grid_ratio > 0 && grid_ratio < 1, "lambda.grid_ratio must lie in (0, 1)");
    require(validation_fraction > 0 && validation_fraction < 1,
            "lambda.validation_fraction must lie in (0, 1)");
  }
  require(v >= 0, "solver.v must be >= 0");
  require(max_iters >= 0, "solver.max_iters must be >= 0");
  require(tol > 0, "solver.tol must be > 0");
  require(!n_list.empty(), "bench.n must list at least one sample size");
  for (long n : n_list) require(n >= 1, "bench.n entries must be >= 1");
  require(replications >= 1, "bench.replications must be >= 1");
  require(trials >= 1, "audit.trials must be >= 1");
  require(jobs >= 1, "run.jobs must be >= 1");
}

ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  if (!path.empty()) {
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::ini_parser::read_ini(path, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError("cannot read config: " + std::string(e.what()));
    }
    for (const auto& [section, body] : tree) {
      if (body.empty()) {
        throw ConfigError("config key '" + section + "' is outside any section");
      }
      for (const auto& [key, value] : body) {
        set_key(cfg, section + "." + key, value.data());
      }
    }
  }
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("override '" + item + "' is not of the form section.key=value");
    }
    set_key(cfg, item.substr(0, eq), item.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

std::string canonical_dump(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [name, field] : fields()) {
    if (!field.affects_results) continue;
    out += name + " = " + field.get(cfg) + "\n";
  }
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char ch : canonical_dump(cfg)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace eiv::bench
