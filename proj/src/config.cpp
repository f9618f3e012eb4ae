#include "shells/config.hpp"

#include "shells/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace shells {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty() || !std::isfinite(value))
    throw ConfigError(key + ": '" + text + "' is not a number");
  return value;
}

long long parse_integer(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError(key + ": '" + text + "' is not an integer");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": '" + text + "' is not a boolean");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Option {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key + " " + what);
}

template <class Access>
Option real(std::string key, Access access, double lo, double hi, bool open_lo = false) {
  return {key, [access](const RunConfig& c) { return format_double(access(const_cast<RunConfig&>(c))); },
          [access, key, lo, hi, open_lo](RunConfig& c, const std::string& text) {
            const double v = parse_double(key, text);
            require(open_lo ? v > lo : v >= lo, key, "must be " + std::string(open_lo ? "> " : ">= ") + format_double(lo));
            require(v <= hi, key, "must be <= " + format_double(hi));
            access(c) = v;
          }};
}

template <class Access>
Option integer(std::string key, Access access, long long lo, long long hi = std::numeric_limits<int>::max()) {
  return {key, [access](const RunConfig& c) { return std::to_string(access(const_cast<RunConfig&>(c))); },
          [access, key, lo, hi](RunConfig& c, const std::string& text) {
            const long long v = parse_integer(key, text);
            require(v >= lo && v <= hi, key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            access(c) = static_cast<std::remove_reference_t<decltype(access(c))>>(v);
          }};
}

template <class Access>
Option boolean(std::string key, Access access) {
  return {key, [access](const RunConfig& c) { return std::string(access(const_cast<RunConfig&>(c)) ? "true" : "false"); },
          [access, key](RunConfig& c, const std::string& text) { access(c) = parse_bool(key, text); }};
}

template <class Access>
Option path(std::string key, Access access) {
  return {key, [access](const RunConfig& c) { return access(const_cast<RunConfig&>(c)).string(); },
          [access](RunConfig& c, const std::string& text) { access(c) = std::filesystem::path(trim(text)); }};
}

const double kInf = std::numeric_limits<double>::infinity();

const std::vector<Option>& schema() {
  static const std::vector<Option> options = {
      boolean("mesh.normalize", [](RunConfig& c) -> bool& { return c.mesh.normalize; }),
      boolean("mesh.clamp_negative_cotangents", [](RunConfig& c) -> bool& { return c.mesh.clamp_negative_cotangents; }),

      real("spectral.sigma", [](RunConfig& c) -> double& { return c.match.config.sigma; }, 0.0, 1e6, true),
      integer("spectral.dense_threshold", [](RunConfig& c) -> Index& { return c.match.config.eigen.dense_threshold; }, 1),
      real("spectral.tolerance", [](RunConfig& c) -> double& { return c.match.config.eigen.tolerance; }, 0.0, 1e-2, true),
      integer("spectral.max_iterations", [](RunConfig& c) -> int& { return c.match.config.eigen.max_iterations; }, 1),
      path("spectral.cache_dir", [](RunConfig& c) -> std::filesystem::path& { return c.match.config.cache_dir; }),

      real("schedule.k_init", [](RunConfig& c) -> double& { return c.match.config.k_init; }, 2.0, 1e6),
      real("schedule.k_max", [](RunConfig& c) -> double& { return c.match.config.k_max; }, 2.0, 1e6),
      integer("schedule.steps", [](RunConfig& c) -> Index& { return c.match.config.steps; }, 2, 100000),
      integer("schedule.inner_passes", [](RunConfig& c) -> int& { return c.match.config.inner_passes; }, 1, 1000),

      real("embedding.w_spectral", [](RunConfig& c) -> double& { return c.match.config.weights.spectral; }, 0.0, kInf),
      real("embedding.w_xyz", [](RunConfig& c) -> double& { return c.match.config.weights.xyz; }, 0.0, kInf),
      real("embedding.w_normal", [](RunConfig& c) -> double& { return c.match.config.weights.normal; }, 0.0, kInf),
      boolean("embedding.damp_spectral", [](RunConfig& c) -> bool& { return c.match.config.weights.damp_spectral; }),
      {"embedding.levels",
       [](const RunConfig& c) {
         return std::string(c.match.config.level_kind == LevelKind::Indicator ? "spectral" : "shell");
       },
       [](RunConfig& c, const std::string& text) {
         const std::string t = trim(text);
         if (t == "shell") c.match.config.level_kind = LevelKind::Sigmoid;
         else if (t == "spectral") c.match.config.level_kind = LevelKind::Indicator;
         else throw ConfigError("embedding.levels must be 'shell' or 'spectral'");
       }},

      real("alignment.lambda_feat", [](RunConfig& c) -> double& { return c.match.config.lambda_feat; }, 0.0, kInf),
      real("alignment.lambda_arap", [](RunConfig& c) -> double& { return c.match.config.lambda_arap; }, 0.0, kInf),
      boolean("alignment.use_features", [](RunConfig& c) -> bool& { return c.match.config.use_features; }),
      integer("alignment.arap_iterations", [](RunConfig& c) -> int& { return c.match.config.arap_iterations; }, 1, 10000),
      real("alignment.arap_tolerance", [](RunConfig& c) -> double& { return c.match.config.arap_tolerance; }, 0.0, 1.0, true),

      integer("descriptors.hks_times", [](RunConfig& c) -> Index& { return c.match.config.hks_times; }, 1, 10000),
      path("descriptors.source_file", [](RunConfig& c) -> std::filesystem::path& { return c.source_descriptors; }),
      path("descriptors.target_file", [](RunConfig& c) -> std::filesystem::path& { return c.target_descriptors; }),

      boolean("mcmc.enabled", [](RunConfig& c) -> bool& { return c.match.use_mcmc; }),
      integer("mcmc.num_proposals", [](RunConfig& c) -> Index& { return c.match.surrogate.num_proposals; }, 1, 1000000),
      integer("mcmc.vertex_budget", [](RunConfig& c) -> Index& { return c.match.surrogate.vertex_budget; }, 4),
      real("mcmc.k_init", [](RunConfig& c) -> double& { return c.match.surrogate.k_init; }, 2.0, 1e6),
      real("mcmc.k_max", [](RunConfig& c) -> double& { return c.match.surrogate.k_max; }, 2.0, 1e6),
      integer("mcmc.steps", [](RunConfig& c) -> Index& { return c.match.surrogate.steps; }, 2, 100000),
      real("mcmc.sigma_match_sq", [](RunConfig& c) -> double& { return c.match.surrogate.sigma_match_sq; }, 0.0, kInf, true),
      real("mcmc.proposal_scale", [](RunConfig& c) -> double& { return c.match.surrogate.proposal_scale; }, 0.0, kInf, true),
      real("mcmc.lambda_feat", [](RunConfig& c) -> double& { return c.match.surrogate.lambda_feat; }, 0.0, kInf),
      real("mcmc.lambda_arap", [](RunConfig& c) -> double& { return c.match.surrogate.lambda_arap; }, 0.0, kInf),
      integer("mcmc.extra_random", [](RunConfig& c) -> Index& { return c.match.surrogate.extra_random; }, 0, 100000),
      {"mcmc.rigid",
       [](const RunConfig& c) {
         switch (c.match.rigid) {
           case RigidMode::Identity: return std::string("identity");
           case RigidMode::Random: return std::string("random");
           case RigidMode::Search: break;
         }
         return std::string("search");
       },
       [](RunConfig& c, const std::string& text) {
         const std::string t = trim(text);
         if (t == "search") c.match.rigid = RigidMode::Search;
         else if (t == "identity") c.match.rigid = RigidMode::Identity;
         else if (t == "random") c.match.rigid = RigidMode::Random;
         else throw ConfigError("mcmc.rigid must be 'search', 'identity' or 'random'");
       }},

      {"run.seed", [](const RunConfig& c) { return std::to_string(c.match.seed); },
       [](RunConfig& c, const std::string& text) {
         const std::string t = trim(text);
         std::uint64_t v = 0;
         const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
         if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
           throw ConfigError("run.seed: '" + text + "' is not a non-negative integer");
         c.match.seed = v;
       }},
      integer("run.threads", [](RunConfig& c) -> int& { return c.threads; }, 0, 4096),
      boolean("run.parallel", [](RunConfig& c) -> bool& { return c.match.parallel; }),
      boolean("run.one_based", [](RunConfig& c) -> bool& { return c.one_based; }),

      integer("eval.thresholds", [](RunConfig& c) -> Index& { return c.eval_thresholds; }, 2, 1000000),
      real("eval.distortion_cap", [](RunConfig& c) -> double& { return c.distortion_cap; }, 0.0, kInf, true),
  };
  return options;
}

const Option* find_option(const std::string& key) {
  for (const auto& o : schema())
    if (o.key == key) return &o;
  return nullptr;
}

}  // namespace

RunConfig default_config() {
  RunConfig config;
  if (const char* dir = std::getenv(kCacheDirEnv); dir != nullptr && *dir != '\0') config.match.config.cache_dir = dir;
  return config;
}

void set_option(RunConfig& config, const std::string& key, const std::string& value) {
  const Option* option = find_option(trim(key));
  if (option == nullptr) throw ConfigError("unknown configuration key '" + key + "'");
  option->set(config, value);
}

void parse_config(RunConfig& config, const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  for (const auto& [section, entries] : tree) {
    if (entries.empty() && !entries.data().empty())
      throw ConfigError("configuration key '" + section + "' must live in a section");
    for (const auto& [name, value] : entries) set_option(config, section + "." + name, value.data());
  }
}

void load_config(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  parse_config(config, buffer.str());
}

void validate(const RunConfig& config) {
  const MatchConfig& m = config.match.config;
  if (!(m.k_init < m.k_max)) throw ConfigError("schedule.k_init must be smaller than schedule.k_max");
  const SurrogateConfig& s = config.match.surrogate;
  if (!(s.k_init < s.k_max)) throw ConfigError("mcmc.k_init must be smaller than mcmc.k_max");
  const ChannelWeights& w = m.weights;
  if (w.spectral == 0.0 && w.xyz == 0.0 && w.normal == 0.0) throw ConfigError("all embedding channel weights are zero");
}

std::string config_snapshot(const RunConfig& config) {
  std::ostringstream out;
  std::string current;
  for (const auto& o : schema()) {
    const auto dot = o.key.find('.');
    const std::string section = o.key.substr(0, dot);
    if (section != current) {
      if (!current.empty()) out << '\n';
      out << '[' << section << "]\n";
      current = section;
    }
    out << o.key.substr(dot + 1) << " = " << o.get(config) << '\n';
  }
  return out.str();
}

void write_config_snapshot(const std::filesystem::path& path, const RunConfig& config) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << config_snapshot(config);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& o : schema()) keys.push_back(o.key);
  return keys;
}

}  // namespace shells
