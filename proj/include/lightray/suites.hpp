#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "lightray/transforms.hpp"

namespace lightray {

using json = nlohmann::json;

// Typed view of one experiment config. Every read names its dotted path, so a
// bad value becomes a ConfigError that says which field is wrong.
class Config {
 public:
  explicit Config(json root);
  static Config load(const std::string& path);

  Config section(const std::string& key) const;  // missing section -> empty object
  bool has(const std::string& key) const;

  double number(const std::string& key, double fallback) const;
  int integer(const std::string& key, int fallback, int min = 1) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;
  std::vector<int> integers(const std::string& key, std::vector<int> fallback) const;
  std::vector<std::string> texts(const std::string& key, std::vector<std::string> fallback) const;

  // tolerances.<key> from the root; must be positive. Recorded for the report.
  double tolerance(const std::string& key, double fallback) const;
  json tolerances_used() const;

  // a registered id ("minkowski", "rotation(0.1)", ...) or
  // {kind: "stationary", base, kappa, eta}
  StationaryGeometry geometry(const std::string& key, const std::string& fallback) const;
  StationaryGeometry geometry_value(const json& value, const std::string& path) const;

  const json& raw() const { return *node_; }
  const json& root() const { return *root_; }
  std::string path(const std::string& key) const;

 private:
  Config(std::shared_ptr<const json> root, std::shared_ptr<json> tol, const json* node,
         std::string prefix);
  const json* find(const std::string& key) const;

  std::shared_ptr<const json> root_;
  std::shared_ptr<json> tol_;
  const json* node_;
  std::string prefix_;
};

struct Criterion {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  std::string op = "<=";  // "<=", ">=" or "==" (flags are 0 / 1)
  bool pass = false;
};

struct SuiteResult {
  SuiteResult() = default;
  explicit SuiteResult(std::string name) : suite(std::move(name)) {}

  std::string suite;
  std::vector<Criterion> criteria;
  json data = json::object();
  std::map<std::string, std::string> artifacts;  // file name -> contents

  void at_most(std::string name, double value, double tol);
  void at_least(std::string name, double value, double bound);
  void flag(std::string name, bool ok);
  // append another result's criteria under "prefix."
  void merge(const std::string& prefix, SuiteResult other);
  bool pass() const;
};

std::uint64_t fnv1a64(std::string_view bytes);

// report_v1: suite, seed, config hash, tolerances, criteria, data. No timings,
// so identical config and seed give identical text.
json report_json(const SuiteResult& r, const Config& cfg, std::uint64_t seed);

// Library-side test data: bump(t, x) times random affine components.
SpacetimeTensorField random_bump_field(int n, int rank, std::uint64_t seed, const Vec& centre,
                                       double radius, double t0, double t_radius);

// one suite per acceptance criterion
SuiteResult gauge_suite(const Config& cfg, std::uint64_t seed);           // 1
SuiteResult null_suite(const Config& cfg);                                // 2
SuiteResult direct_suite(const Config& cfg);                              // 3
SuiteResult fourier_slice_suite(const Config& cfg);                       // 4
SuiteResult moment_suite(const Config& cfg, std::uint64_t seed);          // 5
SuiteResult decomposition_suite(const Config& cfg);                       // 6
SuiteResult reconstruction_suite(const Config& cfg);                      // 7
SuiteResult conformal_suite(const Config& cfg, std::uint64_t seed);       // 8
SuiteResult foliation_suite(const Config& cfg, std::uint64_t seed);       // 9
SuiteResult sinogram_suite(const Config& cfg);
SuiteResult theorem2_gauge_suite(const Config& cfg, std::uint64_t seed);

// CLI subcommands; each reads its sections of the config
std::vector<std::string> subcommands();
SuiteResult run_subcommand(const std::string& name, const Config& cfg, std::uint64_t seed);

}  // namespace lightray
