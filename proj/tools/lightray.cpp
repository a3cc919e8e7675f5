// lightray <subcommand> --config <path> [--out <dir>] [--seed <u64>]
// exit 0: all criteria pass, 1: a criterion failed, 2: bad configuration.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "lightray/errors.hpp"
#include "lightray/suites.hpp"

namespace fs = std::filesystem;
using namespace lightray;

namespace {

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError("out: cannot write '" + p.string() + "'");
  os << body;
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"light ray transform experiments"};
  app.require_subcommand(1);
  std::string config, out = ".";
  std::optional<std::uint64_t> seed;
  for (const std::string& name : subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "experiment config (JSON)")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "seed for randomized suites (overrides the config)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string name = app.get_subcommands().front()->get_name();

  try {
    const Config cfg = Config::load(config);
    std::uint64_t s = 1;
    if (seed) {
      s = *seed;
    } else if (cfg.has("seed")) {
      if (!cfg.raw()["seed"].is_number_unsigned()) throw ConfigError("seed: expected a non-negative integer");
      s = cfg.raw()["seed"].get<std::uint64_t>();
    }
    const SuiteResult r = run_subcommand(name, cfg, s);
    const fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("out: cannot create '" + out + "': " + ec.message());
    const json report = report_json(r, cfg, s);
    write_file(dir / (name + ".report.json"), report.dump(2) + "\n");
    for (const auto& [file, body] : r.artifacts) write_file(dir / file, body);

    for (const Criterion& c : r.criteria)
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " = " << c.value << " (" << c.op << " "
                << c.tolerance << ")\n";
    std::cout << name << ": " << (r.pass() ? "pass" : "FAIL") << ", report " << (dir / (name + ".report.json")).string()
              << "\n";
    return r.pass() ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << one_line(e.what()) << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "invalid input: " << one_line(e.what()) << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << one_line(e.what()) << "\n";
    return 1;
  }
}
