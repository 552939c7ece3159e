#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "adcp/attack.hpp"
#include "adcp/eot.hpp"
#include "adcp/external_oracle.hpp"
#include "adcp/oracle.hpp"

namespace adcp {

/// Invalid or unreadable run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Which detector to attack. Exactly one kind is active.
///
///   mock_coverage   striped-target mock: threshold, target [x0,y0,x1,y1], class_id
///   always_fooled   reports nothing, so every query fools it
///   constant        one fixed detection per image: objectness, class_id, optional box
///                   (default: the whole image)
///   command         external detector on stdin/stdout: command, timeout_ms, num_classes
///   tcp             external detector on a socket: host, port, timeout_ms, num_classes
struct OracleConfig {
  enum class Kind { MockCoverage, AlwaysFooled, Constant, Command, Tcp };

  Kind kind = Kind::MockCoverage;
  double threshold = 0.5;
  PixelRect target{24, 24, 40, 40};
  int class_id = 0;
  double objectness = 1.0;
  std::optional<Box> box;
  std::string command;
  std::string host = "127.0.0.1";
  int port = 0;
  int timeout_ms = 30000;
  int num_classes = 0;

  bool external() const { return kind == Kind::Command || kind == Kind::Tcp; }
  OracleSpec spec() const;
};

std::string kind_name(OracleConfig::Kind kind);
nlohmann::json to_json(const OracleConfig& cfg);
OracleConfig oracle_from_json(const nlohmann::json& j);

/// Parses the ADCP_ORACLE override: "cmd:<shell command>", "tcp:<host>:<port>"
/// or an inline JSON oracle table. Timeout and class count carry over from
/// `base` for the short forms.
OracleConfig oracle_from_override(const std::string& text, const OracleConfig& base);

/// Everything a run needs. Top-level keys: seed, pool, output_dir, and the
/// tables oracle, swarm, eot and bounds.
struct RunConfig {
  OracleConfig oracle;
  SwarmConfig swarm;
  EotConfig eot;
  std::filesystem::path output_dir = "adcp_out";
  std::uint64_t seed = 0;
  int pool = 1;

  void validate() const;
};

/// Full effective configuration. `with_output_dir = false` leaves out the one
/// field that does not affect results.
nlohmann::json to_json(const RunConfig& cfg, bool with_output_dir = true);
RunConfig run_config_from_json(const nlohmann::json& j);

/// TOML table converted to the equivalent JSON document.
nlohmann::json parse_toml(const std::string& text);

/// Reads TOML (.toml) or JSON (anything else). Throws ConfigError.
RunConfig load_run_config(const std::filesystem::path& path);

/// Builds a fresh oracle. External kinds spawn or connect here and throw
/// OracleError on failure.
std::shared_ptr<DetectorOracle> make_oracle(const OracleConfig& cfg);

/// `size` slots: one connection each for external oracles, a single shared
/// instance for in-process ones.
OraclePool make_oracle_pool(const OracleConfig& cfg, std::size_t size);

}  // namespace adcp
