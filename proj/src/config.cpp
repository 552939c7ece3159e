#include "adcp/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <tomlplusplus/toml.hpp>

namespace adcp {
namespace {

using json = nlohmann::json;

struct KindName {
  OracleConfig::Kind kind;
  const char* name;
};

constexpr KindName kKinds[] = {
    {OracleConfig::Kind::MockCoverage, "mock_coverage"},
    {OracleConfig::Kind::AlwaysFooled, "always_fooled"},
    {OracleConfig::Kind::Constant, "constant"},
    {OracleConfig::Kind::Command, "command"},
    {OracleConfig::Kind::Tcp, "tcp"},
};

template <class T>
void read_field(const json& j, const char* table, const char* key, T& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  bool ok = false;
  if constexpr (std::is_same_v<T, bool>) {
    ok = v.is_boolean();
  } else if constexpr (std::is_integral_v<T>) {
    ok = v.is_number_integer();
  } else if constexpr (std::is_floating_point_v<T>) {
    ok = v.is_number();
  } else {
    ok = v.is_string();
  }
  if (!ok) throw ConfigError(std::string(table) + ": '" + key + "' has the wrong type");
  out = v.get<T>();
}

Box box_from(const json& v, const char* where) {
  if (!v.is_array() || v.size() != 4 ||
      !std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); })) {
    throw ConfigError(std::string(where) + " must be [x0, y0, x1, y1]");
  }
  Box b{v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
  if (!b.valid()) throw ConfigError(std::string(where) + " is empty or inverted");
  return b;
}

// Library errors from module-level parsers become configuration errors.
template <class Fn>
auto as_config_error(Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

OracleSpec OracleConfig::spec() const {
  OracleSpec s;
  s.transport = kind == Kind::Tcp ? OracleSpec::Transport::Tcp : OracleSpec::Transport::Command;
  s.command = command;
  s.host = host;
  s.port = port;
  s.timeout = std::chrono::milliseconds(timeout_ms);
  s.label_space = num_classes;
  return s;
}

std::string kind_name(OracleConfig::Kind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.name;
  }
  return "unknown";
}

json to_json(const OracleConfig& cfg) {
  json j{{"kind", kind_name(cfg.kind)}};
  switch (cfg.kind) {
    case OracleConfig::Kind::MockCoverage:
      j["threshold"] = cfg.threshold;
      j["target"] = {cfg.target.x0, cfg.target.y0, cfg.target.x1, cfg.target.y1};
      j["class_id"] = cfg.class_id;
      break;
    case OracleConfig::Kind::AlwaysFooled:
      j["num_classes"] = cfg.num_classes;
      break;
    case OracleConfig::Kind::Constant:
      j["objectness"] = cfg.objectness;
      j["class_id"] = cfg.class_id;
      j["num_classes"] = cfg.num_classes;
      if (cfg.box) j["box"] = {cfg.box->x_min, cfg.box->y_min, cfg.box->x_max, cfg.box->y_max};
      break;
    case OracleConfig::Kind::Command:
      j["command"] = cfg.command;
      j["timeout_ms"] = cfg.timeout_ms;
      j["num_classes"] = cfg.num_classes;
      break;
    case OracleConfig::Kind::Tcp:
      j["host"] = cfg.host;
      j["port"] = cfg.port;
      j["timeout_ms"] = cfg.timeout_ms;
      j["num_classes"] = cfg.num_classes;
      break;
  }
  return j;
}

OracleConfig oracle_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("oracle: expected a table");
  static const char* const kKnown[] = {"kind",    "threshold", "target", "class_id",
                                       "objectness", "box",    "command", "host",
                                       "port",    "timeout_ms", "num_classes"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
      throw ConfigError("oracle: unknown key '" + key + "'");
    }
  }
  OracleConfig cfg;
  std::string kind;
  read_field(j, "oracle", "kind", kind);
  if (kind.empty()) throw ConfigError("oracle: 'kind' is required");
  const auto* it = std::find_if(std::begin(kKinds), std::end(kKinds),
                                [&](const KindName& k) { return kind == k.name; });
  if (it == std::end(kKinds)) throw ConfigError("oracle: unknown kind '" + kind + "'");
  cfg.kind = it->kind;

  read_field(j, "oracle", "threshold", cfg.threshold);
  read_field(j, "oracle", "class_id", cfg.class_id);
  read_field(j, "oracle", "objectness", cfg.objectness);
  read_field(j, "oracle", "command", cfg.command);
  read_field(j, "oracle", "host", cfg.host);
  read_field(j, "oracle", "port", cfg.port);
  read_field(j, "oracle", "timeout_ms", cfg.timeout_ms);
  read_field(j, "oracle", "num_classes", cfg.num_classes);
  if (j.contains("target")) {
    const Box b = box_from(j.at("target"), "oracle: 'target'");
    cfg.target = {static_cast<int>(b.x_min), static_cast<int>(b.y_min), static_cast<int>(b.x_max),
                  static_cast<int>(b.y_max)};
  }
  if (j.contains("box")) cfg.box = box_from(j.at("box"), "oracle: 'box'");

  if (cfg.kind == OracleConfig::Kind::MockCoverage && !(cfg.threshold > 0.0 && cfg.threshold < 1.0)) {
    throw ConfigError("oracle: threshold must lie in (0, 1)");
  }
  if (cfg.objectness < 0.0 || cfg.objectness > 1.0) throw ConfigError("oracle: objectness must lie in [0, 1]");
  if (cfg.kind == OracleConfig::Kind::Command && cfg.command.empty()) {
    throw ConfigError("oracle: 'command' is required");
  }
  if (cfg.kind == OracleConfig::Kind::Tcp && (cfg.port <= 0 || cfg.port > 65535)) {
    throw ConfigError("oracle: 'port' must be in 1..65535");
  }
  if (cfg.timeout_ms <= 0) throw ConfigError("oracle: 'timeout_ms' must be positive");
  if (cfg.num_classes < 0) throw ConfigError("oracle: 'num_classes' must be non-negative");
  return cfg;
}

OracleConfig oracle_from_override(const std::string& text, const OracleConfig& base) {
  if (!text.empty() && text.front() == '{') {
    const json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError("ADCP_ORACLE: not valid JSON");
    return oracle_from_json(j);
  }
  OracleConfig cfg;
  cfg.timeout_ms = base.timeout_ms;
  cfg.num_classes = base.num_classes;
  if (text.rfind("cmd:", 0) == 0) {
    cfg.kind = OracleConfig::Kind::Command;
    cfg.command = text.substr(4);
    if (cfg.command.empty()) throw ConfigError("ADCP_ORACLE: empty command");
    return cfg;
  }
  if (text.rfind("tcp:", 0) == 0) {
    const auto rest = text.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0) throw ConfigError("ADCP_ORACLE: expected tcp:<host>:<port>");
    cfg.kind = OracleConfig::Kind::Tcp;
    cfg.host = rest.substr(0, colon);
    try {
      std::size_t used = 0;
      cfg.port = std::stoi(rest.substr(colon + 1), &used);
      if (used != rest.size() - colon - 1) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ConfigError("ADCP_ORACLE: bad port in '" + text + "'");
    }
    if (cfg.port <= 0 || cfg.port > 65535) throw ConfigError("ADCP_ORACLE: port out of range");
    return cfg;
  }
  throw ConfigError("ADCP_ORACLE: expected cmd:<command>, tcp:<host>:<port> or a JSON table");
}

void RunConfig::validate() const {
  if (pool < 1) throw ConfigError("config: 'pool' must be at least 1");
  as_config_error([&] {
    eot.validate();
    swarm.validate();
    if (!swarm.bounds.valid()) throw std::invalid_argument("bounds: every lower bound must not exceed its upper bound");
    return 0;
  });
}

json to_json(const RunConfig& cfg, bool with_output_dir) {
  json swarm = to_json(static_cast<const SwarmOptions&>(cfg.swarm));
  swarm.erase("seed");
  json j{{"seed", cfg.seed},
         {"pool", cfg.pool},
         {"oracle", to_json(cfg.oracle)},
         {"swarm", swarm},
         {"eot", to_json(cfg.eot)},
         {"bounds", to_json(cfg.swarm.bounds)}};
  if (with_output_dir) j["output_dir"] = cfg.output_dir.generic_string();
  return j;
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a table at the top level");
  static const char* const kKnown[] = {"seed", "pool", "output_dir", "oracle", "swarm", "eot", "bounds"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  RunConfig cfg;
  if (!j.contains("oracle")) throw ConfigError("config: an [oracle] table is required");
  cfg.oracle = oracle_from_json(j.at("oracle"));

  return as_config_error([&] {
    if (j.contains("swarm")) {
      static_cast<SwarmOptions&>(cfg.swarm) = swarm_options_from_json(j.at("swarm"));
    }
    if (j.contains("eot")) cfg.eot = eot_from_json(j.at("eot"));
    if (j.contains("bounds")) cfg.swarm.bounds = bounds_from_json(j.at("bounds"));

    cfg.seed = cfg.swarm.seed;
    if (j.contains("seed")) {
      const auto& s = j.at("seed");
      if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<std::int64_t>() < 0)) {
        throw ConfigError("config: 'seed' must be a non-negative integer");
      }
      cfg.seed = s.get<std::uint64_t>();
    }
    cfg.swarm.seed = cfg.seed;
    read_field(j, "config", "pool", cfg.pool);
    std::string out;
    read_field(j, "config", "output_dir", out);
    if (!out.empty()) cfg.output_dir = out;
    cfg.validate();
    return cfg;
  });
}

json parse_toml(const std::string& text) {
  toml::table table;
  try {
    table = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config: TOML error at line " << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
  std::ostringstream out;
  out << toml::json_formatter{table};
  return json::parse(out.str());
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  if (path.extension() == ".toml") {
    j = parse_toml(buf.str());
  } else {
    j = json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) throw ConfigError("config: '" + path.string() + "' is not valid JSON");
  }
  return run_config_from_json(j);
}

std::shared_ptr<DetectorOracle> make_oracle(const OracleConfig& cfg) {
  switch (cfg.kind) {
    case OracleConfig::Kind::MockCoverage:
      return mock_coverage_detector(cfg.threshold, cfg.target, cfg.class_id);
    case OracleConfig::Kind::AlwaysFooled:
      return std::make_shared<FixedDetector>(std::vector<Detection>{}, cfg.num_classes);
    case OracleConfig::Kind::Constant: {
      const auto box = cfg.box;
      const double objectness = cfg.objectness;
      const int class_id = cfg.class_id;
      return std::make_shared<FunctionDetector>(
          [box, objectness, class_id](const Image& image) {
            const Box b = box.value_or(Box{0.0, 0.0, double(image.width()), double(image.height())});
            return std::vector<Detection>{{b, objectness, class_id}};
          },
          cfg.num_classes);
    }
    case OracleConfig::Kind::Command:
    case OracleConfig::Kind::Tcp:
      return external_oracle_connect(cfg.spec());
  }
  throw ConfigError("oracle: unknown kind");
}

OraclePool make_oracle_pool(const OracleConfig& cfg, std::size_t size) {
  if (size == 0) throw ConfigError("pool size must be at least 1");
  if (!cfg.external()) return OraclePool::shared(make_oracle(cfg), size);
  std::vector<std::shared_ptr<DetectorOracle>> slots;
  for (std::size_t i = 0; i < size; ++i) slots.push_back(make_oracle(cfg));
  return OraclePool(std::move(slots));
}

}  // namespace adcp
