#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "adcp/image.hpp"
#include "adcp/oracle.hpp"

namespace adcp {

/// How to reach an out-of-process detector.
struct OracleSpec {
  enum class Transport { Command, Tcp };

  Transport transport = Transport::Command;
  std::string command;  // run through /bin/sh -c, speaks on stdin/stdout
  std::string host = "127.0.0.1";
  int port = 0;
  std::chrono::milliseconds timeout{30000};
  int label_space = 0;  // not part of the protocol; 0 = unknown
};

/// The detector answered with an error frame.
class RemoteOracleError : public OracleError {
 public:
  using OracleError::OracleError;
};

/// Client side of the newline-delimited JSON detector protocol.
///
///   request:  {"id": u64, "image_png_b64": string}
///   response: {"id": u64, "detections": [{"box": [x0,y0,x1,y1],
///              "objectness": f, "class_id": i}]}
///   error:    {"id": u64, "error": string}
///
/// One request is in flight at a time and ids increase from 1. A malformed
/// frame, an id mismatch, a timeout or a closed stream marks the connection
/// dead; every later call fails immediately. Error frames are reported as
/// RemoteOracleError and leave the connection usable.
class ExternalOracle final : public DetectorOracle {
 public:
  class Channel;

  explicit ExternalOracle(const OracleSpec& spec);
  ~ExternalOracle() override;

  ExternalOracle(const ExternalOracle&) = delete;
  ExternalOracle& operator=(const ExternalOracle&) = delete;

  std::vector<Detection> detect(const Image& image) override;
  int label_space() const override { return spec_.label_space; }

  bool alive() const { return dead_reason_.empty(); }
  const std::string& dead_reason() const { return dead_reason_; }

 private:
  OracleSpec spec_;
  std::unique_ptr<Channel> channel_;
  std::uint64_t next_id_ = 1;
  std::string dead_reason_;
};

/// Spawns or connects; throws OracleError when that fails.
std::unique_ptr<ExternalOracle> external_oracle_connect(const OracleSpec& spec);

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws std::invalid_argument on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// One request frame, without the trailing newline.
std::string encode_request(std::uint64_t id, const Image& image);

/// Validates one response frame against `expected_id`. Throws ProtocolError
/// (naming the offending field where there is one) for schema violations and
/// RemoteOracleError for well-formed error frames.
std::vector<Detection> parse_response(std::string_view frame, std::uint64_t expected_id);

nlohmann::json detections_to_json(std::span<const Detection> detections);

}  // namespace adcp
