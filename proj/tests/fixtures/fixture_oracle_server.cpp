// Scripted detector speaking the line protocol on stdin/stdout.
//
//   fixture_oracle_server <mode> [arg]
//
//   echo        one detection spanning the decoded image: objectness 0.75, class 3
//   empty       no detections
//   mock        striped-target mock detector, target 24,24,40,40
//   invalid     replies with a line that is not JSON
//   omit_id     valid detections but no "id"
//   wrong_id    answers with id + 1
//   bad_box     a detection with an inverted box
//   error       an error frame for every request
//   sleep       reads requests and never answers
//   exit_after  answers arg requests (default 1), then exits

#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "adcp/external_oracle.hpp"
#include "adcp/image.hpp"
#include "adcp/oracle.hpp"

using json = nlohmann::json;

namespace {

void reply(const json& frame) { std::cout << frame.dump() << std::endl; }

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "echo";
  const int limit = argc > 2 ? std::stoi(argv[2]) : 1;
  adcp::MockCoverageDetector mock(0.5, adcp::PixelRect{24, 24, 40, 40});

  std::string line;
  int served = 0;
  while (std::getline(std::cin, line)) {
    const json request = json::parse(line, nullptr, false);
    if (request.is_discarded()) return 1;
    const auto id = request.at("id").get<std::uint64_t>();
    const auto png = adcp::base64_decode(request.at("image_png_b64").get<std::string>());
    const adcp::Image image = adcp::decode_png(png);

    if (mode == "echo") {
      reply({{"id", id},
             {"detections", {{{"box", {1, 2, image.width(), image.height()}}, {"objectness", 0.75}, {"class_id", 3}}}}});
    } else if (mode == "empty") {
      reply({{"id", id}, {"detections", json::array()}});
    } else if (mode == "mock") {
      const auto dets = mock.detect(image);
      reply({{"id", id}, {"detections", adcp::detections_to_json(dets)}});
    } else if (mode == "invalid") {
      std::cout << "this is not json" << std::endl;
    } else if (mode == "omit_id") {
      reply({{"detections", json::array()}});
    } else if (mode == "wrong_id") {
      reply({{"id", id + 1}, {"detections", json::array()}});
    } else if (mode == "bad_box") {
      reply({{"id", id}, {"detections", {{{"box", {10, 10, 5, 20}}, {"objectness", 0.5}, {"class_id", 0}}}}});
    } else if (mode == "error") {
      reply({{"id", id}, {"error", "model not loaded"}});
    } else if (mode == "sleep") {
      std::this_thread::sleep_for(std::chrono::hours(1));
    } else if (mode == "exit_after") {
      if (served >= limit) return 0;
      reply({{"id", id}, {"detections", json::array()}});
    } else {
      std::cerr << "unknown mode " << mode << '\n';
      return 2;
    }
    ++served;
  }
  return 0;
}
