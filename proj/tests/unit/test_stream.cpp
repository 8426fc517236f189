// Copyright 2026 The impact_governor Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "impact_governor/error.hpp"
#include "impact_governor/stream.hpp"
#include "oracles.hpp"

using namespace impact_governor;

namespace
{

governor::Governor make_governor()
{
  governor::GovernorConfig cfg;
  cfg.f_star_n = 65.0;
  cfg.body_region = fit::BodyRegion::Face;
  return governor::Governor(cfg, oracle::constant_profile(0.25, 0.036, 0.382));
}

ErrorCode code_of(governor::Governor & gov, std::string_view line)
{
  try {
    stream::handle_message(gov, line);
  } catch (const Error & e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("message handling")
{
  auto gov = make_governor();
  CHECK_FALSE(stream::handle_message(gov, R"({"type":"range","d_m":3.0,"t_s":0.0})").reply);
  CHECK_FALSE(stream::handle_message(gov, R"({"type":"odom","vx":1,"vy":0,"vz":0,"t_s":0.0})").reply);
  CHECK(gov.last_odometry_speed() == 1.0);
  const auto r = stream::handle_message(gov, R"({"type":"cmd","vx":0,"vy":-8,"vz":0,"t_s":0.1})");
  REQUIRE(r.reply);
  const auto j = nlohmann::json::parse(*r.reply);
  CHECK(j["type"] == "cmd_limited");
  CHECK(j["source"] == "force");
  CHECK(j["vy"].get<double>() == doctest::Approx(-gov.v_force()));
  CHECK(j["cap_mps"].get<double>() == gov.v_force());
  CHECK(j["t_s"].get<double>() == 0.1);

  stream::handle_message(gov, R"({"type":"range","d_m":null,"t_s":0.2})");
  CHECK(gov.state().last_distance == std::numeric_limits<double>::infinity());

  CHECK(code_of(gov, "not json") == ErrorCode::MalformedMessage);
  CHECK(code_of(gov, "[1,2]") == ErrorCode::MalformedMessage);
  CHECK(code_of(gov, R"({"type":"teleport"})") == ErrorCode::MalformedMessage);
  CHECK(code_of(gov, R"({"type":"cmd","vx":"fast","vy":0,"vz":0,"t_s":0})") == ErrorCode::MalformedMessage);
  CHECK(code_of(gov, R"({"type":"range","t_s":0})") == ErrorCode::MalformedMessage);
  CHECK(code_of(gov, R"({"type":"range","d_m":-2,"t_s":0})") == ErrorCode::MalformedMessage);
}

TEST_CASE("NDJSON stream stops at the first malformed line")
{
  auto gov = make_governor();
  std::istringstream in(
    "{\"type\":\"range\",\"d_m\":20,\"t_s\":0}\n"
    "\n"
    "{\"type\":\"cmd\",\"vx\":1,\"vy\":2,\"vz\":0,\"t_s\":0.1}\n"
    "{\"type\":\"cmd\",\"vx\":1\n"
    "{\"type\":\"cmd\",\"vx\":1,\"vy\":2,\"vz\":0,\"t_s\":0.2}\n");
  std::ostringstream out;
  const auto s = stream::run_ndjson(gov, in, out);
  CHECK(s.malformed);
  CHECK(s.commands == 1);
  CHECK(s.lines == 4);
  std::istringstream lines(out.str());
  std::string first, second, third;
  std::getline(lines, first);
  std::getline(lines, second);
  CHECK_FALSE(std::getline(lines, third));
  CHECK(first == R"({"type":"cmd_limited","vx":1.0,"vy":2.0,"vz":0.0,"cap_mps":10.0,"source":"none","t_s":0.1})");
  const auto err = nlohmann::json::parse(second);
  CHECK(err["type"] == "error");
  CHECK(err["line"] == 4);
}

TEST_CASE("empty stream")
{
  auto gov = make_governor();
  std::istringstream in("");
  std::ostringstream out;
  const auto s = stream::run_ndjson(gov, in, out);
  CHECK_FALSE(s.malformed);
  CHECK(s.lines == 0);
  CHECK(out.str().empty());
}

TEST_CASE("UDP loopback round trip")
{
  auto gov = make_governor();
  stream::UdpEndpoint endpoint(0);
  REQUIRE(endpoint.port() != 0);
  std::atomic<bool> stop{false};
  stream::StreamSummary summary;
  std::thread server([&] { summary = endpoint.serve(gov, stop); });

  const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  REQUIRE(fd >= 0);
  timeval tv{};
  tv.tv_sec = 2;
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(endpoint.port());
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  auto send = [&](const std::string & msg) {
    ::sendto(fd, msg.data(), msg.size(), 0, reinterpret_cast<sockaddr *>(&addr), sizeof(addr));
  };
  send(R"({"type":"range","d_m":2.0,"t_s":0.0})");
  send(R"({"type":"cmd","vx":8,"vy":0,"vz":0,"t_s":0.05})");
  char buf[1024];
  const auto n = ::recv(fd, buf, sizeof(buf), 0);
  REQUIRE(n > 0);
  const auto j = nlohmann::json::parse(std::string(buf, static_cast<std::size_t>(n)));
  CHECK(j["source"] == "force");
  CHECK(j["vx"].get<double>() == doctest::Approx(gov.v_force()));

  send("garbage");
  const auto m = ::recv(fd, buf, sizeof(buf), 0);
  REQUIRE(m > 0);
  CHECK(nlohmann::json::parse(std::string(buf, static_cast<std::size_t>(m)))["type"] == "error");
  server.join();
  ::close(fd);
  CHECK(summary.malformed);
  CHECK(summary.commands == 1);
}
