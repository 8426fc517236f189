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

#include "impact_governor/stream.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "impact_governor/error.hpp"

namespace impact_governor::stream
{

namespace
{

double number_field(const nlohmann::json & msg, const char * key)
{
  const auto it = msg.find(key);
  if (it == msg.end() || !it->is_number()) {
    throw Error(ErrorCode::MalformedMessage, fmt::format("field '{}' missing or not a number", key));
  }
  return it->get<double>();
}

std::string json_number(double v)
{
  nlohmann::json j = v;
  return j.dump();
}

}  // namespace

MessageResult handle_message(governor::Governor & gov, std::string_view line)
{
  nlohmann::json msg;
  try {
    msg = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorCode::MalformedMessage, e.what());
  }
  if (!msg.is_object() || !msg.contains("type") || !msg.at("type").is_string()) {
    throw Error(ErrorCode::MalformedMessage, "message must be an object with a string 'type'");
  }
  const auto type = msg.at("type").get<std::string>();
  MessageResult result;
  if (type == "range") {
    const auto it = msg.find("d_m");
    double d = std::numeric_limits<double>::infinity();
    if (it == msg.end()) {
      throw Error(ErrorCode::MalformedMessage, "field 'd_m' missing");
    }
    if (!it->is_null()) {
      if (!it->is_number()) {
        throw Error(ErrorCode::MalformedMessage, "field 'd_m' must be a number or null");
      }
      d = it->get<double>();
    }
    if (d < 0.0) {
      throw Error(ErrorCode::MalformedMessage, "field 'd_m' must be >= 0");
    }
    gov.on_range(d, number_field(msg, "t_s"));
  } else if (type == "odom") {
    gov.on_odometry(
      number_field(msg, "vx"), number_field(msg, "vy"), number_field(msg, "vz"),
      number_field(msg, "t_s"));
  } else if (type == "cmd") {
    governor::VelocityCommand cmd{
      number_field(msg, "vx"), number_field(msg, "vy"), number_field(msg, "vz"),
      number_field(msg, "t_s")};
    result.reply = format_limited(gov.on_command(cmd));
  } else {
    throw Error(ErrorCode::MalformedMessage, "unknown message type '" + type + "'");
  }
  return result;
}

std::string format_limited(const governor::LimitedCommand & out)
{
  return fmt::format(
    R"({{"type":"cmd_limited","vx":{},"vy":{},"vz":{},"cap_mps":{},"source":"{}","t_s":{}}})",
    json_number(out.cmd.vx), json_number(out.cmd.vy), json_number(out.cmd.vz),
    json_number(out.cap), governor::to_string(out.source), json_number(out.cmd.t));
}

std::string format_error(std::uint64_t line_no, std::string_view message)
{
  nlohmann::ordered_json j;
  j["type"] = "error";
  j["line"] = line_no;
  j["message"] = std::string(message);
  return j.dump();
}

StreamSummary run_ndjson(governor::Governor & gov, std::istream & in, std::ostream & out)
{
  StreamSummary summary;
  std::string line;
  while (std::getline(in, line)) {
    ++summary.lines;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      const auto result = handle_message(gov, line);
      if (result.reply) {
        ++summary.commands;
        out << *result.reply << '\n';
      }
    } catch (const Error & e) {
      out << format_error(summary.lines, e.what()) << '\n';
      out.flush();
      summary.malformed = true;
      return summary;
    }
  }
  out.flush();
  return summary;
}

UdpEndpoint::UdpEndpoint(std::uint16_t port, bool any_interface)
{
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) {
    throw Error(ErrorCode::Io, std::string("socket: ") + std::strerror(errno));
  }
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(any_interface ? INADDR_ANY : INADDR_LOOPBACK);
  if (::bind(fd_, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) != 0) {
    const std::string err = std::strerror(errno);
    ::close(fd_);
    throw Error(ErrorCode::Io, "bind: " + err);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr *>(&addr), &len);
  port_ = ntohs(addr.sin_port);

  timeval tv{};
  tv.tv_usec = 100000;
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
}

UdpEndpoint::~UdpEndpoint()
{
  if (fd_ >= 0) {
    ::close(fd_);
  }
}

StreamSummary UdpEndpoint::serve(governor::Governor & gov, const std::atomic<bool> & stop)
{
  StreamSummary summary;
  std::array<char, 65536> buf{};
  while (!stop.load(std::memory_order_relaxed)) {
    sockaddr_in peer{};
    socklen_t peer_len = sizeof(peer);
    const auto n = ::recvfrom(
      fd_, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr *>(&peer), &peer_len);
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) {
        continue;
      }
      throw Error(ErrorCode::Io, std::string("recvfrom: ") + std::strerror(errno));
    }
    ++summary.lines;
    std::string reply;
    bool malformed = false;
    try {
      const auto result = handle_message(gov, std::string_view(buf.data(), static_cast<std::size_t>(n)));
      if (result.reply) {
        ++summary.commands;
        reply = *result.reply;
      }
    } catch (const Error & e) {
      reply = format_error(summary.lines, e.what());
      malformed = true;
    }
    if (!reply.empty()) {
      ::sendto(
        fd_, reply.data(), reply.size(), 0, reinterpret_cast<sockaddr *>(&peer), peer_len);
    }
    if (malformed) {
      summary.malformed = true;
      break;
    }
  }
  return summary;
}

}  // namespace impact_governor::stream
