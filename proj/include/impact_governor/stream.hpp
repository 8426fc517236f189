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

#ifndef IMPACT_GOVERNOR__STREAM_HPP_
#define IMPACT_GOVERNOR__STREAM_HPP_

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "impact_governor/governor.hpp"

namespace impact_governor::stream
{

/// Result of feeding one newline-delimited JSON message to the governor.
struct MessageResult
{
  /// Line to emit (a cmd_limited reply), if any.
  std::optional<std::string> reply;
};

/// Handles one `range`, `odom` or `cmd` message. Throws MalformedMessage.
MessageResult handle_message(governor::Governor & gov, std::string_view line);

std::string format_limited(const governor::LimitedCommand & out);
std::string format_error(std::uint64_t line_no, std::string_view message);

struct StreamSummary
{
  std::uint64_t lines = 0;
  std::uint64_t commands = 0;
  bool malformed = false;
};

/// Reads messages from `in` until EOF; each `cmd` yields one line on `out`.
/// Stops at the first malformed message after writing an error line.
StreamSummary run_ndjson(governor::Governor & gov, std::istream & in, std::ostream & out);

/// UDP transport carrying the same payloads, one message per datagram.
/// Replies go back to the sender's address.
class UdpEndpoint
{
public:
  /// Binds to 127.0.0.1 unless `any_interface`; port 0 picks a free port.
  explicit UdpEndpoint(std::uint16_t port, bool any_interface = false);
  ~UdpEndpoint();
  UdpEndpoint(const UdpEndpoint &) = delete;
  UdpEndpoint & operator=(const UdpEndpoint &) = delete;

  std::uint16_t port() const { return port_; }

  /// Serves until `stop` is set or a malformed datagram arrives.
  StreamSummary serve(governor::Governor & gov, const std::atomic<bool> & stop);

private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace impact_governor::stream

#endif  // IMPACT_GOVERNOR__STREAM_HPP_
