#pragma once

#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

#include "teleop/teleop_session.hpp"

namespace teleop {

/// Session log: the first line is `format: 1`, then one JSON object per line,
/// one SessionEvent each. Numbers are written in shortest round-trip form so a
/// log read back reproduces the events bit for bit.
inline constexpr const char* kSessionHeader = "format: 1";

std::string encodeEvent(const SessionEvent& event);
/// Throws ParseError naming `line_no` on malformed records.
SessionEvent decodeEvent(const std::string& line, std::size_t line_no = 0);

/// Throws ParseError (with line number) or UnsupportedFormatError.
std::vector<SessionEvent> readSession(std::istream& in);
std::vector<SessionEvent> loadSession(const std::string& path);

void writeSession(std::ostream& out, const std::vector<SessionEvent>& events);
void saveSession(const std::string& path, const std::vector<SessionEvent>& events);

/// Appends events to a log file as they happen.
class SessionWriter {
 public:
  explicit SessionWriter(const std::string& path);
  void append(const SessionEvent& event);

 private:
  std::ofstream out_;
};

}  // namespace teleop
