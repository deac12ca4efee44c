#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "cinf/error.hpp"
#include "cinf/hawkes.hpp"
#include "cinf/network.hpp"

namespace cinf {

/// Shortest decimal text that parses back to the same double (>= 17
/// significant digits when needed).
inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc{}) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
  }
  return std::string(buf, ptr);
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  std::string tmp(s);
  char* end = nullptr;
  out = std::strtod(tmp.c_str(), &end);
  return end == tmp.c_str() + tmp.size() && std::isfinite(out);
}

/// CSV "time,source" with a trailing "# horizon=<T> seed=<s>" line.
inline void write_cascade(std::ostream& out, const Cascade& c) {
  out << "time,source\n";
  for (const auto& e : c.events) out << format_double(e.time) << ',' << e.source << '\n';
  out << "# horizon=" << format_double(c.horizon) << " seed=" << c.seed << '\n';
}

inline void write_cascade(const std::string& path, const Cascade& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write cascade file '" + path + "'");
  write_cascade(out, c);
}

/// Reads the cascade CSV. The header and the metadata line are optional, so
/// plain "time,source" exports load as-is; without metadata the horizon is
/// the last event time.
inline Cascade read_cascade(std::istream& in) {
  Cascade c;
  bool have_horizon = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      std::istringstream hs(t.substr(1));
      std::string kv;
      while (hs >> kv) {
        if (kv.rfind("horizon=", 0) == 0) {
          if (!parse_double(kv.substr(8), c.horizon))
            throw DataError("cascade line " + std::to_string(lineno) + ": bad horizon");
          have_horizon = true;
        } else if (kv.rfind("seed=", 0) == 0) {
          const auto v = kv.substr(5);
          if (std::from_chars(v.data(), v.data() + v.size(), c.seed).ptr != v.data() + v.size())
            throw DataError("cascade line " + std::to_string(lineno) + ": bad seed");
        }
      }
      continue;
    }
    if (t == "time,source") continue;
    const auto comma = t.find(',');
    double time = 0.0;
    NodeId src = 0;
    if (comma == std::string::npos || !parse_double(detail::trim(t.substr(0, comma)), time) ||
        !detail::parse_node_id(detail::trim(t.substr(comma + 1)), src))
      throw DataError("cascade line " + std::to_string(lineno) + ": malformed '" + t + "'");
    if (time < 0.0) throw DataError("cascade line " + std::to_string(lineno) + ": negative time");
    if (!c.events.empty() && time < c.events.back().time) throw DataError("cascade not time-ordered");
    c.events.push_back({time, src});
  }
  if (!have_horizon) c.horizon = c.events.empty() ? 0.0 : c.events.back().time;
  if (!c.events.empty() && c.events.back().time > c.horizon) throw DataError("cascade: event after horizon");
  return c;
}

inline Cascade read_cascade(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open cascade file '" + path + "'");
  return read_cascade(in);
}

}  // namespace cinf
