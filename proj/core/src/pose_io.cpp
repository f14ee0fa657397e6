#include "posekit/pose_io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <string_view>
#include <system_error>
#include <vector>

#include "posekit/errors.hpp"

namespace posekit {

namespace {

constexpr double kParseRotationTol = 1e-4;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

double parse_double(std::string_view token) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw NumericError("unparsable numeric token '" + std::string(token) + "'");
  }
  return v;
}

std::int64_t parse_timestamp(std::string_view token) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw NumericError("unparsable timestamp '" + std::string(token) + "'");
  }
  if (v < 0) throw NumericError("negative timestamp '" + std::string(token) + "'");
  return v;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

bool blank(std::string_view line) {
  return line.find_first_not_of(" \t") == std::string_view::npos;
}

}  // namespace

PoseFrame parse_line(const std::string& line) {
  const auto fields = split_fields(strip_cr(line));
  if (fields.size() != 19) {
    std::ostringstream oss;
    oss << "expected 19 fields, got " << fields.size();
    throw FieldCountError(oss.str());
  }

  PoseFrame frame;
  frame.timestamp_us = parse_timestamp(fields[0]);
  frame.intrinsics.fx = parse_double(fields[1]);
  frame.intrinsics.fy = parse_double(fields[2]);
  frame.intrinsics.cx = parse_double(fields[3]);
  frame.intrinsics.cy = parse_double(fields[4]);
  parse_double(fields[5]);  // k1, discarded
  parse_double(fields[6]);  // k2, discarded

  // fields 7..18: row-major 3x4 [R|t]
  std::array<double, 12> m;
  for (std::size_t i = 0; i < 12; ++i) m[i] = parse_double(fields[7 + i]);
  frame.pose = pose_from_motion_matrix(m);

  validate_rotation(frame.pose.rotation, kParseRotationTol);
  return frame;
}

PoseSequence parse_sequence(const std::string& text) {
  PoseSequence seq;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool have_header = false;

  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::size_t end = (nl == std::string::npos) ? text.size() : nl;
    std::string_view line = strip_cr(std::string_view(text).substr(pos, end - pos));
    ++line_no;
    pos = end + 1;

    if (!have_header) {
      if (nl == std::string::npos && blank(line)) break;  // fully empty input
      seq.url = std::string(line);
      have_header = true;
    } else if (!blank(line)) {
      PoseFrame frame;
      try {
        frame = parse_line(std::string(line));
      } catch (const ParseError& e) {
        std::ostringstream oss;
        oss << "line " << line_no << ": " << e.what();
        throw ParseError(oss.str());
      }
      if (!seq.frames.empty() && frame.timestamp_us <= seq.frames.back().timestamp_us) {
        std::ostringstream oss;
        oss << "line " << line_no << ": timestamp " << frame.timestamp_us
            << " does not increase over " << seq.frames.back().timestamp_us;
        throw NonMonotonicTimestamps(oss.str());
      }
      seq.frames.push_back(std::move(frame));
    }
    if (nl == std::string::npos) break;
  }

  if (seq.frames.empty()) throw EmptySequence("no pose lines in sequence");
  return seq;
}

std::string format_number(double v) {
  if (v == 0.0) return "0";  // collapse negative zero
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

std::string serialize_sequence(const PoseSequence& seq) {
  std::string out = seq.url;
  out.push_back('\n');
  for (const PoseFrame& f : seq.frames) {
    out += std::to_string(f.timestamp_us);
    const double head[6] = {f.intrinsics.fx, f.intrinsics.fy, f.intrinsics.cx,
                            f.intrinsics.cy, 0.0, 0.0};
    for (double v : head) {
      out.push_back(' ');
      out += format_number(v);
    }
    for (double v : to_motion_matrix(f.pose)) {
      out.push_back(' ');
      out += format_number(v);
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace posekit
