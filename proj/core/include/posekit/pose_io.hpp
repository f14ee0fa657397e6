#pragma once

#include <string>

#include "posekit/camera.hpp"

namespace posekit {

/// Parse one RealEstate10K camera line:
///   timestamp fx fy cx cy k1 k2 r00 r01 r02 t0 r10 r11 r12 t1 r20 r21 r22 t2
/// 19 whitespace-separated fields; k1/k2 (radial distortion) are parsed and
/// discarded (pinhole model throughout). The rotation is validated at 1e-4
/// (file precision); no re-orthonormalization is attempted.
PoseFrame parse_line(const std::string& line);

/// Parse a whole camera file: first line is an opaque video URL (preserved),
/// every following non-blank line is a pose line. Timestamps must be
/// strictly increasing.
PoseSequence parse_sequence(const std::string& text);

/// Serialize with '\n' line endings and numbers at 9 significant digits, so
/// parse(serialize(s)) == s and serialize is idempotent on its own output.
std::string serialize_sequence(const PoseSequence& seq);

/// Format one double the way serialize_sequence does (9 significant digits,
/// locale-independent).
std::string format_number(double v);

}  // namespace posekit
