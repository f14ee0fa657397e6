#pragma once

#include <stdexcept>
#include <string>

namespace posekit {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define POSEKIT_DEFINE_ERROR(Name, Base)                       \
  class Name : public Base {                                   \
  public:                                                      \
    explicit Name(const std::string& what) : Base(what) {}     \
  }

// pose_io
POSEKIT_DEFINE_ERROR(ParseError, Error);
POSEKIT_DEFINE_ERROR(FieldCountError, ParseError);
POSEKIT_DEFINE_ERROR(NumericError, ParseError);
POSEKIT_DEFINE_ERROR(NonOrthonormalRotation, ParseError);
POSEKIT_DEFINE_ERROR(EmptySequence, ParseError);
POSEKIT_DEFINE_ERROR(NonMonotonicTimestamps, ParseError);

// plucker
POSEKIT_DEFINE_ERROR(DegenerateIntrinsics, Error);
POSEKIT_DEFINE_ERROR(ZeroStride, Error);
POSEKIT_DEFINE_ERROR(StrideExceedsImage, Error);
POSEKIT_DEFINE_ERROR(SequenceTooShort, Error);

// motion_render
POSEKIT_DEFINE_ERROR(FrameOutOfRange, Error);
POSEKIT_DEFINE_ERROR(IoError, Error);

// tensor_core
POSEKIT_DEFINE_ERROR(ShapeMismatch, Error);
POSEKIT_DEFINE_ERROR(NonFiniteValue, Error);

// pose_vae
POSEKIT_DEFINE_ERROR(NonFiniteLoss, Error);

// tai
POSEKIT_DEFINE_ERROR(FrameCountMismatch, Error);
POSEKIT_DEFINE_ERROR(StepOutOfRange, Error);

// metrics
POSEKIT_DEFINE_ERROR(LengthMismatch, Error);
POSEKIT_DEFINE_ERROR(GridMismatch, Error);

// checkpoint
POSEKIT_DEFINE_ERROR(CheckpointError, Error);

#undef POSEKIT_DEFINE_ERROR

}  // namespace posekit
