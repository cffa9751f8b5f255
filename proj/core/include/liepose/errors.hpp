#pragma once

#include <stdexcept>
#include <string>

namespace liepose {

/// Base class for all typed errors thrown by the library.
/// kind() is a stable machine-readable identifier; the CLI maps it to an
/// exit code and a one-line JSON object on stderr.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Rotation log requested too close to the pi branch cut.
class AngleNearPi : public Error {
 public:
  explicit AngleNearPi(const std::string& message = "rotation angle too close to pi for a stable log")
      : Error("AngleNearPi", message) {}
};

/// A pose carries a nonzero value in a coordinate its joint does not permit,
/// or is otherwise structurally invalid for the model.
class DofViolation : public Error {
 public:
  explicit DofViolation(const std::string& message) : Error("DofViolation", message) {}
};

/// Rendering produced no foreground: nothing projects inside the image.
class OffScreen : public Error {
 public:
  explicit OffScreen(const std::string& message = "no part of the object projects inside the image")
      : Error("OffScreen", message) {}
};

/// A depth image holds no foreground pixels to preprocess.
class EmptyForeground : public Error {
 public:
  explicit EmptyForeground(const std::string& message = "depth image has no foreground pixels")
      : Error("EmptyForeground", message) {}
};

/// Serialized model carries an unsupported format version.
class VersionMismatch : public Error {
 public:
  explicit VersionMismatch(const std::string& message) : Error("VersionMismatch", message) {}
};

/// Serialized stream is truncated or fails validation.
class CorruptStream : public Error {
 public:
  explicit CorruptStream(const std::string& message) : Error("CorruptStream", message) {}
};

/// Two joint-position lists of different lengths were compared.
class LengthMismatch : public Error {
 public:
  explicit LengthMismatch(const std::string& message) : Error("LengthMismatch", message) {}
};

/// A sequence is too short to resample.
class TooShort : public Error {
 public:
  explicit TooShort(const std::string& message) : Error("TooShort", message) {}
};

/// A feature vector's length does not match the classifier's training layout.
class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& message) : Error("DimensionMismatch", message) {}
};

/// A required input file or directory does not exist.
class MissingInput : public Error {
 public:
  explicit MissingInput(const std::string& message) : Error("MissingInput", message) {}
};

/// A model bundle or forest file does not exist at the given path.
class ModelNotFound : public Error {
 public:
  explicit ModelNotFound(const std::string& message) : Error("ModelNotFound", message) {}
};

/// Catch-all for invalid arguments to library calls.
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message) : Error("InvalidArgument", message) {}
};

/// A file could not be written (or another OS-level I/O operation failed).
class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("IoError", message) {}
};

}  // namespace liepose
