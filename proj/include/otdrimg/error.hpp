#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace otdrimg {

enum class Errc {
  InvalidSeries,
  InvalidDownsample,
  InvalidSignalSpec,
  InvalidConfig,
  EncodingRange,
  GridShape,
  ChannelShape,
  UnsupportedResize,
  Io,
  UnsupportedMatFormat,
  CorruptMatFile,
  UnsupportedMatV73,
  ShapeMismatch,
  CsvShape,
  Stratification,
  LabelRange,
  PredictionFormat,
};

[[nodiscard]] constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidSeries: return "InvalidSeries";
    case Errc::InvalidDownsample: return "InvalidDownsample";
    case Errc::InvalidSignalSpec: return "InvalidSignalSpec";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::EncodingRange: return "EncodingRangeError";
    case Errc::GridShape: return "GridShapeError";
    case Errc::ChannelShape: return "ChannelShapeError";
    case Errc::UnsupportedResize: return "UnsupportedResize";
    case Errc::Io: return "IoError";
    case Errc::UnsupportedMatFormat: return "UnsupportedMatFormat";
    case Errc::CorruptMatFile: return "CorruptMatFile";
    case Errc::UnsupportedMatV73: return "UnsupportedMatV73";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::CsvShape: return "CsvShapeError";
    case Errc::Stratification: return "StratificationError";
    case Errc::LabelRange: return "LabelRangeError";
    case Errc::PredictionFormat: return "PredictionFormatError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the Errc codes so callers
/// can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }
  /// The message without the code prefix, for re-wrapping with more context.
  [[nodiscard]] const std::string& message() const noexcept { return message_; }

 private:
  Errc code_;
  std::string message_;
};

}  // namespace otdrimg
