#pragma once

#include <stdexcept>
#include <string>

namespace fedbcd {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct DegenerateInput : Error { using Error::Error; };
struct DimensionTooSmall : Error { using Error::Error; };
struct LabelError : Error { using Error::Error; };
struct EmptyBatch : Error { using Error::Error; };
struct ProtocolError : Error { using Error::Error; };
struct Unsupported : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct MetricUndefined : Error { using Error::Error; };
struct DegenerateInit : Error { using Error::Error; };

}  // namespace fedbcd
