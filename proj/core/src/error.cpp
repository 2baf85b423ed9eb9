#include "cdcnn/error.hpp"

namespace cdcnn {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::usage: return "usage";
    case ErrorKind::data: return "data";
    case ErrorKind::shape: return "shape";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::checkpoint: return "checkpoint";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace cdcnn
