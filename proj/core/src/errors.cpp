#include "jmmle/errors.hpp"

namespace jmmle {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::NonFinite: return "NonFinite";
        case ErrorKind::OverlappingGroups: return "OverlappingGroups";
        case ErrorKind::IncompleteCover: return "IncompleteCover";
        case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorKind::MaxIterExceeded: return "MaxIterExceeded";
        case ErrorKind::NotPD: return "NotPD";
        case ErrorKind::NoConverge: return "NoConverge";
        case ErrorKind::DegenerateProjection: return "DegenerateProjection";
        case ErrorKind::DegenerateVariance: return "DegenerateVariance";
        case ErrorKind::ZeroTruth: return "ZeroTruth";
        case ErrorKind::KMismatch: return "KMismatch";
        case ErrorKind::Io: return "Io";
        case ErrorKind::Config: return "Config";
    }
    return "Unknown";
}

}  // namespace jmmle
