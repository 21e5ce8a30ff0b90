#pragma once

#include <stdexcept>
#include <string>

namespace randers {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Field I/O
struct BadMagic : Error {
    explicit BadMagic(const std::string& msg) : Error(msg) {}
};
struct TruncatedFile : Error {
    explicit TruncatedFile(const std::string& msg) : Error(msg) {}
};
struct ZeroDimension : Error {
    explicit ZeroDimension(const std::string& msg) : Error(msg) {}
};
struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};
struct IoFailure : Error {
    explicit IoFailure(const std::string& msg) : Error(msg) {}
};

// Numerics
struct InconsistentFixedPoint : Error {
    explicit InconsistentFixedPoint(const std::string& msg) : Error(msg) {}
};
struct NonSpdInput : Error {
    explicit NonSpdInput(const std::string& msg) : Error(msg) {}
};
struct InfeasibleDrift : Error {
    explicit InfeasibleDrift(const std::string& msg) : Error(msg) {}
};
struct DivergedLoss : Error {
    explicit DivergedLoss(const std::string& msg) : Error(msg) {}
};
struct NotConverged : Error {
    explicit NotConverged(const std::string& msg) : Error(msg) {}
};
struct UnknownScenario : Error {
    explicit UnknownScenario(const std::string& msg) : Error(msg) {}
};
struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

}  // namespace randers
