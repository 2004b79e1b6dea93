#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pulsepipe {

enum class ErrorKind {
    EmptyStream,
    DataLost,
    ZeroEnergy,
    NoPeriodicity,
    ModelFailure,
    LengthMismatch,
    NoGoodWindows,
    ScorerFailure,
    NoLcdFound,
    UndecodablePattern,
    RowSplitFailure,
    OutOfRangeValue,
    OutOfRange,
    SessionStopped,
    UnsupportedFormat,
    CorruptHeader,
    TruncatedData,
    NoOverlap,
    FieldMissing,
    SchemaMismatch,
    PortInUse,
    InvalidArgument,
    Io,
};

/// Stable snake_case name of an error kind, used in reports and log rows.
std::string_view error_kind_name(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace pulsepipe
