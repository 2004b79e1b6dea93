#include "pulsepipe/error.hpp"

namespace pulsepipe {

std::string_view error_kind_name(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::EmptyStream: return "empty_stream";
    case ErrorKind::DataLost: return "data_lost";
    case ErrorKind::ZeroEnergy: return "zero_energy";
    case ErrorKind::NoPeriodicity: return "no_periodicity";
    case ErrorKind::ModelFailure: return "model_failure";
    case ErrorKind::LengthMismatch: return "length_mismatch";
    case ErrorKind::NoGoodWindows: return "no_good_windows";
    case ErrorKind::ScorerFailure: return "scorer_failure";
    case ErrorKind::NoLcdFound: return "no_lcd_found";
    case ErrorKind::UndecodablePattern: return "undecodable_pattern";
    case ErrorKind::RowSplitFailure: return "row_split_failure";
    case ErrorKind::OutOfRangeValue: return "out_of_range_value";
    case ErrorKind::OutOfRange: return "out_of_range";
    case ErrorKind::SessionStopped: return "session_stopped";
    case ErrorKind::UnsupportedFormat: return "unsupported_format";
    case ErrorKind::CorruptHeader: return "corrupt_header";
    case ErrorKind::TruncatedData: return "truncated_data";
    case ErrorKind::NoOverlap: return "no_overlap";
    case ErrorKind::FieldMissing: return "field_missing";
    case ErrorKind::SchemaMismatch: return "schema_mismatch";
    case ErrorKind::PortInUse: return "port_in_use";
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::Io: return "io";
    }
    return "unknown";
}

} // namespace pulsepipe
