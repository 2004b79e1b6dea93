#pragma once

#include "pulsepipe/bp.hpp"
#include "pulsepipe/dsp.hpp"
#include "pulsepipe/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pulsepipe {

inline constexpr std::string_view kSchema = "pulsepipe/1";

// ---- audio and images ------------------------------------------------------

/// RIFF/WAVE, PCM 16-bit, mono. Amplitudes are sample / 32768.
/// Throws UnsupportedFormat or CorruptHeader.
SampleStream load_wav(const std::filesystem::path& path);
SampleStream parse_wav(std::span<const std::uint8_t> bytes);
/// Writes PCM16 mono; amplitudes are scaled by 32768 and clipped.
void write_wav(const std::filesystem::path& path, const SampleStream& stream);
std::vector<std::uint8_t> encode_wav(const SampleStream& stream);

/// Binary PGM (P5) with maxval 255. Throws UnsupportedFormat or TruncatedData.
GrayImage load_pgm(const std::filesystem::path& path);
GrayImage parse_pgm(std::span<const std::uint8_t> bytes);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);

/// Rec. 601 luma of interleaved 8-bit RGB.
GrayImage luma_from_rgb(int width, int height, std::span<const std::uint8_t> rgb);

// ---- configuration ---------------------------------------------------------

/// Reads a JSON object overriding any PipelineConfig field. Unknown keys are
/// rejected with InvalidArgument.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(std::string_view json_text);
/// Canonical JSON of the effective configuration (sorted keys).
std::string config_canonical_json(const PipelineConfig& config);
/// Hex SHA-256 of config_canonical_json.
std::string config_sha256(const PipelineConfig& config);
std::string sha256_hex(std::string_view data);

// ---- session logs ----------------------------------------------------------

struct SessionHeader {
    std::string schema = std::string(kSchema);
    std::string config_sha256;
    std::string input;
};

struct SessionLog {
    SessionHeader header;
    std::vector<TickReport> rows;
    std::optional<SessionSummary> footer;
    std::vector<SessionEvent> events;
};

/// One JSONL row. Keys follow the published row schema.
std::string row_json(const TickReport& r);
std::string header_json(const SessionHeader& h);
std::string footer_json(const SessionSummary& s, std::span<const SessionEvent> events);

/// Byte-identical output for equal logs.
std::string serialize_session(const SessionLog& log);
/// Throws SchemaMismatch (with the 1-based line number) on version skew,
/// malformed lines, or out-of-order ticks.
SessionLog parse_session(std::string_view text);

void write_session(const std::filesystem::path& path, const SessionLog& log);
SessionLog read_session(const std::filesystem::path& path);

/// Streams a session log line by line as the session runs.
class SessionLogWriter {
public:
    SessionLogWriter(const std::filesystem::path& path, const SessionHeader& header);
    void write_row(const TickReport& r);
    void finish(const SessionSummary& summary, std::span<const SessionEvent> events);

private:
    std::ofstream out_;
};

// ---- parity ----------------------------------------------------------------

struct ParityReport {
    std::string field;
    std::size_t n = 0;
    double mae = 0.0;
    /// Sample SD (n - 1) of the signed errors; 0 when n == 1.
    double sd_error = 0.0;
    double max_abs_error = 0.0;
    double mean_error = 0.0;
};

/// Numeric row fields accepted by compare_runs.
std::vector<std::string> comparable_fields();

/// Errors a_i - b_i over ticks present in both logs where both define the
/// field. Throws FieldMissing for unknown fields and NoOverlap when no tick qualifies.
ParityReport compare_runs(const SessionLog& a, const SessionLog& b, std::string_view field);

std::string parity_json(const ParityReport& report);

// ---- helpers ---------------------------------------------------------------

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

} // namespace pulsepipe
