#include "pulsepipe/session_io.hpp"

#include "pulsepipe/error.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>

namespace pulsepipe {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// ---- files -----------------------------------------------------------------

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// ---- WAV -------------------------------------------------------------------

namespace {

std::uint32_t le32(std::span<const std::uint8_t> b, std::size_t at) {
    return b[at] | (b[at + 1] << 8) | (b[at + 2] << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}
std::uint16_t le16(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}
void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}
bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
    return std::memcmp(b.data() + at, tag, 4) == 0;
}

} // namespace

SampleStream parse_wav(std::span<const std::uint8_t> b) {
    if (b.size() < 12 || !tag_is(b, 0, "RIFF") || !tag_is(b, 8, "WAVE")) {
        throw Error(ErrorKind::CorruptHeader, "not a RIFF/WAVE file");
    }
    std::optional<std::uint32_t> rate;
    std::size_t pos = 12;
    while (pos + 8 <= b.size()) {
        const std::uint32_t size = le32(b, pos + 4);
        const std::size_t body = pos + 8;
        if (tag_is(b, pos, "fmt ")) {
            if (size < 16 || body + 16 > b.size()) throw Error(ErrorKind::CorruptHeader, "short fmt chunk");
            const std::uint16_t format = le16(b, body);
            const std::uint16_t channels = le16(b, body + 2);
            const std::uint16_t bits = le16(b, body + 14);
            if (format != 1) throw Error(ErrorKind::UnsupportedFormat, "only PCM WAV is supported (format " + std::to_string(format) + ")");
            if (channels != 1) throw Error(ErrorKind::UnsupportedFormat, "only mono WAV is supported (" + std::to_string(channels) + " channels)");
            if (bits != 16) throw Error(ErrorKind::UnsupportedFormat, "only 16-bit WAV is supported (" + std::to_string(bits) + " bits)");
            rate = le32(b, body + 4);
            if (*rate == 0) throw Error(ErrorKind::CorruptHeader, "zero sample rate");
        } else if (tag_is(b, pos, "data")) {
            if (!rate) throw Error(ErrorKind::CorruptHeader, "data chunk before fmt chunk");
            if (body + size > b.size()) throw Error(ErrorKind::CorruptHeader, "data chunk runs past end of file");
            SampleStream s;
            s.rate_hz = static_cast<int>(*rate);
            s.samples.resize(size / 2);
            for (std::size_t i = 0; i < s.samples.size(); ++i) {
                s.samples[i] = static_cast<std::int16_t>(le16(b, body + 2 * i)) / 32768.0;
            }
            return s;
        }
        pos = body + size + (size & 1u);
    }
    throw Error(ErrorKind::CorruptHeader, "no data chunk");
}

SampleStream load_wav(const std::filesystem::path& path) {
    return parse_wav(read_file_bytes(path));
}

std::vector<std::uint8_t> encode_wav(const SampleStream& s) {
    const auto data_bytes = static_cast<std::uint32_t>(s.samples.size() * 2);
    std::vector<std::uint8_t> out;
    out.reserve(44 + data_bytes);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put32(out, 36 + data_bytes);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put32(out, 16);
    put16(out, 1);
    put16(out, 1);
    put32(out, static_cast<std::uint32_t>(s.rate_hz));
    put32(out, static_cast<std::uint32_t>(s.rate_hz) * 2);
    put16(out, 2);
    put16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put32(out, data_bytes);
    for (double v : s.samples) {
        const long q = std::clamp(std::lround(v * 32768.0), -32768L, 32767L);
        put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
    return out;
}

void write_wav(const std::filesystem::path& path, const SampleStream& stream) {
    write_file_bytes(path, encode_wav(stream));
}

// ---- PGM -------------------------------------------------------------------

GrayImage parse_pgm(std::span<const std::uint8_t> b) {
    if (b.size() < 2 || b[0] != 'P' || b[1] != '5') throw Error(ErrorKind::UnsupportedFormat, "not a binary PGM (P5)");
    std::size_t pos = 2;
    auto skip_space = [&] {
        while (pos < b.size()) {
            if (b[pos] == '#') {
                while (pos < b.size() && b[pos] != '\n') ++pos;
            } else if (std::isspace(b[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto number = [&] {
        skip_space();
        if (pos >= b.size() || !std::isdigit(b[pos])) throw Error(ErrorKind::TruncatedData, "PGM header ends early");
        long v = 0;
        while (pos < b.size() && std::isdigit(b[pos])) {
            v = v * 10 + (b[pos++] - '0');
            if (v > 1'000'000) throw Error(ErrorKind::UnsupportedFormat, "PGM dimension too large");
        }
        return static_cast<int>(v);
    };
    const int width = number();
    const int height = number();
    const int maxval = number();
    if (maxval != 255) throw Error(ErrorKind::UnsupportedFormat, "only maxval 255 is supported");
    if (width <= 0 || height <= 0) throw Error(ErrorKind::UnsupportedFormat, "PGM dimensions must be positive");
    if (pos >= b.size() || !std::isspace(b[pos])) throw Error(ErrorKind::TruncatedData, "PGM header ends early");
    ++pos;
    const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (b.size() - pos < need) {
        throw Error(ErrorKind::TruncatedData, "PGM holds " + std::to_string(b.size() - pos) + " of " + std::to_string(need) + " pixel bytes");
    }
    GrayImage img(width, height);
    std::copy_n(b.begin() + static_cast<std::ptrdiff_t>(pos), need, img.pixels.begin());
    return img;
}

GrayImage load_pgm(const std::filesystem::path& path) {
    return parse_pgm(read_file_bytes(path));
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
    const std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
    write_file_bytes(path, encode_pgm(img));
}

GrayImage luma_from_rgb(int width, int height, std::span<const std::uint8_t> rgb) {
    if (rgb.size() != static_cast<std::size_t>(width) * height * 3) {
        throw Error(ErrorKind::TruncatedData, "RGB buffer size does not match dimensions");
    }
    GrayImage img(width, height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const double y = 0.299 * rgb[3 * i] + 0.587 * rgb[3 * i + 1] + 0.114 * rgb[3 * i + 2];
        img.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
    }
    return img;
}

// ---- configuration ---------------------------------------------------------

namespace {

json config_to_json(const PipelineConfig& c) {
    return json{
        {"classifier", c.classifier},
        {"scorer", c.scorer},
        {"ring_capacity", c.ring_capacity},
        {"tick_budget_ms", c.tick_budget_ms},
        {"subscriber_queue_depth", c.subscriber_queue_depth},
        {"thresholds",
         {{"silent_rms", c.thresholds.silent_rms},
          {"interference_flatness", c.thresholds.interference_flatness},
          {"interference_peak_fraction", c.thresholds.interference_peak_fraction},
          {"talking_voice_rho", c.thresholds.talking_voice_rho},
          {"good_fhr_rho", c.thresholds.good_fhr_rho}}},
    };
}

template <typename T>
void take(const json& obj, const char* key, T& into) {
    if (!obj.contains(key)) return;
    try {
        into = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("config key '") + key + "': " + e.what());
    }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
            throw Error(ErrorKind::InvalidArgument, "unknown config key '" + where + key + "'");
        }
    }
}

} // namespace

PipelineConfig parse_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "config must be a JSON object");
    reject_unknown(j, {"classifier", "scorer", "ring_capacity", "tick_budget_ms", "subscriber_queue_depth", "thresholds"}, "");

    PipelineConfig c;
    take(j, "classifier", c.classifier);
    take(j, "scorer", c.scorer);
    take(j, "ring_capacity", c.ring_capacity);
    take(j, "tick_budget_ms", c.tick_budget_ms);
    take(j, "subscriber_queue_depth", c.subscriber_queue_depth);
    if (j.contains("thresholds")) {
        const json& t = j.at("thresholds");
        if (!t.is_object()) throw Error(ErrorKind::InvalidArgument, "config thresholds must be an object");
        reject_unknown(t, {"silent_rms", "interference_flatness", "interference_peak_fraction", "talking_voice_rho", "good_fhr_rho"}, "thresholds.");
        take(t, "silent_rms", c.thresholds.silent_rms);
        take(t, "interference_flatness", c.thresholds.interference_flatness);
        take(t, "interference_peak_fraction", c.thresholds.interference_peak_fraction);
        take(t, "talking_voice_rho", c.thresholds.talking_voice_rho);
        take(t, "good_fhr_rho", c.thresholds.good_fhr_rho);
    }
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string config_canonical_json(const PipelineConfig& config) {
    return config_to_json(config).dump();
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorKind::Io, "SHA-256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string config_sha256(const PipelineConfig& config) {
    return sha256_hex(config_canonical_json(config));
}

// ---- session log -----------------------------------------------------------

namespace {

ojson nullable(const std::optional<double>& v) {
    return v ? ojson(*v) : ojson(nullptr);
}

ojson summary_to_json(const SessionSummary& s, std::span<const SessionEvent> events) {
    ojson counts = ojson::object();
    for (QualityClass c : kAllClasses) counts[std::string(class_name(c))] = s.class_counts[static_cast<std::size_t>(c)];
    ojson ev = ojson::array();
    for (const auto& e : events) {
        ev.push_back(ojson{{"kind", std::string(event_kind_name(e.kind))}, {"t_s", e.t_s}, {"note", e.note}});
    }
    ojson j;
    j["ticks"] = s.ticks;
    j["class_counts"] = counts;
    j["fhr_count"] = s.fhr_count;
    j["fhr_mean_bpm"] = nullable(s.fhr_mean_bpm);
    j["fhr_sd_bpm"] = nullable(s.fhr_sd_bpm);
    j["ga_weeks"] = s.ga ? ojson(s.ga->weeks) : ojson(nullptr);
    j["ga_windows"] = s.ga ? s.ga->n_windows_used : 0;
    j["ga_window_scores"] = s.ga ? ojson(s.ga->window_scores) : ojson::array();
    j["ga_absent_reason"] = s.ga_absent_reason ? ojson(*s.ga_absent_reason) : ojson(nullptr);
    j["deadline_misses"] = s.deadline_misses;
    j["data_lost_events"] = s.data_lost_events;
    j["events"] = ev;
    return j;
}

[[noreturn]] void schema_error(std::size_t line, const std::string& what) {
    throw Error(ErrorKind::SchemaMismatch, "line " + std::to_string(line) + ": " + what);
}

std::optional<double> opt_number(const json& j, const char* key) {
    const json& v = j.at(key);
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
}

TickReport row_from_json(const json& j) {
    TickReport r;
    r.tick_index = j.at("tick").get<std::uint64_t>();
    r.t_end_s = j.at("t_end_s").get<double>();
    const auto cls = parse_class(j.at("quality").get<std::string>());
    if (!cls) throw std::invalid_argument("unknown quality class");
    r.quality.cls = *cls;
    const json& scores = j.at("scores");
    for (QualityClass c : kAllClasses) {
        r.quality.scores[static_cast<std::size_t>(c)] = scores.at(std::string(class_name(c))).get<double>();
    }
    const auto bpm = opt_number(j, "fhr_bpm");
    const auto rho = opt_number(j, "fhr_rho");
    if (bpm.has_value() != rho.has_value()) throw std::invalid_argument("fhr_bpm and fhr_rho must both be set or null");
    if (bpm) r.fhr = FhrEstimate{*bpm, *rho, 60.0 * kSampleRate / *bpm};
    const json& reason = j.at("fhr_absent_reason");
    if (!reason.is_null()) r.fhr_absent_reason = reason.get<std::string>();
    r.ga_weeks = opt_number(j, "ga_weeks");
    r.ga_windows = j.at("ga_windows").get<std::size_t>();
    r.processing_ms = j.at("processing_ms").get<double>();
    r.deadline_missed = j.at("deadline_missed").get<bool>();
    return r;
}

std::optional<double> opt_number_or_null(const json& j, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    return opt_number(j, key);
}

std::pair<SessionSummary, std::vector<SessionEvent>> summary_from_json(const json& j) {
    SessionSummary s;
    s.ticks = j.at("ticks").get<std::uint64_t>();
    for (QualityClass c : kAllClasses) {
        s.class_counts[static_cast<std::size_t>(c)] = j.at("class_counts").at(std::string(class_name(c))).get<std::uint64_t>();
    }
    s.fhr_count = j.at("fhr_count").get<std::size_t>();
    s.fhr_mean_bpm = opt_number_or_null(j, "fhr_mean_bpm");
    s.fhr_sd_bpm = opt_number_or_null(j, "fhr_sd_bpm");
    if (const auto weeks = opt_number_or_null(j, "ga_weeks")) {
        GaEstimate ga;
        ga.weeks = *weeks;
        ga.n_windows_used = j.at("ga_windows").get<std::size_t>();
        ga.window_scores = j.at("ga_window_scores").get<std::vector<double>>();
        s.ga = ga;
    }
    if (!j.at("ga_absent_reason").is_null()) s.ga_absent_reason = j.at("ga_absent_reason").get<std::string>();
    s.deadline_misses = j.at("deadline_misses").get<std::uint64_t>();
    s.data_lost_events = j.at("data_lost_events").get<std::uint64_t>();
    std::vector<SessionEvent> events;
    for (const json& e : j.at("events")) {
        SessionEvent ev;
        const std::string kind = e.at("kind").get<std::string>();
        bool known = false;
        for (EventKind k : {EventKind::Started, EventKind::Stopped, EventKind::Reposition, EventKind::DataLost}) {
            if (event_kind_name(k) == kind) {
                ev.kind = k;
                known = true;
            }
        }
        if (!known) throw std::invalid_argument("unknown event kind " + kind);
        ev.t_s = e.at("t_s").get<double>();
        ev.note = e.at("note").get<std::string>();
        events.push_back(std::move(ev));
    }
    return {s, events};
}

} // namespace

std::string row_json(const TickReport& r) {
    ojson scores = ojson::object();
    for (QualityClass c : kAllClasses) scores[std::string(class_name(c))] = r.quality.score(c);
    ojson j;
    j["tick"] = r.tick_index;
    j["t_end_s"] = r.t_end_s;
    j["quality"] = std::string(class_name(r.quality.cls));
    j["scores"] = scores;
    j["fhr_bpm"] = r.fhr ? ojson(r.fhr->bpm) : ojson(nullptr);
    j["fhr_rho"] = r.fhr ? ojson(r.fhr->rho) : ojson(nullptr);
    j["fhr_absent_reason"] = r.fhr_absent_reason ? ojson(*r.fhr_absent_reason) : ojson(nullptr);
    j["ga_weeks"] = nullable(r.ga_weeks);
    j["ga_windows"] = r.ga_windows;
    j["processing_ms"] = r.processing_ms;
    j["deadline_missed"] = r.deadline_missed;
    return j.dump();
}

std::string header_json(const SessionHeader& h) {
    ojson j;
    j["schema"] = h.schema;
    j["config_sha256"] = h.config_sha256;
    j["input"] = h.input;
    return j.dump();
}

std::string footer_json(const SessionSummary& s, std::span<const SessionEvent> events) {
    ojson j;
    j["summary"] = summary_to_json(s, events);
    return j.dump();
}

std::string serialize_session(const SessionLog& log) {
    std::string out = header_json(log.header) + "\n";
    for (const auto& r : log.rows) out += row_json(r) + "\n";
    if (log.footer) out += footer_json(*log.footer, log.events) + "\n";
    return out;
}

SessionLog parse_session(std::string_view text) {
    SessionLog log;
    std::size_t line_no = 0;
    std::size_t start = 0;
    bool have_header = false;
    std::optional<std::uint64_t> last_tick;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;
        if (log.footer) schema_error(line_no, "content after the summary footer");

        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            schema_error(line_no, std::string("malformed JSON: ") + e.what());
        }
        if (!j.is_object()) schema_error(line_no, "expected a JSON object");

        try {
            if (!have_header) {
                const std::string schema = j.at("schema").get<std::string>();
                if (schema != kSchema) schema_error(line_no, "schema '" + schema + "' is not " + std::string(kSchema));
                log.header.schema = schema;
                log.header.config_sha256 = j.at("config_sha256").get<std::string>();
                log.header.input = j.at("input").get<std::string>();
                have_header = true;
            } else if (j.contains("summary")) {
                auto [summary, events] = summary_from_json(j.at("summary"));
                log.footer = summary;
                log.events = std::move(events);
            } else {
                TickReport r = row_from_json(j);
                if (last_tick && r.tick_index <= *last_tick) schema_error(line_no, "tick indices must increase");
                last_tick = r.tick_index;
                log.rows.push_back(std::move(r));
            }
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            schema_error(line_no, e.what());
        }
    }
    if (!have_header) throw Error(ErrorKind::SchemaMismatch, "line 1: missing header");
    return log;
}

void write_session(const std::filesystem::path& path, const SessionLog& log) {
    const std::string text = serialize_session(log);
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

SessionLog read_session(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return parse_session(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

SessionLogWriter::SessionLogWriter(const std::filesystem::path& path, const SessionHeader& header)
    : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out_ << header_json(header) << '\n';
    out_.flush();
}

void SessionLogWriter::write_row(const TickReport& r) {
    out_ << row_json(r) << '\n';
    out_.flush();
}

void SessionLogWriter::finish(const SessionSummary& summary, std::span<const SessionEvent> events) {
    out_ << footer_json(summary, events) << '\n';
    out_.flush();
    if (!out_) throw Error(ErrorKind::Io, "session log write failed");
}

// ---- parity ----------------------------------------------------------------

namespace {

std::optional<double> row_field(const TickReport& r, std::string_view field) {
    if (field == "t_end_s") return r.t_end_s;
    if (field == "fhr_bpm") return r.fhr ? std::optional(r.fhr->bpm) : std::nullopt;
    if (field == "fhr_rho") return r.fhr ? std::optional(r.fhr->rho) : std::nullopt;
    if (field == "ga_weeks") return r.ga_weeks;
    if (field == "ga_windows") return static_cast<double>(r.ga_windows);
    if (field == "processing_ms") return r.processing_ms;
    constexpr std::string_view prefix = "scores.";
    if (field.starts_with(prefix)) {
        if (auto c = parse_class(field.substr(prefix.size()))) return r.quality.score(*c);
    }
    return std::nullopt;
}

} // namespace

std::vector<std::string> comparable_fields() {
    std::vector<std::string> f{"t_end_s", "fhr_bpm", "fhr_rho", "ga_weeks", "ga_windows", "processing_ms"};
    for (QualityClass c : kAllClasses) f.push_back("scores." + std::string(class_name(c)));
    return f;
}

ParityReport compare_runs(const SessionLog& a, const SessionLog& b, std::string_view field) {
    const auto known = comparable_fields();
    if (std::find(known.begin(), known.end(), field) == known.end()) {
        throw Error(ErrorKind::FieldMissing, "field '" + std::string(field) + "' is not a numeric row field");
    }
    std::map<std::uint64_t, const TickReport*> by_tick;
    for (const auto& r : b.rows) by_tick[r.tick_index] = &r;

    std::vector<double> errors;
    for (const auto& ra : a.rows) {
        const auto it = by_tick.find(ra.tick_index);
        if (it == by_tick.end()) continue;
        const auto va = row_field(ra, field);
        const auto vb = row_field(*it->second, field);
        if (va && vb) errors.push_back(*va - *vb);
    }
    if (errors.empty()) throw Error(ErrorKind::NoOverlap, "no shared tick defines '" + std::string(field) + "' in both logs");

    ParityReport p;
    p.field = std::string(field);
    p.n = errors.size();
    const double n = static_cast<double>(p.n);
    double abs_sum = 0.0;
    double sum = 0.0;
    for (double e : errors) {
        abs_sum += std::abs(e);
        sum += e;
        p.max_abs_error = std::max(p.max_abs_error, std::abs(e));
    }
    p.mae = abs_sum / n;
    p.mean_error = sum / n;
    if (p.n > 1) {
        double ss = 0.0;
        for (double e : errors) ss += (e - p.mean_error) * (e - p.mean_error);
        p.sd_error = std::sqrt(ss / (n - 1.0));
    }
    return p;
}

std::string parity_json(const ParityReport& r) {
    ojson j;
    j["field"] = r.field;
    j["n"] = r.n;
    j["mae"] = r.mae;
    j["sd_error"] = r.sd_error;
    j["max_abs_error"] = r.max_abs_error;
    return j.dump();
}

} // namespace pulsepipe
