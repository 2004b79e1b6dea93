// pulsepipe: run sessions, transcribe BP photos, compare runs, write fixtures.
//
// Exit codes: 0 ok, 2 input, 3 network, 4 domain-invalid, 5 comparison.

#include "pulsepipe/bp.hpp"
#include "pulsepipe/error.hpp"
#include "pulsepipe/gateway.hpp"
#include "pulsepipe/pipeline.hpp"
#include "pulsepipe/session_io.hpp"
#include "pulsepipe/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

using namespace pulsepipe;
using nlohmann::ordered_json;

namespace {

enum Exit : int { kOk = 0, kInput = 2, kNetwork = 3, kInvalid = 4, kComparison = 5 };

struct Failure {
    int code;
    std::string message;
};

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::PortInUse: return kNetwork;
    case ErrorKind::NoOverlap:
    case ErrorKind::FieldMissing: return kComparison;
    case ErrorKind::NoLcdFound:
    case ErrorKind::UndecodablePattern:
    case ErrorKind::RowSplitFailure: return kInvalid;
    default: return kInput;
    }
}

// "bpm=140,dur=60,noise=0.05,seed=1"; missing keys keep their defaults.
struct SynthSpec {
    double bpm = 140.0;
    double dur = 60.0;
    double noise = 0.05;
    std::uint32_t seed = 1;
    double depth = 1.0;

    std::string canonical() const {
        std::ostringstream os;
        os << "synth:bpm=" << bpm << ",dur=" << dur << ",noise=" << noise << ",seed=" << seed;
        if (depth != 1.0) os << ",depth=" << depth;
        return os.str();
    }
};

SynthSpec parse_synth_spec(const std::string& text) {
    SynthSpec spec;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw Failure{kInput, "synth parameter '" + item + "' is not key=value"};
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        try {
            std::size_t used = 0;
            if (key == "seed") {
                const unsigned long v = std::stoul(value, &used);
                spec.seed = static_cast<std::uint32_t>(v);
            } else {
                const double v = std::stod(value, &used);
                if (key == "bpm") spec.bpm = v;
                else if (key == "dur") spec.dur = v;
                else if (key == "noise") spec.noise = v;
                else if (key == "depth") spec.depth = v;
                else throw Failure{kInput, "unknown synth parameter '" + key + "'"};
            }
            if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::logic_error&) {
            throw Failure{kInput, "bad value for synth parameter '" + key + "'"};
        }
    }
    return spec;
}

// Either a decoded file or a live generator whose noise can be steered.
class SampleSource {
public:
    static SampleSource from_file(const std::string& path) {
        SampleSource s;
        SampleStream stream = load_wav(path);
        if (stream.rate_hz != kSampleRate) stream = resample(stream, kSampleRate);
        s.samples_ = std::move(stream.samples);
        s.total_ = s.samples_.size();
        s.label_ = path;
        return s;
    }

    static SampleSource from_synth(const SynthSpec& spec) {
        SampleSource s;
        DopplerParams p{spec.bpm, spec.noise, spec.seed, spec.depth};
        synth_doppler(p, 0.0);  // parameter checks
        if (!(spec.dur >= 0.0)) throw Error(ErrorKind::OutOfRange, "duration must be non-negative");
        s.generator_ = std::make_unique<DopplerSource>(p);
        s.total_ = static_cast<std::size_t>(std::llround(spec.dur * kSampleRate));
        s.label_ = spec.canonical();
        s.noise_ = std::make_shared<std::atomic<double>>(spec.noise);
        return s;
    }

    const std::string& label() const { return label_; }
    std::size_t total() const { return total_; }
    bool synthetic() const { return generator_ != nullptr; }
    std::shared_ptr<std::atomic<double>> noise_handle() const { return noise_; }

    std::vector<double> next(std::size_t count) {
        count = std::min(count, total_ - pos_);
        std::vector<double> out;
        if (generator_) {
            const double level = noise_->load();
            if (level != generator_->noise()) generator_->set_noise(level);
            out = generator_->next(count);
        } else {
            out.assign(samples_.begin() + static_cast<std::ptrdiff_t>(pos_),
                       samples_.begin() + static_cast<std::ptrdiff_t>(pos_ + count));
        }
        pos_ += count;
        return out;
    }

    bool done() const { return pos_ >= total_; }

private:
    std::vector<double> samples_;
    std::unique_ptr<DopplerSource> generator_;
    std::shared_ptr<std::atomic<double>> noise_;
    std::size_t total_ = 0;
    std::size_t pos_ = 0;
    std::string label_;
};

struct RunOptions {
    std::string input;
    std::string synth;
    std::string out;
    int serve = -1;
    std::string speed = "real";
    std::string config;
    std::size_t chunk = 400;
};

// 0 means unpaced.
double parse_speed(const std::string& text) {
    if (text == "max") return 0.0;
    if (text == "real") return 1.0;
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size() && v > 0.0) return v;
    } catch (const std::logic_error&) {
    }
    throw Failure{kInput, "--speed takes real, max, or a positive factor"};
}

int run_session(const RunOptions& opt) {
    const double speed = parse_speed(opt.speed);
    if (opt.chunk == 0) throw Failure{kInput, "--chunk must be positive"};
    const PipelineConfig config = opt.config.empty() ? PipelineConfig{} : load_config(opt.config);
    SampleSource source = opt.input.empty() ? SampleSource::from_synth(parse_synth_spec(opt.synth))
                                            : SampleSource::from_file(opt.input);

    Session session(config);
    std::unique_ptr<Gateway> gateway;
    if (opt.serve >= 0) {
        GatewayOptions g;
        g.port = static_cast<unsigned short>(opt.serve);
        NoiseControl noise;
        if (auto handle = source.noise_handle()) noise = [handle](double v) { handle->store(v); };
        gateway = std::make_unique<Gateway>(session, g, noise);
        std::cerr << "serving ws://127.0.0.1:" << gateway->port() << "/live\n";
    }

    SessionLogWriter log(opt.out, SessionHeader{std::string(kSchema), config_sha256(config), source.label()});
    session.start();
    std::uint64_t rows = 0;

    if (speed == 0.0) {
        try {
            while (!source.done()) {
                for (const auto& r : session.feed(source.next(opt.chunk))) {
                    log.write_row(r);
                    ++rows;
                }
            }
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::SessionStopped) throw;
        }
    } else {
        // paced writer thread, processing on this one
        std::atomic<bool> writer_done{false};
        std::exception_ptr writer_error;
        std::thread writer([&] {
            const auto period = std::chrono::duration<double>(static_cast<double>(opt.chunk) / kSampleRate / speed);
            auto next = std::chrono::steady_clock::now();
            try {
                while (!source.done()) {
                    session.ingest(source.next(opt.chunk));
                    next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(period);
                    std::this_thread::sleep_until(next);
                }
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::SessionStopped) writer_error = std::current_exception();
            } catch (...) {
                writer_error = std::current_exception();
            }
            writer_done = true;
        });
        for (;;) {
            const bool finished = writer_done.load();
            for (const auto& r : session.process_ready()) {
                log.write_row(r);
                ++rows;
            }
            if (finished || session.phase() == Phase::Stopped) break;
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        writer.join();
        if (writer_error) std::rethrow_exception(writer_error);
    }

    const SessionSummary summary = session.stop();
    log.finish(summary, session.events());
    if (gateway) gateway->shutdown();
    std::cerr << "wrote " << rows << " ticks to " << opt.out << "\n";
    return kOk;
}

ordered_json reading_json(const BpReading& r) {
    ordered_json j{{"systolic", r.systolic_mmhg}, {"diastolic", r.diastolic_mmhg}, {"pulse", r.pulse_bpm}, {"valid", r.valid}};
    if (r.violation) j["reason"] = *r.violation;
    ordered_json rows = ordered_json::array();
    for (const auto& row : r.digit_patterns) {
        ordered_json cells = ordered_json::array();
        for (SegmentPattern p : row) cells.push_back(p.letters());
        rows.push_back(cells);
    }
    j["digit_patterns"] = rows;
    return j;
}

int transcribe(const std::string& image, const std::string& detector_name) {
    const auto detector = make_detector(detector_name);
    const GrayImage img = load_pgm(image);
    try {
        const BpReading r = transcribe_bp(img, *detector);
        std::cout << reading_json(r).dump() << "\n";
        return r.valid ? kOk : kInvalid;
    } catch (const Error& e) {
        if (exit_code_for(e.kind()) != kInvalid) throw;
        std::cout << ordered_json{{"valid", false}, {"reason", error_kind_name(e.kind())}, {"detail", e.what()}}.dump() << "\n";
        return kInvalid;
    }
}

int compare(const std::string& a, const std::string& b, const std::string& field) {
    const SessionLog la = read_session(a);
    const SessionLog lb = read_session(b);
    if (la.header.config_sha256 != lb.header.config_sha256) std::cerr << "warning: the runs used different configs\n";
    std::cout << parity_json(compare_runs(la, lb, field)) << "\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Perinatal screening pipeline"};
    app.require_subcommand(1);

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "Stream audio through the live pipeline and log every tick");
    auto* in_opt = run_cmd->add_option("--input", run.input, "PCM16 mono WAV file");
    auto* synth_opt = run_cmd->add_option("--synth", run.synth, "Synthetic source, e.g. bpm=140,dur=60,noise=0.05,seed=1");
    in_opt->excludes(synth_opt);
    run_cmd->add_option("--out", run.out, "Session log (JSONL)")->required();
    run_cmd->add_option("--serve", run.serve, "Serve ws://127.0.0.1:PORT/live while running")->check(CLI::Range(0, 65535));
    run_cmd->add_option("--speed", run.speed, "real, max, or a pacing factor")->capture_default_str();
    run_cmd->add_option("--config", run.config, "JSON configuration overrides");
    run_cmd->add_option("--chunk", run.chunk, "Samples per feed")->capture_default_str();

    std::string image, detector = std::string(OtsuLcdDetector::kName);
    auto* bp_cmd = app.add_subcommand("transcribe-bp", "Read systolic/diastolic/pulse from a monitor photo");
    bp_cmd->add_option("--image", image, "Binary PGM image")->required();
    bp_cmd->add_option("--detector", detector, "Display detector")->capture_default_str();

    std::string log_a, log_b, field = "fhr_bpm";
    auto* cmp_cmd = app.add_subcommand("compare", "MAE and SD of error between two session logs");
    cmp_cmd->add_option("--a", log_a, "First log")->required();
    cmp_cmd->add_option("--b", log_b, "Second log")->required();
    cmp_cmd->add_option("--field", field, "Row field")->capture_default_str();

    auto* synth_cmd = app.add_subcommand("synth", "Write a deterministic fixture");
    synth_cmd->require_subcommand(1);
    std::string out;

    std::string doppler_spec;
    auto* doppler_cmd = synth_cmd->add_subcommand("doppler", "Doppler WAV");
    doppler_cmd->add_option("spec", doppler_spec, "bpm=..,dur=..,noise=..,seed=..");
    doppler_cmd->add_option("--out", out, "Output WAV")->required();

    std::string class_name_arg;
    std::uint32_t class_seed = 1;
    auto* class_cmd = synth_cmd->add_subcommand("class", "One 3.75 s window of a quality class");
    class_cmd->add_option("class", class_name_arg, "Good, Poor, Interference, Talking or Silent")->required();
    class_cmd->add_option("--seed", class_seed)->capture_default_str();
    class_cmd->add_option("--out", out, "Output WAV")->required();

    std::vector<int> lcd_values;
    int lcd_width = kDefaultLcdWidth, lcd_height = kDefaultLcdHeight;
    double lcd_noise = 0.0;
    std::uint32_t lcd_seed = 1;
    auto* lcd_cmd = synth_cmd->add_subcommand("lcd", "Rendered BP monitor display");
    lcd_cmd->add_option("values", lcd_values, "SYS DIA PULSE")->required()->expected(3);
    lcd_cmd->add_option("--width", lcd_width)->capture_default_str();
    lcd_cmd->add_option("--height", lcd_height)->capture_default_str();
    lcd_cmd->add_option("--noise", lcd_noise, "Salt-and-pepper fraction")->capture_default_str();
    lcd_cmd->add_option("--seed", lcd_seed)->capture_default_str();
    lcd_cmd->add_option("--out", out, "Output PGM")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInput;
    }

    try {
        if (*run_cmd) {
            if (run.input.empty() == run.synth.empty()) throw Failure{kInput, "give exactly one of --input or --synth"};
            return run_session(run);
        }
        if (*bp_cmd) return transcribe(image, detector);
        if (*cmp_cmd) return compare(log_a, log_b, field);
        if (*doppler_cmd) {
            const SynthSpec spec = parse_synth_spec(doppler_spec);
            write_wav(out, synth_doppler(DopplerParams{spec.bpm, spec.noise, spec.seed, spec.depth}, spec.dur));
            return kOk;
        }
        if (*class_cmd) {
            const auto cls = parse_class(class_name_arg);
            if (!cls) throw Failure{kInput, "unknown class '" + class_name_arg + "'"};
            write_wav(out, SampleStream{kSampleRate, synth_class(*cls, class_seed).samples});
            return kOk;
        }
        if (*lcd_cmd) {
            GrayImage img = render_lcd(lcd_values[0], lcd_values[1], lcd_values[2], lcd_width, lcd_height);
            if (lcd_noise > 0.0) add_salt_pepper(img, lcd_noise, lcd_seed);
            write_pgm(out, img);
            return kOk;
        }
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << "\n";
        return f.code;
    } catch (const Error& e) {
        std::cerr << "error: " << error_kind_name(e.kind()) << ": " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInput;
    }
    return kOk;
}
