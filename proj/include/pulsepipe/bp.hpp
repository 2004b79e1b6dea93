#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pulsepipe {

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

struct LcdRegion {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    friend bool operator==(const LcdRegion&, const LcdRegion&) = default;
};

/// Lit segments as a bitmask: bit 0 is segment a through bit 6 for g.
///
///    aaa
///   f   b
///    ggg
///   e   c
///    ddd
struct SegmentPattern {
    std::uint8_t on = 0;

    static SegmentPattern from_letters(std::string_view letters);
    std::string letters() const;
    bool has(char segment) const;

    friend bool operator==(SegmentPattern, SegmentPattern) = default;
};

SegmentPattern digit_pattern(int digit);
std::optional<int> pattern_digit(SegmentPattern p);

/// Seven-segment geometry shared by the renderer and the decoder, in
/// coordinates normalized to the digit cell (x right, y down).
namespace lcd_layout {
inline constexpr double kCellAspect = 0.6;        // width / height
inline constexpr double kBarThickness = 0.2;      // fraction of cell width
inline constexpr double kProbeSize = 0.11;        // fraction of cell width
inline constexpr double kLeft = 0.15, kRight = 0.85;
inline constexpr double kTop = 0.1, kMiddle = 0.5, kBottom = 0.9;
/// Probe centers for segments a..g.
inline constexpr std::array<std::array<double, 2>, 7> kProbes{{
    {0.5, 0.1}, {0.85, 0.3}, {0.85, 0.7}, {0.5, 0.9}, {0.15, 0.7}, {0.15, 0.3}, {0.5, 0.5},
}};
inline constexpr std::uint8_t kBackground = 20;
inline constexpr std::uint8_t kPanel = 230;
inline constexpr std::uint8_t kInk = 40;
} // namespace lcd_layout

/// Localization plug-in. Implementations must be safe for concurrent calls.
class LcdDetector {
public:
    virtual ~LcdDetector() = default;
    virtual std::string name() const = 0;
    /// Throws NoLcdFound when the image holds no plausible display.
    virtual LcdRegion locate(const GrayImage& img) const = 0;
};

/// Reference detector "otsu-cc": Otsu binarization, then the largest bright
/// 4-connected component with aspect ratio in [1, 3] and both sides >= 30 px.
class OtsuLcdDetector final : public LcdDetector {
public:
    static constexpr std::string_view kName = "otsu-cc";
    std::string name() const override { return std::string(kName); }
    LcdRegion locate(const GrayImage& img) const override;
};

/// Returns a fixed box; stands in for an external model's output.
class FixedLcdDetector final : public LcdDetector {
public:
    explicit FixedLcdDetector(LcdRegion region) : region_(region) {}
    std::string name() const override { return "fixed"; }
    LcdRegion locate(const GrayImage&) const override { return region_; }

private:
    LcdRegion region_;
};

std::unique_ptr<LcdDetector> make_detector(std::string_view name);

/// Threshold maximizing between-class variance; pixels > threshold are "bright".
int otsu_threshold(const GrayImage& img);

GrayImage median3x3(const GrayImage& img);

LcdRegion locate_lcd(const GrayImage& img, const LcdDetector& detector);

/// Reads the seven probe patches of a single digit crop.
SegmentPattern read_segments(const GrayImage& cell);
/// Throws UndecodablePattern for patterns outside the canonical table.
int decode_digit(const GrayImage& cell);

struct BpReading {
    int systolic_mmhg = 0;
    int diastolic_mmhg = 0;
    int pulse_bpm = 0;
    bool valid = false;
    /// Set exactly when !valid: the first failed check.
    std::optional<std::string> violation;
    std::vector<std::vector<SegmentPattern>> digit_patterns;
};

/// Range and ordering checks; fills valid and violation.
void validate_reading(BpReading& reading);

/// Locate the display, split it into rows and digit cells, decode, assemble
/// systolic / diastolic / pulse from the top, middle and bottom rows.
/// Throws NoLcdFound, RowSplitFailure, or UndecodablePattern.
BpReading transcribe_bp(const GrayImage& img, const LcdDetector& detector);

inline constexpr int kDefaultLcdWidth = 640;
inline constexpr int kDefaultLcdHeight = 480;

/// Synthetic monitor photo: dark background, bright panel, three right-aligned
/// rows of up to three seven-segment digits. Throws OutOfRangeValue for values
/// outside 0..999 and InvalidArgument for images smaller than 64x64.
GrayImage render_lcd(int systolic, int diastolic, int pulse,
                     int width = kDefaultLcdWidth, int height = kDefaultLcdHeight);

/// Panel box used by render_lcd for a given image size.
LcdRegion rendered_panel(int width, int height);

} // namespace pulsepipe
