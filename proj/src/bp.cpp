#include "pulsepipe/bp.hpp"

#include "pulsepipe/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>

namespace pulsepipe {

namespace {

namespace L = lcd_layout;

// Canonical patterns for digits 0..9 as segment letters.
constexpr std::array<std::string_view, 10> kDigitLetters{
    "abcdef", "bc", "abged", "abgcd", "fgbc", "afgcd", "afgedc", "abc", "abcdefg", "abcfgd"};

// Ink of a rendered digit spans [0.04 H, 0.96 H] vertically and ends at
// 0.95 W on the right: bar centers plus half a bar (0.1 W = 0.06 H).
constexpr double kHalfBar = L::kBarThickness / 2.0;                       // of width
constexpr double kHalfBarH = kHalfBar * L::kCellAspect;                   // of height
constexpr double kInkTop = L::kTop - kHalfBarH;
constexpr double kInkHeight = (L::kBottom - L::kTop) + 2.0 * kHalfBarH;
constexpr double kInkRight = L::kRight + kHalfBar;

struct Box {
    double x0, y0, w, h;
};

struct Rect {
    double x1, y1, x2, y2;
};

void fill_rect(GrayImage& img, const Rect& r, std::uint8_t value) {
    // a pixel belongs to the rect when its center does
    const int i0 = std::max(0, static_cast<int>(std::ceil(r.x1 - 0.5)));
    const int i1 = std::min(img.width, static_cast<int>(std::ceil(r.x2 - 0.5)));
    const int j0 = std::max(0, static_cast<int>(std::ceil(r.y1 - 0.5)));
    const int j1 = std::min(img.height, static_cast<int>(std::ceil(r.y2 - 0.5)));
    for (int j = j0; j < j1; ++j) {
        for (int i = i0; i < i1; ++i) img.at(i, j) = value;
    }
}

void draw_digit(GrayImage& img, const Box& cell, int digit) {
    const SegmentPattern p = digit_pattern(digit);
    const double hw = kHalfBar * cell.w;
    auto X = [&](double u) { return cell.x0 + u * cell.w; };
    auto Y = [&](double v) { return cell.y0 + v * cell.h; };
    auto horizontal = [&](double v) {
        return Rect{X(L::kLeft) - hw, Y(v) - hw, X(L::kRight) + hw, Y(v) + hw};
    };
    auto vertical = [&](double u, double v1, double v2) {
        return Rect{X(u) - hw, Y(v1) - hw, X(u) + hw, Y(v2) + hw};
    };
    if (p.has('a')) fill_rect(img, horizontal(L::kTop), L::kInk);
    if (p.has('g')) fill_rect(img, horizontal(L::kMiddle), L::kInk);
    if (p.has('d')) fill_rect(img, horizontal(L::kBottom), L::kInk);
    if (p.has('f')) fill_rect(img, vertical(L::kLeft, L::kTop, L::kMiddle), L::kInk);
    if (p.has('e')) fill_rect(img, vertical(L::kLeft, L::kMiddle, L::kBottom), L::kInk);
    if (p.has('b')) fill_rect(img, vertical(L::kRight, L::kTop, L::kMiddle), L::kInk);
    if (p.has('c')) fill_rect(img, vertical(L::kRight, L::kMiddle, L::kBottom), L::kInk);
}

GrayImage crop(const GrayImage& img, const LcdRegion& r) {
    GrayImage out(r.w, r.h);
    for (int y = 0; y < r.h; ++y) {
        for (int x = 0; x < r.w; ++x) out.at(x, y) = img.at(r.x + x, r.y + y);
    }
    return out;
}

LcdRegion clamp_region(const LcdRegion& r, int width, int height) {
    const int x0 = std::clamp(r.x, 0, width);
    const int y0 = std::clamp(r.y, 0, height);
    const int x1 = std::clamp(r.x + r.w, 0, width);
    const int y1 = std::clamp(r.y + r.h, 0, height);
    return {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

// Shrinks a detector box to the bright panel: border rows and columns that are
// mostly dark belong to the background.
LcdRegion refine_to_panel(const GrayImage& img, LcdRegion r) {
    const int threshold = otsu_threshold(crop(img, r));
    auto bright_row = [&](int y) {
        int n = 0;
        for (int x = r.x; x < r.x + r.w; ++x) n += img.at(x, y) > threshold;
        return 2 * n >= r.w;
    };
    auto bright_col = [&](int x) {
        int n = 0;
        for (int y = r.y; y < r.y + r.h; ++y) n += img.at(x, y) > threshold;
        return 2 * n >= r.h;
    };
    while (r.h > 0 && !bright_row(r.y)) { ++r.y; --r.h; }
    while (r.h > 0 && !bright_row(r.y + r.h - 1)) --r.h;
    while (r.w > 0 && !bright_col(r.x)) { ++r.x; --r.w; }
    while (r.w > 0 && !bright_col(r.x + r.w - 1)) --r.w;
    return r;
}

struct Run {
    int begin;  // inclusive
    int end;    // exclusive
};

std::vector<Run> runs_of(const std::vector<int>& counts) {
    std::vector<Run> runs;
    int start = -1;
    for (int i = 0; i <= static_cast<int>(counts.size()); ++i) {
        const bool inked = i < static_cast<int>(counts.size()) && counts[i] > 0;
        if (inked && start < 0) start = i;
        if (!inked && start >= 0) {
            runs.push_back({start, i});
            start = -1;
        }
    }
    return runs;
}

int assemble(const std::vector<int>& digits) {
    int value = 0;
    for (int d : digits) value = value * 10 + d;
    return value;
}

} // namespace

SegmentPattern SegmentPattern::from_letters(std::string_view letters) {
    SegmentPattern p;
    for (char c : letters) {
        if (c < 'a' || c > 'g') throw Error(ErrorKind::InvalidArgument, "segment letters are a..g");
        p.on |= static_cast<std::uint8_t>(1u << (c - 'a'));
    }
    return p;
}

std::string SegmentPattern::letters() const {
    std::string s;
    for (char c = 'a'; c <= 'g'; ++c) {
        if (has(c)) s.push_back(c);
    }
    return s;
}

bool SegmentPattern::has(char segment) const {
    return (on >> (segment - 'a')) & 1u;
}

SegmentPattern digit_pattern(int digit) {
    if (digit < 0 || digit > 9) throw Error(ErrorKind::InvalidArgument, "digit must be 0..9");
    return SegmentPattern::from_letters(kDigitLetters[static_cast<std::size_t>(digit)]);
}

std::optional<int> pattern_digit(SegmentPattern p) {
    for (int d = 0; d < 10; ++d) {
        if (digit_pattern(d) == p) return d;
    }
    return std::nullopt;
}

int otsu_threshold(const GrayImage& img) {
    std::array<double, 256> hist{};
    for (auto px : img.pixels) hist[px] += 1.0;
    const double total = static_cast<double>(img.pixels.size());
    if (total == 0.0) return 255;

    const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
    if (*lo == *hi) {
        // no contrast: a uniformly bright image is all panel, a dark one all background
        return *lo >= 128 ? *lo - 1 : 255;
    }

    double sum_all = 0.0;
    for (int i = 0; i < 256; ++i) sum_all += i * hist[i];
    double weight_low = 0.0;
    double sum_low = 0.0;
    double best_var = -1.0;
    int best = 0;
    for (int t = 0; t < 255; ++t) {
        weight_low += hist[t];
        sum_low += t * hist[t];
        const double weight_high = total - weight_low;
        if (weight_low == 0.0 || weight_high == 0.0) continue;
        const double mean_low = sum_low / weight_low;
        const double mean_high = (sum_all - sum_low) / weight_high;
        const double var = weight_low * weight_high * (mean_low - mean_high) * (mean_low - mean_high);
        if (var > best_var) {
            best_var = var;
            best = t;
        }
    }
    return best;
}

GrayImage median3x3(const GrayImage& img) {
    GrayImage out(img.width, img.height);
    std::array<std::uint8_t, 9> window{};
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            std::size_t k = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                const int yy = std::clamp(y + dy, 0, img.height - 1);
                for (int dx = -1; dx <= 1; ++dx) {
                    window[k++] = img.at(std::clamp(x + dx, 0, img.width - 1), yy);
                }
            }
            std::nth_element(window.begin(), window.begin() + 4, window.end());
            out.at(x, y) = window[4];
        }
    }
    return out;
}

LcdRegion OtsuLcdDetector::locate(const GrayImage& img) const {
    if (img.width < 64 || img.height < 64) throw Error(ErrorKind::NoLcdFound, "image smaller than 64x64");
    const int threshold = otsu_threshold(img);
    const int w = img.width;
    const int h = img.height;
    std::vector<int> label(img.pixels.size(), -1);
    std::vector<std::size_t> stack;

    LcdRegion best{};
    std::size_t best_count = 0;
    int next_label = 0;
    for (std::size_t start = 0; start < img.pixels.size(); ++start) {
        if (label[start] >= 0 || img.pixels[start] <= threshold) continue;
        int x0 = w, y0 = h, x1 = -1, y1 = -1;
        std::size_t count = 0;
        label[start] = next_label;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            ++count;
            const int x = static_cast<int>(p % w);
            const int y = static_cast<int>(p / w);
            x0 = std::min(x0, x); x1 = std::max(x1, x);
            y0 = std::min(y0, y); y1 = std::max(y1, y);
            auto visit = [&](int nx, int ny) {
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) return;
                const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
                if (label[q] >= 0 || img.pixels[q] <= threshold) return;
                label[q] = next_label;
                stack.push_back(q);
            };
            visit(x - 1, y); visit(x + 1, y); visit(x, y - 1); visit(x, y + 1);
        }
        ++next_label;
        const int bw = x1 - x0 + 1;
        const int bh = y1 - y0 + 1;
        const double aspect = static_cast<double>(bw) / bh;
        if (bw < 30 || bh < 30 || aspect < 1.0 || aspect > 3.0) continue;
        if (count > best_count) {
            best_count = count;
            best = {x0, y0, bw, bh};
        }
    }
    if (best_count == 0) throw Error(ErrorKind::NoLcdFound, "no bright component passes the size and aspect gates");
    return best;
}

std::unique_ptr<LcdDetector> make_detector(std::string_view name) {
    if (name == OtsuLcdDetector::kName) return std::make_unique<OtsuLcdDetector>();
    throw Error(ErrorKind::InvalidArgument, "unknown LCD detector '" + std::string(name) + "'");
}

LcdRegion locate_lcd(const GrayImage& img, const LcdDetector& detector) {
    return detector.locate(img);
}

SegmentPattern read_segments(const GrayImage& cell) {
    SegmentPattern p;
    if (cell.pixels.empty()) return p;
    const auto [lo, hi] = std::minmax_element(cell.pixels.begin(), cell.pixels.end());
    const double range = static_cast<double>(*hi) - static_cast<double>(*lo);
    if (range <= 0.0) return p;

    const double mid = (static_cast<double>(*hi) + static_cast<double>(*lo)) / 2.0;
    double bg_sum = 0.0;
    std::size_t bg_n = 0;
    for (auto px : cell.pixels) {
        if (px > mid) {
            bg_sum += px;
            ++bg_n;
        }
    }
    const double background = bg_sum / static_cast<double>(bg_n);

    const int side = std::max(3, static_cast<int>(std::lround(L::kProbeSize * cell.width)));
    for (std::size_t s = 0; s < L::kProbes.size(); ++s) {
        const double cx = L::kProbes[s][0] * cell.width;
        const double cy = L::kProbes[s][1] * cell.height;
        const int x0 = std::clamp(static_cast<int>(std::lround(cx - side / 2.0)), 0, cell.width - 1);
        const int y0 = std::clamp(static_cast<int>(std::lround(cy - side / 2.0)), 0, cell.height - 1);
        const int x1 = std::min(cell.width, x0 + side);
        const int y1 = std::min(cell.height, y0 + side);
        double sum = 0.0;
        for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) sum += cell.at(x, y);
        }
        const double mean = sum / static_cast<double>((x1 - x0) * (y1 - y0));
        if (std::abs(mean - background) > 0.5 * range) p.on |= static_cast<std::uint8_t>(1u << s);
    }
    return p;
}

int decode_digit(const GrayImage& cell) {
    const SegmentPattern p = read_segments(cell);
    if (auto d = pattern_digit(p)) return *d;
    throw Error(ErrorKind::UndecodablePattern, "pattern '" + p.letters() + "' is not a digit");
}

void validate_reading(BpReading& r) {
    r.violation.reset();
    if (r.systolic_mmhg < 60 || r.systolic_mmhg > 260) r.violation = "systolic_out_of_range";
    else if (r.diastolic_mmhg < 30 || r.diastolic_mmhg > 160) r.violation = "diastolic_out_of_range";
    else if (r.systolic_mmhg <= r.diastolic_mmhg) r.violation = "systolic_not_greater";
    else if (r.pulse_bpm == 0) r.violation = "pulse_absent";
    else if (r.pulse_bpm < 30 || r.pulse_bpm > 220) r.violation = "pulse_out_of_range";
    r.valid = !r.violation.has_value();
}

BpReading transcribe_bp(const GrayImage& raw, const LcdDetector& detector) {
    const GrayImage img = median3x3(raw);
    LcdRegion region = clamp_region(locate_lcd(img, detector), img.width, img.height);
    if (region.w < 30 || region.h < 30) throw Error(ErrorKind::NoLcdFound, "detector returned a degenerate box");
    region = refine_to_panel(img, region);
    if (region.w < 30 || region.h < 30) throw Error(ErrorKind::NoLcdFound, "detector box holds no bright panel");

    const GrayImage panel = crop(img, region);
    const int ink_threshold = otsu_threshold(panel);
    auto inked = [&](int x, int y) { return panel.at(x, y) <= ink_threshold; };

    std::vector<int> row_counts(panel.height, 0);
    for (int y = 0; y < panel.height; ++y) {
        for (int x = 0; x < panel.width; ++x) row_counts[y] += inked(x, y);
    }
    std::vector<Run> bands = runs_of(row_counts);
    int tallest = 0;
    for (const Run& b : bands) tallest = std::max(tallest, b.end - b.begin);
    // specks and leftover border lines are far thinner than any digit row
    const int min_band = std::max(tallest / 4, panel.height / 20);
    std::erase_if(bands, [&](const Run& b) { return b.end - b.begin < min_band; });
    if (bands.size() != 2 && bands.size() != 3) {
        throw Error(ErrorKind::RowSplitFailure, "found " + std::to_string(bands.size()) + " rows, expected 2 or 3");
    }

    BpReading reading;
    std::vector<int> values;
    for (std::size_t row = 0; row < bands.size(); ++row) {
        const Run band = bands[row];
        const double cell_h = (band.end - band.begin) / kInkHeight;
        const double cell_w = cell_h * L::kCellAspect;
        const double cell_y0 = band.begin - kInkTop * cell_h;

        std::vector<int> col_counts(panel.width, 0);
        for (int y = band.begin; y < band.end; ++y) {
            for (int x = 0; x < panel.width; ++x) col_counts[x] += inked(x, y);
        }
        std::vector<Run> columns = runs_of(col_counts);
        std::erase_if(columns, [&](const Run& c) { return (c.end - c.begin) < 0.5 * L::kBarThickness * cell_w; });
        if (columns.empty()) {
            throw Error(ErrorKind::RowSplitFailure, "row " + std::to_string(row) + " holds no digits");
        }

        std::vector<int> digits;
        std::vector<SegmentPattern> patterns;
        for (std::size_t k = 0; k < columns.size(); ++k) {
            const double cell_x0 = columns[k].end - kInkRight * cell_w;
            LcdRegion box{static_cast<int>(std::lround(cell_x0)), static_cast<int>(std::lround(cell_y0)),
                          static_cast<int>(std::lround(cell_w)), static_cast<int>(std::lround(cell_h))};
            box = clamp_region(box, panel.width, panel.height);
            const SegmentPattern p = read_segments(crop(panel, box));
            const auto digit = pattern_digit(p);
            if (!digit) {
                throw Error(ErrorKind::UndecodablePattern, "row " + std::to_string(row) + " cell " + std::to_string(k) +
                                                               ": pattern '" + p.letters() + "' is not a digit");
            }
            digits.push_back(*digit);
            patterns.push_back(p);
        }
        values.push_back(assemble(digits));
        reading.digit_patterns.push_back(std::move(patterns));
    }
    reading.systolic_mmhg = values[0];
    reading.diastolic_mmhg = values[1];
    reading.pulse_bpm = values.size() == 3 ? values[2] : 0;
    validate_reading(reading);
    return reading;
}

LcdRegion rendered_panel(int width, int height) {
    int pw = static_cast<int>(std::lround(0.8 * width));
    int ph = static_cast<int>(std::lround(0.8 * height));
    ph = std::min(ph, pw);
    pw = std::min(pw, 3 * ph);
    return {(width - pw) / 2, (height - ph) / 2, pw, ph};
}

GrayImage render_lcd(int systolic, int diastolic, int pulse, int width, int height) {
    for (int v : {systolic, diastolic, pulse}) {
        if (v < 0 || v > 999) throw Error(ErrorKind::OutOfRangeValue, "value " + std::to_string(v) + " is not displayable");
    }
    if (width < 64 || height < 64) throw Error(ErrorKind::InvalidArgument, "render size must be at least 64x64");

    GrayImage img(width, height, L::kBackground);
    const LcdRegion panel = rendered_panel(width, height);
    fill_rect(img, Rect{double(panel.x), double(panel.y), double(panel.x + panel.w), double(panel.y + panel.h)}, L::kPanel);

    const double pitch = panel.h / 3.0;
    double cell_h = 0.7 * pitch;
    double cell_w = L::kCellAspect * cell_h;
    if (cell_w > 0.25 * panel.w) {
        cell_w = 0.25 * panel.w;
        cell_h = cell_w / L::kCellAspect;
    }
    const double gap = 0.3 * cell_w;
    const double group = 3.0 * cell_w + 2.0 * gap;
    const double gx0 = panel.x + (panel.w - group) / 2.0;

    const std::array<int, 3> values{systolic, diastolic, pulse};
    for (int row = 0; row < 3; ++row) {
        const double cy0 = panel.y + row * pitch + (pitch - cell_h) / 2.0;
        const int v = values[static_cast<std::size_t>(row)];
        const int ndigits = v >= 100 ? 3 : v >= 10 ? 2 : 1;
        int rest = v;
        for (int k = 2; k >= 3 - ndigits; --k) {
            draw_digit(img, Box{gx0 + k * (cell_w + gap), cy0, cell_w, cell_h}, rest % 10);
            rest /= 10;
        }
    }
    return img;
}

} // namespace pulsepipe
