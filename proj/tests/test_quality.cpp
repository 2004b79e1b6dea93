#include "pulsepipe/dsp.hpp"
#include "pulsepipe/error.hpp"
#include "pulsepipe/quality.hpp"
#include "pulsepipe/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

using namespace pulsepipe;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an Error");
    return ErrorKind::Io;
}

class FixedScores final : public QualityClassifier {
public:
    explicit FixedScores(std::vector<double> s) : s_(std::move(s)) {}
    std::string name() const override { return "fixed"; }
    std::vector<double> score(const Segment&) const override { return s_; }

private:
    std::vector<double> s_;
};

Segment white_noise(std::uint32_t seed) {
    Lcg rng(seed);
    std::vector<double> x(kWindowSamples);
    for (double& v : x) v = 0.5 * rng.next_signed();
    return make_segment(std::move(x));
}

void check_label_shape(const QualityLabel& label) {
    const double sum = std::accumulate(label.scores.begin(), label.scores.end(), 0.0);
    CHECK(std::abs(sum - 1.0) <= 1e-6);
    for (QualityClass c : kAllClasses) {
        CHECK(label.score(c) >= 0.0);
        CHECK(label.score(c) <= label.score(label.cls));
    }
}

} // namespace

TEST_SUITE("features") {
    TEST_CASE("all-zero segment") {
        const auto f = extract_features(make_segment(std::vector<double>(kWindowSamples, 0.0)));
        CHECK(f.rms == 0.0);
        CHECK(f.flatness == 0.0);
        CHECK(f.rho_fhr == 0.0);
    }

    TEST_CASE("white noise is flat and aperiodic") {
        const auto f = extract_features(white_noise(1));
        CHECK(f.flatness > 0.9);
        CHECK(f.rho_fhr < 0.3);
        CHECK(f.rms == doctest::Approx(0.5 / std::sqrt(3.0)).epsilon(0.02));
    }

    TEST_CASE("140 BPM fixture is strongly periodic") {
        const auto stream = synth_doppler(140.0, 3.75, 0.05, 1);
        const auto f = extract_features(make_segment(stream.samples));
        CHECK(f.rho_fhr > 0.7);
    }

    TEST_CASE("bounded fields on every fixture class") {
        for (QualityClass c : kAllClasses) {
            for (std::uint32_t seed = 1; seed <= 4; ++seed) {
                const auto f = extract_features(synth_class(c, seed));
                for (double v : {f.flatness, f.rho_fhr, f.rho_voice, f.peak_bin_fraction}) {
                    CHECK(std::isfinite(v));
                    CHECK(v >= 0.0);
                    CHECK(v <= 1.0);
                }
                CHECK(f.rms >= 0.0);
                CHECK(std::isfinite(f.zcr_hz));
            }
        }
    }
}

TEST_SUITE("classify") {
    const HeuristicClassifier model;

    TEST_CASE("reference examples") {
        CHECK(classify(make_segment(std::vector<double>(kWindowSamples, 0.0)), model).cls == QualityClass::Silent);
        CHECK(classify(white_noise(2), model).cls == QualityClass::Interference);
        CHECK(classify(make_segment(synth_doppler(140.0, 3.75, 0.05, 1).samples), model).cls == QualityClass::Good);
        // steady 150 Hz harmonic stack, nothing in the heart-rate band
        Lcg rng(12);
        std::vector<double> x(kWindowSamples);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = 0.02 * rng.next_signed();
            const double t = static_cast<double>(i) / kSampleRate;
            for (int h = 1; h <= 4; ++h) x[i] += 0.1 / h * std::sin(2.0 * 3.141592653589793 * 150.0 * h * t + h);
        }
        const Segment voiced = make_segment(std::move(x));
        const auto f = extract_features(voiced);
        CHECK(f.flatness <= 0.5);
        CHECK(f.peak_bin_fraction <= 0.8);
        CHECK(f.rho_voice > 0.4);
        CHECK(classify(voiced, model).cls == QualityClass::Talking);
    }

    TEST_CASE("every fixture class is recognised") {
        for (QualityClass c : kAllClasses) {
            for (std::uint32_t seed = 1; seed <= 10; ++seed) {
                CAPTURE(class_name(c));
                CAPTURE(seed);
                const QualityLabel label = classify(synth_class(c, seed), model);
                CHECK(label.cls == c);
                check_label_shape(label);
            }
        }
    }

    TEST_CASE("winner score follows the margin rule") {
        const QualityLabel label = classify(make_segment(std::vector<double>(kWindowSamples, 0.0)), model);
        // silence sits at the full margin
        CHECK(label.score(QualityClass::Silent) == doctest::Approx(1.0));
        for (QualityClass c : {QualityClass::Good, QualityClass::Poor, QualityClass::Interference, QualityClass::Talking})
            CHECK(label.score(c) == doctest::Approx(0.0));

        const QualityLabel good = classify(synth_class(QualityClass::Good, 1), model);
        CHECK(good.score(QualityClass::Good) >= 0.6);
        const double rest = (1.0 - good.score(QualityClass::Good)) / 4.0;
        CHECK(good.score(QualityClass::Poor) == doctest::Approx(rest));
        CHECK(good.score(QualityClass::Silent) == doctest::Approx(rest));
    }

    TEST_CASE("rule precedence on hand-built features") {
        QualityFeatures f;
        f.rms = 0.0005;
        f.flatness = 0.9;
        f.rho_voice = 0.9;
        f.rho_fhr = 0.9;
        CHECK(model.decide(f).cls == QualityClass::Silent);
        f.rms = 0.1;
        CHECK(model.decide(f).cls == QualityClass::Interference);
        f.flatness = 0.1;
        f.peak_bin_fraction = 0.85;
        CHECK(model.decide(f).cls == QualityClass::Interference);
        f.peak_bin_fraction = 0.1;
        CHECK(model.decide(f).cls == QualityClass::Talking);
        f.rho_voice = 0.1;
        CHECK(model.decide(f).cls == QualityClass::Good);
        f.rho_fhr = 0.5;
        CHECK(model.decide(f).cls == QualityClass::Good);
        f.rho_fhr = 0.49;
        CHECK(model.decide(f).cls == QualityClass::Poor);
        for (double m : {model.decide(f).margin}) {
            CHECK(m >= 0.0);
            CHECK(m <= 1.0);
        }
    }

    TEST_CASE("deterministic and bit-identical") {
        const Segment seg = synth_class(QualityClass::Poor, 7);
        const QualityLabel a = classify(seg, model);
        const QualityLabel b = classify(seg, model);
        CHECK(a.cls == b.cls);
        CHECK(a.scores == b.scores);
    }

    TEST_CASE("gain does not change the class above silence") {
        for (QualityClass c : kAllClasses) {
            for (std::uint32_t seed = 1; seed <= 3; ++seed) {
                const Segment seg = synth_class(c, seed);
                if (extract_features(seg).rms < 0.01) continue;
                const QualityClass base = classify(seg, model).cls;
                for (double k : {0.5, 0.8, 1.3, 2.0}) {
                    Segment s = seg;
                    for (double& v : s.samples) v *= k;
                    CHECK(classify(s, model).cls == base);
                }
            }
        }
    }

    TEST_CASE("ties go to the earlier class") {
        CHECK(classify(white_noise(1), FixedScores({1, 1, 1, 1, 1})).cls == QualityClass::Good);
        CHECK(classify(white_noise(1), FixedScores({0, 2, 0, 2, 2})).cls == QualityClass::Poor);
        const QualityLabel l = classify(white_noise(1), FixedScores({0, 0, 3, 1, 0}));
        CHECK(l.cls == QualityClass::Interference);
        CHECK(l.score(QualityClass::Interference) == doctest::Approx(0.75));
    }

    TEST_CASE("malformed plug-in scores are model failures") {
        const Segment seg = white_noise(1);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        CHECK(kind_of([&] { classify(seg, FixedScores({1, 2, 3})); }) == ErrorKind::ModelFailure);
        CHECK(kind_of([&] { classify(seg, FixedScores({1, nan, 0, 0, 0})); }) == ErrorKind::ModelFailure);
        CHECK(kind_of([&] { classify(seg, FixedScores({0, 0, 0, 0, 0})); }) == ErrorKind::ModelFailure);
        CHECK(kind_of([&] { classify(seg, FixedScores({1, -1, 0, 0, 0})); }) == ErrorKind::ModelFailure);
    }

    TEST_CASE("classifier lookup by name") {
        CHECK(make_classifier("heuristic-v1")->name() == "heuristic-v1");
        CHECK(kind_of([] { make_classifier("cnn-attn"); }) == ErrorKind::InvalidArgument);
    }

    TEST_CASE("class names round-trip") {
        for (QualityClass c : kAllClasses) CHECK(parse_class(class_name(c)) == c);
        CHECK_FALSE(parse_class("Noisy").has_value());
    }
}

TEST_SUITE("quality_report") {
    QualityLabel label_of(QualityClass c) {
        QualityLabel l;
        l.cls = c;
        l.scores[static_cast<std::size_t>(c)] = 1.0;
        return l;
    }

    TEST_CASE("250-segment split with one Interference read as Poor") {
        std::vector<QualityClass> truth;
        const std::pair<QualityClass, int> split[] = {{QualityClass::Good, 110}, {QualityClass::Poor, 78},
                                                      {QualityClass::Interference, 11}, {QualityClass::Talking, 17},
                                                      {QualityClass::Silent, 34}};
        for (auto [c, n] : split) truth.insert(truth.end(), static_cast<std::size_t>(n), c);
        std::vector<QualityLabel> labels;
        for (QualityClass c : truth) labels.push_back(label_of(c));
        labels[110 + 78].cls = QualityClass::Poor;

        const ConfusionReport r = quality_report(labels, truth);
        CHECK(r.total == 250);
        CHECK(r.correct == 249);
        CHECK(r.off_diagonal() == 1);
        CHECK(r.accuracy == doctest::Approx(249.0 / 250.0));
        CHECK(r.cell(QualityClass::Interference, QualityClass::Poor) == 1);
        for (std::size_t t = 0; t < kNumClasses; ++t) {
            std::size_t row = 0;
            for (std::size_t p = 0; p < kNumClasses; ++p) row += r.counts[t][p];
            CHECK(row == r.truth_counts[t]);
        }
        CHECK(r.truth_counts[0] == 110);

        const std::string table = format_confusion(r);
        for (QualityClass c : kAllClasses) CHECK(table.find(class_name(c)) != std::string::npos);
    }

    TEST_CASE("identical sequences give a diagonal matrix") {
        std::vector<QualityClass> truth(kAllClasses.begin(), kAllClasses.end());
        std::vector<QualityLabel> labels;
        for (QualityClass c : truth) labels.push_back(label_of(c));
        const ConfusionReport r = quality_report(labels, truth);
        CHECK(r.accuracy == 1.0);
        for (std::size_t t = 0; t < kNumClasses; ++t)
            for (std::size_t p = 0; p < kNumClasses; ++p) CHECK(r.counts[t][p] == (t == p ? 1u : 0u));
    }

    TEST_CASE("single wrong item") {
        const std::vector<QualityLabel> labels{label_of(QualityClass::Good)};
        const std::vector<QualityClass> truth{QualityClass::Poor};
        const ConfusionReport r = quality_report(labels, truth);
        CHECK(r.accuracy == 0.0);
        CHECK(r.cell(QualityClass::Poor, QualityClass::Good) == 1);
    }

    TEST_CASE("length mismatch") {
        const std::vector<QualityLabel> labels{label_of(QualityClass::Good)};
        const std::vector<QualityClass> truth{QualityClass::Poor, QualityClass::Good};
        CHECK(kind_of([&] { quality_report(labels, truth); }) == ErrorKind::LengthMismatch);
        CHECK(kind_of([&] { quality_report({}, {}); }) == ErrorKind::LengthMismatch);
    }
}
