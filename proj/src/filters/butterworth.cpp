#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "errdecode/error.hpp"
#include "errdecode/filters.hpp"
#include "errdecode/parallel.hpp"

namespace errdecode::filters {

namespace {

using cplx = std::complex<double>;

cplx bilinear(cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

double prewarp(double freq_hz, double fs) { return 2.0 * fs * std::tan(std::numbers::pi * freq_hz / fs); }

/// Upper-half-plane poles of the normalized analog Butterworth prototype.
std::vector<cplx> prototype_upper_poles(int order) {
    std::vector<cplx> poles;
    for (int k = 0; k < order / 2; ++k) {
        const double angle = std::numbers::pi * static_cast<double>(2 * k + order + 1) / (2.0 * order);
        poles.push_back(std::polar(1.0, angle));
    }
    return poles;
}

Biquad section_from_pole(cplx pole) {
    Biquad bq;
    bq.a1 = -2.0 * pole.real();
    bq.a2 = std::norm(pole);
    return bq;
}

cplx section_response(const Biquad& s, double omega) {
    const cplx z1 = std::polar(1.0, -omega);
    const cplx z2 = z1 * z1;
    return (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
}

void run_sections(const std::vector<Biquad>& sections, std::span<double> x) {
    for (const auto& s : sections) {
        double z1 = 0.0;
        double z2 = 0.0;
        for (auto& v : x) {
            const double in = v;
            const double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
}

}  // namespace

cplx IIRCascade::response(double freq_hz) const {
    const double omega = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
    cplx h = 1.0;
    for (const auto& s : sections) h *= section_response(s, omega);
    return h;
}

std::vector<cplx> IIRCascade::poles() const {
    std::vector<cplx> out;
    for (const auto& s : sections) {
        const cplx disc = std::sqrt(cplx(s.a1 * s.a1 - 4.0 * s.a2, 0.0));
        out.push_back((-s.a1 + disc) / 2.0);
        out.push_back((-s.a1 - disc) / 2.0);
    }
    return out;
}

bool IIRCascade::is_stable(double margin) const {
    const auto p = poles();
    return std::all_of(p.begin(), p.end(), [&](cplx z) { return std::abs(z) < 1.0 - margin; });
}

IIRCascade design_butterworth(FilterKind kind, int order, std::vector<double> edges_hz, double fs) {
    if (!(fs > 0.0)) throw invalid_argument(fmt::format("invalid sample rate {}", fs));
    if (order < 2 || order > 8 || order % 2 != 0) {
        throw invalid_argument(fmt::format("Butterworth order must be even in [2, 8], got {}", order));
    }
    const double nyquist = fs / 2.0;
    const std::size_t n_edges = kind == FilterKind::Highpass ? 1 : 2;
    if (edges_hz.size() != n_edges) {
        throw invalid_argument(fmt::format("{} edge(s) required, got {}", n_edges, edges_hz.size()));
    }
    for (const double e : edges_hz) {
        if (e >= nyquist) throw invalid_argument(fmt::format("edge at/above Nyquist ({} Hz >= {} Hz)", e, nyquist));
        if (!(e > 0.0)) throw invalid_argument(fmt::format("edge must be positive, got {}", e));
    }
    if (kind == FilterKind::Bandpass && !(edges_hz[0] < edges_hz[1])) {
        throw invalid_argument(fmt::format("band edges must increase ({} >= {})", edges_hz[0], edges_hz[1]));
    }

    IIRCascade cascade;
    cascade.kind = kind;
    cascade.order = order;
    cascade.edges_hz = edges_hz;
    cascade.sample_rate_hz = fs;

    const auto proto = prototype_upper_poles(order);
    if (kind == FilterKind::Highpass) {
        const double wc = prewarp(edges_hz[0], fs);
        for (const auto p : proto) {
            Biquad bq = section_from_pole(bilinear(wc / p, fs));
            // Zeros at z = 1; unit gain at Nyquist.
            const double g = (1.0 - bq.a1 + bq.a2) / 4.0;
            bq.b0 = g;
            bq.b1 = -2.0 * g;
            bq.b2 = g;
            cascade.sections.push_back(bq);
        }
    } else {
        const double w_lo = prewarp(edges_hz[0], fs);
        const double w_hi = prewarp(edges_hz[1], fs);
        const double bw = w_hi - w_lo;
        const double w0_sq = w_lo * w_hi;
        const double omega_center = 2.0 * std::atan(std::sqrt(w0_sq) / (2.0 * fs));
        for (const auto p : proto) {
            const cplx pb = p * bw;
            const cplx root = std::sqrt(pb * pb - 4.0 * w0_sq);
            for (const cplx s : {(pb + root) / 2.0, (pb - root) / 2.0}) {
                Biquad bq = section_from_pole(bilinear(s, fs));
                // Zeros at z = +1 and z = -1; unit gain at the band center.
                bq.b0 = 1.0;
                bq.b1 = 0.0;
                bq.b2 = -1.0;
                const double g = 1.0 / std::abs(section_response(bq, omega_center));
                bq.b0 = g;
                bq.b2 = -g;
                cascade.sections.push_back(bq);
            }
        }
    }
    if (!cascade.is_stable()) throw numerical_error("designed cascade is unstable");
    return cascade;
}

void filter_in_place(const IIRCascade& cascade, std::span<double> signal) { run_sections(cascade.sections, signal); }

Recording apply_iir(const IIRCascade& cascade, const Recording& rec, FilterMode mode) {
    if (cascade.sample_rate_hz != rec.sample_rate_hz) {
        throw invalid_argument(fmt::format("sample-rate mismatch: cascade {} Hz, recording {} Hz",
                                           cascade.sample_rate_hz, rec.sample_rate_hz));
    }
    Recording out = rec;
    const auto n = rec.n_samples();
    parallel_for(rec.n_channels(), [&](std::size_t c) {
        std::span<double> row(out.data.row(static_cast<Eigen::Index>(c)).data(), n);
        run_sections(cascade.sections, row);
        if (mode == FilterMode::ZeroPhase) {
            std::reverse(row.begin(), row.end());
            run_sections(cascade.sections, row);
            std::reverse(row.begin(), row.end());
        }
    });
    return out;
}

}  // namespace errdecode::filters
