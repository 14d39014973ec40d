#include "tosmtl/phantom.hpp"

#include <algorithm>
#include <cmath>

namespace tosmtl {

namespace {

// 0 for u <= 0, raised cosine up to 1 at u >= 1.
double ramp01(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return 0.5 * (1.0 - std::cos(M_PI * u));
}

// sin^2 bump on [t0, t1], zero outside.
double bump(double t, double t0, double t1) {
    if (t <= t0 || t >= t1) return 0.0;
    const double s = std::sin(M_PI * (t - t0) / (t1 - t0));
    return s * s;
}

std::string zero_pad(std::size_t v, int width) {
    std::string s = std::to_string(v);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

}  // namespace

void PhantomSpec::validate() const {
    if (n_sectors < 3) throw ConfigError("phantom: n_sectors must be >= 3");
    if (n_frames_min > n_frames_max || n_frames_min == 0) {
        throw ConfigError("phantom: bad n_frames range");
    }
    if (baseline_tos_ms_min > baseline_tos_ms_max || baseline_tos_ms_min < frame_period_ms) {
        throw ConfigError("phantom: bad baseline TOS band");
    }
    if (lma_tos_ms_min > lma_tos_ms_max) throw ConfigError("phantom: bad LMA TOS band");
    if (lma_width_min > lma_width_max || lma_width_min == 0) {
        throw ConfigError("phantom: bad LMA width range");
    }
    if (scar_probability < 0.0 || scar_probability > 1.0) {
        throw ConfigError("phantom: scar probability outside [0,1]");
    }
    if (scar_width_min > scar_width_max) throw ConfigError("phantom: bad scar width range");
    if (lma_width_max + scar_width_max >= n_sectors) {
        throw ConfigError("phantom: LMA plus scar widths must leave normal sectors");
    }
    if (peak_strain_min > peak_strain_max || peak_strain_max >= -0.05) {
        throw ConfigError("phantom: peak strain range must be clearly negative");
    }
    if (lma_tos_ms_max / frame_period_ms > static_cast<double>(n_frames_min)) {
        throw ConfigError("phantom: LMA TOS band exceeds the shortest frame count");
    }
}

std::vector<double> synth_sector_curve(double tos_ms, SectorKind kind,
                                       std::size_t n_frames, const PhantomSpec& spec,
                                       Rng& rng) {
    const double period = spec.frame_period_ms;
    const double t_end = static_cast<double>(n_frames - 1) * period;
    if (tos_ms > t_end) {
        throw ConfigError("synth_sector_curve: TOS " + std::to_string(tos_ms) +
                          " ms beyond final frame at " + std::to_string(t_end) + " ms");
    }

    std::vector<double> curve(n_frames, 0.0);

    if (kind == SectorKind::scar) {
        // Early stretch from neighbor compression, then a small positive
        // plateau; never a genuine negative onset.
        const double amp = rng.uniform(spec.pre_stretch_peak_min, spec.pre_stretch_peak_max);
        const double plateau = rng.uniform(0.005, 0.025);
        const double t_peak = 150.0, t_settle = 350.0;
        for (std::size_t f = 0; f < n_frames; ++f) {
            const double t = static_cast<double>(f) * period;
            double v;
            if (t <= t_peak) {
                const double s = std::sin(0.5 * M_PI * t / t_peak);
                v = amp * s * s;
            } else if (t < t_settle) {
                v = plateau + (amp - plateau) * 0.5 *
                    (1.0 + std::cos(M_PI * (t - t_peak) / (t_settle - t_peak)));
            } else {
                v = plateau;
            }
            curve[f] = v;
        }
        return curve;
    }

    const double peak = rng.uniform(spec.peak_strain_min, spec.peak_strain_max);
    double pre_amp = 0.0, pre_start = 0.0;
    if (kind == SectorKind::lma) {
        pre_amp = rng.uniform(spec.pre_stretch_peak_min, spec.pre_stretch_peak_max);
        pre_start = std::max(0.0, tos_ms - 120.0);
    }
    for (std::size_t f = 0; f < n_frames; ++f) {
        const double t = static_cast<double>(f) * period;
        double v = peak * ramp01((t - tos_ms) / spec.onset_rise_ms);
        if (kind == SectorKind::lma) v += pre_amp * bump(t, pre_start, tos_ms);
        curve[f] = v;
    }
    return curve;
}

namespace {

struct SliceLayout {
    std::size_t lma_start = 0, lma_width = 0;
    bool has_scar = false;
    std::size_t scar_start = 0, scar_width = 0;
};

PhantomRecord make_slice(const PhantomSpec& spec, const std::string& patient_id,
                         const char* slice_level, const SliceLayout& lay, Rng& rng) {
    const std::size_t N = spec.n_sectors;
    const std::size_t n_frames = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(spec.n_frames_min),
                        static_cast<std::int64_t>(spec.n_frames_max)));

    std::vector<SectorKind> kind(N, SectorKind::normal);
    std::vector<bool> lma(N, false), scar(N, false);
    for (std::size_t i = 0; i < lay.lma_width; ++i) {
        const std::size_t s = (lay.lma_start + i) % N;
        kind[s] = SectorKind::lma;
        lma[s] = true;
    }
    if (lay.has_scar) {
        for (std::size_t i = 0; i < lay.scar_width; ++i) {
            const std::size_t s = (lay.scar_start + i) % N;
            kind[s] = SectorKind::scar;
            scar[s] = true;
        }
    }

    // Smooth-ish TOS profile: one base value per region, per-sector jitter.
    const double base_lma = rng.uniform(spec.lma_tos_ms_min + 25.0, spec.lma_tos_ms_max - 25.0);
    TosCurve tos;
    tos.tos_ms.resize(N);
    for (std::size_t s = 0; s < N; ++s) {
        if (kind[s] == SectorKind::lma) {
            tos.tos_ms[s] = std::clamp(base_lma + rng.uniform(-25.0, 25.0),
                                       spec.lma_tos_ms_min, spec.lma_tos_ms_max);
        } else {
            tos.tos_ms[s] = rng.uniform(spec.baseline_tos_ms_min, spec.baseline_tos_ms_max);
        }
    }

    PhantomRecord rec;
    rec.id = patient_id + "_" + slice_level;
    rec.patient_id = patient_id;
    rec.slice_level = slice_level;
    rec.strain = StrainMatrix(N, n_frames, spec.frame_period_ms);
    rec.tos = tos;
    rec.labels = SectorLabels::hard(lma);
    rec.scar_mask = scar;

    for (std::size_t s = 0; s < N; ++s) {
        const auto curve = synth_sector_curve(tos.tos_ms[s], kind[s], n_frames, spec, rng);
        for (std::size_t f = 0; f < n_frames; ++f) rec.strain.at(s, f) = curve[f];
    }

    if (spec.noise_std > 0.0) {
        // i.i.d. noise, smoothed circularly across sectors so neighbors are
        // correlated; the clean signal is untouched.
        std::vector<double> noise(N * n_frames);
        for (double& v : noise) v = rng.normal(0.0, spec.noise_std);
        const double sigma = spec.sector_smoothing_sigma;
        if (sigma > 0.0) {
            const int radius = static_cast<int>(std::ceil(3.0 * sigma));
            std::vector<double> kernel(2 * radius + 1);
            double ksum = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                kernel[i + radius] = std::exp(-0.5 * (i / sigma) * (i / sigma));
                ksum += kernel[i + radius];
            }
            for (double& k : kernel) k /= ksum;
            std::vector<double> smoothed(N * n_frames, 0.0);
            const std::int64_t nI = static_cast<std::int64_t>(N);
            for (std::size_t s = 0; s < N; ++s) {
                for (int i = -radius; i <= radius; ++i) {
                    const std::size_t src = static_cast<std::size_t>(
                        ((static_cast<std::int64_t>(s) + i) % nI + nI) % nI);
                    const double k = kernel[i + radius];
                    for (std::size_t f = 0; f < n_frames; ++f) {
                        smoothed[s * n_frames + f] += k * noise[src * n_frames + f];
                    }
                }
            }
            noise.swap(smoothed);
        }
        for (std::size_t i = 0; i < noise.size(); ++i) rec.strain.values[i] += noise[i];
    }

    return rec;
}

}  // namespace

std::vector<PhantomRecord> generate_phantom(const PhantomSpec& spec, std::size_t patient_count) {
    spec.validate();
    if (patient_count == 0) throw ConfigError("generate_phantom: patient count must be >= 1");

    std::vector<PhantomRecord> records;
    records.reserve(patient_count * 4);

    for (std::size_t p = 0; p < patient_count; ++p) {
        Rng rng(derive_seed(spec.rng_seed, p));
        const std::string patient_id = "p" + zero_pad(p, 3);

        const std::size_t base_center =
            static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(spec.n_sectors) - 1));
        const std::size_t base_width = static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(spec.lma_width_min),
                            static_cast<std::int64_t>(spec.lma_width_max)));
        const bool has_scar = rng.uniform01() < spec.scar_probability;
        const std::size_t scar_width = static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(spec.scar_width_min),
                            static_cast<std::int64_t>(spec.scar_width_max)));
        const bool scar_before = rng.uniform01() < 0.5;

        for (const char* level : kSliceLevels) {
            SliceLayout lay;
            const std::int64_t jc = rng.uniform_int(-1, 1);
            const std::int64_t jw = rng.uniform_int(-1, 1);
            lay.lma_width = static_cast<std::size_t>(std::clamp<std::int64_t>(
                static_cast<std::int64_t>(base_width) + jw,
                static_cast<std::int64_t>(spec.lma_width_min),
                static_cast<std::int64_t>(spec.lma_width_max)));
            const std::int64_t n = static_cast<std::int64_t>(spec.n_sectors);
            const std::int64_t center = ((static_cast<std::int64_t>(base_center) + jc) % n + n) % n;
            lay.lma_start = static_cast<std::size_t>(
                ((center - static_cast<std::int64_t>(lay.lma_width - 1) / 2) % n + n) % n);
            lay.has_scar = has_scar;
            if (has_scar) {
                lay.scar_width = scar_width;
                lay.scar_start = scar_before
                    ? static_cast<std::size_t>(((static_cast<std::int64_t>(lay.lma_start) -
                                                 static_cast<std::int64_t>(scar_width)) % n + n) % n)
                    : (lay.lma_start + lay.lma_width) % spec.n_sectors;
            }
            records.push_back(make_slice(spec, patient_id, level, lay, rng));
        }
    }

    return records;
}

StrainMatrix strain_from_displacement(
    const std::vector<std::vector<std::array<double, 2>>>& endpoints,
    double frame_period_ms) {
    if (endpoints.empty() || endpoints[0].size() < 3) {
        throw ConfigError("strain_from_displacement: need >= 1 frame and >= 3 sectors");
    }
    const std::size_t F = endpoints.size();
    const std::size_t N = endpoints[0].size();
    for (const auto& frame : endpoints) {
        if (frame.size() != N) {
            throw ConfigError("strain_from_displacement: inconsistent sector count across frames");
        }
    }

    auto chord = [&](std::size_t f, std::size_t s) {
        const auto& a = endpoints[f][s];
        const auto& b = endpoints[f][(s + 1) % N];
        return std::hypot(b[0] - a[0], b[1] - a[1]);
    };

    StrainMatrix m(N, F, frame_period_ms);
    for (std::size_t s = 0; s < N; ++s) {
        const double l0 = chord(0, s);
        if (l0 <= 0.0) {
            throw NumericError("strain_from_displacement: zero reference chord at sector " +
                               std::to_string(s));
        }
        for (std::size_t f = 0; f < F; ++f) {
            m.at(s, f) = (chord(f, s) - l0) / l0;
        }
    }
    return m;
}

}  // namespace tosmtl
