#include "eegemo/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "eegemo/util.hpp"

namespace eegemo {

void FilterSpec::validate(double sample_rate_hz) const {
  if (order < 1) throw ValidationError("filter order must be >= 1");
  if (!(low_cut_hz > 0.0)) throw ValidationError("low cutoff must be positive");
  if (!(low_cut_hz < high_cut_hz)) {
    throw ValidationError("low cutoff must be below high cutoff");
  }
  if (!(high_cut_hz < sample_rate_hz / 2.0)) {
    throw ValidationError("high cutoff " + format_double(high_cut_hz) +
                          " Hz is at or above Nyquist (" +
                          format_double(sample_rate_hz / 2.0) + " Hz)");
  }
}

SosFilter design_butter_bandpass(const FilterSpec& spec, double sample_rate_hz) {
  spec.validate(sample_rate_hz);
  using cplx = std::complex<double>;
  const int n = spec.order;
  const double fs2 = 2.0 * sample_rate_hz;

  // Pre-warped band edges (rad/s) for the bilinear transform.
  const double w_lo = fs2 * std::tan(std::numbers::pi * spec.low_cut_hz / sample_rate_hz);
  const double w_hi = fs2 * std::tan(std::numbers::pi * spec.high_cut_hz / sample_rate_hz);
  const double bw = w_hi - w_lo;
  const double w0_sq = w_hi * w_lo;

  // Lowpass prototype poles on the unit circle, then lowpass-to-bandpass:
  // each prototype pole splits into two, zeros land at s=0 (and infinity).
  std::vector<cplx> s_poles;
  s_poles.reserve(static_cast<std::size_t>(2 * n));
  for (int k = 1; k <= n; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + n - 1.0) / (2.0 * n);
    const cplx proto(std::cos(theta), std::sin(theta));
    const cplx d = proto * (bw / 2.0);
    const cplx disc = std::sqrt(d * d - w0_sq);
    s_poles.push_back(d + disc);
    s_poles.push_back(d - disc);
  }

  // Bilinear transform. The n analog zeros at s=0 map to z=+1; the n zeros
  // at infinity map to z=-1, so every section's numerator is (z-1)(z+1).
  std::vector<cplx> z_poles;
  z_poles.reserve(s_poles.size());
  cplx denom(1.0, 0.0);
  for (const cplx& p : s_poles) {
    z_poles.push_back((fs2 + p) / (fs2 - p));
    denom *= (fs2 - p);
  }
  const double k_analog = std::pow(bw, n);
  const double gain = k_analog * (std::pow(fs2, n) / denom).real();

  // Pair conjugate poles into biquad sections.
  std::vector<cplx> upper, real_poles;
  for (const cplx& p : z_poles) {
    if (std::abs(p.imag()) < 1e-12 * std::max(1.0, std::abs(p.real()))) {
      real_poles.push_back(cplx(p.real(), 0.0));
    } else if (p.imag() > 0.0) {
      upper.push_back(p);
    }
  }
  std::sort(upper.begin(), upper.end(), [](const cplx& a, const cplx& b) {
    return std::norm(a) != std::norm(b) ? std::norm(a) < std::norm(b) : a.real() < b.real();
  });
  std::sort(real_poles.begin(), real_poles.end(),
            [](const cplx& a, const cplx& b) { return a.real() < b.real(); });

  SosFilter sos;
  for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2) {
    const double r1 = real_poles[i].real(), r2 = real_poles[i + 1].real();
    sos.push_back({1.0, 0.0, -1.0, -(r1 + r2), r1 * r2});
  }
  for (const cplx& p : upper) {
    sos.push_back({1.0, 0.0, -1.0, -2.0 * p.real(), std::norm(p)});
  }
  // Overall gain goes on the first section.
  sos.front().b0 *= gain;
  sos.front().b2 *= gain;
  return sos;
}

std::complex<double> sos_response(const SosFilter& sos, double freq_hz, double sample_rate_hz) {
  using cplx = std::complex<double>;
  const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
  const cplx zinv = std::exp(cplx(0.0, -w));
  cplx h(1.0, 0.0);
  for (const auto& s : sos) {
    h *= (s.b0 + s.b1 * zinv + s.b2 * zinv * zinv) /
         (1.0 + s.a1 * zinv + s.a2 * zinv * zinv);
  }
  return h;
}

namespace {

// Steady-state unit-step state of one section (direct form II transposed),
// used to suppress startup transients.
std::array<double, 2> section_step_state(const BiquadSection& s) {
  const double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  return {dc - s.b0, s.b2 - s.a2 * dc};
}

std::vector<double> sosfilt_with_zi(const SosFilter& sos, const std::vector<double>& x,
                                    double x0_scale) {
  // Per-section unit states, scaled by the cascade's cumulative DC gain and
  // by the first input sample.
  std::vector<std::array<double, 2>> state(sos.size());
  double scale = x0_scale;
  for (std::size_t k = 0; k < sos.size(); ++k) {
    const auto zi = section_step_state(sos[k]);
    state[k] = {zi[0] * scale, zi[1] * scale};
    const auto& s = sos[k];
    scale *= (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  }

  std::vector<double> y = x;
  for (std::size_t k = 0; k < sos.size(); ++k) {
    const auto& s = sos[k];
    double z1 = state[k][0], z2 = state[k][1];
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

}  // namespace

std::vector<double> sos_filter(const SosFilter& sos, const std::vector<double>& x) {
  return sosfilt_with_zi(sos, x, 0.0);
}

std::size_t filtfilt_padlen(const SosFilter& sos) {
  return 3 * (2 * sos.size() + 1);
}

std::vector<double> filtfilt(const SosFilter& sos, const std::vector<double>& x) {
  const std::size_t pad = filtfilt_padlen(sos);
  const std::size_t n = x.size();
  if (n <= pad) {
    throw ValidationError("series of length " + std::to_string(n) +
                          " is too short for zero-phase filtering (needs > " +
                          std::to_string(pad) + " samples)");
  }

  // Odd reflection about the end samples.
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x[0] - x[pad - i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 2 - i]);

  std::vector<double> y = sosfilt_with_zi(sos, ext, ext.front());
  std::reverse(y.begin(), y.end());
  y = sosfilt_with_zi(sos, y, y.front());
  std::reverse(y.begin(), y.end());

  return std::vector<double>(y.begin() + static_cast<std::ptrdiff_t>(pad),
                             y.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

Recording bandpass(const Recording& rec, const FilterSpec& spec) {
  const SosFilter sos = design_butter_bandpass(spec, rec.sample_rate_hz);
  Recording out = rec;
  for (std::size_t c = 0; c < kNumElectrodes; ++c) {
    out.channels[c] = filtfilt(sos, rec.channels[c]);
  }
  return out;
}

ChannelStats compute_stats(const std::vector<Recording>& recs) {
  if (recs.empty()) throw ValidationError("compute_stats: no recordings given");
  ChannelStats stats;
  for (std::size_t c = 0; c < kNumElectrodes; ++c) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& rec : recs) {
      for (double v : rec.channels[c]) sum += v;
      count += rec.channels[c].size();
    }
    if (count == 0) throw ValidationError("compute_stats: empty channel series");
    const double mean = sum / static_cast<double>(count);
    double ss = 0.0;
    for (const auto& rec : recs) {
      for (double v : rec.channels[c]) ss += (v - mean) * (v - mean);
    }
    const double var = ss / static_cast<double>(count);
    if (!(var > 0.0)) {
      throw ValidationError("compute_stats: channel " + std::string(electrode_names()[c]) +
                            " has zero variance");
    }
    stats.mean[c] = mean;
    stats.stddev[c] = std::sqrt(var);
  }
  return stats;
}

Recording standardize(const Recording& rec, const ChannelStats& stats) {
  Recording out = rec;
  for (std::size_t c = 0; c < kNumElectrodes; ++c) {
    const double m = stats.mean[c];
    const double s = stats.stddev[c];
    if (!(s > 0.0)) {
      throw ValidationError("standardize: non-positive stddev for channel " +
                            std::string(electrode_names()[c]));
    }
    for (double& v : out.channels[c]) v = (v - m) / s;
  }
  return out;
}

}  // namespace eegemo
