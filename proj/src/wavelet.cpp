#include "mrad/wavelet.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "mrad/serialize_detail.hpp"

namespace mrad {

std::string_view to_string(WaveletFamily f) {
  return f == WaveletFamily::Haar ? "haar" : "db4";
}
std::string_view to_string(BoundaryMode) { return "periodic"; }
std::string_view to_string(Upsampling u) { return u == Upsampling::Linear ? "linear" : "nearest"; }

WaveletFamily parse_wavelet_family(std::string_view s) {
  if (s == "haar") return WaveletFamily::Haar;
  if (s == "db4") return WaveletFamily::Daubechies4;
  throw ConfigError("unknown wavelet family '" + std::string(s) + "' (expected haar or db4)");
}

BoundaryMode parse_boundary_mode(std::string_view s) {
  if (s == "periodic") return BoundaryMode::Periodic;
  throw ConfigError("unknown boundary mode '" + std::string(s) + "' (expected periodic)");
}

Upsampling parse_upsampling(std::string_view s) {
  if (s == "linear") return Upsampling::Linear;
  if (s == "nearest") return Upsampling::Nearest;
  throw ConfigError("unknown upsampling method '" + std::string(s) + "' (expected linear or nearest)");
}

void WaveletConfig::validate(std::size_t length) const {
  if (levels < 1) throw ConfigError("wavelet levels must be >= 1");
  if (levels >= 63 || (std::size_t{1} << levels) > length) {
    throw ConfigError("wavelet depth " + std::to_string(levels) + " too deep for length " +
                      std::to_string(length) + " (need 2^J <= W)");
  }
}

int default_levels(std::size_t length) { return length < 72 ? 2 : 3; }

FilterBank filter_bank(WaveletFamily family) {
  FilterBank bank;
  if (family == WaveletFamily::Haar) {
    const double r = 1.0 / std::sqrt(2.0);
    bank.low = {r, r};
  } else {
    const double s3 = std::sqrt(3.0);
    const double norm = 4.0 * std::sqrt(2.0);
    bank.low = {(1 + s3) / norm, (3 + s3) / norm, (3 - s3) / norm, (1 - s3) / norm};
  }
  // Quadrature mirror: g[n] = (-1)^n h[L-1-n].
  const std::size_t taps = bank.low.size();
  bank.high.resize(taps);
  for (std::size_t n = 0; n < taps; ++n) {
    bank.high[n] = (n % 2 == 0 ? 1.0 : -1.0) * bank.low[taps - 1 - n];
  }
  return bank;
}

void dwt_step(std::span<const double> x, const FilterBank& bank, std::vector<double>& approx,
              std::vector<double>& detail) {
  const std::size_t n = x.size();
  const std::size_t half = n / 2;
  approx.assign(half, 0.0);
  detail.assign(half, 0.0);
  for (std::size_t k = 0; k < half; ++k) {
    double a = 0.0, d = 0.0;
    for (std::size_t t = 0; t < bank.low.size(); ++t) {
      const double v = x[(2 * k + t) % n];
      a += bank.low[t] * v;
      d += bank.high[t] * v;
    }
    approx[k] = a;
    detail[k] = d;
  }
}

std::vector<double> idwt_step(std::span<const double> approx, std::span<const double> detail,
                              const FilterBank& bank) {
  const std::size_t n = 2 * approx.size();
  std::vector<double> x(n, 0.0);
  for (std::size_t k = 0; k < approx.size(); ++k) {
    for (std::size_t t = 0; t < bank.low.size(); ++t) {
      x[(2 * k + t) % n] += bank.low[t] * approx[k] + bank.high[t] * detail[k];
    }
  }
  return x;
}

WaveletPyramid dwt_multilevel(std::span<const double> signal, const WaveletConfig& config) {
  config.validate(signal.size());
  const FilterBank bank = filter_bank(config.family);
  WaveletPyramid pyramid;
  std::vector<double> current(signal.begin(), signal.end());
  std::vector<double> approx, detail;
  for (int level = 0; level < config.levels; ++level) {
    pyramid.lengths.push_back(current.size());
    if (current.size() % 2 == 1) current.push_back(current.back());
    dwt_step(current, bank, approx, detail);
    pyramid.details.push_back(detail);
    current.swap(approx);
  }
  pyramid.approx = std::move(current);
  return pyramid;
}

std::vector<double> idwt_multilevel(const WaveletPyramid& pyramid, const WaveletConfig& config) {
  const std::size_t levels = pyramid.levels();
  if (levels != static_cast<std::size_t>(config.levels) || pyramid.lengths.size() != levels) {
    throw DataError("wavelet pyramid has " + std::to_string(levels) + " levels, config expects " +
                    std::to_string(config.levels));
  }
  const FilterBank bank = filter_bank(config.family);
  std::vector<double> current = pyramid.approx;
  for (std::size_t j = levels; j-- > 0;) {
    const auto& detail = pyramid.details[j];
    const std::size_t target = pyramid.lengths[j];
    if (detail.size() != current.size() || (target + 1) / 2 != current.size()) {
      throw DataError("wavelet pyramid level " + std::to_string(j + 1) + " has inconsistent lengths");
    }
    current = idwt_step(current, detail, bank);
    current.resize(target);
  }
  return current;
}

std::vector<double> upsample_to_length(std::span<const double> coeffs, std::size_t length,
                                       Upsampling method) {
  const std::size_t in = coeffs.size();
  if (in == 0) throw DataError("cannot upsample an empty coefficient vector");
  if (in > length) {
    throw DataError("cannot upsample " + std::to_string(in) + " coefficients to shorter length " +
                    std::to_string(length));
  }
  if (in == length) return {coeffs.begin(), coeffs.end()};
  if (in == 1) return std::vector<double>(length, coeffs[0]);
  std::vector<double> out(length);
  if (method == Upsampling::Nearest) {
    for (std::size_t k = 0; k < length; ++k) out[k] = coeffs[k * in / length];
    return out;
  }
  const double scale = static_cast<double>(in - 1) / static_cast<double>(length - 1);
  for (std::size_t k = 0; k < length; ++k) {
    const double pos = static_cast<double>(k) * scale;
    auto left = static_cast<std::size_t>(pos);
    if (left >= in - 1) {
      out[k] = coeffs[in - 1];
      continue;
    }
    const double frac = pos - static_cast<double>(left);
    out[k] = coeffs[left] * (1.0 - frac) + coeffs[left + 1] * frac;
  }
  return out;
}

Tensor3 decompose_matrix(const Matrix& xhat, const WaveletConfig& config) {
  const std::size_t rows = xhat.rows(), cols = xhat.cols();
  config.validate(cols);
  const auto levels = static_cast<std::size_t>(config.levels);
  Tensor3 out(levels + 1, rows, cols);
  for (std::size_t h = 0; h < rows; ++h) {
    const WaveletPyramid p = dwt_multilevel(xhat.row(h), config);
    auto put = [&](std::size_t channel, const std::vector<double>& coeffs) {
      const auto up = upsample_to_length(coeffs, cols, config.upsampling);
      std::copy(up.begin(), up.end(), out.row(channel, h).begin());
    };
    put(0, p.approx);
    for (std::size_t j = 0; j < levels; ++j) put(levels - j, p.details[j]);
  }
  return out;
}

Tensor3 matrix_as_tensor(const Matrix& m) {
  Tensor3 t(1, m.rows(), m.cols());
  std::copy(m.data().begin(), m.data().end(), t.data().begin());
  return t;
}

void write_tensor_csv(std::ostream& out, const Tensor3& t, Timestamp window_start) {
  out << t.channels() << ',' << t.rows() << ',' << t.cols() << ',' << window_start << '\n';
  for (std::size_t c = 0; c < t.channels(); ++c) {
    for (std::size_t h = 0; h < t.rows(); ++h) {
      const auto r = t.row(c, h);
      for (std::size_t w = 0; w < r.size(); ++w) {
        if (w) out << ',';
        out << detail::format_double(r[w]);
      }
      out << '\n';
    }
  }
}

void write_tensor_binary(std::ostream& out, const Tensor3& t, Timestamp window_start) {
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.channels()));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rows()));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.cols()));
  detail::write_le<std::int64_t>(out, window_start);
  for (double v : t.data()) detail::write_le<double>(out, v);
}

Tensor3 read_tensor_binary(std::istream& in, Timestamp* window_start) {
  const auto c = detail::read_le<std::uint32_t>(in);
  const auto h = detail::read_le<std::uint32_t>(in);
  const auto w = detail::read_le<std::uint32_t>(in);
  const auto start = detail::read_le<std::int64_t>(in);
  if (window_start) *window_start = start;
  Tensor3 t(c, h, w);
  for (double& v : t.data()) v = detail::read_le<double>(in);
  return t;
}

}  // namespace mrad
