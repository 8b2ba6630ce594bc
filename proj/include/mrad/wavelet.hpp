// Row-wise multilevel discrete wavelet transform and the stacked
// multi-resolution tensor built from it.
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mrad/common.hpp"

namespace mrad {

enum class WaveletFamily { Haar, Daubechies4 };
enum class BoundaryMode { Periodic };
enum class Upsampling { Linear, Nearest };

std::string_view to_string(WaveletFamily f);
std::string_view to_string(BoundaryMode b);
std::string_view to_string(Upsampling u);
WaveletFamily parse_wavelet_family(std::string_view s);
BoundaryMode parse_boundary_mode(std::string_view s);
Upsampling parse_upsampling(std::string_view s);

struct WaveletConfig {
  WaveletFamily family = WaveletFamily::Haar;
  int levels = 2;
  BoundaryMode boundary = BoundaryMode::Periodic;
  Upsampling upsampling = Upsampling::Linear;

  /// Throws ConfigError unless levels >= 1 and 2^levels <= length.
  void validate(std::size_t length) const;

  friend bool operator==(const WaveletConfig&, const WaveletConfig&) = default;
};

/// J = 2 for windows shorter than 72 bins, J = 3 otherwise.
int default_levels(std::size_t length);

/// A_J and D_1..D_J (finest first). `lengths[j]` is the input length fed to
/// level j+1; odd inputs are padded by repeating their last sample, and the
/// inverse truncates back to `lengths[j]`.
struct WaveletPyramid {
  std::vector<double> approx;
  std::vector<std::vector<double>> details;
  std::vector<std::size_t> lengths;

  std::size_t levels() const { return details.size(); }
};

/// Analysis filter pair applied at every level.
struct FilterBank {
  std::vector<double> low;
  std::vector<double> high;
};

FilterBank filter_bank(WaveletFamily family);

/// One analysis step on an even-length signal with periodic wrap-around.
void dwt_step(std::span<const double> x, const FilterBank& bank, std::vector<double>& approx,
              std::vector<double>& detail);

/// Inverse of dwt_step; output length is 2 * approx.size().
std::vector<double> idwt_step(std::span<const double> approx, std::span<const double> detail,
                              const FilterBank& bank);

WaveletPyramid dwt_multilevel(std::span<const double> signal, const WaveletConfig& config);

/// Throws DataError when the pyramid's level count or lengths are inconsistent.
std::vector<double> idwt_multilevel(const WaveletPyramid& pyramid, const WaveletConfig& config);

/// Stretches L coefficients to `length` samples. Linear: sample k reads
/// position k*(L-1)/(length-1). Nearest: sample k copies floor(k*L/length).
/// L == length is the identity and L == 1 broadcasts. Throws DataError for
/// L == 0 or L > length.
std::vector<double> upsample_to_length(std::span<const double> coeffs, std::size_t length,
                                       Upsampling method);

/// Channel 0 holds the upsampled approximation A_J; channels 1..J hold the
/// upsampled details D_J..D_1 (coarse to fine).
Tensor3 decompose_matrix(const Matrix& xhat, const WaveletConfig& config);

/// Single-channel tensor holding the matrix unchanged (used when the wavelet
/// stage is ablated).
Tensor3 matrix_as_tensor(const Matrix& m);

/// Debug dump: `C,H,W,window_start` header then C*H rows.
void write_tensor_csv(std::ostream& out, const Tensor3& t, Timestamp window_start);

/// Binary: u32 C, u32 H, u32 W, i64 window_start, C*H*W little-endian f64.
void write_tensor_binary(std::ostream& out, const Tensor3& t, Timestamp window_start);
Tensor3 read_tensor_binary(std::istream& in, Timestamp* window_start = nullptr);

}  // namespace mrad
