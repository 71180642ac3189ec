#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glaris/transform_codec.hpp"

namespace glaris {

inline constexpr std::size_t kCodebookSize = 1024;
inline constexpr unsigned kIndexBits = 10;
inline constexpr std::size_t kMaxStages = 8;
inline constexpr std::size_t kDefaultSideDim = 16;

// RVQ index tuple for one frame. A masked stage contributes the mask token
// instead of a codebook centroid.
struct SideInfo {
  std::vector<std::uint16_t> indices;
  std::vector<bool> masked;
  std::uint32_t frame_index = 0;

  std::size_t stages() const noexcept { return indices.size(); }
  bool fully_masked() const noexcept;
  static SideInfo all_masked(std::size_t stages, std::uint32_t frame_index);

  bool operator==(const SideInfo&) const = default;
};

class RvqCodebooks {
 public:
  RvqCodebooks() = default;
  // Each stage holds kCodebookSize * dim values, centroid-major.
  RvqCodebooks(std::size_t dim, std::vector<std::vector<double>> stages);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t stages() const noexcept { return stages_.size(); }
  std::span<const double> centroid(std::size_t stage, std::size_t index) const;
  std::span<const double> stage_data(std::size_t stage) const { return stages_.at(stage); }
  // CRC32 over the little-endian centroid values.
  std::uint32_t checksum() const;

  bool operator==(const RvqCodebooks&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<std::vector<double>> stages_;
};

struct GaussianParams {
  std::vector<double> mu;
  std::vector<double> sigma;

  bool operator==(const GaussianParams&) const = default;
};

// Additive confidence markers for concealed latents and per-stage mask
// centroids for missing side information.
struct ConfidenceTokens {
  std::vector<double> m_high;
  std::vector<double> m_low;
  std::vector<double> m_z;  // stages * d_z, stage-major

  static ConfidenceTokens zeros(std::size_t d_y, std::size_t stages, std::size_t d_z);
  std::span<const double> mask_centroid(std::size_t stage, std::size_t d_z) const;

  bool operator==(const ConfidenceTokens&) const = default;
};

// Everything the sender and receiver must agree on, loaded from the model file.
struct CodecModel {
  std::uint16_t d_l = static_cast<std::uint16_t>(kFrameSize);
  std::uint16_t d_y = static_cast<std::uint16_t>(kFrameSize);
  std::uint16_t d_z = static_cast<std::uint16_t>(kDefaultSideDim);
  double sigma_min = 0.05 * kStepRef;
  double rho = 0.9;
  double kappa = 4.0;
  std::vector<double> sigma_table;  // d_y entries
  ConfidenceTokens tokens;
  RvqCodebooks books;

  std::size_t stages() const noexcept { return books.stages(); }
  std::size_t band_width() const noexcept { return d_z == 0 ? 0 : d_y / d_z; }
  void validate() const;

  bool operator==(const CodecModel&) const = default;
};

// Block means of y over d_z equal-width bands.
std::vector<double> hyper_analysis(const LatentCode& y, std::size_t d_z);
std::vector<double> band_means(std::span<const double> values, std::size_t bands);
// Replicates each band value across its band.
std::vector<double> broadcast_bands(std::span<const double> bands, std::size_t dim);

// Greedy residual quantization with the first `stages` codebooks (all when
// omitted). Ties go to the lowest index.
SideInfo rvq_encode(std::span<const double> v, const RvqCodebooks& books,
                    std::optional<std::size_t> stages = std::nullopt);

// Sum of the selected centroids; masked stages use mask_tokens (stage-major,
// zeros when empty). Throws corrupt_stream on an out-of-range index.
std::vector<double> rvq_decode(const SideInfo& si, const RvqCodebooks& books,
                               std::span<const double> mask_tokens = {});

// rvq_decode against the model's codebooks and mask tokens; always returns
// d_z values (zeros for a model without side information).
std::vector<double> decode_side_info(const CodecModel& model, const SideInfo& si);

// Expands decoded side information into Gaussian parameters.
//   not fully masked: mu = broadcast(z_hat), sigma = sigma_table. When a
//     context prediction is supplied its within-band detail (scaled by rho)
//     is added on top of the broadcast band means.
//   fully masked: mu = rho * context (zero without context),
//     sigma = kappa * sigma_table.
// sigma is clamped to sigma_min in both cases.
GaussianParams hyper_synthesis(const CodecModel& model, std::span<const double> z_hat,
                               const LatentCode* context, bool fully_masked);

// The MSE-optimal point prediction under the Gaussian model: its mean.
LatentCode plc_predict(const GaussianParams& theta, std::uint32_t frame_index = 0);

LatentCode apply_confidence(const LatentCode& y_p, bool z_fully_available,
                            const ConfidenceTokens& tokens);

// Frame-granular latent composition: the received latent when the frame
// arrived, the (confidence-marked) prediction when it was lost.
LatentCode compose_latent(const LatentCode* received, const LatentCode* prediction, bool lost);

struct CalibrationOptions {
  std::size_t d_z = kDefaultSideDim;
  double sigma_min = 0.05 * kStepRef;
  double rho = 0.9;
  double kappa = 4.0;
  int iterations = 25;
};

struct CalibrationResult {
  CodecModel model;
  std::vector<std::string> warnings;
};

// Seeded k-means codebook training on the corpus' side information plus the
// per-band residual scale table. Deterministic for a fixed corpus and seed.
CalibrationResult calibrate(std::span<const LatentCode> corpus, std::size_t stages,
                            std::uint64_t seed, const CalibrationOptions& options = {});

// k-means over `dim`-dimensional points (row-major); index 0 of the result is
// pinned to the zero vector.
std::vector<double> train_codebook(std::span<const double> points, std::size_t dim,
                                   std::uint64_t seed, int iterations);

}  // namespace glaris
