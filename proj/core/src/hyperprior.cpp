#include "glaris/hyperprior.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "glaris/byte_io.hpp"
#include "glaris/error.hpp"
#include "glaris/rng.hpp"

namespace glaris {

bool SideInfo::fully_masked() const noexcept {
  return std::all_of(masked.begin(), masked.end(), [](bool m) { return m; });
}

SideInfo SideInfo::all_masked(std::size_t stages, std::uint32_t frame_index) {
  SideInfo si;
  si.indices.assign(stages, 0);
  si.masked.assign(stages, true);
  si.frame_index = frame_index;
  return si;
}

RvqCodebooks::RvqCodebooks(std::size_t dim, std::vector<std::vector<double>> stages)
    : dim_(dim), stages_(std::move(stages)) {
  for (const auto& s : stages_) {
    if (s.size() != kCodebookSize * dim_) {
      throw Error(ErrorCode::configuration, "codebook stage has wrong size");
    }
    for (double v : s) {
      if (!std::isfinite(v)) throw Error(ErrorCode::configuration, "non-finite centroid");
    }
  }
}

std::span<const double> RvqCodebooks::centroid(std::size_t stage, std::size_t index) const {
  return std::span<const double>(stages_.at(stage)).subspan(index * dim_, dim_);
}

std::uint32_t RvqCodebooks::checksum() const {
  ByteWriter w;
  for (const auto& s : stages_) {
    for (double v : s) w.f64(v);
  }
  return crc32(w.data());
}

ConfidenceTokens ConfidenceTokens::zeros(std::size_t d_y, std::size_t stages, std::size_t d_z) {
  ConfidenceTokens t;
  t.m_high.assign(d_y, 0.0);
  t.m_low.assign(d_y, 0.0);
  t.m_z.assign(stages * d_z, 0.0);
  return t;
}

std::span<const double> ConfidenceTokens::mask_centroid(std::size_t stage, std::size_t d_z) const {
  if ((stage + 1) * d_z > m_z.size()) return {};
  return std::span<const double>(m_z).subspan(stage * d_z, d_z);
}

void CodecModel::validate() const {
  if (d_l == 0 || d_y == 0 || d_z == 0) throw Error(ErrorCode::configuration, "zero model dimension");
  if (d_y != d_l) throw Error(ErrorCode::configuration, "d_y must equal d_l in the reference profile");
  if (d_y % d_z != 0) {
    throw Error(ErrorCode::configuration, "d_y (" + std::to_string(d_y) +
                                              ") must be divisible by d_z (" + std::to_string(d_z) + ")");
  }
  if (stages() > kMaxStages) throw Error(ErrorCode::configuration, "too many RVQ stages");
  if (stages() > 0 && books.dim() != d_z) throw Error(ErrorCode::configuration, "codebook dimension != d_z");
  if (!(sigma_min > 0.0)) throw Error(ErrorCode::configuration, "sigma_min must be positive");
  if (!std::isfinite(rho) || !(kappa > 0.0)) throw Error(ErrorCode::configuration, "invalid rho/kappa");
  if (sigma_table.size() != d_y) throw Error(ErrorCode::configuration, "sigma_table must have d_y entries");
  if (tokens.m_high.size() != d_y || tokens.m_low.size() != d_y) {
    throw Error(ErrorCode::configuration, "confidence tokens must have d_y entries");
  }
  if (tokens.m_z.size() != stages() * d_z) {
    throw Error(ErrorCode::configuration, "mask tokens must have stages * d_z entries");
  }
}

std::vector<double> band_means(std::span<const double> values, std::size_t bands) {
  if (bands == 0 || values.size() % bands != 0) {
    throw Error(ErrorCode::configuration, "latent dimension " + std::to_string(values.size()) +
                                              " is not divisible into " + std::to_string(bands) +
                                              " bands");
  }
  const std::size_t width = values.size() / bands;
  std::vector<double> out(bands, 0.0);
  for (std::size_t b = 0; b < bands; ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < width; ++i) acc += values[b * width + i];
    out[b] = acc / static_cast<double>(width);
  }
  return out;
}

std::vector<double> hyper_analysis(const LatentCode& y, std::size_t d_z) {
  return band_means(y.coeffs, d_z);
}

std::vector<double> broadcast_bands(std::span<const double> bands, std::size_t dim) {
  if (bands.empty() || dim % bands.size() != 0) {
    throw Error(ErrorCode::configuration, "cannot broadcast bands to dimension " + std::to_string(dim));
  }
  const std::size_t width = dim / bands.size();
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = bands[i / width];
  return out;
}

SideInfo rvq_encode(std::span<const double> v, const RvqCodebooks& books,
                    std::optional<std::size_t> stages) {
  const std::size_t n_stages = stages.value_or(books.stages());
  if (n_stages > books.stages()) {
    throw Error(ErrorCode::configuration, "requested " + std::to_string(n_stages) +
                                              " RVQ stages but model has " +
                                              std::to_string(books.stages()));
  }
  if (n_stages > 0 && v.size() != books.dim()) {
    throw Error(ErrorCode::configuration, "side-info dimension mismatch");
  }
  SideInfo si;
  si.indices.resize(n_stages);
  si.masked.assign(n_stages, false);
  std::vector<double> residual(v.begin(), v.end());
  for (std::size_t s = 0; s < n_stages; ++s) {
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < kCodebookSize; ++k) {
      const auto c = books.centroid(s, k);
      double d = 0.0;
      for (std::size_t i = 0; i < residual.size(); ++i) {
        const double diff = residual[i] - c[i];
        d += diff * diff;
      }
      if (d < best_dist) {
        best_dist = d;
        best = k;
      }
    }
    si.indices[s] = static_cast<std::uint16_t>(best);
    const auto c = books.centroid(s, best);
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] -= c[i];
  }
  return si;
}

std::vector<double> rvq_decode(const SideInfo& si, const RvqCodebooks& books,
                               std::span<const double> mask_tokens) {
  if (si.stages() > books.stages()) {
    throw Error(ErrorCode::corrupt_stream, "side info has more stages than the model");
  }
  if (si.masked.size() != si.indices.size()) {
    throw Error(ErrorCode::corrupt_stream, "side-info mask length mismatch");
  }
  const std::size_t dim = books.dim();
  std::vector<double> z(dim, 0.0);
  for (std::size_t s = 0; s < si.stages(); ++s) {
    if (si.masked[s]) {
      if (mask_tokens.size() >= (s + 1) * dim) {
        for (std::size_t i = 0; i < dim; ++i) z[i] += mask_tokens[s * dim + i];
      }
      continue;
    }
    if (si.indices[s] >= kCodebookSize) {
      throw Error(ErrorCode::corrupt_stream,
                  "side-info index " + std::to_string(si.indices[s]) + " out of range");
    }
    const auto c = books.centroid(s, si.indices[s]);
    for (std::size_t i = 0; i < dim; ++i) z[i] += c[i];
  }
  return z;
}

std::vector<double> decode_side_info(const CodecModel& model, const SideInfo& si) {
  if (model.stages() == 0 || si.stages() == 0) return std::vector<double>(model.d_z, 0.0);
  return rvq_decode(si, model.books, model.tokens.m_z);
}

GaussianParams hyper_synthesis(const CodecModel& model, std::span<const double> z_hat,
                               const LatentCode* context, bool fully_masked) {
  const std::size_t d_y = model.d_y;
  GaussianParams theta;
  theta.sigma.resize(d_y);
  if (context != nullptr && context->size() != d_y) {
    throw Error(ErrorCode::configuration, "context prediction has wrong dimension");
  }
  if (fully_masked) {
    theta.mu.assign(d_y, 0.0);
    if (context != nullptr) {
      for (std::size_t i = 0; i < d_y; ++i) theta.mu[i] = model.rho * context->coeffs[i];
    }
    for (std::size_t i = 0; i < d_y; ++i) {
      theta.sigma[i] = std::max(model.kappa * model.sigma_table[i], model.sigma_min);
    }
    return theta;
  }
  if (z_hat.size() != model.d_z) throw Error(ErrorCode::configuration, "z_hat has wrong dimension");
  theta.mu = broadcast_bands(z_hat, d_y);
  if (context != nullptr) {
    const auto means = band_means(context->coeffs, model.d_z);
    const std::size_t width = model.band_width();
    for (std::size_t i = 0; i < d_y; ++i) {
      theta.mu[i] += model.rho * (context->coeffs[i] - means[i / width]);
    }
  }
  for (std::size_t i = 0; i < d_y; ++i) {
    theta.sigma[i] = std::max(model.sigma_table[i], model.sigma_min);
  }
  return theta;
}

LatentCode plc_predict(const GaussianParams& theta, std::uint32_t frame_index) {
  return LatentCode{theta.mu, frame_index};
}

LatentCode apply_confidence(const LatentCode& y_p, bool z_fully_available,
                            const ConfidenceTokens& tokens) {
  const auto& token = z_fully_available ? tokens.m_high : tokens.m_low;
  if (token.size() != y_p.size()) throw Error(ErrorCode::configuration, "confidence token size mismatch");
  LatentCode out = y_p;
  for (std::size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] += token[i];
  return out;
}

LatentCode compose_latent(const LatentCode* received, const LatentCode* prediction, bool lost) {
  if (lost) {
    if (prediction == nullptr) throw Error(ErrorCode::internal, "lost frame without a prediction");
    return *prediction;
  }
  if (received == nullptr) throw Error(ErrorCode::internal, "received frame without a latent");
  return *received;
}

std::vector<double> train_codebook(std::span<const double> points, std::size_t dim,
                                   std::uint64_t seed, int iterations) {
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const std::size_t n = dim == 0 ? 0 : points.size() / dim;
  std::vector<double> centroids(kCodebookSize * dim, 0.0);
  if (n == 0) return centroids;

  Eigen::Map<const Matrix> x(points.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));

  // Seeding: slot 0 is the zero vector; each further slot draws a point with
  // probability proportional to its squared distance from the nearest chosen
  // centroid. Once every point is covered the remaining slots duplicate points
  // in order.
  Rng rng(seed, 0x6b6d65616e73ull);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = x.row(static_cast<Eigen::Index>(i)).squaredNorm();
  std::size_t fallback = 0;
  for (std::size_t k = 1; k < kCodebookSize; ++k) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        target -= d2[i];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = fallback++ % n;
    }
    const auto row = x.row(static_cast<Eigen::Index>(pick));
    for (std::size_t j = 0; j < dim; ++j) centroids[k * dim + j] = row(static_cast<Eigen::Index>(j));
    for (std::size_t i = 0; i < n; ++i) {
      double d = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double diff = points[i * dim + j] - centroids[k * dim + j];
        d += diff * diff;
      }
      d2[i] = std::min(d2[i], d);
    }
  }

  // Lloyd iterations; the pinned zero centroid never moves and empty clusters
  // keep their previous centroid.
  Eigen::VectorXd x_norm = x.rowwise().squaredNorm();
  std::vector<std::size_t> assign(n, 0);
  for (int it = 0; it < iterations; ++it) {
    Eigen::Map<const Matrix> c(centroids.data(), static_cast<Eigen::Index>(kCodebookSize),
                               static_cast<Eigen::Index>(dim));
    const Eigen::VectorXd c_norm = c.rowwise().squaredNorm();
    constexpr Eigen::Index kChunk = 512;
    bool changed = false;
    for (Eigen::Index start = 0; start < static_cast<Eigen::Index>(n); start += kChunk) {
      const Eigen::Index rows = std::min<Eigen::Index>(kChunk, static_cast<Eigen::Index>(n) - start);
      Matrix dist = x.middleRows(start, rows) * c.transpose();
      for (Eigen::Index r = 0; r < rows; ++r) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(kCodebookSize); ++k) {
          const double d = x_norm(start + r) - 2.0 * dist(r, k) + c_norm(k);
          if (d < best_d) {
            best_d = d;
            best = static_cast<std::size_t>(k);
          }
        }
        const auto i = static_cast<std::size_t>(start + r);
        if (assign[i] != best || it == 0) changed = true;
        assign[i] = best;
      }
    }
    if (!changed) break;
    std::vector<double> sums(kCodebookSize * dim, 0.0);
    std::vector<std::size_t> counts(kCodebookSize, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      for (std::size_t j = 0; j < dim; ++j) sums[assign[i] * dim + j] += points[i * dim + j];
    }
    for (std::size_t k = 1; k < kCodebookSize; ++k) {
      if (counts[k] == 0) continue;
      for (std::size_t j = 0; j < dim; ++j) {
        centroids[k * dim + j] = sums[k * dim + j] / static_cast<double>(counts[k]);
      }
    }
  }
  return centroids;
}

CalibrationResult calibrate(std::span<const LatentCode> corpus, std::size_t stages,
                            std::uint64_t seed, const CalibrationOptions& options) {
  if (corpus.empty()) throw Error(ErrorCode::empty_input, "empty calibration corpus");
  if (stages > kMaxStages) throw Error(ErrorCode::configuration, "at most 8 RVQ stages are supported");
  const std::size_t d_y = corpus.front().size();
  const std::size_t d_z = options.d_z;
  if (d_z == 0 || d_y % d_z != 0) {
    throw Error(ErrorCode::configuration, "d_y must be divisible by d_z");
  }
  for (const auto& y : corpus) {
    if (y.size() != d_y) throw Error(ErrorCode::configuration, "corpus vectors differ in dimension");
  }

  CalibrationResult result;
  if (stages > 0 && corpus.size() < 100 * kCodebookSize) {
    result.warnings.push_back("calibration corpus has " + std::to_string(corpus.size()) +
                              " vectors (recommended >= " + std::to_string(100 * kCodebookSize) +
                              "); duplicated centroids are possible");
  }

  const std::size_t n = corpus.size();
  std::vector<double> residual(n * d_z);
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = hyper_analysis(corpus[i], d_z);
    std::copy(z.begin(), z.end(), residual.begin() + static_cast<std::ptrdiff_t>(i * d_z));
  }

  std::vector<std::vector<double>> books;
  for (std::size_t s = 0; s < stages; ++s) {
    auto book = train_codebook(residual, d_z, splitmix64(seed + s), options.iterations);
    RvqCodebooks single(d_z, {book});
    for (std::size_t i = 0; i < n; ++i) {
      std::span<double> r(residual.data() + i * d_z, d_z);
      const auto si = rvq_encode(r, single);
      const auto c = single.centroid(0, si.indices[0]);
      for (std::size_t j = 0; j < d_z; ++j) r[j] -= c[j];
    }
    books.push_back(std::move(book));
  }

  CodecModel& model = result.model;
  model.d_l = static_cast<std::uint16_t>(d_y);
  model.d_y = static_cast<std::uint16_t>(d_y);
  model.d_z = static_cast<std::uint16_t>(d_z);
  model.sigma_min = options.sigma_min;
  model.rho = options.rho;
  model.kappa = options.kappa;
  model.books = RvqCodebooks(d_z, std::move(books));
  model.tokens = ConfidenceTokens::zeros(d_y, stages, d_z);

  // Per-band RMS residual around the hyperprior mean.
  const std::size_t width = d_y / d_z;
  std::vector<double> sq(d_z, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto si = rvq_encode(hyper_analysis(corpus[i], d_z), model.books);
    const auto z_hat = decode_side_info(model, si);
    for (std::size_t k = 0; k < d_y; ++k) {
      const double e = corpus[i].coeffs[k] - z_hat[k / width];
      sq[k / width] += e * e;
    }
  }
  model.sigma_table.resize(d_y);
  for (std::size_t k = 0; k < d_y; ++k) {
    const double rms = std::sqrt(sq[k / width] / static_cast<double>(n * width));
    model.sigma_table[k] = std::max(rms, options.sigma_min);
  }
  model.validate();
  return result;
}

}  // namespace glaris
