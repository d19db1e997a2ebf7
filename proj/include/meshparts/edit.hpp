#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "meshparts/checkpoint.hpp"
#include "meshparts/errors.hpp"
#include "meshparts/mesh.hpp"
#include "meshparts/model.hpp"
#include "meshparts/train.hpp"

namespace meshparts {

/// A mesh pushed through the encoder: its latent vector, part encodings and
/// the centroid offset removed before encoding.
struct EncodedMesh {
  DenseMatrix z;       // 1 x Z
  PartEncodings parts;
  std::array<double, 3> offset{};
};

inline void check_in_correspondence(const Checkpoint& ckpt, const Mesh& mesh) {
  const Mesh& tmpl = ckpt.hierarchy.finest();
  require(mesh.vertex_count() == tmpl.vertex_count(),
          "mesh has " + std::to_string(mesh.vertex_count()) + " vertices, checkpoint expects " +
              std::to_string(tmpl.vertex_count()));
  require(mesh.faces == tmpl.faces, "mesh topology does not match the checkpoint template");
}

inline EncodedMesh encode_mesh(const Checkpoint& ckpt, const Mesh& mesh) {
  check_in_correspondence(ckpt, mesh);
  EncodedMesh enc;
  DenseMatrix centered = mesh.vertices;
  enc.offset = center_vertices(centered);
  enc.z = encode(ckpt.params, ckpt.hierarchy, centered);
  enc.parts = project_parts(enc.z, ckpt.params.projections, ckpt.config.no_projection);
  return enc;
}

/// Decodes part encodings back to a mesh, restoring the given offset.
inline Mesh decode_parts(const Checkpoint& ckpt, const PartEncodings& parts,
                         const std::array<double, 3>& offset) {
  const DenseMatrix map = weighted_latent_map(parts, ckpt.weights.w);
  Mesh out;
  out.vertices = translated(decode(ckpt.params, ckpt.hierarchy, map), offset);
  out.faces = ckpt.hierarchy.finest().faces;
  return out;
}

inline Mesh reconstruct_mesh(const Checkpoint& ckpt, const Mesh& input) {
  const EncodedMesh enc = encode_mesh(ckpt, input);
  return decode_parts(ckpt, enc.parts, enc.offset);
}

/// Blends part k of the source toward the target: alpha 0 reproduces the
/// source reconstruction through the identical latent path, alpha 1 swaps the
/// whole part. The source's centroid is restored.
inline Mesh interpolate_part(const Checkpoint& ckpt, const Mesh& source, const Mesh& target,
                             std::size_t part, double alpha) {
  require(part < ckpt.config.parts, "part index out of range");
  alpha = std::clamp(alpha, 0.0, 1.0);
  const EncodedMesh src = encode_mesh(ckpt, source);
  const EncodedMesh tgt = encode_mesh(ckpt, target);
  PartEncodings blended = src.parts;
  if (alpha == 1.0) {
    for (std::size_t j = 0; j < blended.rows.cols; ++j)
      blended.rows(part, j) = tgt.parts.rows(part, j);
  } else if (alpha != 0.0) {
    for (std::size_t j = 0; j < blended.rows.cols; ++j)
      blended.rows(part, j) =
          (1.0 - alpha) * src.parts.rows(part, j) + alpha * tgt.parts.rows(part, j);
  }
  return decode_parts(ckpt, blended, src.offset);
}

/// Takes the listed part encodings from the target, the rest from the source.
/// Swapping every part is definitionally the target's reconstruction.
inline Mesh swap_parts(const Checkpoint& ckpt, const Mesh& source, const Mesh& target,
                       const std::vector<std::size_t>& parts) {
  require(!parts.empty(), "swap_parts: part subset must be nonempty");
  for (std::size_t k : parts) require(k < ckpt.config.parts, "part index out of range");
  std::vector<char> swap(ckpt.config.parts, 0);
  for (std::size_t k : parts) swap[k] = 1;
  if (std::all_of(swap.begin(), swap.end(), [](char c) { return c != 0; }))
    return reconstruct_mesh(ckpt, target);

  const EncodedMesh src = encode_mesh(ckpt, source);
  const EncodedMesh tgt = encode_mesh(ckpt, target);
  PartEncodings mixed = src.parts;
  for (std::size_t k = 0; k < swap.size(); ++k) {
    if (!swap[k]) continue;
    for (std::size_t j = 0; j < mixed.rows.cols; ++j) mixed.rows(k, j) = tgt.parts.rows(k, j);
  }
  return decode_parts(ckpt, mixed, src.offset);
}

/// Coarse per-part weights transported to the finest level through the up
/// matrices (N0 x K).
inline DenseMatrix upsample_weights(const Hierarchy& hierarchy, const DenseMatrix& weights) {
  DenseMatrix fine = weights;
  for (std::size_t t = hierarchy.transitions(); t-- > 0;)
    fine = hierarchy.up[t].multiply(fine);
  return fine;
}

struct LocalityResult {
  std::vector<double> ratios;  // per part
  double median = 0.0;
};

/// Locality of part edits: for each part, mean displacement between the
/// alpha=0 and alpha=1 decodes over the top-decile cohort of the up-sampled
/// reference weights, divided by the bottom-half cohort mean. The reference
/// weights default to the checkpoint's own local weights but may be fixed
/// externally to compare ablation variants over identical cohorts.
inline LocalityResult locality_ratios(const Checkpoint& ckpt, const Mesh& source,
                                      const Mesh& target,
                                      const DenseMatrix* reference_weights = nullptr) {
  const DenseMatrix& coarse_w = reference_weights ? *reference_weights : ckpt.weights.w;
  require(coarse_w.rows == ckpt.hierarchy.coarsest().vertex_count(),
          "locality: reference weights do not match the hierarchy");
  const DenseMatrix fine_w = upsample_weights(ckpt.hierarchy, coarse_w);
  const std::size_t n = fine_w.rows;
  const std::size_t top_count = (n + 9) / 10;
  const std::size_t bottom_count = n / 2;

  LocalityResult result;
  for (std::size_t k = 0; k < coarse_w.cols; ++k) {
    const Mesh at0 = interpolate_part(ckpt, source, target, k, 0.0);
    const Mesh at1 = interpolate_part(ckpt, source, target, k, 1.0);
    std::vector<double> disp(n);
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < 3; ++j) {
        const double d = at0.vertices(i, j) - at1.vertices(i, j);
        d2 += d * d;
      }
      disp[i] = std::sqrt(d2);
    }
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      if (fine_w(a, k) != fine_w(b, k)) return fine_w(a, k) > fine_w(b, k);
      return a < b;
    });
    double top = 0.0, bottom = 0.0;
    for (std::size_t i = 0; i < top_count; ++i) top += disp[idx[i]];
    for (std::size_t i = n - bottom_count; i < n; ++i) bottom += disp[idx[i]];
    top /= static_cast<double>(top_count);
    bottom /= static_cast<double>(bottom_count);
    result.ratios.push_back(bottom > 0.0 ? top / bottom
                                         : (top > 0.0 ? std::numeric_limits<double>::infinity()
                                                      : 1.0));
  }
  std::vector<double> sorted = result.ratios;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  result.median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  return result;
}

}  // namespace meshparts
