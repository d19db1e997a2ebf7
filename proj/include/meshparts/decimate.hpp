#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <queue>
#include <vector>

#include "meshparts/errors.hpp"
#include "meshparts/mesh.hpp"
#include "meshparts/sparse_matrix.hpp"

namespace meshparts {

/// Symmetric 4x4 error quadric stored as its upper triangle.
struct Quadric {
  std::array<double, 10> q{};  // xx xy xz xd yy yz yd zz zd dd

  void add_plane(double nx, double ny, double nz, double d, double weight) {
    q[0] += weight * nx * nx;
    q[1] += weight * nx * ny;
    q[2] += weight * nx * nz;
    q[3] += weight * nx * d;
    q[4] += weight * ny * ny;
    q[5] += weight * ny * nz;
    q[6] += weight * ny * d;
    q[7] += weight * nz * nz;
    q[8] += weight * nz * d;
    q[9] += weight * d * d;
  }

  Quadric& operator+=(const Quadric& o) {
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += o.q[i];
    return *this;
  }

  double evaluate(double x, double y, double z) const {
    return q[0] * x * x + q[4] * y * y + q[7] * z * z + 2.0 * q[1] * x * y +
           2.0 * q[2] * x * z + 2.0 * q[5] * y * z + 2.0 * q[3] * x + 2.0 * q[6] * y +
           2.0 * q[8] * z + q[9];
  }
};

struct DecimateResult {
  Mesh coarse;
  SparseMatrix down;                // target x N binary row selector
  std::vector<std::uint32_t> kept;  // coarse row -> original vertex index
};

namespace detail {

class QuadricCollapser {
 public:
  QuadricCollapser(const Mesh& mesh) : mesh_(mesh) {
    const std::size_t n = mesh.vertex_count();
    alive_vertex_.assign(n, true);
    generation_.assign(n, 0);
    quadrics_.assign(n, Quadric{});
    vertex_faces_.assign(n, {});
    faces_.reserve(mesh.faces.size());
    for (std::uint32_t f = 0; f < mesh.faces.size(); ++f) {
      faces_.push_back(mesh.faces[f]);
      face_alive_.push_back(true);
      for (std::uint32_t v : mesh.faces[f]) vertex_faces_[v].push_back(f);
    }
    accumulate_quadrics();
  }

  /// Greedy minimum-cost edge contractions (collapse to an endpoint) until
  /// `target` vertices remain or no legal contraction is left.
  std::size_t run(std::size_t target) {
    std::size_t alive_count = alive_vertex_.size();
    seed_heap();
    bool collapsed_since_flush = true;
    while (alive_count > target) {
      if (heap_.empty()) {
        if (!deferred_.empty() && collapsed_since_flush) {
          flush_deferred();
          collapsed_since_flush = false;
          continue;
        }
        break;  // nothing legal remains
      }
      const Entry e = heap_.top();
      heap_.pop();
      if (!alive_vertex_[e.u] || !alive_vertex_[e.v]) continue;
      if (generation_[e.u] != e.gen_u || generation_[e.v] != e.gen_v) {
        if (is_edge(e.u, e.v)) push_edge(e.u, e.v);  // refresh with current cost
        continue;
      }
      if (!is_edge(e.u, e.v)) continue;

      std::uint32_t keep, gone;
      choose_endpoint(e.u, e.v, keep, gone);
      if (!collapse_legal(keep, gone)) {
        deferred_.push_back({e.u, e.v});
        continue;
      }
      collapse(keep, gone);
      --alive_count;
      collapsed_since_flush = true;
      if (!deferred_.empty()) {
        flush_deferred();
        collapsed_since_flush = false;
      }
    }
    return alive_count;
  }

  const std::vector<bool>& alive_vertices() const { return alive_vertex_; }
  const std::vector<std::array<std::uint32_t, 3>>& faces() const { return faces_; }
  const std::vector<bool>& face_alive() const { return face_alive_; }

 private:
  struct Entry {
    double cost;
    std::uint32_t u, v;
    std::uint64_t gen_u, gen_v;
    // ties break on the lexicographically smallest vertex pair
    bool operator>(const Entry& o) const {
      if (cost != o.cost) return cost > o.cost;
      if (u != o.u) return u > o.u;
      return v > o.v;
    }
  };

  void accumulate_quadrics() {
    for (std::size_t f = 0; f < faces_.size(); ++f) {
      const auto& t = faces_[f];
      std::array<double, 3> p0{}, e1{}, e2{};
      for (std::size_t j = 0; j < 3; ++j) {
        p0[j] = mesh_.vertices(t[0], j);
        e1[j] = mesh_.vertices(t[1], j) - p0[j];
        e2[j] = mesh_.vertices(t[2], j) - p0[j];
      }
      const double nx = e1[1] * e2[2] - e1[2] * e2[1];
      const double ny = e1[2] * e2[0] - e1[0] * e2[2];
      const double nz = e1[0] * e2[1] - e1[1] * e2[0];
      const double len = std::sqrt(nx * nx + ny * ny + nz * nz);
      if (len == 0.0) continue;  // degenerate geometry contributes nothing
      const double area = 0.5 * len;
      const double d = -(nx * p0[0] + ny * p0[1] + nz * p0[2]) / len;
      for (std::uint32_t v : t)
        quadrics_[v].add_plane(nx / len, ny / len, nz / len, d, area);
    }
  }

  double endpoint_cost(std::uint32_t u, std::uint32_t v, std::uint32_t at) const {
    Quadric sum = quadrics_[u];
    sum += quadrics_[v];
    return sum.evaluate(mesh_.vertices(at, 0), mesh_.vertices(at, 1), mesh_.vertices(at, 2));
  }

  void choose_endpoint(std::uint32_t u, std::uint32_t v, std::uint32_t& keep,
                       std::uint32_t& gone) const {
    const double cost_u = endpoint_cost(u, v, u);
    const double cost_v = endpoint_cost(u, v, v);
    // keep the endpoint whose position yields the lower cost; ties keep the
    // lower index
    if (cost_u < cost_v || (cost_u == cost_v && u < v)) {
      keep = u;
      gone = v;
    } else {
      keep = v;
      gone = u;
    }
  }

  void push_edge(std::uint32_t a, std::uint32_t b) {
    const std::uint32_t u = std::min(a, b), v = std::max(a, b);
    const double cost = std::min(endpoint_cost(u, v, u), endpoint_cost(u, v, v));
    heap_.push({cost, u, v, generation_[u], generation_[v]});
  }

  void seed_heap() {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (std::size_t f = 0; f < faces_.size(); ++f) {
      if (!face_alive_[f]) continue;
      const auto& t = faces_[f];
      for (std::size_t j = 0; j < 3; ++j) {
        const std::uint32_t a = t[j], b = t[(j + 1) % 3];
        edges.emplace_back(std::min(a, b), std::max(a, b));
      }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (const auto& [u, v] : edges) push_edge(u, v);
  }

  bool is_edge(std::uint32_t u, std::uint32_t v) const {
    for (std::uint32_t f : vertex_faces_[u]) {
      if (!face_alive_[f]) continue;
      const auto& t = faces_[f];
      if (t[0] == v || t[1] == v || t[2] == v) return true;
    }
    return false;
  }

  std::vector<std::uint32_t> neighbors(std::uint32_t v) const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t f : vertex_faces_[v]) {
      if (!face_alive_[f]) continue;
      for (std::uint32_t w : faces_[f]) {
        if (w == v) continue;
        bool found = false;
        for (std::uint32_t x : out)
          if (x == w) { found = true; break; }
        if (!found) out.push_back(w);
      }
    }
    return out;
  }

  bool collapse_legal(std::uint32_t keep, std::uint32_t gone) const {
    // link condition: the common neighbors of the endpoints must be exactly
    // the opposite vertices of the faces shared by the edge
    std::size_t shared_faces = 0;
    for (std::uint32_t f : vertex_faces_[gone]) {
      if (!face_alive_[f]) continue;
      const auto& t = faces_[f];
      if (t[0] == keep || t[1] == keep || t[2] == keep) ++shared_faces;
    }
    if (shared_faces == 0) return false;
    const auto keep_nbrs = neighbors(keep);
    std::size_t common = 0;
    for (std::uint32_t w : neighbors(gone)) {
      if (w == keep) continue;
      for (std::uint32_t x : keep_nbrs)
        if (x == w) { ++common; break; }
    }
    if (common != shared_faces) return false;

    // reject contractions that flip or duplicate a surviving face
    for (std::uint32_t f : vertex_faces_[gone]) {
      if (!face_alive_[f]) continue;
      auto t = faces_[f];
      if (t[0] == keep || t[1] == keep || t[2] == keep) continue;  // will be removed
      std::array<double, 3> before = face_normal(t);
      for (std::uint32_t& w : t)
        if (w == gone) w = keep;
      const std::array<double, 3> after = face_normal(t);
      const double dot = before[0] * after[0] + before[1] * after[1] + before[2] * after[2];
      if (dot <= 0.0) return false;
      if (face_exists(t)) return false;
    }
    return true;
  }

  std::array<double, 3> face_normal(const std::array<std::uint32_t, 3>& t) const {
    std::array<double, 3> e1{}, e2{};
    for (std::size_t j = 0; j < 3; ++j) {
      e1[j] = mesh_.vertices(t[1], j) - mesh_.vertices(t[0], j);
      e2[j] = mesh_.vertices(t[2], j) - mesh_.vertices(t[0], j);
    }
    return {e1[1] * e2[2] - e1[2] * e2[1], e1[2] * e2[0] - e1[0] * e2[2],
            e1[0] * e2[1] - e1[1] * e2[0]};
  }

  bool face_exists(const std::array<std::uint32_t, 3>& t) const {
    auto sorted = t;
    std::sort(sorted.begin(), sorted.end());
    for (std::uint32_t f : vertex_faces_[t[0]]) {
      if (!face_alive_[f]) continue;
      auto other = faces_[f];
      std::sort(other.begin(), other.end());
      if (other == sorted) return true;
    }
    return false;
  }

  void collapse(std::uint32_t keep, std::uint32_t gone) {
    quadrics_[keep] += quadrics_[gone];
    for (std::uint32_t f : vertex_faces_[gone]) {
      if (!face_alive_[f]) continue;
      auto& t = faces_[f];
      if (t[0] == keep || t[1] == keep || t[2] == keep) {
        face_alive_[f] = false;
        detach(f, keep);
        for (std::uint32_t w : t)
          if (w != gone && w != keep) detach(f, w);
      } else {
        for (std::uint32_t& w : t)
          if (w == gone) w = keep;
        vertex_faces_[keep].push_back(f);
      }
    }
    vertex_faces_[gone].clear();
    alive_vertex_[gone] = false;
    ++generation_[keep];
    for (std::uint32_t w : neighbors(keep)) push_edge(keep, w);
  }

  void detach(std::uint32_t face, std::uint32_t vertex) {
    auto& list = vertex_faces_[vertex];
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i] == face) {
        list[i] = list.back();
        list.pop_back();
        return;
      }
    }
  }

  void flush_deferred() {
    for (const auto& [u, v] : deferred_) {
      if (alive_vertex_[u] && alive_vertex_[v] && is_edge(u, v)) push_edge(u, v);
    }
    deferred_.clear();
  }

  const Mesh& mesh_;
  std::vector<Quadric> quadrics_;
  std::vector<std::array<std::uint32_t, 3>> faces_;
  std::vector<bool> face_alive_;
  std::vector<bool> alive_vertex_;
  std::vector<std::uint64_t> generation_;
  std::vector<std::vector<std::uint32_t>> vertex_faces_;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> deferred_;
};

}  // namespace detail

/// Quadric-error decimation by edge contraction onto an endpoint, so every
/// coarse vertex keeps an original position and the down-sampling matrix is
/// a binary row selector. Stops early if no legal contraction remains; the
/// achieved count is kept.size().
inline DecimateResult decimate(const Mesh& mesh, std::size_t target_count) {
  mesh.validate();
  const std::size_t n = mesh.vertex_count();
  require(target_count >= 3 && target_count <= n,
          "decimate: target must be in [3, vertex_count]");

  DecimateResult result;
  if (target_count == n) {
    result.coarse = mesh;
    result.down = SparseMatrix::identity(n);
    result.kept.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) result.kept[i] = i;
    return result;
  }

  detail::QuadricCollapser collapser(mesh);
  collapser.run(target_count);

  std::vector<std::uint32_t> old_to_new(n, 0);
  for (std::uint32_t v = 0; v < n; ++v) {
    if (collapser.alive_vertices()[v]) {
      old_to_new[v] = static_cast<std::uint32_t>(result.kept.size());
      result.kept.push_back(v);
    }
  }

  std::vector<Triplet> selector;
  selector.reserve(result.kept.size());
  result.coarse.vertices = DenseMatrix(result.kept.size(), 3);
  for (std::size_t r = 0; r < result.kept.size(); ++r) {
    selector.push_back({r, result.kept[r], 1.0});
    for (std::size_t j = 0; j < 3; ++j)
      result.coarse.vertices(r, j) = mesh.vertices(result.kept[r], j);
  }
  result.down = SparseMatrix::from_triplets(result.kept.size(), n, std::move(selector));

  for (std::size_t f = 0; f < collapser.faces().size(); ++f) {
    if (!collapser.face_alive()[f]) continue;
    const auto& t = collapser.faces()[f];
    result.coarse.faces.push_back({old_to_new[t[0]], old_to_new[t[1]], old_to_new[t[2]]});
  }
  return result;
}

}  // namespace meshparts
