#include <algorithm>
#include <cassert>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "csparts/errors.hpp"
#include "csparts/parts.hpp"

namespace csparts {

std::size_t default_nms_radius(std::size_t rows, std::size_t cols) {
  return std::max<std::size_t>(3, std::max(rows, cols) / 8);
}

std::vector<Peak> find_peaks(const SparseSaliency& s, std::size_t k, std::size_t radius) {
  if (k == 0) throw ArgumentError("peak count k must be at least 1");
  if (radius == 0) throw ArgumentError("suppression radius must be at least 1");
  std::vector<std::size_t> order(s.pixels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = s.pixels[a];
    const auto& pb = s.pixels[b];
    if (pa.value != pb.value) return pa.value > pb.value;
    if (pa.y != pb.y) return pa.y < pb.y;
    return pa.x < pb.x;
  });

  std::vector<std::uint8_t> suppressed(s.rows * s.cols, 0);
  std::vector<Peak> peaks;
  for (std::size_t idx : order) {
    if (peaks.size() == k) break;
    const auto& p = s.pixels[idx];
    if (suppressed[p.y * s.cols + p.x]) continue;
    peaks.push_back({p.x, p.y, p.value, peaks.size() + 1});
    const std::size_t y0 = p.y >= radius ? p.y - radius : 0, y1 = std::min(s.rows - 1, p.y + radius);
    const std::size_t x0 = p.x >= radius ? p.x - radius : 0, x1 = std::min(s.cols - 1, p.x + radius);
    for (std::size_t y = y0; y <= y1; ++y)
      for (std::size_t x = x0; x <= x1; ++x) suppressed[y * s.cols + x] = 1;
  }
  return peaks;
}

ClusterPoint cluster_features(const SalientPixel& p, const Image& img) {
  const std::size_t c = img.channels();
  const float r = img.at(p.y, p.x, 0);
  const float g = c == 3 ? img.at(p.y, p.x, 1) : r;
  const float b = c == 3 ? img.at(p.y, p.x, 2) : r;
  return {static_cast<double>(p.x) / static_cast<double>(img.width()),
          static_cast<double>(p.y) / static_cast<double>(img.height()),
          static_cast<double>(p.value),
          static_cast<double>(r),
          static_cast<double>(g),
          static_cast<double>(b)};
}

namespace {

double weighted_dist(const ClusterPoint& a, const ClusterPoint& b, const std::array<double, kClusterDims>& w) {
  double d = 0.0;
  for (std::size_t j = 0; j < kClusterDims; ++j) d += w[j] * (a[j] - b[j]) * (a[j] - b[j]);
  return d;
}

}  // namespace

ClusterAssignment cluster_pixels(const SparseSaliency& s, const Image& img, const std::vector<Peak>& peaks,
                                 const ClusterConfig& cfg) {
  if (s.pixels.empty()) throw ArgumentError("clustering needs at least one retained pixel");
  if (peaks.empty()) throw ArgumentError("clustering needs at least one peak");
  if (img.height() != s.rows || img.width() != s.cols) throw ArgumentError("image and saliency sizes differ");

  const std::size_t n = s.pixels.size(), k = peaks.size();
  std::vector<ClusterPoint> feats(n);
  for (std::size_t i = 0; i < n; ++i) feats[i] = cluster_features(s.pixels[i], img);

  ClusterAssignment a;
  a.cluster_count = k;
  a.width = s.cols;
  a.height = s.rows;
  a.centroids.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    const auto& pk = peaks[c];
    auto it = std::find_if(s.pixels.begin(), s.pixels.end(),
                           [&](const SalientPixel& p) { return p.x == pk.x && p.y == pk.y; });
    if (it == s.pixels.end()) throw ArgumentError("peak is not a retained pixel");
    a.centroids[c] = feats[static_cast<std::size_t>(it - s.pixels.begin())];
    a.seed_rank.push_back(pk.rank);
  }

  std::vector<std::size_t> assign(n, 0);
  auto assign_step = [&]() {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = weighted_dist(feats[i], a.centroids[0], cfg.weights);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = weighted_dist(feats[i], a.centroids[c], cfg.weights);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      changed |= assign[i] != best;
      assign[i] = best;
    }
    return changed;
  };
  auto cost = [&]() {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += weighted_dist(feats[i], a.centroids[assign[i]], cfg.weights);
    return total;
  };
  // Returns the indices of clusters left without members.
  auto update_means = [&]() {
    std::vector<ClusterPoint> sum(k, ClusterPoint{});
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++count[assign[i]];
      for (std::size_t j = 0; j < kClusterDims; ++j) sum[assign[i]][j] += feats[i][j];
    }
    std::vector<std::size_t> empty;
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] == 0) {
        empty.push_back(c);
        continue;
      }
      for (std::size_t j = 0; j < kClusterDims; ++j) a.centroids[c][j] = sum[c][j] / static_cast<double>(count[c]);
    }
    return empty;
  };

  assign_step();
  double prev = cost();
  if (cfg.cost_observer) cfg.cost_observer(prev);
  std::size_t it = 0;
  while (it < cfg.max_iter) {
    ++it;
    for (std::size_t c : update_means()) {
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t o = 0; o < k; ++o) nearest = std::min(nearest, weighted_dist(feats[i], a.centroids[o], cfg.weights));
        if (nearest > far_d) {
          far_d = nearest;
          far = i;
        }
      }
      a.centroids[c] = feats[far];
    }
    const double after_update = cost();
    assert(after_update <= prev * (1.0 + 1e-12) + 1e-15);
    if (cfg.cost_observer) cfg.cost_observer(after_update);
    const bool changed = assign_step();
    const double after_assign = cost();
    assert(after_assign <= after_update * (1.0 + 1e-12) + 1e-15);
    if (cfg.cost_observer) cfg.cost_observer(after_assign);
    prev = after_assign;
    if (!changed) break;
  }
  update_means();
  a.iterations = it;
  a.cost = cost();

  a.pixels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = s.pixels[i];
    a.pixels[i] = {p.x,
                   p.y,
                   p.value,
                   static_cast<float>(feats[i][3]),
                   static_cast<float>(feats[i][4]),
                   static_cast<float>(feats[i][5]),
                   assign[i]};
  }
  return a;
}

PartBox expand_box(PartBox box, std::size_t min_side, std::size_t width, std::size_t height) {
  auto grow = [&](std::size_t& lo, std::size_t& hi, std::size_t limit) {
    const std::size_t side = hi - lo + 1;
    const std::size_t target = std::min(min_side, limit);
    if (side >= target) return;
    const std::size_t extra = target - side;
    // Centered growth as signed coordinates, then shifted back inside [0, limit).
    long l = static_cast<long>(lo) - static_cast<long>(extra / 2);
    long h = static_cast<long>(hi) + static_cast<long>(extra - extra / 2);
    if (l < 0) {
      h -= l;
      l = 0;
    }
    if (h > static_cast<long>(limit) - 1) {
      l -= h - (static_cast<long>(limit) - 1);
      h = static_cast<long>(limit) - 1;
    }
    lo = static_cast<std::size_t>(std::max(0L, l));
    hi = static_cast<std::size_t>(h);
  };
  grow(box.x0, box.x1, width);
  grow(box.y0, box.y1, height);
  return box;
}

std::vector<PartBox> boxes_from_clusters(const ClusterAssignment& a, const BoxConfig& cfg) {
  const double q = cfg.mass_quantile;
  if (!(q > 0.0 && q <= 1.0)) throw ArgumentError("mass quantile q must lie in (0,1]");

  std::vector<std::vector<const ClusteredPixel*>> members(a.cluster_count);
  for (const auto& p : a.pixels) members.at(p.cluster).push_back(&p);
  if (std::all_of(members.begin(), members.end(), [](const auto& m) { return m.empty(); }))
    throw ArgumentError("no cluster has any pixels");

  std::vector<std::size_t> order(a.cluster_count);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return a.seed_rank[l] < a.seed_rank[r]; });

  std::vector<PartBox> boxes;
  for (std::size_t c : order) {
    const auto& mem = members[c];
    if (mem.empty()) continue;
    PartBox box{mem[0]->x, mem[0]->y, mem[0]->x, mem[0]->y, a.seed_rank[c], 0.0};
    for (const auto* p : mem) {
      box.x0 = std::min(box.x0, p->x);
      box.x1 = std::max(box.x1, p->x);
      box.y0 = std::min(box.y0, p->y);
      box.y1 = std::max(box.y1, p->y);
    }

    double total = 0.0;
    for (const auto* p : mem) total += p->saliency;
    if (q < 1.0 && total > 0.0) {
      std::vector<std::size_t> xs, ys;
      for (const auto* p : mem) {
        xs.push_back(p->x);
        ys.push_back(p->y);
      }
      std::sort(xs.begin(), xs.end());
      xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
      std::sort(ys.begin(), ys.end());
      ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
      const std::size_t nx = xs.size(), ny = ys.size();
      // prefix[(iy+1)*(nx+1) + ix+1] = mass in compressed cells [0..iy] x [0..ix].
      std::vector<double> prefix((nx + 1) * (ny + 1), 0.0);
      for (const auto* p : mem) {
        const auto ix = static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), p->x) - xs.begin());
        const auto iy = static_cast<std::size_t>(std::lower_bound(ys.begin(), ys.end(), p->y) - ys.begin());
        prefix[(iy + 1) * (nx + 1) + ix + 1] += p->saliency;
      }
      for (std::size_t iy = 1; iy <= ny; ++iy)
        for (std::size_t ix = 1; ix <= nx; ++ix)
          prefix[iy * (nx + 1) + ix] +=
              prefix[(iy - 1) * (nx + 1) + ix] + prefix[iy * (nx + 1) + ix - 1] - prefix[(iy - 1) * (nx + 1) + ix - 1];
      auto mass = [&](std::size_t ix0, std::size_t iy0, std::size_t ix1, std::size_t iy1) {
        return prefix[(iy1 + 1) * (nx + 1) + ix1 + 1] - prefix[iy0 * (nx + 1) + ix1 + 1] -
               prefix[(iy1 + 1) * (nx + 1) + ix0] + prefix[iy0 * (nx + 1) + ix0];
      };

      const double need = q * total * (1.0 - 1e-12);
      std::size_t best_area = std::numeric_limits<std::size_t>::max();
      for (std::size_t ix0 = 0; ix0 < nx; ++ix0)
        for (std::size_t iy0 = 0; iy0 < ny; ++iy0)
          for (std::size_t ix1 = ix0; ix1 < nx; ++ix1)
            for (std::size_t iy1 = iy0; iy1 < ny; ++iy1) {
              const std::size_t area = (xs[ix1] - xs[ix0] + 1) * (ys[iy1] - ys[iy0] + 1);
              if (area > best_area) break;  // area grows with iy1
              if (mass(ix0, iy0, ix1, iy1) < need) continue;
              // Loop order visits x0, then y0 ascending, so strict '<' keeps the tie rules.
              if (area < best_area) {
                best_area = area;
                box.x0 = xs[ix0];
                box.y0 = ys[iy0];
                box.x1 = xs[ix1];
                box.y1 = ys[iy1];
              }
              break;  // larger iy1 only adds area
            }
    }

    box = expand_box(box, cfg.min_side, a.width, a.height);
    std::size_t inside = 0;
    for (const auto* p : mem)
      if (p->x >= box.x0 && p->x <= box.x1 && p->y >= box.y0 && p->y <= box.y1) ++inside;
    box.recall = static_cast<double>(inside) / static_cast<double>(mem.size());
    boxes.push_back(box);
  }
  return boxes;
}

void write_box_csv_row(std::ostream& os, std::string_view image_id, const PartBox& b) {
  char recall[32];
  std::snprintf(recall, sizeof recall, "%.6f", b.recall);
  os << image_id << ',' << b.rank << ',' << b.x0 << ',' << b.y0 << ',' << b.x1 << ',' << b.y1 << ',' << recall << '\n';
}

}  // namespace csparts
