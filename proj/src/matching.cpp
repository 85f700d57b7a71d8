#include "depthedge/metrics.hpp"

#include <cmath>
#include <limits>
#include <queue>

namespace depthedge {

void MatchConfig::validate() const {
  if (!(t_e >= 0.0)) throw std::invalid_argument("MatchConfig: t_e must be >= 0");
}

std::size_t hopcroft_karp(const std::vector<std::vector<int>>& adjacency, int num_right,
                          std::vector<int>* match_left_out) {
  const int num_left = static_cast<int>(adjacency.size());
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<int> match_left(num_left, -1);
  std::vector<int> match_right(num_right, -1);
  std::vector<int> dist(num_left);
  std::vector<std::size_t> next_edge(num_left);

  auto bfs = [&]() {
    std::queue<int> q;
    bool found_free = false;
    for (int u = 0; u < num_left; ++u) {
      if (match_left[u] < 0) {
        dist[u] = 0;
        q.push(u);
      } else {
        dist[u] = kInf;
      }
    }
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (const int v : adjacency[u]) {
        const int w = match_right[v];
        if (w < 0) {
          found_free = true;
        } else if (dist[w] == kInf) {
          dist[w] = dist[u] + 1;
          q.push(w);
        }
      }
    }
    return found_free;
  };

  // Iterative layered DFS; path lengths can reach the edge count on long contours.
  auto augment = [&](int root) {
    std::vector<int> stack{root};
    while (!stack.empty()) {
      const int u = stack.back();
      bool advanced = false;
      while (next_edge[u] < adjacency[u].size()) {
        const int v = adjacency[u][next_edge[u]];
        const int w = match_right[v];
        if (w < 0) {
          // Flip the alternating path recorded on the stack.
          for (int i = static_cast<int>(stack.size()) - 1; i >= 0; --i) {
            const int uu = stack[i];
            const int vv = adjacency[uu][next_edge[uu]];
            match_left[uu] = vv;
            match_right[vv] = uu;
          }
          return true;
        }
        if (dist[w] == dist[u] + 1) {
          stack.push_back(w);
          advanced = true;
          break;
        }
        ++next_edge[u];
      }
      if (!advanced) {
        dist[u] = kInf;
        stack.pop_back();
        if (!stack.empty()) ++next_edge[stack.back()];
      }
    }
    return false;
  };

  std::size_t matched = 0;
  while (bfs()) {
    std::fill(next_edge.begin(), next_edge.end(), 0);
    for (int u = 0; u < num_left; ++u) {
      if (match_left[u] < 0 && augment(u)) ++matched;
    }
  }
  if (match_left_out) *match_left_out = std::move(match_left);
  return matched;
}

MatchResult match_edges(const EdgeMap& pred, const EdgeMap& gt, const MatchConfig& cfg) {
  cfg.validate();
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    throw std::invalid_argument("match_edges: frame dimensions differ");
  }
  const std::vector<Pixel> pred_px = pred.pixels();
  const std::vector<Pixel> gt_px = gt.pixels();

  // Bin ground-truth pixels on a grid of cell size >= t_e so only the 3x3
  // neighboring cells can hold candidates.
  const int cell = std::max(1, static_cast<int>(std::ceil(cfg.t_e)));
  const int grid_rows = (gt.height() + cell - 1) / cell;
  const int grid_cols = (gt.width() + cell - 1) / cell;
  std::vector<std::vector<int>> bins(static_cast<std::size_t>(grid_rows) * grid_cols);
  for (int j = 0; j < static_cast<int>(gt_px.size()); ++j) {
    bins[static_cast<std::size_t>(gt_px[j].row / cell) * grid_cols + gt_px[j].col / cell].push_back(j);
  }

  const double radius_sq = cfg.t_e * cfg.t_e;
  std::vector<std::vector<int>> adjacency(pred_px.size());
  for (std::size_t i = 0; i < pred_px.size(); ++i) {
    const Pixel& p = pred_px[i];
    const int br = p.row / cell;
    const int bc = p.col / cell;
    for (int gr = std::max(0, br - 1); gr <= std::min(grid_rows - 1, br + 1); ++gr) {
      for (int gc = std::max(0, bc - 1); gc <= std::min(grid_cols - 1, bc + 1); ++gc) {
        for (const int j : bins[static_cast<std::size_t>(gr) * grid_cols + gc]) {
          const double dr = p.row - gt_px[j].row;
          const double dc = p.col - gt_px[j].col;
          if (dr * dr + dc * dc <= radius_sq) adjacency[i].push_back(j);
        }
      }
    }
    std::sort(adjacency[i].begin(), adjacency[i].end());
  }

  std::vector<int> match_left;
  const std::size_t matched = hopcroft_karp(adjacency, static_cast<int>(gt_px.size()), &match_left);

  MatchResult res;
  res.num_pred = pred_px.size();
  res.num_gt = gt_px.size();
  for (std::size_t i = 0; i < pred_px.size(); ++i) {
    if (match_left[i] >= 0) res.pairs.emplace_back(pred_px[i], gt_px[match_left[i]]);
  }
  res.precision = pred_px.empty() ? 1.0 : static_cast<double>(matched) / pred_px.size();
  res.recall = gt_px.empty() ? 1.0 : static_cast<double>(matched) / gt_px.size();
  return res;
}

}  // namespace depthedge
