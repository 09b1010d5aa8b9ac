#include "marginalia/mser.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "marginalia/errors.hpp"

namespace marginalia {

std::string_view to_string(Polarity p) { return p == Polarity::dark ? "dark" : "bright"; }

Raster level_image(const Raster& image, Polarity polarity) {
  if (polarity == Polarity::dark) return image;
  return image.unaryExpr([](std::uint8_t v) { return static_cast<std::uint8_t>(255 - v); });
}

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n, -1) {}

  bool added(std::int64_t p) const { return parent_[static_cast<std::size_t>(p)] >= 0; }
  void add(std::int64_t p) { parent_[static_cast<std::size_t>(p)] = p; }

  std::int64_t find(std::int64_t p) {
    std::int64_t r = p;
    while (parent_[static_cast<std::size_t>(r)] != r) r = parent_[static_cast<std::size_t>(r)];
    while (parent_[static_cast<std::size_t>(p)] != r) {
      const std::int64_t next = parent_[static_cast<std::size_t>(p)];
      parent_[static_cast<std::size_t>(p)] = r;
      p = next;
    }
    return r;
  }

  void link(std::int64_t child, std::int64_t root) { parent_[static_cast<std::size_t>(child)] = root; }

 private:
  std::vector<std::int64_t> parent_;
};

struct BranchBuild {
  int birth;
  int end = 255;
  int parent = -1;
  std::int64_t seed;
  // (level, area) appended once a level is complete, so back() is the
  // area before the level being swept
  std::vector<std::pair<int, std::int64_t>> changes;
};

}  // namespace

ComponentTree component_tree(const Raster& image, Polarity polarity) {
  const Raster levels = level_image(image, polarity);
  const int w = width_of(levels);
  const int h = height_of(levels);
  const std::int64_t n = std::int64_t{w} * h;

  // counting sort of pixel indices by level, raster order within a level
  std::array<std::int64_t, 257> start{};
  for (std::int64_t i = 0; i < n; ++i) ++start[levels.data()[i] + 1];
  std::partial_sum(start.begin(), start.end(), start.begin());
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  {
    auto fill = start;
    for (std::int64_t i = 0; i < n; ++i) order[static_cast<std::size_t>(fill[levels.data()[i]]++)] = i;
  }

  UnionFind uf(static_cast<std::size_t>(n));
  std::vector<std::int64_t> area(static_cast<std::size_t>(n), 0);
  std::vector<std::int64_t> min_index(static_cast<std::size_t>(n), 0);
  std::vector<int> branch_of(static_cast<std::size_t>(n), -1);
  std::vector<int> stamp(static_cast<std::size_t>(n), -1);
  std::vector<BranchBuild> builds;

  auto wins = [&](int a, int b) {
    const BranchBuild& ba = builds[static_cast<std::size_t>(a)];
    const BranchBuild& bb = builds[static_cast<std::size_t>(b)];
    const std::int64_t area_a = ba.changes.back().second;
    const std::int64_t area_b = bb.changes.back().second;
    if (area_a != area_b) return area_a > area_b;
    if (ba.birth != bb.birth) return ba.birth < bb.birth;
    return ba.seed < bb.seed;
  };

  auto unite = [&](std::int64_t ra, std::int64_t rb, int level) {
    const auto ia = static_cast<std::size_t>(ra);
    const auto ib = static_cast<std::size_t>(rb);
    int branch = -1;
    const int fa = branch_of[ia];
    const int fb = branch_of[ib];
    if (fa < 0) {
      branch = fb;
    } else if (fb < 0) {
      branch = fa;
    } else {
      const bool a_wins = wins(fa, fb);
      const int winner = a_wins ? fa : fb;
      const int loser = a_wins ? fb : fa;
      builds[static_cast<std::size_t>(loser)].end = level - 1;
      builds[static_cast<std::size_t>(loser)].parent = winner;
      branch = winner;
    }
    // union by size, ties to the smaller index
    std::int64_t root = ra;
    std::int64_t child = rb;
    if (area[ib] > area[ia] || (area[ib] == area[ia] && rb < ra)) std::swap(root, child);
    uf.link(child, root);
    const auto ir = static_cast<std::size_t>(root);
    const auto ic = static_cast<std::size_t>(child);
    area[ir] += area[ic];
    min_index[ir] = std::min(min_index[ir], min_index[ic]);
    branch_of[ir] = branch;
    return root;
  };

  for (int level = 0; level < 256; ++level) {
    const std::int64_t lo = start[static_cast<std::size_t>(level)];
    const std::int64_t hi = start[static_cast<std::size_t>(level) + 1];
    if (lo == hi) continue;
    for (std::int64_t k = lo; k < hi; ++k) {
      const std::int64_t p = order[static_cast<std::size_t>(k)];
      uf.add(p);
      area[static_cast<std::size_t>(p)] = 1;
      min_index[static_cast<std::size_t>(p)] = p;
      branch_of[static_cast<std::size_t>(p)] = -1;
      const int x = static_cast<int>(p % w);
      const int y = static_cast<int>(p / w);
      const std::array<std::pair<bool, std::int64_t>, 4> nbrs = {{
          {y > 0, p - w},
          {x > 0, p - 1},
          {x + 1 < w, p + 1},
          {y + 1 < h, p + w},
      }};
      for (const auto& [ok, q] : nbrs) {
        if (!ok || !uf.added(q)) continue;
        const std::int64_t rp = uf.find(p);
        const std::int64_t rq = uf.find(q);
        if (rp != rq) unite(rp, rq, level);
      }
    }
    for (std::int64_t k = lo; k < hi; ++k) {
      const std::int64_t r = uf.find(order[static_cast<std::size_t>(k)]);
      const auto ir = static_cast<std::size_t>(r);
      if (stamp[ir] == level) continue;
      stamp[ir] = level;
      if (branch_of[ir] < 0) {
        branch_of[ir] = static_cast<int>(builds.size());
        builds.push_back(BranchBuild{level, 255, -1, min_index[ir], {}});
      }
      builds[static_cast<std::size_t>(branch_of[ir])].changes.emplace_back(level, area[ir]);
    }
  }

  // a loser's recorded winner may itself have lost later in the same
  // level; point it at the branch that actually carries on
  for (BranchBuild& b : builds) {
    while (b.parent >= 0 && builds[static_cast<std::size_t>(b.parent)].end < b.end + 1) {
      b.parent = builds[static_cast<std::size_t>(b.parent)].parent;
    }
  }

  // renumber by (birth, seed); creation order already satisfies birth
  std::vector<int> perm(builds.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
    const auto& x = builds[static_cast<std::size_t>(a)];
    const auto& y = builds[static_cast<std::size_t>(b)];
    return std::pair(x.birth, x.seed) < std::pair(y.birth, y.seed);
  });
  std::vector<int> rank(builds.size());
  for (std::size_t i = 0; i < perm.size(); ++i) rank[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);

  ComponentTree tree;
  tree.width = w;
  tree.height = h;
  tree.polarity = polarity;
  tree.branches.resize(builds.size());
  for (std::size_t old = 0; old < builds.size(); ++old) {
    const BranchBuild& b = builds[old];
    Branch& out = tree.branches[static_cast<std::size_t>(rank[old])];
    out.birth = b.birth;
    out.end = b.end;
    out.parent = b.parent < 0 ? -1 : rank[static_cast<std::size_t>(b.parent)];
    out.seed = b.seed;
    out.areas.assign(static_cast<std::size_t>(b.end - b.birth + 1), 0);
    std::size_t c = 0;
    std::int64_t current = 0;
    for (int t = b.birth; t <= b.end; ++t) {
      while (c < b.changes.size() && b.changes[c].first <= t) current = b.changes[c++].second;
      out.areas[static_cast<std::size_t>(t - b.birth)] = current;
    }
    if (b.parent < 0) tree.root = rank[old];
  }
  return tree;
}

std::optional<double> stability(const Branch& branch, int level, int delta) {
  if (!branch.alive_at(level - delta) || !branch.alive_at(level + delta)) return std::nullopt;
  const std::int64_t grow = branch.area_at(level + delta) - branch.area_at(level - delta);
  return static_cast<double>(std::llabs(grow)) / static_cast<double>(branch.area_at(level));
}

void MserParams::validate() const {
  if (delta < 1 || delta > 127) throw std::invalid_argument("mser: delta must be in [1, 127]");
  if (!(max_variation > 0)) throw std::invalid_argument("mser: max_variation must be > 0");
  if (min_area < 1) throw std::invalid_argument("mser: min_area must be >= 1");
  if (max_area != 0 && min_area >= max_area) throw std::invalid_argument("mser: min_area must be < max_area");
  if (!(nested_area_ratio > 0 && nested_area_ratio <= 1)) {
    throw std::invalid_argument("mser: nested_area_ratio must be in (0, 1]");
  }
}

std::int64_t MserParams::effective_max_area(std::int64_t image_area) const {
  if (max_area > 0) return max_area;
  return (image_area * 9) / 10;
}

std::vector<RowRun> component_runs(const Raster& levels, std::int64_t seed, int threshold) {
  const int w = width_of(levels);
  const int h = height_of(levels);
  std::vector<std::int64_t> stack{seed};
  std::vector<char> seen(static_cast<std::size_t>(levels.size()), 0);
  std::vector<std::int64_t> pixels;
  if (levels.data()[seed] > threshold) return {};
  seen[static_cast<std::size_t>(seed)] = 1;
  while (!stack.empty()) {
    const std::int64_t p = stack.back();
    stack.pop_back();
    pixels.push_back(p);
    const int x = static_cast<int>(p % w);
    const int y = static_cast<int>(p / w);
    const std::array<std::pair<bool, std::int64_t>, 4> nbrs = {{
        {y > 0, p - w}, {x > 0, p - 1}, {x + 1 < w, p + 1}, {y + 1 < h, p + w}}};
    for (const auto& [ok, q] : nbrs) {
      if (!ok || seen[static_cast<std::size_t>(q)] || levels.data()[q] > threshold) continue;
      seen[static_cast<std::size_t>(q)] = 1;
      stack.push_back(q);
    }
  }
  std::sort(pixels.begin(), pixels.end());
  std::vector<RowRun> runs;
  for (const std::int64_t p : pixels) {
    const int x = static_cast<int>(p % w);
    const int y = static_cast<int>(p / w);
    if (!runs.empty() && runs.back().row == y && runs.back().col_end == x) {
      ++runs.back().col_end;
    } else {
      runs.push_back({y, x, x + 1});
    }
  }
  return runs;
}

BBox runs_bbox(const std::vector<RowRun>& runs) {
  if (runs.empty()) return {};
  int x0 = runs.front().col_begin, x1 = runs.front().col_end;
  for (const auto& r : runs) {
    x0 = std::min(x0, r.col_begin);
    x1 = std::max(x1, r.col_end);
  }
  return {x0, runs.front().row, x1 - x0, runs.back().row - runs.front().row + 1};
}

namespace {

struct Candidate {
  int branch;
  int level;
  std::int64_t area;
  double v;
  bool dropped = false;
};

}  // namespace

std::vector<Region> extract_mser(const Raster& image, const MserParams& params) {
  params.validate();
  const ComponentTree tree = component_tree(image, params.polarity);
  const std::int64_t max_area = params.effective_max_area(std::int64_t{tree.width} * tree.height);

  // per branch: stable local minima, one per distinct area
  std::vector<Candidate> cands;
  std::vector<std::vector<std::size_t>> by_branch(tree.branches.size());
  for (std::size_t bi = 0; bi < tree.branches.size(); ++bi) {
    const Branch& b = tree.branches[bi];
    const int lo = b.birth + params.delta;
    const int hi = b.end - params.delta;
    if (lo > hi) continue;
    std::vector<double> v(static_cast<std::size_t>(hi - lo + 1));
    for (int t = lo; t <= hi; ++t) v[static_cast<std::size_t>(t - lo)] = *stability(b, t, params.delta);
    const std::size_t first = cands.size();
    for (int t = lo; t <= hi; ++t) {
      const double vt = v[static_cast<std::size_t>(t - lo)];
      if (t > lo && vt > v[static_cast<std::size_t>(t - lo - 1)]) continue;
      if (t < hi && vt > v[static_cast<std::size_t>(t - lo + 1)]) continue;
      if (!(vt < params.max_variation)) continue;
      const std::int64_t a = b.area_at(t);
      if (a < params.min_area || a > max_area) continue;
      // same area on one branch is the same pixel set
      auto same = std::find_if(cands.begin() + static_cast<std::ptrdiff_t>(first), cands.end(),
                               [a](const Candidate& c) { return c.area == a; });
      if (same == cands.end()) {
        cands.push_back({static_cast<int>(bi), t, a, vt});
      } else if (vt < same->v) {
        same->level = t;
        same->v = vt;
      }
    }
    for (std::size_t c = first; c < cands.size(); ++c) by_branch[bi].push_back(c);
    std::sort(by_branch[bi].begin(), by_branch[bi].end(),
              [&](std::size_t a, std::size_t b) { return cands[a].area < cands[b].area; });
  }

  // nested collapse along ancestor chains; areas grow monotonically up a
  // chain, so the walk stops at the first ancestor below the ratio
  for (std::size_t ci = 0; ci < cands.size(); ++ci) {
    const Candidate& inner = cands[ci];
    int cur = inner.branch;
    int min_level = inner.level + 1;
    bool done = false;
    while (cur >= 0 && !done) {
      for (std::size_t oi : by_branch[static_cast<std::size_t>(cur)]) {
        Candidate& outer = cands[oi];
        if (outer.level < min_level) continue;
        const double ratio = static_cast<double>(inner.area) / static_cast<double>(outer.area);
        if (!(ratio > params.nested_area_ratio)) {
          done = true;
          break;
        }
        if (outer.v <= inner.v) {
          cands[ci].dropped = true;
        } else {
          outer.dropped = true;
        }
      }
      const Branch& b = tree.branches[static_cast<std::size_t>(cur)];
      min_level = b.end + 1;
      cur = b.parent;
    }
  }

  const Raster levels = level_image(image, params.polarity);
  std::vector<Region> out;
  for (const Candidate& c : cands) {
    if (c.dropped) continue;
    const Branch& b = tree.branches[static_cast<std::size_t>(c.branch)];
    Region r;
    r.polarity = params.polarity;
    r.branch = c.branch;
    r.level = c.level;
    r.seed = b.seed;
    r.stability = c.v;
    r.pixels = component_runs(levels, b.seed, c.level);
    r.bbox = runs_bbox(r.pixels);
    for (int t = b.birth; t <= b.end; ++t) r.area_at_threshold.emplace(t, b.area_at(t));
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(),
            [](const Region& a, const Region& b) { return std::pair(a.seed, a.level) < std::pair(b.seed, b.level); });
  for (std::size_t i = 0; i < out.size(); ++i) {
    Region& r = out[i];
    r.id = static_cast<int>(i);
    if (!(r.stability < params.max_variation) || r.area() < params.min_area || r.area() > max_area) {
      throw InvariantViolation("mser: region violates selection bounds");
    }
  }
  return out;
}

std::vector<Proposal> proposals(const Raster& image, const ProposalParams& params) {
  const std::int64_t image_area = static_cast<std::int64_t>(image.size());
  std::vector<Proposal> all;
  for (Polarity pol : {Polarity::dark, Polarity::bright}) {
    MserParams mp = params.mser;
    mp.polarity = pol;
    for (const Region& r : extract_mser(image, mp)) all.push_back({r.bbox, r.stability, pol});
  }
  std::erase_if(all, [&](const Proposal& p) {
    if (params.tiny_min_area > 0) return p.box.area() < params.tiny_min_area;
    return p.box.area() * 1000 < image_area;
  });
  std::stable_sort(all.begin(), all.end(), [](const Proposal& a, const Proposal& b) { return a.score < b.score; });
  std::vector<Proposal> kept;
  for (const Proposal& p : all) {
    const bool duplicate = std::any_of(kept.begin(), kept.end(),
                                       [&](const Proposal& k) { return iou(k.box, p.box) > params.dedup_iou; });
    if (!duplicate) kept.push_back(p);
  }
  for (const Proposal& p : kept) {
    if (!p.box.fits(width_of(image), height_of(image))) throw InvariantViolation("proposal outside image");
  }
  return kept;
}

}  // namespace marginalia
