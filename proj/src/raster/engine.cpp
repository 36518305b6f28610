#include "engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "blurrast/parallel.hpp"
#include "blurrast/simd/kernels.hpp"

namespace blurrast::detail {
namespace {

constexpr int kTile = 8;
constexpr int kRowsPerChunk = 4;
constexpr double kWindowPad = 1e-7;
// Below this many samples the window search costs more than it saves.
constexpr std::size_t kWindowMinSamples = 16;
constexpr double kInf = std::numeric_limits<double>::infinity();

inline double lerp(double a, double b, double t) { return a + t * (b - a); }

// Sorted roots of a t^2 + b t + c inside (0, 1).
int roots_in_unit(double a, double b, double c, double out[2]) {
  int n = 0;
  const double scale = std::abs(b) + std::abs(c);
  if (std::abs(a) <= 1e-14 * scale) {
    if (b != 0.0) {
      const double r = -c / b;
      if (r > 0.0 && r < 1.0) out[n++] = r;
    }
    return n;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return 0;
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (b + std::copysign(sq, b));
  double r1 = q / a;
  double r2 = q != 0.0 ? c / q : r1;
  if (r1 > r2) std::swap(r1, r2);
  if (r1 > 0.0 && r1 < 1.0) out[n++] = r1;
  if (r2 > 0.0 && r2 < 1.0 && (n == 0 || r2 != out[0])) out[n++] = r2;
  return n;
}

// Hull of {t in [0,1] : a t^2 + b t + c >= 0}.
bool nonneg_hull(double a, double b, double c, double& lo, double& hi) {
  double pts[4];
  int np = 0;
  pts[np++] = 0.0;
  double r[2];
  const int nr = roots_in_unit(a, b, c, r);
  for (int i = 0; i < nr; ++i) pts[np++] = r[i];
  pts[np++] = 1.0;
  auto q = [&](double t) { return (a * t + b) * t + c; };
  bool any = false;
  for (int i = 0; i + 1 < np; ++i) {
    const double mid = 0.5 * (pts[i] + pts[i + 1]);
    if (q(mid) >= 0.0 || q(pts[i]) >= 0.0 || q(pts[i + 1]) >= 0.0) {
      if (!any) lo = pts[i];
      hi = pts[i + 1];
      any = true;
    }
  }
  return any;
}

// Distance to the line of edge i is |N_i| / |e_i(t)| >= |w_i den| / max|e_i|,
// a lower bound on the distance to the triangle whenever w_i < 0.
inline bool beyond_edge_line(double w0, double w1, double w2, double den, const std::array<double, 3>& len,
                             double cutoff) {
  const double ad = std::abs(den);
  return (w0 < 0.0 && -w0 * ad > cutoff * len[0]) || (w1 < 0.0 && -w1 * ad > cutoff * len[1]) ||
         (w2 < 0.0 && -w2 * ad > cutoff * len[2]);
}

inline Vec2 point_at(const TrianglePair& pr, const Weights& w, double t) {
  double x = 0.0, y = 0.0;
  for (int m = 0; m < 3; ++m) {
    if (w[m] == 0.0) continue;
    x += w[m] * lerp(pr.start.x[m], pr.end.x[m], t);
    y += w[m] * lerp(pr.start.y[m], pr.end.y[m], t);
  }
  return {x, y};
}

// Squared distance of p to F(t) ŵ* with ŵ* found on the endpoint keyframe.
inline double approx_distance2(const TrianglePair& pr, double u, double v, const Weights& w, double t,
                               ClosestPoint& cp) {
  cp = closest_point(pr.endpoint(endpoint_select(t)), w);
  const Vec2 q = point_at(pr, cp.w, t);
  const double dx = u - q.x(), dy = v - q.y();
  return dx * dx + dy * dy;
}

}  // namespace

bool time_window(const BaryCoeffs& c, const std::array<double, 3>& edge_len, double cutoff, double& lo,
                 double& hi) {
  lo = 0.0;
  hi = 1.0;
  // Orientation must be constant over the segment for the sign argument.
  const double d0 = c.a3;
  const double d1 = c.a1 + c.a2 + c.a3;
  if (!(std::abs(d0) > kDegenerateEpsilon) || !(std::abs(d1) > kDegenerateEpsilon)) return true;
  if ((d0 > 0.0) != (d1 > 0.0)) return true;
  if (c.a1 != 0.0) {
    const double tv = -c.a2 / (2.0 * c.a1);
    if (tv > 0.0 && tv < 1.0) {
      const double dv = c.denominator(tv);
      if (!(std::abs(dv) > kDegenerateEpsilon) || (dv > 0.0) != (d0 > 0.0)) return true;
    }
  }
  const double sigma = d0 > 0.0 ? 1.0 : -1.0;
  // Within distance `cutoff` of the triangle implies signed distance >= -cutoff
  // to every edge line, i.e. sigma N_i(t) >= -cutoff |e_i(t)| >= -cutoff max|e_i|.
  for (int i = 0; i < 3; ++i) {
    const double slack = cutoff * edge_len[i] * (1.0 + 1e-9) + 1e-9;
    double l, h;
    if (!nonneg_hull(sigma * c.A1[i], sigma * c.A2[i], sigma * c.A3[i] + slack, l, h)) return false;
    lo = std::max(lo, l);
    hi = std::min(hi, h);
    if (lo > hi) return false;
  }
  return true;
}

struct Scratch {
  std::vector<int> cand;
  std::vector<BaryCoeffs> coeffs;
  std::vector<int> klo, khi;
  std::vector<double> w0, w1, w2, den, A;
  std::vector<int> winner;
  std::vector<double> zbest, prod, excl, vals;
  std::vector<CandidateGrad> grads;
  std::vector<Triangle2> tri;

  void resize(std::size_t n, std::size_t k) {
    coeffs.resize(n);
    klo.resize(n);
    khi.resize(n);
    const std::size_t nk = n * k;
    if (w0.size() < nk) {
      w0.resize(nk);
      w1.resize(nk);
      w2.resize(nk);
      den.resize(nk);
      A.resize(nk);
    }
    winner.assign(k, -1);
    zbest.assign(k, kInf);
    prod.assign(k, 1.0);
    excl.resize(n);
    tri.resize(n);
  }
};

struct Engine::Sink {
  double* screen;  // [keyframe][vertex][2]
  double* colors;  // [vertex][3]
  int num_vertices;

  void add_screen(int keyframe, int vertex, double gx, double gy) const {
    double* p = screen + (static_cast<std::size_t>(keyframe) * num_vertices + vertex) * 2;
    p[0] += gx;
    p[1] += gy;
  }
  void add_color(int vertex, double r, double g, double b) const {
    double* p = colors + static_cast<std::size_t>(vertex) * 3;
    p[0] += r;
    p[1] += g;
    p[2] += b;
  }
};

Engine::Engine(const SegmentedMotion& motion, std::span<const Face> faces, std::span<const Vec3> colors,
               const RasterConfig& config)
    : motion_(motion),
      faces_(faces),
      colors_(colors),
      config_(config),
      width_(motion.width),
      height_(motion.height) {
  config_.validate();
  if (motion.num_segments() < 1) throw InputError("motion has no segments");
  if (width_ <= 0 || height_ <= 0) throw InputError("motion has an empty image size");
  for (const auto& kf : motion.keyframes) {
    if (static_cast<int>(kf.size()) != motion.num_vertices()) {
      throw InputError("keyframes disagree on vertex count");
    }
  }
  if (static_cast<int>(colors.size()) != motion.num_vertices()) {
    throw InputError("color count does not match keyframe vertex count");
  }
  for (const Face& f : faces) {
    for (int i : f) {
      if (i < 0 || i >= motion.num_vertices()) throw IndexError("face index out of range");
    }
  }
  tiles_x_ = (width_ + kTile - 1) / kTile;
  tiles_y_ = (height_ + kTile - 1) / kTile;
  delta_px_ = config_.delta_pixels(width_);
  cutoff_ = config_.cutoff_pixels(width_);
  cutoff2_ = std::isfinite(cutoff_) ? cutoff_ * cutoff_ : kInf;
  threads_ = resolve_threads(config_.threads);

  segments_.resize(motion.num_segments());
  for (int s = 0; s < motion.num_segments(); ++s) build_segment(s, segments_[s]);
}

Engine::~Engine() = default;

void Engine::build_segment(int seg, SegmentSetup& S) const {
  const auto start = motion_.segment_start(seg);
  const auto end = motion_.segment_end(seg);
  const std::size_t nf = faces_.size();
  S.pairs.resize(nf);
  S.z0.resize(nf);
  S.z1.resize(nf);
  S.bbox.resize(nf);
  S.edge_len.resize(nf);

  std::vector<std::array<int, 4>> tile_range(nf);
  std::vector<int> counts(tiles_x_ * tiles_y_ + 1, 0);
  for (std::size_t f = 0; f < nf; ++f) {
    TrianglePair& pr = S.pairs[f];
    double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf;
    for (int i = 0; i < 3; ++i) {
      const ScreenVertex& a = start[faces_[f][i]];
      const ScreenVertex& b = end[faces_[f][i]];
      pr.start.x[i] = a.x;
      pr.start.y[i] = a.y;
      pr.end.x[i] = b.x;
      pr.end.y[i] = b.y;
      S.z0[f][i] = a.z;
      S.z1[f][i] = b.z;
      xmin = std::min({xmin, a.x, b.x});
      xmax = std::max({xmax, a.x, b.x});
      ymin = std::min({ymin, a.y, b.y});
      ymax = std::max({ymax, a.y, b.y});
    }
    for (int i = 0; i < 3; ++i) {
      const int j = (i + 1) % 3, k = (i + 2) % 3;
      const double l0 = std::hypot(pr.start.x[k] - pr.start.x[j], pr.start.y[k] - pr.start.y[j]);
      const double l1 = std::hypot(pr.end.x[k] - pr.end.x[j], pr.end.y[k] - pr.end.y[j]);
      S.edge_len[f][i] = std::max(l0, l1);
    }
    S.bbox[f] = {xmin - cutoff_, xmax + cutoff_, ymin - cutoff_, ymax + cutoff_};

    // Pixel columns whose centers (px + 0.5) fall inside the box.
    const double cx0 = std::clamp(std::ceil(S.bbox[f][0] - 0.5), 0.0, static_cast<double>(width_));
    const double cx1 = std::clamp(std::floor(S.bbox[f][1] - 0.5), -1.0, static_cast<double>(width_ - 1));
    const double cy0 = std::clamp(std::ceil(S.bbox[f][2] - 0.5), 0.0, static_cast<double>(height_));
    const double cy1 = std::clamp(std::floor(S.bbox[f][3] - 0.5), -1.0, static_cast<double>(height_ - 1));
    if (cx0 > cx1 || cy0 > cy1) {
      tile_range[f] = {0, -1, 0, -1};
      continue;
    }
    tile_range[f] = {static_cast<int>(cx0) / kTile, static_cast<int>(cx1) / kTile, static_cast<int>(cy0) / kTile,
                     static_cast<int>(cy1) / kTile};
    for (int ty = tile_range[f][2]; ty <= tile_range[f][3]; ++ty) {
      for (int tx = tile_range[f][0]; tx <= tile_range[f][1]; ++tx) ++counts[ty * tiles_x_ + tx + 1];
    }
  }
  for (std::size_t i = 1; i < counts.size(); ++i) counts[i] += counts[i - 1];
  S.tile_offset = counts;
  S.tile_faces.assign(counts.back(), 0);
  std::vector<int> fill(counts.begin(), counts.end() - 1);
  for (std::size_t f = 0; f < nf; ++f) {
    for (int ty = tile_range[f][2]; ty <= tile_range[f][3]; ++ty) {
      for (int tx = tile_range[f][0]; tx <= tile_range[f][1]; ++tx) {
        S.tile_faces[fill[ty * tiles_x_ + tx]++] = static_cast<int>(f);
      }
    }
  }
}

void Engine::gather(const SegmentSetup& S, double u, double v, std::vector<int>& out) const {
  out.clear();
  const int tx = static_cast<int>(u) / kTile;
  const int ty = static_cast<int>(v) / kTile;
  const int tile = ty * tiles_x_ + tx;
  for (int i = S.tile_offset[tile]; i < S.tile_offset[tile + 1]; ++i) {
    const int f = S.tile_faces[i];
    const auto& b = S.bbox[f];
    if (u >= b[0] && u <= b[1] && v >= b[2] && v <= b[3]) out.push_back(f);
  }
}

void Engine::shade(int seg, double u, double v, std::span<const double> ts, Scratch& sc, double* out,
                   const double* grad, Sink* sink, std::vector<int>* zchosen) const {
  if (config_.solver == Solver::kFast) {
    shade_fast(seg, u, v, ts, sc, out, grad, sink, zchosen);
  } else {
    shade_naive(seg, u, v, ts, sc, out, grad, sink, zchosen);
  }
}

namespace {

// Adjoint of weights w = N / D folded into the coefficient accumulators.
inline void add_weight_grad(CandidateGrad& g, double t, const Weights& w, double den, const double gw[3]) {
  const double inv = 1.0 / den;
  const double gden = -(gw[0] * w[0] + gw[1] * w[1] + gw[2] * w[2]) * inv;
  const double tt = t * t;
  for (int i = 0; i < 3; ++i) {
    const double tot = gw[i] * inv + gden;
    g.coef[0][i] += tt * tot;
    g.coef[1][i] += t * tot;
    g.coef[2][i] += tot;
  }
}

// Background kernel adjoint for one (pixel, face, sample). `gd` is dL/d(distance^2).
// Gradients flow through F(t) ŵ* and, when ŵ* sits inside an edge region of the
// endpoint triangle, through the edge parameter into F(X) and w(t).
inline void add_background_grad(CandidateGrad& g, const TrianglePair& pr, double u, double v,
                                const Weights& w, double t, double den, double gd) {
  const int X = endpoint_select(t);
  const Triangle2& fx = pr.endpoint(X);
  const ClosestPoint cp = closest_point(fx, w);
  const Vec2 q = point_at(pr, cp.w, t);
  const double rx = u - q.x(), ry = v - q.y();
  for (int m = 0; m < 3; ++m) {
    if (cp.w[m] == 0.0) continue;
    const double gx = -2.0 * gd * cp.w[m] * rx;
    const double gy = -2.0 * gd * cp.w[m] * ry;
    g.vert[0][m][0] += (1.0 - t) * gx;
    g.vert[0][m][1] += (1.0 - t) * gy;
    g.vert[1][m][0] += t * gx;
    g.vert[1][m][1] += t * gy;
  }
  if (cp.clamped || cp.interior) return;

  const int i = cp.edge, j = (i + 1) % 3;
  const double s = cp.param;
  const double etx = lerp(pr.start.x[j], pr.end.x[j], t) - lerp(pr.start.x[i], pr.end.x[i], t);
  const double ety = lerp(pr.start.y[j], pr.end.y[j], t) - lerp(pr.start.y[i], pr.end.y[i], t);
  const double gs = gd * (-2.0) * (rx * etx + ry * ety);
  if (gs == 0.0) return;

  const double ex = fx.x[j] - fx.x[i], ey = fx.y[j] - fx.y[i];
  const double ee = ex * ex + ey * ey;
  const Vec2 Q = fx.apply(w);
  const double rrx = Q.x() - fx.x[i], rry = Q.y() - fx.y[i];
  const double dqx = ex / ee, dqy = ey / ee;                                  // ds/dQ
  const double dex = (rrx - 2.0 * s * ex) / ee, dey = (rry - 2.0 * s * ey) / ee;  // ds/de
  auto& gv = g.vert[X];
  gv[i][0] += gs * (-dqx - dex);
  gv[i][1] += gs * (-dqy - dey);
  gv[j][0] += gs * dex;
  gv[j][1] += gs * dey;
  double gw[3];
  for (int m = 0; m < 3; ++m) {
    gv[m][0] += gs * w[m] * dqx;
    gv[m][1] += gs * w[m] * dqy;
    gw[m] = gs * (fx.x[m] * dqx + fx.y[m] * dqy);
  }
  add_weight_grad(g, t, w, den, gw);
}

// Coefficient adjoints -> keyframe vertex adjoints (start[m], end[m]).
inline void chain_coefficients(const CandidateGrad& g, const TrianglePair& pr, double u, double v,
                               double start[3][2], double end[3][2]) {
  for (int m = 0; m < 3; ++m) {
    start[m][0] = g.vert[0][m][0];
    start[m][1] = g.vert[0][m][1];
    end[m][0] = g.vert[1][m][0];
    end[m][1] = g.vert[1][m][1];
  }
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3, k = (i + 2) % 3;
    const double g1 = g.coef[0][i], g2 = g.coef[1][i], g3 = g.coef[2][i];
    if (g1 == 0.0 && g2 == 0.0 && g3 == 0.0) continue;
    const double ax = pr.start.x[j] - u, ay = pr.start.y[j] - v;
    const double bx = pr.start.x[k] - u, by = pr.start.y[k] - v;
    const double dax = pr.end.x[j] - pr.start.x[j], day = pr.end.y[j] - pr.start.y[j];
    const double dbx = pr.end.x[k] - pr.start.x[k], dby = pr.end.y[k] - pr.start.y[k];
    const double gax = g3 * by + g2 * dby, gay = -g3 * bx - g2 * dbx;
    const double gbx = -g3 * ay - g2 * day, gby = g3 * ax + g2 * dax;
    const double gdax = g2 * by + g1 * dby, gday = -g2 * bx - g1 * dbx;
    const double gdbx = -g2 * ay - g1 * day, gdby = g2 * ax + g1 * dax;
    start[j][0] += gax - gdax;
    start[j][1] += gay - gday;
    end[j][0] += gdax;
    end[j][1] += gday;
    start[k][0] += gbx - gdbx;
    start[k][1] += gby - gdby;
    end[k][0] += gdbx;
    end[k][1] += gdby;
  }
}

}  // namespace

void Engine::shade_fast(int seg, double u, double v, std::span<const double> ts, Scratch& sc, double* out,
                        const double* grad, Sink* sink, std::vector<int>* zchosen) const {
  const SegmentSetup& S = segments_[seg];
  gather(S, u, v, sc.cand);
  const std::size_t n = sc.cand.size();
  const std::size_t K = ts.size();
  sc.resize(n, K);
  const bool windowed = config_.time_windows && std::isfinite(cutoff_) && K >= kWindowMinSamples;

  for (std::size_t c = 0; c < n; ++c) {
    const int f = sc.cand[c];
    precompute_coeffs(S.pairs[f], u, v, sc.coeffs[c]);
    int lo = 0, hi = static_cast<int>(K) - 1;
    if (windowed) {
      double tlo, thi;
      if (!time_window(sc.coeffs[c], S.edge_len[f], cutoff_, tlo, thi)) {
        lo = 1;
        hi = 0;
      } else {
        lo = static_cast<int>(std::lower_bound(ts.begin(), ts.end(), tlo - kWindowPad) - ts.begin());
        hi = static_cast<int>(std::upper_bound(ts.begin(), ts.end(), thi + kWindowPad) - ts.begin()) - 1;
      }
    }
    sc.klo[c] = lo;
    sc.khi[c] = hi;
    if (lo <= hi) {
      const std::size_t o = c * K + lo;
      simd::eval_bary_batch(sc.coeffs[c], ts.data() + lo, static_cast<std::size_t>(hi - lo + 1),
                            {sc.w0.data() + o, sc.w1.data() + o, sc.w2.data() + o, sc.den.data() + o});
    }
  }

  // Z-buffer over covering faces.
  for (std::size_t c = 0; c < n; ++c) {
    const auto& z0 = S.z0[sc.cand[c]];
    const auto& z1 = S.z1[sc.cand[c]];
    for (int k = sc.klo[c]; k <= sc.khi[c]; ++k) {
      const std::size_t idx = c * K + k;
      if (!(std::abs(sc.den[idx]) > kDegenerateEpsilon)) continue;
      const double a = sc.w0[idx], b = sc.w1[idx], d = sc.w2[idx];
      if (a >= 0.0 && b >= 0.0 && d >= 0.0) {
        const double t = ts[k];
        const double z = a * lerp(z0[0], z1[0], t) + b * lerp(z0[1], z1[1], t) + d * lerp(z0[2], z1[2], t);
        if (z < sc.zbest[k]) {
          sc.zbest[k] = z;
          sc.winner[k] = static_cast<int>(c);
        }
      }
    }
  }

  // Soft coverage for samples no face covers.
  for (std::size_t c = 0; c < n; ++c) {
    const TrianglePair& pr = S.pairs[sc.cand[c]];
    const auto& len = S.edge_len[sc.cand[c]];
    for (int k = sc.klo[c]; k <= sc.khi[c]; ++k) {
      const std::size_t idx = c * K + k;
      sc.A[idx] = 0.0;
      if (sc.winner[k] >= 0 || !(std::abs(sc.den[idx]) > kDegenerateEpsilon)) continue;
      if (beyond_edge_line(sc.w0[idx], sc.w1[idx], sc.w2[idx], sc.den[idx], len, cutoff_)) continue;
      ClosestPoint cp;
      const double d2 = approx_distance2(pr, u, v, {sc.w0[idx], sc.w1[idx], sc.w2[idx]}, ts[k], cp);
      if (d2 > cutoff2_) continue;
      const double a = std::exp(-d2 / delta_px_);
      sc.A[idx] = a;
      sc.prod[k] *= 1.0 - a;
    }
  }

  for (std::size_t k = 0; k < K; ++k) {
    double* o = out + k * 4;
    const int c = sc.winner[k];
    if (c >= 0) {
      const Face& face = faces_[sc.cand[c]];
      const std::size_t idx = c * K + k;
      const double a = sc.w0[idx], b = sc.w1[idx], d = sc.w2[idx];
      for (int ch = 0; ch < 3; ++ch) {
        o[ch] = a * colors_[face[0]][ch] + b * colors_[face[1]][ch] + d * colors_[face[2]][ch];
      }
      o[3] = 1.0;
    } else {
      o[0] = o[1] = o[2] = 0.0;
      o[3] = 1.0 - sc.prod[k];
    }
    if (zchosen) (*zchosen)[k] = c >= 0 ? sc.cand[c] : -1;
  }

  if (!grad) return;

  sc.grads.assign(n, CandidateGrad{});
  for (std::size_t k = 0; k < K; ++k) {
    const double t = ts[k];
    const int wc = sc.winner[k];
    if (wc >= 0) {
      const Face& face = faces_[sc.cand[wc]];
      const std::size_t idx = wc * K + k;
      const Weights w{sc.w0[idx], sc.w1[idx], sc.w2[idx]};
      double gw[3];
      for (int i = 0; i < 3; ++i) {
        const Vec3& col = colors_[face[i]];
        gw[i] = grad[0] * col[0] + grad[1] * col[1] + grad[2] * col[2];
      }
      CandidateGrad& g = sc.grads[wc];
      for (int i = 0; i < 3; ++i) g.color_w[i] += w[i];
      add_weight_grad(g, t, w, sc.den[idx], gw);
      continue;
    }
    if (grad[3] == 0.0) continue;
    // d alpha / d A_c = prod over the other faces of (1 - A).
    double run = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (static_cast<int>(k) < sc.klo[c] || static_cast<int>(k) > sc.khi[c]) continue;
      sc.excl[c] = run;
      run *= 1.0 - sc.A[c * K + k];
    }
    run = 1.0;
    for (std::size_t c = n; c-- > 0;) {
      if (static_cast<int>(k) < sc.klo[c] || static_cast<int>(k) > sc.khi[c]) continue;
      const std::size_t idx = c * K + k;
      const double a = sc.A[idx];
      if (a > 0.0) {
        const double gd = grad[3] * sc.excl[c] * run * (-a / delta_px_);
        add_background_grad(sc.grads[c], S.pairs[sc.cand[c]], u, v, {sc.w0[idx], sc.w1[idx], sc.w2[idx]}, t,
                            sc.den[idx], gd);
      }
      run *= 1.0 - a;
    }
  }

  for (std::size_t c = 0; c < n; ++c) {
    const CandidateGrad& g = sc.grads[c];
    const Face& face = faces_[sc.cand[c]];
    double gs[3][2], ge[3][2];
    chain_coefficients(g, S.pairs[sc.cand[c]], u, v, gs, ge);
    for (int m = 0; m < 3; ++m) {
      if (gs[m][0] != 0.0 || gs[m][1] != 0.0) sink->add_screen(seg, face[m], gs[m][0], gs[m][1]);
      if (ge[m][0] != 0.0 || ge[m][1] != 0.0) sink->add_screen(seg + 1, face[m], ge[m][0], ge[m][1]);
      if (g.color_w[m] != 0.0) {
        sink->add_color(face[m], g.color_w[m] * grad[0], g.color_w[m] * grad[1], g.color_w[m] * grad[2]);
      }
    }
  }
}

void Engine::shade_naive(int seg, double u, double v, std::span<const double> ts, Scratch& sc, double* out,
                         const double* grad, Sink* sink, std::vector<int>* zchosen) const {
  const SegmentSetup& S = segments_[seg];
  gather(S, u, v, sc.cand);
  const std::size_t n = sc.cand.size();
  const std::size_t K = ts.size();
  sc.resize(n, 1);

  for (std::size_t k = 0; k < K; ++k) {
    const double t = ts[k];
    int winner = -1;
    double zbest = kInf;
    for (std::size_t c = 0; c < n; ++c) {
      const int f = sc.cand[c];
      sc.tri[c] = S.pairs[f].at(t);
      Weights w;
      const bool ok = try_naive_bary(sc.tri[c], u, v, w);
      sc.den[c] = ok ? 1.0 : 0.0;
      sc.w0[c] = w[0];
      sc.w1[c] = w[1];
      sc.w2[c] = w[2];
      if (ok && inside(w)) {
        const auto& z0 = S.z0[f];
        const auto& z1 = S.z1[f];
        const double z = w[0] * lerp(z0[0], z1[0], t) + w[1] * lerp(z0[1], z1[1], t) + w[2] * lerp(z0[2], z1[2], t);
        if (z < zbest) {
          zbest = z;
          winner = static_cast<int>(c);
        }
      }
    }

    double* o = out + k * 4;
    double prod = 1.0;
    if (winner >= 0) {
      const Face& face = faces_[sc.cand[winner]];
      for (int ch = 0; ch < 3; ++ch) {
        o[ch] = sc.w0[winner] * colors_[face[0]][ch] + sc.w1[winner] * colors_[face[1]][ch] +
                sc.w2[winner] * colors_[face[2]][ch];
      }
      o[3] = 1.0;
    } else {
      for (std::size_t c = 0; c < n; ++c) {
        sc.A[c] = 0.0;
        if (sc.den[c] == 0.0) continue;
        const ClosestPoint cp = closest_point(sc.tri[c], {sc.w0[c], sc.w1[c], sc.w2[c]});
        const Vec2 q = sc.tri[c].apply(cp.w);
        const double d2 = (u - q.x()) * (u - q.x()) + (v - q.y()) * (v - q.y());
        if (d2 > cutoff2_) continue;
        sc.A[c] = std::exp(-d2 / delta_px_);
        prod *= 1.0 - sc.A[c];
      }
      o[0] = o[1] = o[2] = 0.0;
      o[3] = 1.0 - prod;
    }
    if (zchosen) (*zchosen)[k] = winner >= 0 ? sc.cand[winner] : -1;

    if (!grad) continue;
    if (winner >= 0) {
      // w = F^-1 p  =>  dL/dF = -F^-T g w^T on the x and y rows.
      const Face& face = faces_[sc.cand[winner]];
      const Triangle2& F = sc.tri[winner];
      const Weights w{sc.w0[winner], sc.w1[winner], sc.w2[winner]};
      const double inv = 1.0 / determinant(F);
      double h0 = 0.0, h1 = 0.0;
      for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3, l = (i + 2) % 3;
        const Vec3& col = colors_[face[i]];
        const double g = grad[0] * col[0] + grad[1] * col[1] + grad[2] * col[2];
        h0 += g * (F.y[j] - F.y[l]) * inv;
        h1 += g * (F.x[l] - F.x[j]) * inv;
      }
      for (int m = 0; m < 3; ++m) {
        const double gx = -h0 * w[m], gy = -h1 * w[m];
        sink->add_screen(seg, face[m], (1.0 - t) * gx, (1.0 - t) * gy);
        sink->add_screen(seg + 1, face[m], t * gx, t * gy);
        sink->add_color(face[m], w[m] * grad[0], w[m] * grad[1], w[m] * grad[2]);
      }
      continue;
    }
    if (grad[3] == 0.0) continue;
    double run = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
      sc.excl[c] = run;
      run *= 1.0 - sc.A[c];
    }
    run = 1.0;
    for (std::size_t c = n; c-- > 0;) {
      const double a = sc.A[c];
      if (a > 0.0) {
        // Exact closest point: the selection is stationary, so only F(t) ŵ* moves.
        const double gd = grad[3] * sc.excl[c] * run * (-a / delta_px_);
        const Triangle2& F = sc.tri[c];
        const ClosestPoint cp = closest_point(F, {sc.w0[c], sc.w1[c], sc.w2[c]});
        const Vec2 q = F.apply(cp.w);
        const double rx = u - q.x(), ry = v - q.y();
        const Face& face = faces_[sc.cand[c]];
        for (int m = 0; m < 3; ++m) {
          if (cp.w[m] == 0.0) continue;
          const double gx = -2.0 * gd * cp.w[m] * rx, gy = -2.0 * gd * cp.w[m] * ry;
          sink->add_screen(seg, face[m], (1.0 - t) * gx, (1.0 - t) * gy);
          sink->add_screen(seg + 1, face[m], t * gx, t * gy);
        }
      }
      run *= 1.0 - a;
    }
  }
}

BlurFrame Engine::render_blur() const {
  const int S = motion_.num_segments();
  const int K = motion_.samples_per_segment;
  const std::vector<double> ts = motion_.sample_times();
  const std::size_t total = static_cast<std::size_t>(S) * K;

  BlurFrame out;
  out.width = width_;
  out.height = height_;
  out.rgb.assign(static_cast<std::size_t>(width_) * height_ * 3, 0.0);
  out.alpha.assign(static_cast<std::size_t>(width_) * height_, 0.0);
  out.meta = {S, K, static_cast<int>(total)};

  const int chunks = (height_ + kRowsPerChunk - 1) / kRowsPerChunk;
  std::vector<Scratch> scratch(std::min(threads_, chunks));
  parallel_tasks(chunks, static_cast<int>(scratch.size()), [&](int chunk, int worker) {
    Scratch& sc = scratch[worker];
    sc.vals.resize(total * 4);
    for (int y = chunk * kRowsPerChunk; y < std::min(height_, (chunk + 1) * kRowsPerChunk); ++y) {
      for (int x = 0; x < width_; ++x) {
        const double u = x + 0.5, v = y + 0.5;
        for (int s = 0; s < S; ++s) shade(s, u, v, ts, sc, sc.vals.data() + s * K * 4, nullptr, nullptr, nullptr);
        const std::size_t p = static_cast<std::size_t>(y) * width_ + x;
        for (int ch = 0; ch < 3; ++ch) out.rgb[p * 3 + ch] = pairwise_sum(sc.vals.data() + ch, total, 4) / total;
        out.alpha[p] = pairwise_sum(sc.vals.data() + 3, total, 4) / total;
      }
    }
  });
  return out;
}

FrameSample Engine::render_sample(int seg, double t) const {
  if (seg < 0 || seg >= motion_.num_segments()) throw InputError("segment index out of range");
  if (!(t >= 0.0 && t <= 1.0)) throw InputError("sample time must lie in [0, 1]");
  FrameSample out;
  out.width = width_;
  out.height = height_;
  const std::size_t np = static_cast<std::size_t>(width_) * height_;
  out.rgb.assign(np * 3, 0.0);
  out.alpha.assign(np, 0.0);
  out.zchosen.assign(np, -1);
  const double ts[1] = {t};

  const int chunks = (height_ + kRowsPerChunk - 1) / kRowsPerChunk;
  std::vector<Scratch> scratch(std::min(threads_, chunks));
  parallel_tasks(chunks, static_cast<int>(scratch.size()), [&](int chunk, int worker) {
    Scratch& sc = scratch[worker];
    std::vector<int> z(1);
    double vals[4];
    for (int y = chunk * kRowsPerChunk; y < std::min(height_, (chunk + 1) * kRowsPerChunk); ++y) {
      for (int x = 0; x < width_; ++x) {
        shade(seg, x + 0.5, y + 0.5, ts, sc, vals, nullptr, nullptr, &z);
        const std::size_t p = static_cast<std::size_t>(y) * width_ + x;
        for (int ch = 0; ch < 3; ++ch) out.rgb[p * 3 + ch] = vals[ch];
        out.alpha[p] = vals[3];
        out.zchosen[p] = z[0];
      }
    }
  });
  return out;
}

void Engine::backward(const PixelAdjoint& adj, std::vector<std::vector<Vec2>>& d_screen,
                      std::vector<Vec3>& d_colors) const {
  if (adj.width != width_ || adj.height != height_) throw InputError("adjoint size does not match the render");
  const int S = motion_.num_segments();
  const int K = motion_.samples_per_segment;
  const int V = motion_.num_vertices();
  const std::vector<double> ts = motion_.sample_times();
  const double scale = 1.0 / (static_cast<double>(S) * K);

  const int chunks = (height_ + kRowsPerChunk - 1) / kRowsPerChunk;
  const std::size_t screen_size = static_cast<std::size_t>(S + 1) * V * 2;
  std::vector<std::vector<double>> chunk_screen(chunks), chunk_colors(chunks);
  std::vector<Scratch> scratch(std::min(threads_, chunks));
  std::vector<double> dummy(K * 4);

  parallel_tasks(chunks, static_cast<int>(scratch.size()), [&](int chunk, int worker) {
    Scratch& sc = scratch[worker];
    chunk_screen[chunk].assign(screen_size, 0.0);
    chunk_colors[chunk].assign(static_cast<std::size_t>(V) * 3, 0.0);
    Sink sink{chunk_screen[chunk].data(), chunk_colors[chunk].data(), V};
    std::vector<double> vals(K * 4);
    for (int y = chunk * kRowsPerChunk; y < std::min(height_, (chunk + 1) * kRowsPerChunk); ++y) {
      for (int x = 0; x < width_; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * width_ + x;
        const double g[4] = {adj.d_rgb[p * 3] * scale, adj.d_rgb[p * 3 + 1] * scale, adj.d_rgb[p * 3 + 2] * scale,
                             adj.d_alpha[p] * scale};
        if (g[0] == 0.0 && g[1] == 0.0 && g[2] == 0.0 && g[3] == 0.0) continue;
        for (int s = 0; s < S; ++s) shade(s, x + 0.5, y + 0.5, ts, sc, vals.data(), g, &sink, nullptr);
      }
    }
  });

  d_screen.assign(S + 1, std::vector<Vec2>(V, Vec2::Zero()));
  d_colors.assign(V, Vec3::Zero());
  for (int c = 0; c < chunks; ++c) {
    const double* sp = chunk_screen[c].data();
    for (int b = 0; b <= S; ++b) {
      for (int vtx = 0; vtx < V; ++vtx) {
        const std::size_t o = (static_cast<std::size_t>(b) * V + vtx) * 2;
        d_screen[b][vtx] += Vec2(sp[o], sp[o + 1]);
      }
    }
    const double* cp = chunk_colors[c].data();
    for (int vtx = 0; vtx < V; ++vtx) d_colors[vtx] += Vec3(cp[vtx * 3], cp[vtx * 3 + 1], cp[vtx * 3 + 2]);
  }
}

}  // namespace blurrast::detail
