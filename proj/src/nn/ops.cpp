#include "abm/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace abm::nn {

namespace {

void require_same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw Error("vars belong to different tapes");
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " differ");
  }
}

// Columns of the im2col matrix processed together; sized so one tile of
// every input row stays in L2.
constexpr std::size_t kTile = 256;

struct ConvGeometry {
  std::size_t n, c, h, w, k, kh, kw, oh, ow;
  int stride, pad;
  std::size_t j() const { return c * kh * kw; }
  std::size_t p() const { return oh * ow; }
  std::size_t q() const { return n * p(); }
};

// col[j][n * P + oy * OW + ox] with j = (c * kh + ky) * kw + kx; zero padding.
void im2col(const ConvGeometry& g, std::span<const double> x, std::vector<double>& col) {
  const std::size_t Q = g.q();
  const std::size_t P = g.p();
  col.assign(g.j() * Q, 0.0);
  for (std::size_t ci = 0; ci < g.c; ++ci) {
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        double* row = col.data() + ((ci * g.kh + ky) * g.kw + kx) * Q;
        for (std::size_t ni = 0; ni < g.n; ++ni) {
          const double* plane = x.data() + (ni * g.c + ci) * g.h * g.w;
          double* dst = row + ni * P;
          for (std::size_t oy = 0; oy < g.oh; ++oy) {
            const long iy = static_cast<long>(oy) * g.stride - g.pad + static_cast<long>(ky);
            if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
            for (std::size_t ox = 0; ox < g.ow; ++ox) {
              const long ix = static_cast<long>(ox) * g.stride - g.pad + static_cast<long>(kx);
              if (ix < 0 || ix >= static_cast<long>(g.w)) continue;
              dst[oy * g.ow + ox] = plane[iy * g.w + ix];
            }
          }
        }
      }
    }
  }
}

void col2im(const ConvGeometry& g, const std::vector<double>& dcol, std::span<double> dx) {
  const std::size_t Q = g.q();
  const std::size_t P = g.p();
  for (std::size_t ci = 0; ci < g.c; ++ci) {
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const double* row = dcol.data() + ((ci * g.kh + ky) * g.kw + kx) * Q;
        for (std::size_t ni = 0; ni < g.n; ++ni) {
          double* plane = dx.data() + (ni * g.c + ci) * g.h * g.w;
          const double* src = row + ni * P;
          for (std::size_t oy = 0; oy < g.oh; ++oy) {
            const long iy = static_cast<long>(oy) * g.stride - g.pad + static_cast<long>(ky);
            if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
            for (std::size_t ox = 0; ox < g.ow; ++ox) {
              const long ix = static_cast<long>(ox) * g.stride - g.pad + static_cast<long>(kx);
              if (ix < 0 || ix >= static_cast<long>(g.w)) continue;
              plane[iy * g.w + ix] += src[oy * g.ow + ox];
            }
          }
        }
      }
    }
  }
}

// Four independent partial sums so the reduction vectorizes without
// -ffast-math; used only on backward paths.
double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

struct Taps {
  std::vector<std::size_t> i0, i1;
  std::vector<double> w;
};

Taps make_taps(std::size_t in, std::size_t out) {
  Taps t;
  t.i0.resize(out);
  t.i1.resize(out);
  t.w.resize(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    double s = (static_cast<double>(o) + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(s));
    t.i0[o] = i0;
    t.i1[o] = std::min(i0 + 1, in - 1);
    t.w[o] = s - static_cast<double>(i0);
  }
  return t;
}

}  // namespace

Var conv2d(Var x, Var weight, Var bias, int stride, int padding) {
  require_same_tape(x, weight);
  require_same_tape(x, bias);
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  const Tensor& bv = bias.value();
  require_rank(xv, 4, "conv2d input");
  require_rank(wv, 4, "conv2d weight");
  require_rank(bv, 1, "conv2d bias");
  if (stride < 1 || padding < 0) throw ShapeError("conv2d: stride must be >= 1 and padding >= 0");
  if (wv.dim(1) != xv.dim(1)) {
    throw ShapeError("conv2d: weight expects " + std::to_string(wv.dim(1)) + " channels, input has " +
                     std::to_string(xv.dim(1)));
  }
  if (bv.dim(0) != wv.dim(0)) throw ShapeError("conv2d: bias length does not match output channels");
  if (wv.dim(2) % 2 == 0 || wv.dim(3) % 2 == 0) throw ShapeError("conv2d: kernel extents must be odd");
  const long hp = static_cast<long>(xv.dim(2)) + 2L * padding - static_cast<long>(wv.dim(2));
  const long wp = static_cast<long>(xv.dim(3)) + 2L * padding - static_cast<long>(wv.dim(3));
  if (hp < 0 || wp < 0) throw ShapeError("conv2d: kernel larger than padded input");

  ConvGeometry g{xv.dim(0), xv.dim(1), xv.dim(2), xv.dim(3), wv.dim(0), wv.dim(2), wv.dim(3),
                 static_cast<std::size_t>(hp / stride + 1), static_cast<std::size_t>(wp / stride + 1),
                 stride, padding};
  const std::size_t J = g.j(), Q = g.q(), P = g.p(), K = g.k;

  auto col = std::make_shared<std::vector<double>>();
  im2col(g, xv.data(), *col);

  Tensor out({g.n, K, g.oh, g.ow});
  std::vector<double> acc(kTile);
  const double* wd = wv.data().data();
  for (std::size_t q0 = 0; q0 < Q; q0 += kTile) {
    const std::size_t len = std::min(kTile, Q - q0);
    for (std::size_t k = 0; k < K; ++k) {
      std::fill(acc.begin(), acc.begin() + len, 0.0);
      for (std::size_t j = 0; j < J; ++j) {
        const double wkj = wd[k * J + j];
        const double* src = col->data() + j * Q + q0;
        for (std::size_t t = 0; t < len; ++t) acc[t] += wkj * src[t];
      }
      for (std::size_t t = 0; t < len; ++t) {
        const std::size_t q = q0 + t;
        const std::size_t ni = q / P, pi = q % P;
        out[(ni * K + k) * P + pi] = acc[t] + bv[k];
      }
    }
  }

  return x.tape().record(std::move(out), {x, weight, bias}, [=](Tape& t, Var self) {
    const Tensor& gy = t.grad_buffer(self);
    // dY laid out as [K][Q] to match the column matrix.
    std::vector<double> dy(K * Q);
    for (std::size_t ni = 0; ni < g.n; ++ni) {
      for (std::size_t k = 0; k < K; ++k) {
        const double* src = gy.data().data() + (ni * K + k) * P;
        std::copy(src, src + P, dy.begin() + k * Q + ni * P);
      }
    }
    if (t.requires_grad(bias)) {
      Tensor& gb = t.grad_buffer(bias);
      for (std::size_t k = 0; k < K; ++k) {
        double s = 0.0;
        for (std::size_t q = 0; q < Q; ++q) s += dy[k * Q + q];
        gb[k] += s;
      }
    }
    if (t.requires_grad(weight)) {
      Tensor& gw = t.grad_buffer(weight);
      for (std::size_t k = 0; k < K; ++k) {
        const double* dk = dy.data() + k * Q;
        for (std::size_t j = 0; j < J; ++j) {
          const double* cj = col->data() + j * Q;
          gw[k * J + j] += dot(dk, cj, Q);
        }
      }
    }
    if (t.requires_grad(x)) {
      const double* w = t.value(weight).data().data();
      std::vector<double> dcol(J * Q, 0.0);
      for (std::size_t q0 = 0; q0 < Q; q0 += kTile) {
        const std::size_t len = std::min(kTile, Q - q0);
        for (std::size_t j = 0; j < J; ++j) {
          double* dst = dcol.data() + j * Q + q0;
          for (std::size_t k = 0; k < K; ++k) {
            const double wkj = w[k * J + j];
            const double* src = dy.data() + k * Q + q0;
            for (std::size_t tt = 0; tt < len; ++tt) dst[tt] += wkj * src[tt];
          }
        }
      }
      col2im(g, dcol, t.grad_buffer(x).data());
    }
  });
}

namespace {

template <typename Fwd, typename Deriv>
Var unary(Var x, Fwd fwd, Deriv deriv) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  return x.tape().record(std::move(out), {x}, [x, deriv](Tape& t, Var self) {
    const Tensor& gy = t.grad_buffer(self);
    const Tensor& xv = t.value(x);
    const Tensor& yv = t.value(self);
    Tensor& gx = t.grad_buffer(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * deriv(xv[i], yv[i]);
  });
}

}  // namespace

Var relu(Var x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(Var x, double slope) {
  return unary(
      x, [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Var sigmoid(Var x) {
  return unary(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, "add");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, Var self) {
    const Tensor& gy = t.grad_buffer(self);
    for (Var in : {a, b}) {
      if (!t.requires_grad(in)) continue;
      Tensor& g = t.grad_buffer(in);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += gy[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, "mul");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, Var self) {
    const Tensor& gy = t.grad_buffer(self);
    if (t.requires_grad(a)) {
      const Tensor& bv = t.value(b);
      Tensor& g = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += gy[i] * bv[i];
    }
    if (t.requires_grad(b)) {
      const Tensor& av = t.value(a);
      Tensor& g = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += gy[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  return unary(
      a, [s](double v) { return s * v; }, [s](double, double) { return s; });
}

Var resize_bilinear(Var x, int out_h, int out_w) {
  const Tensor& xv = x.value();
  require_rank(xv, 4, "resize_bilinear");
  if (out_h < 1 || out_w < 1) throw ShapeError("resize_bilinear: target must be positive");
  const std::size_t N = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
  const std::size_t OH = static_cast<std::size_t>(out_h), OW = static_cast<std::size_t>(out_w);
  auto ty = std::make_shared<Taps>(make_taps(H, OH));
  auto tx = std::make_shared<Taps>(make_taps(W, OW));
  Tensor out({N, C, OH, OW});
  for (std::size_t plane = 0; plane < N * C; ++plane) {
    const double* src = xv.data().data() + plane * H * W;
    double* dst = out.data().data() + plane * OH * OW;
    for (std::size_t y = 0; y < OH; ++y) {
      const double* r0 = src + ty->i0[y] * W;
      const double* r1 = src + ty->i1[y] * W;
      const double wy = ty->w[y];
      for (std::size_t xo = 0; xo < OW; ++xo) {
        const std::size_t a = tx->i0[xo], b = tx->i1[xo];
        const double wx = tx->w[xo];
        const double top = r0[a] + wx * (r0[b] - r0[a]);
        const double bot = r1[a] + wx * (r1[b] - r1[a]);
        dst[y * OW + xo] = top + wy * (bot - top);
      }
    }
  }
  return x.tape().record(std::move(out), {x}, [=](Tape& t, Var self) {
    const Tensor& gy = t.grad_buffer(self);
    Tensor& gx = t.grad_buffer(x);
    for (std::size_t plane = 0; plane < N * C; ++plane) {
      const double* g = gy.data().data() + plane * OH * OW;
      double* d = gx.data().data() + plane * H * W;
      for (std::size_t y = 0; y < OH; ++y) {
        double* r0 = d + ty->i0[y] * W;
        double* r1 = d + ty->i1[y] * W;
        const double wy = ty->w[y];
        for (std::size_t xo = 0; xo < OW; ++xo) {
          const std::size_t a = tx->i0[xo], b = tx->i1[xo];
          const double wx = tx->w[xo];
          const double gv = g[y * OW + xo];
          const double gtop = gv * (1.0 - wy);
          const double gbot = gv * wy;
          r0[a] += gtop * (1.0 - wx);
          r0[b] += gtop * wx;
          r1[a] += gbot * (1.0 - wx);
          r1[b] += gbot * wx;
        }
      }
    }
  });
}

Var bilinear_upsample(Var x, int factor) {
  if (factor < 2) throw ShapeError("bilinear_upsample: factor must be >= 2");
  require_rank(x.value(), 4, "bilinear_upsample");
  return resize_bilinear(x, static_cast<int>(x.value().dim(2)) * factor,
                         static_cast<int>(x.value().dim(3)) * factor);
}

Var crop(Var x, int top, int left, int h, int w) {
  const Tensor& xv = x.value();
  require_rank(xv, 4, "crop");
  const std::size_t N = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
  if (top < 0 || left < 0 || h < 1 || w < 1 || static_cast<std::size_t>(top + h) > H ||
      static_cast<std::size_t>(left + w) > W) {
    throw GeometryError("crop window outside tensor of shape " + shape_string(xv.shape()));
  }
  const std::size_t OH = static_cast<std::size_t>(h), OW = static_cast<std::size_t>(w);
  const std::size_t y0 = static_cast<std::size_t>(top), x0 = static_cast<std::size_t>(left);
  Tensor out({N, C, OH, OW});
  for (std::size_t plane = 0; plane < N * C; ++plane) {
    for (std::size_t y = 0; y < OH; ++y) {
      const double* src = xv.data().data() + plane * H * W + (y0 + y) * W + x0;
      std::copy(src, src + OW, out.data().data() + (plane * OH + y) * OW);
    }
  }
  return x.tape().record(std::move(out), {x}, [=](Tape& t, Var self) {
    const Tensor& gy = t.grad_buffer(self);
    Tensor& gx = t.grad_buffer(x);
    for (std::size_t plane = 0; plane < N * C; ++plane) {
      for (std::size_t y = 0; y < OH; ++y) {
        const double* src = gy.data().data() + (plane * OH + y) * OW;
        double* dst = gx.data().data() + plane * H * W + (y0 + y) * W + x0;
        for (std::size_t i = 0; i < OW; ++i) dst[i] += src[i];
      }
    }
  });
}

Var dense(Var x, Var weight, Var bias) {
  require_same_tape(x, weight);
  require_same_tape(x, bias);
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  const Tensor& bv = bias.value();
  require_rank(xv, 2, "dense input");
  require_rank(wv, 2, "dense weight");
  require_rank(bv, 1, "dense bias");
  const std::size_t N = xv.dim(0), D = xv.dim(1), M = wv.dim(1);
  if (wv.dim(0) != D) throw ShapeError("dense: weight rows do not match input features");
  if (bv.dim(0) != M) throw ShapeError("dense: bias length does not match output features");
  Tensor out({N, M});
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t m = 0; m < M; ++m) {
      double s = 0.0;
      for (std::size_t d = 0; d < D; ++d) s += xv[n * D + d] * wv[d * M + m];
      out[n * M + m] = s + bv[m];
    }
  }
  return x.tape().record(std::move(out), {x, weight, bias}, [=](Tape& t, Var self) {
    const Tensor& gy = t.grad_buffer(self);
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(weight);
    if (t.requires_grad(bias)) {
      Tensor& gb = t.grad_buffer(bias);
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t m = 0; m < M; ++m) gb[m] += gy[n * M + m];
    }
    if (t.requires_grad(weight)) {
      Tensor& gw = t.grad_buffer(weight);
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t d = 0; d < D; ++d)
          for (std::size_t m = 0; m < M; ++m) gw[d * M + m] += xv[n * D + d] * gy[n * M + m];
    }
    if (t.requires_grad(x)) {
      Tensor& gx = t.grad_buffer(x);
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t d = 0; d < D; ++d) {
          double s = 0.0;
          for (std::size_t m = 0; m < M; ++m) s += wv[d * M + m] * gy[n * M + m];
          gx[n * D + d] += s;
        }
    }
  });
}

Var global_avg_pool(Var x) {
  const Tensor& xv = x.value();
  require_rank(xv, 4, "global_avg_pool");
  const std::size_t N = xv.dim(0), C = xv.dim(1), P = xv.dim(2) * xv.dim(3);
  Tensor out({N, C});
  for (std::size_t i = 0; i < N * C; ++i) {
    double s = 0.0;
    for (std::size_t p = 0; p < P; ++p) s += xv[i * P + p];
    out[i] = s / static_cast<double>(P);
  }
  return x.tape().record(std::move(out), {x}, [=](Tape& t, Var self) {
    const Tensor& gy = t.grad_buffer(self);
    Tensor& gx = t.grad_buffer(x);
    for (std::size_t i = 0; i < N * C; ++i) {
      const double g = gy[i] / static_cast<double>(P);
      for (std::size_t p = 0; p < P; ++p) gx[i * P + p] += g;
    }
  });
}

Var concat_channels(std::initializer_list<Var> xs) {
  return concat_channels(std::span<const Var>(xs.begin(), xs.size()));
}

Var concat_channels(std::span<const Var> xs) {
  if (xs.empty()) throw ShapeError("concat_channels: no inputs");
  const Tensor& first = xs[0].value();
  require_rank(first, 4, "concat_channels");
  const std::size_t N = first.dim(0), H = first.dim(2), W = first.dim(3), P = H * W;
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const Var& v : xs) {
    require_same_tape(xs[0], v);
    const Tensor& t = v.value();
    require_rank(t, 4, "concat_channels");
    if (t.dim(0) != N || t.dim(2) != H || t.dim(3) != W) {
      throw ShapeError("concat_channels: " + shape_string(t.shape()) + " incompatible with " +
                       shape_string(first.shape()));
    }
    offsets.push_back(total);
    total += t.dim(1);
  }
  Tensor out({N, total, H, W});
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Tensor& t = xs[i].value();
    const std::size_t C = t.dim(1);
    for (std::size_t n = 0; n < N; ++n) {
      const double* src = t.data().data() + n * C * P;
      std::copy(src, src + C * P, out.data().data() + (n * total + offsets[i]) * P);
    }
  }
  std::vector<Var> inputs(xs.begin(), xs.end());
  return xs[0].tape().record(std::move(out), inputs, [=](Tape& t, Var self) {
    const Tensor& gy = t.grad_buffer(self);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (!t.requires_grad(inputs[i])) continue;
      Tensor& g = t.grad_buffer(inputs[i]);
      const std::size_t C = g.dim(1);
      for (std::size_t n = 0; n < N; ++n) {
        const double* src = gy.data().data() + (n * total + offsets[i]) * P;
        double* dst = g.data().data() + n * C * P;
        for (std::size_t k = 0; k < C * P; ++k) dst[k] += src[k];
      }
    }
  });
}

Var slice_channels(Var x, int begin, int count) {
  const Tensor& xv = x.value();
  require_rank(xv, 4, "slice_channels");
  const std::size_t N = xv.dim(0), C = xv.dim(1), P = xv.dim(2) * xv.dim(3);
  if (begin < 0 || count < 1 || static_cast<std::size_t>(begin + count) > C) {
    throw ShapeError("slice_channels: range outside " + shape_string(xv.shape()));
  }
  const std::size_t b = static_cast<std::size_t>(begin), K = static_cast<std::size_t>(count);
  Tensor out({N, K, xv.dim(2), xv.dim(3)});
  for (std::size_t n = 0; n < N; ++n) {
    const double* src = xv.data().data() + (n * C + b) * P;
    std::copy(src, src + K * P, out.data().data() + n * K * P);
  }
  return x.tape().record(std::move(out), {x}, [=](Tape& t, Var self) {
    const Tensor& gy = t.grad_buffer(self);
    Tensor& gx = t.grad_buffer(x);
    for (std::size_t n = 0; n < N; ++n) {
      const double* src = gy.data().data() + n * K * P;
      double* dst = gx.data().data() + (n * C + b) * P;
      for (std::size_t k = 0; k < K * P; ++k) dst[k] += src[k];
    }
  });
}

Var l1_loss(Var pred, Var target) {
  require_same_tape(pred, target);
  const Tensor& pv = pred.value();
  const Tensor& tv = target.value();
  require_same_shape(pv, tv, "l1_loss");
  const double count = static_cast<double>(pv.size());
  double s = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) s += std::abs(pv[i] - tv[i]);
  return pred.tape().record(Tensor::scalar(s / count), {pred, target}, [=](Tape& t, Var self) {
    const double g = t.grad_buffer(self)[0] / count;
    const Tensor& pv = t.value(pred);
    const Tensor& tv = t.value(target);
    for (Var in : {pred, target}) {
      if (!t.requires_grad(in)) continue;
      const double sign_of_input = in.id() == pred.id() ? 1.0 : -1.0;
      Tensor& gi = t.grad_buffer(in);
      for (std::size_t i = 0; i < gi.size(); ++i) {
        const double d = pv[i] - tv[i];
        const double sgn = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        gi[i] += sign_of_input * g * sgn;
      }
    }
  });
}

Var bce_loss(Var pred, Var target) {
  require_same_tape(pred, target);
  const Tensor& pv = pred.value();
  const Tensor& tv = target.value();
  require_same_shape(pv, tv, "bce_loss");
  const double count = static_cast<double>(pv.size());
  double s = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double p = std::clamp(pv[i], kBceEpsilon, 1.0 - kBceEpsilon);
    s += -tv[i] * std::log(p) - (1.0 - tv[i]) * std::log(1.0 - p);
  }
  return pred.tape().record(Tensor::scalar(s / count), {pred, target}, [=](Tape& t, Var self) {
    const double g = t.grad_buffer(self)[0] / count;
    const Tensor& pv = t.value(pred);
    const Tensor& tv = t.value(target);
    if (t.requires_grad(pred)) {
      Tensor& gp = t.grad_buffer(pred);
      for (std::size_t i = 0; i < gp.size(); ++i) {
        if (pv[i] < kBceEpsilon || pv[i] > 1.0 - kBceEpsilon) continue;
        gp[i] += g * (-tv[i] / pv[i] + (1.0 - tv[i]) / (1.0 - pv[i]));
      }
    }
    if (t.requires_grad(target)) {
      Tensor& gt = t.grad_buffer(target);
      for (std::size_t i = 0; i < gt.size(); ++i) {
        const double p = std::clamp(pv[i], kBceEpsilon, 1.0 - kBceEpsilon);
        gt[i] += g * (std::log(1.0 - p) - std::log(p));
      }
    }
  });
}

}  // namespace abm::nn
