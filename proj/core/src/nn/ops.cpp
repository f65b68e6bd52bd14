#include "coastal/nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>

#include "coastal/huber.hpp"

namespace coastal::nn {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

template <class T>
void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
  T* d = dst.data();
  const T* s = src.data();
  for (std::size_t k = 0; k < dst.size(); ++k) d[k] += s[k];
}

template <class T>
Node<T>& parent(Node<T>& self, std::size_t k) {
  return *self.parents[k];
}

template <class T>
std::vector<Var<T>> defined_only(std::initializer_list<Var<T>> vars) {
  std::vector<Var<T>> out;
  for (const auto& v : vars) {
    if (v.defined()) out.push_back(v);
  }
  return out;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

template <class T>
using StridedMap = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;

/// Output columns [lo, hi) whose tap at kernel column `kx` lands inside the input row.
std::pair<int, int> tap_range(int ow, int in_w, int kx, int stride, int pad) {
  const int shift = kx - pad;
  const int lo = shift >= 0 ? 0 : (-shift + stride - 1) / stride;
  const int last = in_w - 1 - shift;
  const int hi = last < 0 ? 0 : std::min(ow, last / stride + 1);
  return {lo, std::max(lo, hi)};
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::tanh:
      return "tanh";
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
  }
  return "?";
}

int conv_output_size(int in, int kernel, int stride, Padding padding) {
  if (padding == Padding::same) return (in + stride - 1) / stride;
  return in >= kernel ? (in - kernel) / stride + 1 : 0;
}

int pool_output_size(int in, int stride) { return (in + stride - 1) / stride; }

// ---------------------------------------------------------------------------
// conv2d

template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& kernel, const Var<T>& bias, int stride, int groups,
              Padding padding) {
  const Shape xs = x.shape();
  const Shape ks = kernel.shape();
  const int kh = ks.n, kw = ks.h, cin_g = ks.w, cout = ks.c;
  require(stride >= 1, "conv2d stride must be >= 1");
  require(groups >= 1, "conv2d groups must be >= 1");
  require(xs.c % groups == 0, "conv2d: input channels " + std::to_string(xs.c) +
                                  " not divisible by groups " + std::to_string(groups));
  require(cout % groups == 0, "conv2d: output channels " + std::to_string(cout) +
                                  " not divisible by groups " + std::to_string(groups));
  require(cin_g * groups == xs.c, "conv2d: kernel expects " + std::to_string(cin_g * groups) +
                                      " input channels, got " + std::to_string(xs.c));
  if (bias.defined()) require(bias.shape().c == cout && bias.value().size() == static_cast<std::size_t>(cout),
                              "conv2d: bias length mismatch");
  const int cout_g = cout / groups;
  const int oh = conv_output_size(xs.h, kh, stride, padding);
  const int ow = conv_output_size(xs.w, kw, stride, padding);
  require(oh >= 1 && ow >= 1, "conv2d: kernel larger than input with 'valid' padding");
  const int pad_t = padding == Padding::same ? std::max((oh - 1) * stride + kh - xs.h, 0) / 2 : 0;
  const int pad_l = padding == Padding::same ? std::max((ow - 1) * stride + kw - xs.w, 0) / 2 : 0;

  Tensor<T> y(Shape{xs.n, oh, ow, cout});
  const Tensor<T>& X = x.value();
  const T* K = kernel.value().data();
  const bool pointwise = kh == 1 && kw == 1 && stride == 1 && groups == 1;
  const bool depthwise = groups > 1 && cin_g == 1 && cout_g == 1;

  if (pointwise) {
    const auto rows = static_cast<Eigen::Index>(static_cast<std::size_t>(xs.n) * xs.h * xs.w);
    ConstMatMap<T> xm(X.data(), rows, xs.c);
    ConstMatMap<T> km(K, xs.c, cout);
    MatMap<T> ym(y.data(), rows, cout);
    ym.noalias() = xm * km;
    if (bias.defined()) {
      Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias.value().data(), cout);
      ym.rowwise() += b;
    }
  } else if (groups == 1) {
    const T* B = bias.defined() ? bias.value().data() : nullptr;
    for (int b = 0; b < xs.n; ++b) {
      for (int oy = 0; oy < oh; ++oy) {
        MatMap<T> yrow(&y(b, oy, 0, 0), ow, cout);
        if (B) yrow.rowwise() = Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(B, cout);
        for (int ky = 0; ky < kh; ++ky) {
          const int iy = oy * stride + ky - pad_t;
          if (iy < 0 || iy >= xs.h) continue;
          for (int kx = 0; kx < kw; ++kx) {
            const auto [lo, hi] = tap_range(ow, xs.w, kx, stride, pad_l);
            if (hi <= lo) continue;
            StridedMap<T> xin(&X(b, iy, lo * stride + kx - pad_l, 0), hi - lo, xs.c,
                              Eigen::OuterStride<>(static_cast<Eigen::Index>(stride) * xs.c));
            ConstMatMap<T> tap(K + static_cast<std::size_t>(ky * kw + kx) * xs.c * cout, xs.c, cout);
            yrow.middleRows(lo, hi - lo).noalias() += xin * tap;
          }
        }
      }
    }
  } else if (depthwise) {
    const T* B = bias.defined() ? bias.value().data() : nullptr;
    for (int b = 0; b < xs.n; ++b) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          T* yp = &y(b, oy, ox, 0);
          if (B) std::copy(B, B + cout, yp);
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = oy * stride + ky - pad_t;
            if (iy < 0 || iy >= xs.h) continue;
            for (int kx = 0; kx < kw; ++kx) {
              const int ix = ox * stride + kx - pad_l;
              if (ix < 0 || ix >= xs.w) continue;
              const T* xp = &X(b, iy, ix, 0);
              const T* kp = K + static_cast<std::size_t>(ky * kw + kx) * cout;
              for (int c = 0; c < cout; ++c) yp[c] += xp[c] * kp[c];
            }
          }
        }
      }
    }
  } else {
    const T* B = bias.defined() ? bias.value().data() : nullptr;
    for (int b = 0; b < xs.n; ++b) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          T* yp = &y(b, oy, ox, 0);
          if (B) std::copy(B, B + cout, yp);
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = oy * stride + ky - pad_t;
            if (iy < 0 || iy >= xs.h) continue;
            for (int kx = 0; kx < kw; ++kx) {
              const int ix = ox * stride + kx - pad_l;
              if (ix < 0 || ix >= xs.w) continue;
              const T* xp = &X(b, iy, ix, 0);
              const T* kp = K + static_cast<std::size_t>(ky * kw + kx) * cin_g * cout;
              for (int g = 0; g < groups; ++g) {
                T* yg = yp + g * cout_g;
                for (int ci = 0; ci < cin_g; ++ci) {
                  const T xv = xp[g * cin_g + ci];
                  const T* krow = kp + static_cast<std::size_t>(ci) * cout + g * cout_g;
                  for (int co = 0; co < cout_g; ++co) yg[co] += xv * krow[co];
                }
              }
            }
          }
        }
      }
    }
  }

  const bool has_bias = bias.defined();
  auto back = [=](Node<T>& self) {
    const Tensor<T>& dY = self.grad;
    Node<T>& xn = parent(self, 0);
    Node<T>& kn = parent(self, 1);
    const Tensor<T>& Xv = xn.value;
    const T* Kv = kn.value.data();
    if (has_bias) {
      Node<T>& bn = parent(self, 2);
      if (bn.requires_grad) {
        T* db = bn.grad_buffer().data();
        const std::size_t pixels = dY.size() / static_cast<std::size_t>(cout);
        for (std::size_t p = 0; p < pixels; ++p) {
          const T* d = dY.data() + p * cout;
          for (int co = 0; co < cout; ++co) db[co] += d[co];
        }
      }
    }
    if (pointwise) {
      const auto rows = static_cast<Eigen::Index>(static_cast<std::size_t>(xs.n) * xs.h * xs.w);
      ConstMatMap<T> dym(dY.data(), rows, cout);
      if (kn.requires_grad) {
        MatMap<T> dkm(kn.grad_buffer().data(), xs.c, cout);
        ConstMatMap<T> xm(Xv.data(), rows, xs.c);
        dkm.noalias() += xm.transpose() * dym;
      }
      if (xn.requires_grad) {
        MatMap<T> dxm(xn.grad_buffer().data(), rows, xs.c);
        ConstMatMap<T> km(Kv, xs.c, cout);
        dxm.noalias() += dym * km.transpose();
      }
      return;
    }
    T* dX = xn.requires_grad ? xn.grad_buffer().data() : nullptr;
    T* dK = kn.requires_grad ? kn.grad_buffer().data() : nullptr;
    if (groups == 1) {
      using MutStrided = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;
      const Eigen::OuterStride<> step(static_cast<Eigen::Index>(stride) * xs.c);
      for (int b = 0; b < xs.n; ++b) {
        for (int oy = 0; oy < oh; ++oy) {
          ConstMatMap<T> dyrow(&dY(b, oy, 0, 0), ow, cout);
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = oy * stride + ky - pad_t;
            if (iy < 0 || iy >= xs.h) continue;
            for (int kx = 0; kx < kw; ++kx) {
              const auto [lo, hi] = tap_range(ow, xs.w, kx, stride, pad_l);
              if (hi <= lo) continue;
              const std::size_t xoff = Xv.offset(b, iy, lo * stride + kx - pad_l, 0);
              const std::size_t koff = static_cast<std::size_t>(ky * kw + kx) * xs.c * cout;
              const auto dy = dyrow.middleRows(lo, hi - lo);
              if (dX) {
                MutStrided dxin(dX + xoff, hi - lo, xs.c, step);
                dxin.noalias() += dy * ConstMatMap<T>(Kv + koff, xs.c, cout).transpose();
              }
              if (dK) {
                MatMap<T> dtap(dK + koff, xs.c, cout);
                dtap.noalias() += StridedMap<T>(Xv.data() + xoff, hi - lo, xs.c, step).transpose() * dy;
              }
            }
          }
        }
      }
      return;
    }
    if (depthwise) {
      for (int b = 0; b < xs.n; ++b) {
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            const T* dyp = &dY(b, oy, ox, 0);
            for (int ky = 0; ky < kh; ++ky) {
              const int iy = oy * stride + ky - pad_t;
              if (iy < 0 || iy >= xs.h) continue;
              for (int kx = 0; kx < kw; ++kx) {
                const int ix = ox * stride + kx - pad_l;
                if (ix < 0 || ix >= xs.w) continue;
                const std::size_t xoff = Xv.offset(b, iy, ix, 0);
                const std::size_t koff = static_cast<std::size_t>(ky * kw + kx) * cout;
                if (dX) {
                  for (int c = 0; c < cout; ++c) dX[xoff + c] += Kv[koff + c] * dyp[c];
                }
                if (dK) {
                  for (int c = 0; c < cout; ++c) dK[koff + c] += Xv[xoff + c] * dyp[c];
                }
              }
            }
          }
        }
      }
      return;
    }
    for (int b = 0; b < xs.n; ++b) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const T* dyp = &dY(b, oy, ox, 0);
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = oy * stride + ky - pad_t;
            if (iy < 0 || iy >= xs.h) continue;
            for (int kx = 0; kx < kw; ++kx) {
              const int ix = ox * stride + kx - pad_l;
              if (ix < 0 || ix >= xs.w) continue;
              const std::size_t xoff = Xv.offset(b, iy, ix, 0);
              const std::size_t koff = static_cast<std::size_t>(ky * kw + kx) * cin_g * cout;
              for (int g = 0; g < groups; ++g) {
                const T* dyg = dyp + g * cout_g;
                for (int ci = 0; ci < cin_g; ++ci) {
                  const std::size_t xi = xoff + g * cin_g + ci;
                  const std::size_t krow = koff + static_cast<std::size_t>(ci) * cout + g * cout_g;
                  if (dX) {
                    T acc{0};
                    for (int co = 0; co < cout_g; ++co) acc += Kv[krow + co] * dyg[co];
                    dX[xi] += acc;
                  }
                  if (dK) {
                    const T xv = Xv[xi];
                    for (int co = 0; co < cout_g; ++co) dK[krow + co] += xv * dyg[co];
                  }
                }
              }
            }
          }
        }
      }
    }
  };
  return make_result<T>(std::move(y), defined_only<T>({x, kernel, bias}), back);
}

// ---------------------------------------------------------------------------
// conv_transpose2d

template <class T>
Var<T> conv_transpose2d(const Var<T>& x, const Var<T>& kernel, const Var<T>& bias, int stride) {
  const Shape xs = x.shape();
  const Shape ks = kernel.shape();
  const int kh = ks.n, kw = ks.h, cin = ks.w, cout = ks.c;
  require(stride >= 1, "conv_transpose2d stride must be >= 1");
  require(cin == xs.c, "conv_transpose2d: kernel expects " + std::to_string(cin) +
                           " input channels, got " + std::to_string(xs.c));
  if (bias.defined()) require(bias.value().size() == static_cast<std::size_t>(cout),
                              "conv_transpose2d: bias length mismatch");
  const int oh = xs.h * stride;
  const int ow = xs.w * stride;
  const int crop_t = std::max(kh - stride, 0) / 2;
  const int crop_l = std::max(kw - stride, 0) / 2;
  const auto pixels = static_cast<Eigen::Index>(static_cast<std::size_t>(xs.n) * xs.h * xs.w);

  Tensor<T> y(Shape{xs.n, oh, ow, cout});
  if (bias.defined()) {
    const T* B = bias.value().data();
    for (std::size_t p = 0; p < y.size(); p += cout) std::copy(B, B + cout, y.data() + p);
  }

  ConstMatMap<T> xm(x.value().data(), pixels, cin);
  RowMat<T> tap(pixels, cout);
  for (int ky = 0; ky < kh; ++ky) {
    for (int kx = 0; kx < kw; ++kx) {
      ConstMatMap<T> km(kernel.value().data() + static_cast<std::size_t>(ky * kw + kx) * cin * cout, cin,
                        cout);
      tap.noalias() = xm * km;
      Eigen::Index p = 0;
      for (int b = 0; b < xs.n; ++b) {
        for (int i = 0; i < xs.h; ++i) {
          const int oy = i * stride + ky - crop_t;
          for (int j = 0; j < xs.w; ++j, ++p) {
            const int ox = j * stride + kx - crop_l;
            if (oy < 0 || oy >= oh || ox < 0 || ox >= ow) continue;
            T* yp = &y(b, oy, ox, 0);
            const T* tp = tap.data() + p * cout;
            for (int co = 0; co < cout; ++co) yp[co] += tp[co];
          }
        }
      }
    }
  }

  const bool has_bias = bias.defined();
  auto back = [=](Node<T>& self) {
    const Tensor<T>& dY = self.grad;
    Node<T>& xn = parent(self, 0);
    Node<T>& kn = parent(self, 1);
    if (has_bias) {
      Node<T>& bn = parent(self, 2);
      if (bn.requires_grad) {
        T* db = bn.grad_buffer().data();
        for (std::size_t p = 0; p < dY.size(); p += cout) {
          for (int co = 0; co < cout; ++co) db[co] += dY[p + co];
        }
      }
    }
    ConstMatMap<T> xm2(xn.value.data(), pixels, cin);
    RowMat<T> gathered(pixels, cout);
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        Eigen::Index p = 0;
        for (int b = 0; b < xs.n; ++b) {
          for (int i = 0; i < xs.h; ++i) {
            const int oy = i * stride + ky - crop_t;
            for (int j = 0; j < xs.w; ++j, ++p) {
              const int ox = j * stride + kx - crop_l;
              T* gp = gathered.data() + p * cout;
              if (oy < 0 || oy >= oh || ox < 0 || ox >= ow) {
                std::fill(gp, gp + cout, T{0});
              } else {
                const T* dyp = &dY(b, oy, ox, 0);
                std::copy(dyp, dyp + cout, gp);
              }
            }
          }
        }
        const std::size_t koff = static_cast<std::size_t>(ky * kw + kx) * cin * cout;
        if (kn.requires_grad) {
          MatMap<T> dkm(kn.grad_buffer().data() + koff, cin, cout);
          dkm.noalias() += xm2.transpose() * gathered;
        }
        if (xn.requires_grad) {
          ConstMatMap<T> km(kn.value.data() + koff, cin, cout);
          MatMap<T> dxm(xn.grad_buffer().data(), pixels, cin);
          dxm.noalias() += gathered * km.transpose();
        }
      }
    }
  };
  return make_result<T>(std::move(y), defined_only<T>({x, kernel, bias}), back);
}

// ---------------------------------------------------------------------------
// pool2d

template <class T>
Var<T> pool2d(const Var<T>& x, int window, int stride, PoolMode mode) {
  require(window >= 1 && stride >= 1, "pool2d window and stride must be >= 1");
  const Shape xs = x.shape();
  const int oh = pool_output_size(xs.h, stride);
  const int ow = pool_output_size(xs.w, stride);
  const Tensor<T>& X = x.value();
  Tensor<T> y(Shape{xs.n, oh, ow, xs.c});
  auto argmax = std::make_shared<std::vector<std::size_t>>();
  if (mode == PoolMode::max) argmax->resize(y.size());

  std::size_t out = 0;
  for (int b = 0; b < xs.n; ++b) {
    for (int oy = 0; oy < oh; ++oy) {
      const int y0 = oy * stride, y1 = std::min(y0 + window, xs.h);
      for (int ox = 0; ox < ow; ++ox) {
        const int x0 = ox * stride, x1 = std::min(x0 + window, xs.w);
        for (int ch = 0; ch < xs.c; ++ch, ++out) {
          if (mode == PoolMode::max) {
            std::size_t best = X.offset(b, y0, x0, ch);
            for (int i = y0; i < y1; ++i) {
              for (int j = x0; j < x1; ++j) {
                const std::size_t k = X.offset(b, i, j, ch);
                if (X[k] > X[best]) best = k;
              }
            }
            (*argmax)[out] = best;
            y[out] = X[best];
          } else {
            T acc{0};
            for (int i = y0; i < y1; ++i) {
              for (int j = x0; j < x1; ++j) acc += X(b, i, j, ch);
            }
            y[out] = acc / static_cast<T>((y1 - y0) * (x1 - x0));
          }
        }
      }
    }
  }

  auto back = [=](Node<T>& self) {
    Node<T>& xn = parent(self, 0);
    Tensor<T>& dX = xn.grad_buffer();
    const Tensor<T>& dY = self.grad;
    if (mode == PoolMode::max) {
      for (std::size_t k = 0; k < dY.size(); ++k) dX[(*argmax)[k]] += dY[k];
      return;
    }
    std::size_t o = 0;
    for (int b = 0; b < xs.n; ++b) {
      for (int oy = 0; oy < oh; ++oy) {
        const int y0 = oy * stride, y1 = std::min(y0 + window, xs.h);
        for (int ox = 0; ox < ow; ++ox) {
          const int x0 = ox * stride, x1 = std::min(x0 + window, xs.w);
          const T inv = T{1} / static_cast<T>((y1 - y0) * (x1 - x0));
          for (int ch = 0; ch < xs.c; ++ch, ++o) {
            const T g = dY[o] * inv;
            for (int i = y0; i < y1; ++i) {
              for (int j = x0; j < x1; ++j) dX(b, i, j, ch) += g;
            }
          }
        }
      }
    }
  };
  return make_result<T>(std::move(y), {x}, back);
}

// ---------------------------------------------------------------------------
// dense

template <class T>
Var<T> dense(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  require(xs.h == 1 && xs.w == 1, "dense expects (N, 1, 1, in) input, got " + xs.str());
  require(ws.w == xs.c, "dense: weight expects " + std::to_string(ws.w) + " inputs, got " +
                            std::to_string(xs.c));
  return conv2d(x, weight, bias, 1, 1, Padding::valid);
}

// ---------------------------------------------------------------------------
// elementwise

template <class T>
Var<T> activate(const Var<T>& x, Activation kind) {
  const Tensor<T>& X = x.value();
  Tensor<T> y(X.shape());
  const auto n = static_cast<Eigen::Index>(y.size());
  switch (kind) {
    case Activation::tanh:
      Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>(y.data(), n) =
          Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>(X.data(), n).tanh();
      break;
    case Activation::relu:
      for (std::size_t k = 0; k < y.size(); ++k) y[k] = X[k] > T{0} ? X[k] : T{0};
      break;
    case Activation::sigmoid:
      for (std::size_t k = 0; k < y.size(); ++k) y[k] = T{1} / (T{1} + std::exp(-X[k]));
      break;
  }
  auto back = [kind](Node<T>& self) {
    Node<T>& xn = parent(self, 0);
    Tensor<T>& dX = xn.grad_buffer();
    const Tensor<T>& Y = self.value;
    const Tensor<T>& dY = self.grad;
    switch (kind) {
      case Activation::tanh:
        for (std::size_t k = 0; k < dX.size(); ++k) dX[k] += dY[k] * (T{1} - Y[k] * Y[k]);
        break;
      case Activation::relu:
        for (std::size_t k = 0; k < dX.size(); ++k) {
          if (Y[k] > T{0}) dX[k] += dY[k];
        }
        break;
      case Activation::sigmoid:
        for (std::size_t k = 0; k < dX.size(); ++k) dX[k] += dY[k] * Y[k] * (T{1} - Y[k]);
        break;
    }
  };
  return make_result<T>(std::move(y), {x}, back);
}

template <class T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
  const Shape as = a.shape();
  const Shape bs = b.shape();
  require(as.n == bs.n && as.h == bs.h && as.w == bs.w,
          "concat_channels: spatial shapes differ " + as.str() + " vs " + bs.str());
  Tensor<T> y(Shape{as.n, as.h, as.w, as.c + bs.c});
  const std::size_t pixels = static_cast<std::size_t>(as.n) * as.h * as.w;
  const T* A = a.value().data();
  const T* B = b.value().data();
  T* Y = y.data();
  for (std::size_t p = 0; p < pixels; ++p) {
    std::copy(A + p * as.c, A + (p + 1) * as.c, Y + p * (as.c + bs.c));
    std::copy(B + p * bs.c, B + (p + 1) * bs.c, Y + p * (as.c + bs.c) + as.c);
  }
  auto back = [=](Node<T>& self) {
    const T* dY = self.grad.data();
    Node<T>& an = parent(self, 0);
    Node<T>& bn = parent(self, 1);
    const int ca = as.c, cb = bs.c;
    if (an.requires_grad) {
      T* dA = an.grad_buffer().data();
      for (std::size_t p = 0; p < pixels; ++p) {
        for (int k = 0; k < ca; ++k) dA[p * ca + k] += dY[p * (ca + cb) + k];
      }
    }
    if (bn.requires_grad) {
      T* dB = bn.grad_buffer().data();
      for (std::size_t p = 0; p < pixels; ++p) {
        for (int k = 0; k < cb; ++k) dB[p * cb + k] += dY[p * (ca + cb) + ca + k];
      }
    }
  };
  return make_result<T>(std::move(y), {a, b}, back);
}

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require(a.shape() == b.shape(), "add: shapes differ " + a.shape().str() + " vs " + b.shape().str());
  Tensor<T> y(a.shape());
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = a.value()[k] + b.value()[k];
  auto back = [](Node<T>& self) {
    for (std::size_t i = 0; i < 2; ++i) {
      Node<T>& p = parent(self, i);
      if (p.requires_grad) accumulate(p.grad_buffer(), self.grad);
    }
  };
  return make_result<T>(std::move(y), {a, b}, back);
}

template <class T>
Var<T> scale_channels(const Var<T>& x, const Var<T>& s) {
  const Shape xs = x.shape();
  const Shape ss = s.shape();
  require(ss.n == xs.n && ss.h == 1 && ss.w == 1 && ss.c == xs.c,
          "scale_channels: scale shape " + ss.str() + " does not match " + xs.str());
  Tensor<T> y(xs);
  const std::size_t per_sample = static_cast<std::size_t>(xs.h) * xs.w;
  const T* X = x.value().data();
  const T* S = s.value().data();
  for (int b = 0; b < xs.n; ++b) {
    for (std::size_t p = 0; p < per_sample; ++p) {
      const std::size_t base = (b * per_sample + p) * xs.c;
      for (int ch = 0; ch < xs.c; ++ch) y[base + ch] = X[base + ch] * S[b * xs.c + ch];
    }
  }
  auto back = [=](Node<T>& self) {
    Node<T>& xn = parent(self, 0);
    Node<T>& sn = parent(self, 1);
    const T* dY = self.grad.data();
    const T* Xv = xn.value.data();
    const T* Sv = sn.value.data();
    T* dX = xn.requires_grad ? xn.grad_buffer().data() : nullptr;
    T* dS = sn.requires_grad ? sn.grad_buffer().data() : nullptr;
    for (int b = 0; b < xs.n; ++b) {
      for (std::size_t p = 0; p < per_sample; ++p) {
        const std::size_t base = (b * per_sample + p) * xs.c;
        for (int ch = 0; ch < xs.c; ++ch) {
          if (dX) dX[base + ch] += dY[base + ch] * Sv[b * xs.c + ch];
          if (dS) dS[b * xs.c + ch] += dY[base + ch] * Xv[base + ch];
        }
      }
    }
  };
  return make_result<T>(std::move(y), {x, s}, back);
}

template <class T>
Var<T> channel_sum(const Var<T>& x) {
  const Shape xs = x.shape();
  Tensor<T> y(Shape{xs.n, xs.h, xs.w, 1});
  const T* X = x.value().data();
  for (std::size_t p = 0; p < y.size(); ++p) {
    T acc{0};
    for (int ch = 0; ch < xs.c; ++ch) acc += X[p * xs.c + ch];
    y[p] = acc;
  }
  auto back = [c = xs.c](Node<T>& self) {
    Node<T>& xn = parent(self, 0);
    T* dX = xn.grad_buffer().data();
    for (std::size_t p = 0; p < self.grad.size(); ++p) {
      for (int ch = 0; ch < c; ++ch) dX[p * c + ch] += self.grad[p];
    }
  };
  return make_result<T>(std::move(y), {x}, back);
}

template <class T>
Var<T> global_avg_pool(const Var<T>& x) {
  const Shape xs = x.shape();
  Tensor<T> y(Shape{xs.n, 1, 1, xs.c});
  const std::size_t per_sample = static_cast<std::size_t>(xs.h) * xs.w;
  const T* X = x.value().data();
  for (int b = 0; b < xs.n; ++b) {
    for (std::size_t p = 0; p < per_sample; ++p) {
      for (int ch = 0; ch < xs.c; ++ch) y[b * xs.c + ch] += X[(b * per_sample + p) * xs.c + ch];
    }
    for (int ch = 0; ch < xs.c; ++ch) y[b * xs.c + ch] /= static_cast<T>(per_sample);
  }
  auto back = [=](Node<T>& self) {
    Node<T>& xn = parent(self, 0);
    T* dX = xn.grad_buffer().data();
    for (int b = 0; b < xs.n; ++b) {
      for (std::size_t p = 0; p < per_sample; ++p) {
        for (int ch = 0; ch < xs.c; ++ch) {
          dX[(b * per_sample + p) * xs.c + ch] += self.grad[b * xs.c + ch] / static_cast<T>(per_sample);
        }
      }
    }
  };
  return make_result<T>(std::move(y), {x}, back);
}

template <class T>
Var<T> masked_huber(const Var<T>& pred, const Tensor<T>& target, const Tensor<T>& mask, T theta) {
  require(pred.shape() == target.shape() && pred.shape() == mask.shape(),
          "masked_huber: prediction, target and mask shapes differ");
  require(theta >= T{0}, "masked_huber: theta must be non-negative");
  const Tensor<T>& P = pred.value();
  T total{0};
  std::size_t count = 0;
  for (std::size_t k = 0; k < P.size(); ++k) {
    if (mask[k] != T{0}) {
      total += huber(P[k] - target[k], theta);
      ++count;
    }
  }
  if (count == 0) throw ConsistencyError("masked_huber: mask selects no cells");
  Tensor<T> y(Shape{1, 1, 1, 1}, total / static_cast<T>(count));
  auto back = [target, mask, theta, count](Node<T>& self) {
    Node<T>& pn = parent(self, 0);
    Tensor<T>& dP = pn.grad_buffer();
    const T scale = self.grad[0] / static_cast<T>(count);
    for (std::size_t k = 0; k < dP.size(); ++k) {
      if (mask[k] != T{0}) dP[k] += scale * huber_derivative(pn.value[k] - target[k], theta);
    }
  };
  return make_result<T>(std::move(y), {pred}, back);
}

template <class T>
Var<T> weighted_sum(const Var<T>& x, const Tensor<T>& weights) {
  require(x.shape() == weights.shape(), "weighted_sum: weight shape mismatch");
  T acc{0};
  for (std::size_t k = 0; k < weights.size(); ++k) acc += x.value()[k] * weights[k];
  Tensor<T> y(Shape{1, 1, 1, 1}, acc);
  auto back = [weights](Node<T>& self) {
    Node<T>& xn = parent(self, 0);
    Tensor<T>& dX = xn.grad_buffer();
    for (std::size_t k = 0; k < dX.size(); ++k) dX[k] += self.grad[0] * weights[k];
  };
  return make_result<T>(std::move(y), {x}, back);
}

#define COASTAL_INSTANTIATE_OPS(T)                                                              \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&, int, int, Padding);      \
  template Var<T> conv_transpose2d(const Var<T>&, const Var<T>&, const Var<T>&, int);         \
  template Var<T> pool2d(const Var<T>&, int, int, PoolMode);                                  \
  template Var<T> dense(const Var<T>&, const Var<T>&, const Var<T>&);                         \
  template Var<T> activate(const Var<T>&, Activation);                                        \
  template Var<T> concat_channels(const Var<T>&, const Var<T>&);                              \
  template Var<T> add(const Var<T>&, const Var<T>&);                                          \
  template Var<T> scale_channels(const Var<T>&, const Var<T>&);                               \
  template Var<T> channel_sum(const Var<T>&);                                                 \
  template Var<T> global_avg_pool(const Var<T>&);                                             \
  template Var<T> masked_huber(const Var<T>&, const Tensor<T>&, const Tensor<T>&, T);         \
  template Var<T> weighted_sum(const Var<T>&, const Tensor<T>&);

COASTAL_INSTANTIATE_OPS(float)
COASTAL_INSTANTIATE_OPS(double)

#undef COASTAL_INSTANTIATE_OPS

}  // namespace coastal::nn
