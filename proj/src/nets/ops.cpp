#include "usmesh/nets/ops.hpp"

#include "usmesh/error.hpp"

#include <algorithm>
#include <cmath>

namespace usmesh::nn {
namespace {

template <typename Scalar>
using Matrix = typename Tensor<Scalar>::Matrix;
template <typename Scalar>
using ColVec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
Eigen::Map<const ColVec<Scalar>> as_vector(const Tensor<Scalar>& t) {
  return Eigen::Map<const ColVec<Scalar>>(t.data(), t.size());
}
template <typename Scalar>
Eigen::Map<ColVec<Scalar>> as_vector(Tensor<Scalar>& t) {
  return Eigen::Map<ColVec<Scalar>>(t.data(), t.size());
}

// col((c*k + ky)*k + kx, y*w + x) = img(c, y + ky - p, x + kx - p), zero outside.
template <typename Scalar>
void im2col(const Scalar* img, int channels, int h, int w, int k, Matrix<Scalar>& col) {
  const int p = k / 2;
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
  col.resize(static_cast<Eigen::Index>(channels) * k * k, hw);
  for (int c = 0; c < channels; ++c) {
    const Scalar* src = img + c * hw;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        Scalar* dst = col.data() + ((static_cast<Eigen::Index>(c) * k + ky) * k + kx) * hw;
        const int x0 = std::max(0, p - kx);
        const int x1 = std::min(w, w + p - kx);
        for (int y = 0; y < h; ++y) {
          Scalar* row = dst + static_cast<Eigen::Index>(y) * w;
          const int sy = y + ky - p;
          if (sy < 0 || sy >= h) {
            std::fill(row, row + w, Scalar(0));
            continue;
          }
          std::fill(row, row + x0, Scalar(0));
          const Scalar* srow = src + static_cast<Eigen::Index>(sy) * w + (kx - p);
          std::copy(srow + x0, srow + x1, row + x0);
          std::fill(row + std::max(x1, x0), row + w, Scalar(0));
        }
      }
    }
  }
}

template <typename Scalar>
void col2im_add(const Matrix<Scalar>& col, int channels, int h, int w, int k, Scalar* img) {
  const int p = k / 2;
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
  for (int c = 0; c < channels; ++c) {
    Scalar* dst = img + c * hw;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const Scalar* src = col.data() + ((static_cast<Eigen::Index>(c) * k + ky) * k + kx) * hw;
        const int x0 = std::max(0, p - kx);
        const int x1 = std::min(w, w + p - kx);
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - p;
          if (sy < 0 || sy >= h) continue;
          const Scalar* row = src + static_cast<Eigen::Index>(y) * w;
          Scalar* drow = dst + static_cast<Eigen::Index>(sy) * w + (kx - p);
          for (int x = x0; x < x1; ++x) drow[x] += row[x];
        }
      }
    }
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace

template <typename Scalar>
Scalar hard_sigmoid(Scalar x) {
  return std::clamp(Scalar(0.2) * x + Scalar(0.5), Scalar(0), Scalar(1));
}

template <typename Scalar>
Var<Scalar> conv2d(const Var<Scalar>& x, const Var<Scalar>& weight, const Var<Scalar>& bias) {
  const Shape xs = x->value.shape();
  const Shape ws = weight->value.shape();
  const int k = ws.h;
  require(ws.c == xs.c && ws.h == ws.w && k % 2 == 1,
          "conv2d: weight " + ws.str() + " incompatible with input " + xs.str());
  Tensor<Scalar> out(Shape{xs.n, ws.n, xs.h, xs.w});
  const auto wm = weight->value.rows();
  Matrix<Scalar> col;
  for (int n = 0; n < xs.n; ++n) {
    auto y = out.image(n);
    if (k == 1) {
      y.noalias() = wm * x->value.image(n);
    } else {
      im2col(x->value.image(n).data(), xs.c, xs.h, xs.w, k, col);
      y.noalias() = wm * col;
    }
    if (bias) y.colwise() += as_vector(bias->value);
  }
  return record<Scalar>(std::move(out), {x, weight, bias}, [k](Node<Scalar>& self) {
    Node<Scalar>& in = *self.inputs[0];
    Node<Scalar>& w = *self.inputs[1];
    Node<Scalar>* b = self.inputs[2].get();
    const Shape s = in.value.shape();
    Matrix<Scalar> col;
    Matrix<Scalar> dcol;
    for (int n = 0; n < s.n; ++n) {
      const auto dy = self.grad.image(n);
      if (b && b->requires_grad) as_vector(b->grad_buffer()) += dy.rowwise().sum();
      if (k == 1) {
        if (w.requires_grad) w.grad_buffer().rows().noalias() += dy * in.value.image(n).transpose();
        if (in.requires_grad) in.grad_buffer().image(n).noalias() += w.value.rows().transpose() * dy;
        continue;
      }
      if (w.requires_grad) {
        im2col(in.value.image(n).data(), s.c, s.h, s.w, k, col);
        w.grad_buffer().rows().noalias() += dy * col.transpose();
      }
      if (in.requires_grad) {
        dcol.noalias() = w.value.rows().transpose() * dy;
        col2im_add(dcol, s.c, s.h, s.w, k, in.grad_buffer().image(n).data());
      }
    }
  });
}

template <typename Scalar>
Var<Scalar> depthwise_conv2d(const Var<Scalar>& x, const Var<Scalar>& weight) {
  const Shape xs = x->value.shape();
  const Shape ws = weight->value.shape();
  const int k = ws.h;
  require(ws.n == xs.c && ws.c == 1 && ws.h == ws.w && k % 2 == 1,
          "depthwise_conv2d: weight " + ws.str() + " incompatible with input " + xs.str());
  const int p = k / 2;
  Tensor<Scalar> out(xs);
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c)
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          const Scalar wv = weight->value(c, 0, ky, kx);
          const int x0 = std::max(0, p - kx), x1 = std::min(xs.w, xs.w + p - kx);
          for (int y = 0; y < xs.h; ++y) {
            const int sy = y + ky - p;
            if (sy < 0 || sy >= xs.h) continue;
            for (int xx = x0; xx < x1; ++xx) out(n, c, y, xx) += wv * x->value(n, c, sy, xx + kx - p);
          }
        }
  return record<Scalar>(std::move(out), {x, weight}, [k, p](Node<Scalar>& self) {
    Node<Scalar>& in = *self.inputs[0];
    Node<Scalar>& w = *self.inputs[1];
    const Shape s = in.value.shape();
    Tensor<Scalar>* gin = in.requires_grad ? &in.grad_buffer() : nullptr;
    Tensor<Scalar>* gw = w.requires_grad ? &w.grad_buffer() : nullptr;
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c)
        for (int ky = 0; ky < k; ++ky)
          for (int kx = 0; kx < k; ++kx) {
            const Scalar wv = w.value(c, 0, ky, kx);
            Scalar acc = 0;
            const int x0 = std::max(0, p - kx), x1 = std::min(s.w, s.w + p - kx);
            for (int y = 0; y < s.h; ++y) {
              const int sy = y + ky - p;
              if (sy < 0 || sy >= s.h) continue;
              for (int xx = x0; xx < x1; ++xx) {
                const Scalar g = self.grad(n, c, y, xx);
                acc += g * in.value(n, c, sy, xx + kx - p);
                if (gin) (*gin)(n, c, sy, xx + kx - p) += g * wv;
              }
            }
            if (gw) (*gw)(c, 0, ky, kx) += acc;
          }
  });
}

template <typename Scalar>
Var<Scalar> conv_transpose2d(const Var<Scalar>& x, const Var<Scalar>& weight,
                             const Var<Scalar>& bias, int stride) {
  const Shape xs = x->value.shape();
  const Shape ws = weight->value.shape();
  const int k = ws.h;
  require(ws.n == xs.c && ws.h == ws.w,
          "conv_transpose2d: weight " + ws.str() + " incompatible with input " + xs.str());
  const int out_c = ws.c;
  const int pad = std::max(k - stride, 0) / 2;
  const int oh = xs.h * stride, ow = xs.w * stride;
  Tensor<Scalar> out(Shape{xs.n, out_c, oh, ow});
  const auto wm = weight->value.rows();  // (in, out*k*k)

  // Output pixel (s*i + ky - pad, s*j + kx - pad) of channel o receives
  // cols((o*k + ky)*k + kx, i*w + j).
  auto scatter = [&](const Matrix<Scalar>& cols, Tensor<Scalar>& dst, int n) {
    for (int o = 0; o < out_c; ++o)
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          const Scalar* src = cols.data() + ((static_cast<Eigen::Index>(o) * k + ky) * k + kx) * xs.h * xs.w;
          for (int i = 0; i < xs.h; ++i) {
            const int oy = stride * i + ky - pad;
            if (oy < 0 || oy >= oh) continue;
            for (int j = 0; j < xs.w; ++j) {
              const int ox = stride * j + kx - pad;
              if (ox < 0 || ox >= ow) continue;
              dst(n, o, oy, ox) += src[static_cast<Eigen::Index>(i) * xs.w + j];
            }
          }
        }
  };

  Matrix<Scalar> cols;
  for (int n = 0; n < xs.n; ++n) {
    cols.noalias() = wm.transpose() * x->value.image(n);
    scatter(cols, out, n);
    if (bias) out.image(n).colwise() += as_vector(bias->value);
  }

  return record<Scalar>(std::move(out), {x, weight, bias}, [k, stride, pad, out_c](Node<Scalar>& self) {
    Node<Scalar>& in = *self.inputs[0];
    Node<Scalar>& w = *self.inputs[1];
    Node<Scalar>* b = self.inputs[2].get();
    const Shape s = in.value.shape();
    const int oh = s.h * stride, ow = s.w * stride;
    Matrix<Scalar> dcols(static_cast<Eigen::Index>(out_c) * k * k, static_cast<Eigen::Index>(s.h) * s.w);
    for (int n = 0; n < s.n; ++n) {
      const auto dy = self.grad.image(n);
      if (b && b->requires_grad) as_vector(b->grad_buffer()) += dy.rowwise().sum();
      for (int o = 0; o < out_c; ++o)
        for (int ky = 0; ky < k; ++ky)
          for (int kx = 0; kx < k; ++kx) {
            Scalar* dst = dcols.data() + ((static_cast<Eigen::Index>(o) * k + ky) * k + kx) * s.h * s.w;
            for (int i = 0; i < s.h; ++i) {
              const int oy = stride * i + ky - pad;
              for (int j = 0; j < s.w; ++j) {
                const int ox = stride * j + kx - pad;
                dst[static_cast<Eigen::Index>(i) * s.w + j] =
                    (oy >= 0 && oy < oh && ox >= 0 && ox < ow) ? self.grad(n, o, oy, ox) : Scalar(0);
              }
            }
          }
      if (w.requires_grad) w.grad_buffer().rows().noalias() += in.value.image(n) * dcols.transpose();
      if (in.requires_grad) in.grad_buffer().image(n).noalias() += w.value.rows() * dcols;
    }
  });
}

template <typename Scalar>
Var<Scalar> batch_norm(const Var<Scalar>& x, const Var<Scalar>& gamma, const Var<Scalar>& beta,
                       BatchNormState<Scalar> state, bool training, Scalar momentum, Scalar eps) {
  const Shape s = x->value.shape();
  require(gamma->value.size() == s.c, "batch_norm: channel mismatch for input " + s.str());
  const Eigen::Index plane = s.plane();
  const Scalar count = static_cast<Scalar>(s.n) * static_cast<Scalar>(plane);
  ColVec<Scalar> mean(s.c), inv(s.c);
  if (training) {
    mean.setZero();
    for (int n = 0; n < s.n; ++n) mean += x->value.image(n).rowwise().sum();
    mean /= count;
    ColVec<Scalar> var = ColVec<Scalar>::Zero(s.c);
    for (int n = 0; n < s.n; ++n)
      var += (x->value.image(n).colwise() - mean).array().square().rowwise().sum().matrix();
    var /= count;
    inv = (var.array() + eps).rsqrt().matrix();
    as_vector(*state.mean) = momentum * as_vector(*state.mean) + (Scalar(1) - momentum) * mean;
    as_vector(*state.var) = momentum * as_vector(*state.var) + (Scalar(1) - momentum) * var;
  } else {
    mean = as_vector(*state.mean);
    inv = (as_vector(*state.var).array() + eps).rsqrt().matrix();
  }
  const ColVec<Scalar> g = as_vector(gamma->value);
  const ColVec<Scalar> scale = g.cwiseProduct(inv);
  const ColVec<Scalar> shift = as_vector(beta->value) - scale.cwiseProduct(mean);
  Tensor<Scalar> out(s);
  for (int n = 0; n < s.n; ++n) {
    out.image(n).noalias() = scale.asDiagonal() * x->value.image(n);
    out.image(n).colwise() += shift;
  }

  return record<Scalar>(std::move(out), {x, gamma, beta},
                        [training, mean, inv, count](Node<Scalar>& self) {
    Node<Scalar>& in = *self.inputs[0];
    Node<Scalar>& ga = *self.inputs[1];
    Node<Scalar>& be = *self.inputs[2];
    const Shape s = in.value.shape();
    const Eigen::Index channels = s.c;
    ColVec<Scalar> sum_dy = ColVec<Scalar>::Zero(channels);
    ColVec<Scalar> sum_dy_xhat = ColVec<Scalar>::Zero(channels);
    Matrix<Scalar> xhat;
    for (int n = 0; n < s.n; ++n) {
      xhat = inv.asDiagonal() * (in.value.image(n).colwise() - mean);
      const auto dy = self.grad.image(n);
      sum_dy += dy.rowwise().sum();
      sum_dy_xhat += dy.cwiseProduct(xhat).rowwise().sum();
    }
    if (be.requires_grad) as_vector(be.grad_buffer()) += sum_dy;
    if (ga.requires_grad) as_vector(ga.grad_buffer()) += sum_dy_xhat;
    if (!in.requires_grad) return;
    const ColVec<Scalar> g = as_vector(ga.value);
    for (int n = 0; n < s.n; ++n) {
      const auto dy = self.grad.image(n);
      auto dx = in.grad_buffer().image(n);
      if (training) {
        xhat = inv.asDiagonal() * (in.value.image(n).colwise() - mean);
        const ColVec<Scalar> a = g.cwiseProduct(inv) / count;
        Matrix<Scalar> t = dy * count;
        t.colwise() -= sum_dy;
        t -= sum_dy_xhat.asDiagonal() * xhat;
        dx.noalias() += a.asDiagonal() * t;
      } else {
        dx.noalias() += g.cwiseProduct(inv).asDiagonal() * dy;
      }
    }
  });
}

template <typename Scalar>
Var<Scalar> activate(const Var<Scalar>& x, Activation act) {
  if (act == Activation::Linear) return x;
  Tensor<Scalar> out(x->value.shape());
  const auto& in = x->value.array();
  auto& o = out.array();
  switch (act) {
    case Activation::Relu: o = in.max(Scalar(0)); break;
    case Activation::Sigmoid:
      for (Eigen::Index i = 0; i < in.size(); ++i) {
        const Scalar v = in[i];
        if (v >= 0) {
          o[i] = Scalar(1) / (Scalar(1) + std::exp(-v));
        } else {
          const Scalar e = std::exp(v);
          o[i] = e / (Scalar(1) + e);
        }
      }
      break;
    case Activation::HardSigmoid: o = (Scalar(0.2) * in + Scalar(0.5)).max(Scalar(0)).min(Scalar(1)); break;
    case Activation::Tanh: o = in.tanh(); break;
    case Activation::Linear: break;
  }
  return record<Scalar>(std::move(out), {x}, [act](Node<Scalar>& self) {
    Node<Scalar>& in = *self.inputs[0];
    const auto& y = self.value.array();
    const auto& dy = self.grad.array();
    auto& dx = in.grad_buffer().array();
    switch (act) {
      case Activation::Relu: dx += (in.value.array() > Scalar(0)).template cast<Scalar>() * dy; break;
      case Activation::Sigmoid: dx += dy * y * (Scalar(1) - y); break;
      case Activation::HardSigmoid:
        dx += dy * Scalar(0.2) *
              ((in.value.array() > Scalar(-2.5)) && (in.value.array() < Scalar(2.5))).template cast<Scalar>();
        break;
      case Activation::Tanh: dx += dy * (Scalar(1) - y.square()); break;
      case Activation::Linear: dx += dy; break;
    }
  });
}

template <typename Scalar>
Var<Scalar> max_pool2(const Var<Scalar>& x) {
  const Shape s = x->value.shape();
  require(s.h % 2 == 0 && s.w % 2 == 0, "max_pool2: odd spatial size " + s.str());
  const Shape os{s.n, s.c, s.h / 2, s.w / 2};
  Tensor<Scalar> out(os);
  std::vector<Eigen::Index> argmax(static_cast<std::size_t>(os.size()));
  Eigen::Index k = 0;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < os.h; ++y)
        for (int xx = 0; xx < os.w; ++xx, ++k) {
          Eigen::Index best = x->value.offset(n, c, 2 * y, 2 * xx);
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const Eigen::Index idx = x->value.offset(n, c, 2 * y + dy, 2 * xx + dx);
              if (x->value.array()[idx] > x->value.array()[best]) best = idx;
            }
          argmax[static_cast<std::size_t>(k)] = best;
          out.array()[k] = x->value.array()[best];
        }
  return record<Scalar>(std::move(out), {x}, [argmax = std::move(argmax)](Node<Scalar>& self) {
    auto& dx = self.inputs[0]->grad_buffer().array();
    const auto& dy = self.grad.array();
    for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += dy[static_cast<Eigen::Index>(i)];
  });
}

template <typename Scalar>
Var<Scalar> concat_channels(const std::vector<Var<Scalar>>& parts) {
  require(!parts.empty(), "concat_channels: no inputs");
  Shape s = parts.front()->value.shape();
  int channels = 0;
  for (const auto& p : parts) {
    const Shape ps = p->value.shape();
    require(ps.n == s.n && ps.h == s.h && ps.w == s.w,
            "concat_channels: mismatched " + ps.str() + " vs " + s.str());
    channels += ps.c;
  }
  Tensor<Scalar> out(Shape{s.n, channels, s.h, s.w});
  for (int n = 0; n < s.n; ++n) {
    int row = 0;
    for (const auto& p : parts) {
      const int c = p->value.shape().c;
      out.image(n).middleRows(row, c) = p->value.image(n);
      row += c;
    }
  }
  return record<Scalar>(std::move(out), parts, [](Node<Scalar>& self) {
    const int batch = self.value.shape().n;
    for (int n = 0; n < batch; ++n) {
      int row = 0;
      for (auto& p : self.inputs) {
        const int c = p->value.shape().c;
        if (p->requires_grad) p->grad_buffer().image(n) += self.grad.image(n).middleRows(row, c);
        row += c;
      }
    }
  });
}

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  require(a->value.shape() == b->value.shape(),
          "add: mismatched " + a->value.shape().str() + " vs " + b->value.shape().str());
  Tensor<Scalar> out(a->value.shape());
  out.array() = a->value.array() + b->value.array();
  return record<Scalar>(std::move(out), {a, b}, [](Node<Scalar>& self) {
    for (auto& in : self.inputs)
      if (in->requires_grad) in->grad_buffer().array() += self.grad.array();
  });
}

template <typename Scalar>
Var<Scalar> multiply(const Var<Scalar>& x, const Var<Scalar>& m) {
  const Shape xs = x->value.shape();
  const Shape ms = m->value.shape();
  enum class Mode { Same, Spatial, Channel };
  Mode mode;
  if (ms == xs) mode = Mode::Same;
  else if (ms.n == xs.n && ms.c == 1 && ms.h == xs.h && ms.w == xs.w) mode = Mode::Spatial;
  else if (ms.n == xs.n && ms.c == xs.c && ms.h == 1 && ms.w == 1) mode = Mode::Channel;
  else throw ShapeError("multiply: cannot broadcast " + ms.str() + " onto " + xs.str());

  Tensor<Scalar> out(xs);
  for (int n = 0; n < xs.n; ++n) {
    switch (mode) {
      case Mode::Same: out.image(n) = x->value.image(n).cwiseProduct(m->value.image(n)); break;
      case Mode::Spatial:
        out.image(n) = x->value.image(n).array().rowwise() * m->value.image(n).array().row(0);
        break;
      case Mode::Channel:
        out.image(n) = x->value.image(n).array().colwise() * m->value.image(n).array().col(0);
        break;
    }
  }
  return record<Scalar>(std::move(out), {x, m}, [mode](Node<Scalar>& self) {
    Node<Scalar>& a = *self.inputs[0];
    Node<Scalar>& g = *self.inputs[1];
    const int batch = a.value.shape().n;
    for (int n = 0; n < batch; ++n) {
      const auto dy = self.grad.image(n);
      switch (mode) {
        case Mode::Same:
          if (a.requires_grad) a.grad_buffer().image(n) += dy.cwiseProduct(g.value.image(n));
          if (g.requires_grad) g.grad_buffer().image(n) += dy.cwiseProduct(a.value.image(n));
          break;
        case Mode::Spatial:
          if (a.requires_grad)
            a.grad_buffer().image(n).array() += dy.array().rowwise() * g.value.image(n).array().row(0);
          if (g.requires_grad)
            g.grad_buffer().image(n) += dy.cwiseProduct(a.value.image(n)).colwise().sum();
          break;
        case Mode::Channel:
          if (a.requires_grad)
            a.grad_buffer().image(n).array() += dy.array().colwise() * g.value.image(n).array().col(0);
          if (g.requires_grad)
            g.grad_buffer().image(n) += dy.cwiseProduct(a.value.image(n)).rowwise().sum();
          break;
      }
    }
  });
}

template <typename Scalar>
Var<Scalar> global_avg_pool(const Var<Scalar>& x) {
  const Shape s = x->value.shape();
  Tensor<Scalar> out(Shape{s.n, s.c, 1, 1});
  const Scalar inv = Scalar(1) / static_cast<Scalar>(s.plane());
  for (int n = 0; n < s.n; ++n) {
    const auto img = x->value.image(n);
    for (int c = 0; c < s.c; ++c) {
      Scalar sum = 0;
      for (Eigen::Index i = 0; i < img.cols(); ++i) sum += img(c, i);
      out(n, c, 0, 0) = sum * inv;
    }
  }
  return record<Scalar>(std::move(out), {x}, [](Node<Scalar>& self) {
    Node<Scalar>& in = *self.inputs[0];
    const Shape s = in.value.shape();
    const Scalar scale = Scalar(1) / static_cast<Scalar>(s.plane());
    for (int n = 0; n < s.n; ++n)
      in.grad_buffer().image(n).colwise() += self.grad.image(n).col(0) * scale;
  });
}

template <typename Scalar>
Var<Scalar> average(const std::vector<Var<Scalar>>& parts) {
  require(!parts.empty(), "average: no inputs");
  Tensor<Scalar> out(parts.front()->value.shape());
  for (const auto& p : parts) {
    require(p->value.shape() == out.shape(), "average: mismatched shapes");
    out.array() += p->value.array();
  }
  const Scalar scale = Scalar(1) / static_cast<Scalar>(parts.size());
  out.array() *= scale;
  return record<Scalar>(std::move(out), parts, [scale](Node<Scalar>& self) {
    for (auto& in : self.inputs)
      if (in->requires_grad) in->grad_buffer().array() += scale * self.grad.array();
  });
}

#define USMESH_INSTANTIATE_OPS(S)                                                                 \
  template S hard_sigmoid(S);                                                                     \
  template Var<S> conv2d(const Var<S>&, const Var<S>&, const Var<S>&);                           \
  template Var<S> depthwise_conv2d(const Var<S>&, const Var<S>&);                                \
  template Var<S> conv_transpose2d(const Var<S>&, const Var<S>&, const Var<S>&, int);            \
  template Var<S> batch_norm(const Var<S>&, const Var<S>&, const Var<S>&, BatchNormState<S>,    \
                             bool, S, S);                                                         \
  template Var<S> activate(const Var<S>&, Activation);                                           \
  template Var<S> max_pool2(const Var<S>&);                                                      \
  template Var<S> concat_channels(const std::vector<Var<S>>&);                                   \
  template Var<S> add(const Var<S>&, const Var<S>&);                                             \
  template Var<S> multiply(const Var<S>&, const Var<S>&);                                        \
  template Var<S> global_avg_pool(const Var<S>&);                                                \
  template Var<S> average(const std::vector<Var<S>>&);

USMESH_INSTANTIATE_OPS(float)
USMESH_INSTANTIATE_OPS(double)

}  // namespace usmesh::nn
