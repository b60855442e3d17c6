#include "roipose/nonlocal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace roipose {

namespace {

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajorMatrix>;
using Map = Eigen::Map<RowMajorMatrix>;

void validate(const FeatureMap& x, const NonLocalParams& p) {
  if (x.channels <= 0 || x.height <= 0 || x.width <= 0) {
    throw std::invalid_argument("non-local block: feature map dimensions must be positive");
  }
  if (x.data.size() != static_cast<std::size_t>(x.channels) * x.positions()) {
    throw std::invalid_argument("non-local block: data length does not match shape");
  }
  for (double v : x.data) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("non-local block: non-finite feature value");
    }
  }
  const int cp = NonLocalParams::bottleneck(x.channels);
  const auto bad = [&](const Eigen::MatrixXd& m, int rows, int cols) {
    return m.rows() != rows || m.cols() != cols;
  };
  if (bad(p.w_theta, cp, x.channels) || bad(p.w_phi, cp, x.channels) ||
      bad(p.w_g, cp, x.channels) || bad(p.w_z, x.channels, cp)) {
    throw std::invalid_argument("non-local block: weight shapes do not match the feature map");
  }
}

/// Row-wise softmax with max subtraction, in place.
void softmax_rows(Eigen::MatrixXd& logits) {
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    row = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
}

}  // namespace

FeatureMap FeatureMap::zeros(int channels, int height, int width) {
  FeatureMap fm;
  fm.channels = channels;
  fm.height = height;
  fm.width = width;
  fm.data.assign(static_cast<std::size_t>(channels) * height * width, 0.0);
  return fm;
}

int NonLocalParams::bottleneck(int channels) {
  return std::max(1, channels / 2);
}

NonLocalParams NonLocalParams::zeros(int channels) {
  const int cp = bottleneck(channels);
  NonLocalParams p;
  p.w_theta = Eigen::MatrixXd::Zero(cp, channels);
  p.w_phi = Eigen::MatrixXd::Zero(cp, channels);
  p.w_g = Eigen::MatrixXd::Zero(cp, channels);
  p.w_z = Eigen::MatrixXd::Zero(channels, cp);
  return p;
}

NonLocalParams NonLocalParams::random(int channels, Rng& rng) {
  NonLocalParams p = zeros(channels);
  const double scale = 1.0 / std::sqrt(static_cast<double>(channels));
  const auto fill = [&](Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = scale * rng.gaussian();
      }
    }
  };
  fill(p.w_theta);
  fill(p.w_phi);
  fill(p.w_g);
  fill(p.w_z);
  return p;
}

FeatureMap nonlocal_forward(const FeatureMap& x, const NonLocalParams& p) {
  validate(x, p);
  const int n = x.positions();

  const ConstMap xm(x.data.data(), x.channels, n);
  const Eigen::MatrixXd theta = p.w_theta * xm;  // C' x N
  const Eigen::MatrixXd phi = p.w_phi * xm;
  const Eigen::MatrixXd g = p.w_g * xm;

  Eigen::MatrixXd attn = theta.transpose() * phi;  // N x N, row i over all j
  softmax_rows(attn);

  const Eigen::MatrixXd y = g * attn.transpose();  // C' x N

  FeatureMap z = FeatureMap::zeros(x.channels, x.height, x.width);
  Map zm(z.data.data(), z.channels, n);
  zm = p.w_z * y + xm;

  for (double v : z.data) {
    if (!std::isfinite(v)) {
      throw std::logic_error("non-local block: non-finite output");
    }
  }
  return z;
}

FeatureMap nonlocal_bruteforce(const FeatureMap& x, const NonLocalParams& p) {
  validate(x, p);
  const int c_in = x.channels;
  const int cp = NonLocalParams::bottleneck(c_in);
  const int n = x.positions();

  const auto value = [&](int c, int i) {
    return x.data[static_cast<std::size_t>(c) * n + i];
  };

  // Embeddings via explicit channel loops.
  std::vector<double> theta(static_cast<std::size_t>(cp) * n);
  std::vector<double> phi(static_cast<std::size_t>(cp) * n);
  std::vector<double> g(static_cast<std::size_t>(cp) * n);
  for (int k = 0; k < cp; ++k) {
    for (int i = 0; i < n; ++i) {
      double st = 0.0, sp = 0.0, sg = 0.0;
      for (int c = 0; c < c_in; ++c) {
        st += p.w_theta(k, c) * value(c, i);
        sp += p.w_phi(k, c) * value(c, i);
        sg += p.w_g(k, c) * value(c, i);
      }
      theta[static_cast<std::size_t>(k) * n + i] = st;
      phi[static_cast<std::size_t>(k) * n + i] = sp;
      g[static_cast<std::size_t>(k) * n + i] = sg;
    }
  }

  FeatureMap z = x;  // residual
  std::vector<double> logits(n);
  std::vector<double> y(cp);
  for (int i = 0; i < n; ++i) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      double dot = 0.0;
      for (int k = 0; k < cp; ++k) {
        dot += theta[static_cast<std::size_t>(k) * n + i] *
               phi[static_cast<std::size_t>(k) * n + j];
      }
      logits[j] = dot;
      max_logit = std::max(max_logit, dot);
    }

    double norm = 0.0;
    for (int j = 0; j < n; ++j) {
      logits[j] = std::exp(logits[j] - max_logit);
      norm += logits[j];
    }

    for (int k = 0; k < cp; ++k) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) {
        acc += logits[j] * g[static_cast<std::size_t>(k) * n + j];
      }
      y[k] = acc / norm;
    }

    for (int c = 0; c < c_in; ++c) {
      double out = 0.0;
      for (int k = 0; k < cp; ++k) {
        out += p.w_z(c, k) * y[k];
      }
      z.data[static_cast<std::size_t>(c) * n + i] += out;
    }
  }
  return z;
}

NonLocalGradients nonlocal_backward(const FeatureMap& x, const NonLocalParams& p,
                                    const FeatureMap& dz) {
  validate(x, p);
  if (dz.channels != x.channels || dz.height != x.height || dz.width != x.width) {
    throw std::invalid_argument("nonlocal_backward: gradient shape mismatch");
  }
  const int n = x.positions();

  const ConstMap xm(x.data.data(), x.channels, n);
  const ConstMap dzm(dz.data.data(), dz.channels, n);

  // Forward intermediates.
  const Eigen::MatrixXd theta = p.w_theta * xm;
  const Eigen::MatrixXd phi = p.w_phi * xm;
  const Eigen::MatrixXd g = p.w_g * xm;
  Eigen::MatrixXd attn = theta.transpose() * phi;
  softmax_rows(attn);
  const Eigen::MatrixXd y = g * attn.transpose();

  NonLocalGradients grads;
  grads.input = FeatureMap::zeros(x.channels, x.height, x.width);

  // z = W_z * y + x
  grads.w_z = dzm * y.transpose();
  const Eigen::MatrixXd dy = p.w_z.transpose() * dzm;
  Eigen::MatrixXd dx = dzm;

  // y = G * A^T
  const Eigen::MatrixXd dg = dy * attn;
  Eigen::MatrixXd dattn = dy.transpose() * g;  // N x N

  // Softmax rows: dl_ij = a_ij * (da_ij - sum_k da_ik a_ik)
  for (Eigen::Index i = 0; i < dattn.rows(); ++i) {
    const double dot = dattn.row(i).dot(attn.row(i));
    dattn.row(i) = attn.row(i).array() * (dattn.row(i).array() - dot);
  }

  // logits = Theta^T * Phi
  const Eigen::MatrixXd dtheta = phi * dattn.transpose();
  const Eigen::MatrixXd dphi = theta * dattn;

  grads.w_theta = dtheta * xm.transpose();
  grads.w_phi = dphi * xm.transpose();
  grads.w_g = dg * xm.transpose();
  dx += p.w_theta.transpose() * dtheta + p.w_phi.transpose() * dphi +
        p.w_g.transpose() * dg;

  Map(grads.input.data.data(), x.channels, n) = dx;
  return grads;
}

double nonlocal_grad_check(const FeatureMap& x, const NonLocalParams& p,
                           double step) {
  if (!(step >= 1e-7 && step <= 1e-3)) {
    throw std::invalid_argument("nonlocal_grad_check: step must lie in [1e-7, 1e-3]");
  }

  const auto loss = [](const FeatureMap& z) {
    double s = 0.0;
    for (double v : z.data) {
      s += v * v;
    }
    return s;
  };
  const auto eval = [&](const FeatureMap& xv, const NonLocalParams& pv) {
    return loss(nonlocal_forward(xv, pv));
  };

  // Analytic gradient of L = sum(z^2): dL/dz = 2z.
  FeatureMap dz = nonlocal_forward(x, p);
  for (double& v : dz.data) {
    v *= 2.0;
  }
  const NonLocalGradients grads = nonlocal_backward(x, p, dz);

  double max_rel = 0.0;
  const auto compare = [&](double analytic, double numeric) {
    const double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
    max_rel = std::max(max_rel, std::abs(analytic - numeric) / scale);
  };

  const auto check_matrix = [&](Eigen::MatrixXd NonLocalParams::* member,
                                const Eigen::MatrixXd& analytic) {
    NonLocalParams probe = p;
    Eigen::MatrixXd& m = probe.*member;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double saved = m(r, c);
        m(r, c) = saved + step;
        const double up = eval(x, probe);
        m(r, c) = saved - step;
        const double down = eval(x, probe);
        m(r, c) = saved;
        compare(analytic(r, c), (up - down) / (2.0 * step));
      }
    }
  };

  check_matrix(&NonLocalParams::w_theta, grads.w_theta);
  check_matrix(&NonLocalParams::w_phi, grads.w_phi);
  check_matrix(&NonLocalParams::w_g, grads.w_g);
  check_matrix(&NonLocalParams::w_z, grads.w_z);

  FeatureMap probe = x;
  for (std::size_t i = 0; i < probe.data.size(); ++i) {
    const double saved = probe.data[i];
    probe.data[i] = saved + step;
    const double up = eval(probe, p);
    probe.data[i] = saved - step;
    const double down = eval(probe, p);
    probe.data[i] = saved;
    compare(grads.input.data[i], (up - down) / (2.0 * step));
  }
  return max_rel;
}

}  // namespace roipose
