#include "iscc/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace iscc::nn {

Mlp::Mlp(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw std::invalid_argument("Mlp: need input and output dims");
  for (int d : dims_)
    if (d < 1) throw std::invalid_argument("Mlp: layer width must be positive");
  std::size_t off = 0;
  for (int l = 0; l + 1 < static_cast<int>(dims_.size()); ++l) {
    offsets_.push_back(off);
    off += static_cast<std::size_t>(dims_[l]) * dims_[l + 1] + dims_[l + 1];
  }
  params_.assign(off, 0.0);
}

void Mlp::init(CounterRng& rng, double out_scale) {
  for (int l = 0; l < n_layers(); ++l) {
    const int in = dims_[l], out = dims_[l + 1];
    double a = std::sqrt(6.0 / (in + out));
    if (l == n_layers() - 1) a *= out_scale;
    double* w = params_.data() + w_off(l);
    for (std::size_t k = 0; k < static_cast<std::size_t>(in) * out; ++k) w[k] = a * (2.0 * rng.uniform() - 1.0);
    double* b = params_.data() + b_off(l);
    for (int k = 0; k < out; ++k) b[k] = 0.0;
  }
}

const std::vector<double>& Mlp::forward(std::span<const double> x, Cache& c) const {
  if (static_cast<int>(x.size()) != in_dim()) throw std::invalid_argument("Mlp::forward: input size mismatch");
  c.acts.resize(dims_.size());
  c.acts[0].assign(x.begin(), x.end());
  for (int l = 0; l < n_layers(); ++l) {
    const int in = dims_[l], out = dims_[l + 1];
    const double* w = params_.data() + w_off(l);
    const double* b = params_.data() + b_off(l);
    const auto& a = c.acts[l];
    auto& z = c.acts[l + 1];
    z.resize(out);
    const bool hidden = l + 1 < n_layers();
    for (int o = 0; o < out; ++o) {
      const double* row = w + static_cast<std::size_t>(o) * in;
      double s = b[o];
      for (int i = 0; i < in; ++i) s += row[i] * a[i];
      z[o] = hidden ? std::tanh(s) : s;
    }
  }
  return c.acts.back();
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  Cache c;
  return forward(x, c);
}

void Mlp::backward(const Cache& c, std::span<const double> grad_out, std::span<double> grad,
                   std::vector<double>* grad_in) const {
  if (static_cast<int>(grad_out.size()) != out_dim()) throw std::invalid_argument("Mlp::backward: bad grad_out");
  if (grad.size() != params_.size()) throw std::invalid_argument("Mlp::backward: bad grad buffer");
  std::vector<double> delta(grad_out.begin(), grad_out.end()), prev;
  for (int l = n_layers() - 1; l >= 0; --l) {
    const int in = dims_[l], out = dims_[l + 1];
    const double* w = params_.data() + w_off(l);
    double* gw = grad.data() + w_off(l);
    double* gb = grad.data() + b_off(l);
    const auto& a = c.acts[l];
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      gb[o] += d;
      if (d == 0.0) continue;
      double* grow = gw + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) grow[i] += d * a[i];
    }
    if (l == 0 && !grad_in) break;
    prev.assign(in, 0.0);
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) prev[i] += row[i] * d;
    }
    if (l > 0)
      for (int i = 0; i < in; ++i) prev[i] *= 1.0 - a[i] * a[i];  // a is tanh output of layer l-1
    delta.swap(prev);
  }
  if (grad_in) *grad_in = delta;
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::vector<double>& params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw std::invalid_argument("Adam::step: size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    m_[k] = b1_ * m_[k] + (1.0 - b1_) * grad[k];
    v_[k] = b2_ * v_[k] + (1.0 - b2_) * grad[k] * grad[k];
    params[k] -= lr_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps_);
  }
}

double global_norm(std::span<const double> g) {
  double s = 0.0;
  for (double v : g) s += v * v;
  return std::sqrt(s);
}

double clip_global_norm(std::span<double> g, double max_norm) {
  const double n = global_norm(g);
  if (n > max_norm && n > 0.0) {
    const double k = max_norm / n;
    for (double& v : g) v *= k;
  }
  return n;
}

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace iscc::nn
