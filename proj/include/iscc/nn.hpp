#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "iscc/rng.hpp"

namespace iscc::nn {

// Fully connected net, tanh on hidden layers, linear output. Parameters live in one
// flat vector: per layer the weights (row-major, out x in) and then the biases.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> dims);

  // Glorot-uniform weights, zero biases; the output layer is scaled by out_scale.
  void init(CounterRng& rng, double out_scale);

  int in_dim() const { return dims_.front(); }
  int out_dim() const { return dims_.back(); }
  int n_layers() const { return static_cast<int>(dims_.size()) - 1; }
  const std::vector<int>& dims() const { return dims_; }
  std::size_t n_params() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  struct Cache {
    std::vector<std::vector<double>> acts;  // acts[0] input, acts.back() output
  };

  const std::vector<double>& forward(std::span<const double> x, Cache& c) const;
  std::vector<double> forward(std::span<const double> x) const;

  // Adds dL/dparams to grad; writes dL/dinput when grad_in is given.
  void backward(const Cache& c, std::span<const double> grad_out, std::span<double> grad,
                std::vector<double>* grad_in = nullptr) const;

 private:
  std::size_t w_off(int l) const { return offsets_[l]; }
  std::size_t b_off(int l) const { return offsets_[l] + static_cast<std::size_t>(dims_[l]) * dims_[l + 1]; }

  std::vector<int> dims_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(std::vector<double>& params, std::span<const double> grad);
  long steps() const { return t_; }
  double lr() const { return lr_; }

 private:
  double lr_ = 1e-3, b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  std::vector<double> m_, v_;
};

double global_norm(std::span<const double> g);
// Rescales g so its norm is at most max_norm; returns the norm before clipping.
double clip_global_norm(std::span<double> g, double max_norm);
bool all_finite(std::span<const double> v);

}  // namespace iscc::nn
