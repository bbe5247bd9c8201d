// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The rfpuf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rfpuf/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace rfpuf {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MlpModel MlpModel::zeros(int input_dim, int hidden_dim, int output_dim) {
  require(input_dim > 0 && hidden_dim > 0 && output_dim > 0,
          "MlpModel dimensions must be positive");
  MlpModel m;
  m.input_dim = input_dim;
  m.hidden_dim = hidden_dim;
  m.output_dim = output_dim;
  m.w1 = MatrixXd::Zero(hidden_dim, input_dim);
  m.b1 = VectorXd::Zero(hidden_dim);
  m.w2 = MatrixXd::Zero(output_dim, hidden_dim);
  m.b2 = VectorXd::Zero(output_dim);
  m.norm.mean = VectorXd::Zero(input_dim);
  m.norm.scale = VectorXd::Ones(input_dim);
  return m;
}

std::size_t MlpModel::parameter_count() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size());
}

void MlpModel::validate() const {
  require(input_dim > 0 && hidden_dim > 0 && output_dim > 0,
          "MlpModel dimensions must be positive");
  require(w1.rows() == hidden_dim && w1.cols() == input_dim && b1.size() == hidden_dim &&
              w2.rows() == output_dim && w2.cols() == hidden_dim && b2.size() == output_dim,
          "MlpModel weight shapes do not match its dimensions");
  require(norm.mean.size() == input_dim && norm.scale.size() == input_dim,
          "MlpModel normalization does not match input_dim");
  require(w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite() &&
              norm.mean.allFinite() && norm.scale.allFinite(),
          "MlpModel contains non-finite values");
  require((norm.scale.array() > 0.0).all(), "MlpModel normalization scale must be > 0");
}

bool MlpModel::operator==(const MlpModel& o) const {
  return input_dim == o.input_dim && hidden_dim == o.hidden_dim &&
         output_dim == o.output_dim && w1 == o.w1 && b1 == o.b1 && w2 == o.w2 &&
         b2 == o.b2 && norm.mean == o.norm.mean && norm.scale == o.norm.scale;
}

void TrainingOptions::validate() const {
  require(hidden_dim >= 1, "hidden_dim must be >= 1");
  require(max_epochs >= 0, "max_epochs must be >= 0");
  require(std::isfinite(target_error) && target_error >= 0.0, "target_error must be >= 0");
  require(learning_rate > 0.0 && momentum >= 0.0 && momentum < 1.0,
          "momentum descent needs learning_rate > 0 and momentum in [0, 1)");
}

namespace mlp {

VectorXd pack(const MlpModel& m) {
  VectorXd p(static_cast<Index>(m.parameter_count()));
  Index o = 0;
  p.segment(o, m.w1.size()) = Eigen::Map<const VectorXd>(m.w1.data(), m.w1.size());
  o += m.w1.size();
  p.segment(o, m.b1.size()) = m.b1;
  o += m.b1.size();
  p.segment(o, m.w2.size()) = Eigen::Map<const VectorXd>(m.w2.data(), m.w2.size());
  o += m.w2.size();
  p.segment(o, m.b2.size()) = m.b2;
  return p;
}

void unpack(MlpModel& m, const VectorXd& p) {
  require(p.size() == static_cast<Index>(m.parameter_count()), "parameter vector size mismatch");
  Index o = 0;
  Eigen::Map<VectorXd>(m.w1.data(), m.w1.size()) = p.segment(o, m.w1.size());
  o += m.w1.size();
  m.b1 = p.segment(o, m.b1.size());
  o += m.b1.size();
  Eigen::Map<VectorXd>(m.w2.data(), m.w2.size()) = p.segment(o, m.w2.size());
  o += m.w2.size();
  m.b2 = p.segment(o, m.b2.size());
}

double cross_entropy(const MlpModel& m, const MatrixXd& x, std::span<const int> labels,
                     VectorXd* gradient) {
  const Index n = x.rows();
  require(n > 0 && static_cast<std::size_t>(n) == labels.size(), "cross_entropy: label count mismatch");
  require(x.cols() == m.input_dim, "cross_entropy: input dimension mismatch");

  const MatrixXd h = ((m.w1 * x.transpose()).colwise() + m.b1).array().tanh().matrix();
  MatrixXd z = (m.w2 * h).colwise() + m.b2;  // output × n, becomes probabilities

  double loss = 0.0;
  for (Index c = 0; c < n; ++c) {
    auto col = z.col(c);
    const double zmax = col.maxCoeff();
    col.array() = (col.array() - zmax).exp();
    const double sum = col.sum();
    const int y = labels[static_cast<std::size_t>(c)];
    require(y >= 0 && y < m.output_dim, "cross_entropy: label out of range");
    loss -= std::log(col(y) / sum);
    col /= sum;
  }
  loss /= static_cast<double>(n);
  if (!gradient) return loss;

  MatrixXd& dz = z;
  for (Index c = 0; c < n; ++c) dz(labels[static_cast<std::size_t>(c)], c) -= 1.0;
  dz /= static_cast<double>(n);

  MlpModel g = MlpModel::zeros(m.input_dim, m.hidden_dim, m.output_dim);
  g.w2.noalias() = dz * h.transpose();
  g.b2 = dz.rowwise().sum();
  MatrixXd da = m.w2.transpose() * dz;
  da.array() *= 1.0 - h.array().square();
  g.w1.noalias() = da * x;
  g.b1 = da.rowwise().sum();
  *gradient = pack(g);
  return loss;
}

Normalization fit_normalization(const MatrixXd& x, std::vector<std::string>* warnings) {
  require(x.rows() > 0, "fit_normalization: empty matrix");
  Normalization norm;
  norm.mean = x.colwise().mean().transpose();
  norm.scale.resize(x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const double sd = std::sqrt((x.col(j).array() - norm.mean(j)).square().mean());
    if (!(sd > 1e-12 * std::max(1.0, std::abs(norm.mean(j))))) {
      norm.scale(j) = 1.0;
      if (warnings)
        warnings->push_back("feature column " + std::to_string(j) +
                            " is constant; normalization scale set to 1");
    } else {
      norm.scale(j) = sd;
    }
  }
  return norm;
}

MatrixXd normalize(const Normalization& norm, const MatrixXd& x) {
  require(x.cols() == norm.mean.size(), "normalize: dimension mismatch");
  return (x.rowwise() - norm.mean.transpose()).array().rowwise() /
         norm.scale.transpose().array();
}

}  // namespace mlp

namespace {

struct Objective {
  const MlpModel& shape;
  const MatrixXd& x;
  std::span<const int> labels;

  double operator()(const VectorXd& params, VectorXd& grad) const {
    MlpModel m = shape;
    mlp::unpack(m, params);
    return mlp::cross_entropy(m, x, labels, &grad);
  }
};

// Møller (1993) scaled conjugate gradient.
VectorXd train_scg(const Objective& f, VectorXd w, const TrainingOptions& opt,
                   TrainingReport& rep) {
  constexpr double kSigma0 = 5e-5;
  constexpr double kLambdaMin = 1e-15;
  constexpr double kLambdaMax = 1e100;
  const Index n_params = w.size();

  VectorXd g(n_params), g_new(n_params), g_s(n_params);
  double err = f(w, g);
  VectorXd r = -g;
  VectorXd p = r;
  double lambda = 5e-7;
  double lambda_bar = 0.0;
  double delta = 0.0;
  bool success = true;
  int k = 0;

  while (k < opt.max_epochs && err > opt.target_error) {
    const double p2 = p.squaredNorm();
    if (!(p2 > 0.0) || r.squaredNorm() < 1e-30) break;
    if (success) {
      const double sigma = kSigma0 / std::sqrt(p2);
      f(w + sigma * p, g_s);
      delta = p.dot(g_s - g) / sigma;
    }
    delta += (lambda - lambda_bar) * p2;
    if (delta <= 0.0) {
      lambda_bar = 2.0 * (lambda - delta / p2);
      delta = -delta + lambda * p2;
      lambda = lambda_bar;
    }
    const double mu = p.dot(r);
    const double alpha = mu / delta;
    const VectorXd w_new = w + alpha * p;
    const double err_new = f(w_new, g_new);
    const double cmp = 2.0 * delta * (err - err_new) / (mu * mu);
    ++k;

    if (std::isfinite(err_new) && cmp >= 0.0) {
      w = w_new;
      err = err_new;
      const VectorXd r_new = -g_new;
      lambda_bar = 0.0;
      success = true;
      if (k % n_params == 0) {
        p = r_new;
      } else {
        const double beta = (r_new.squaredNorm() - r_new.dot(r)) / mu;
        p = r_new + beta * p;
      }
      r = r_new;
      g = g_new;
      if (cmp >= 0.75) lambda = std::max(lambda / 4.0, kLambdaMin);
    } else {
      lambda_bar = lambda;
      success = false;
    }
    if (!(cmp >= 0.25)) {
      const double c = std::isfinite(cmp) ? cmp : 0.0;
      lambda = std::min(lambda + delta * (1.0 - c) / p2, kLambdaMax);
    }
  }
  rep.epochs = k;
  rep.final_error = err;
  return w;
}

VectorXd train_momentum(const Objective& f, VectorXd w, const TrainingOptions& opt,
                        TrainingReport& rep) {
  VectorXd g(w.size());
  VectorXd v = VectorXd::Zero(w.size());
  double err = f(w, g);
  int k = 0;
  while (k < opt.max_epochs && err > opt.target_error) {
    v = opt.momentum * v - opt.learning_rate * g;
    w += v;
    err = f(w, g);
    ++k;
  }
  rep.epochs = k;
  rep.final_error = err;
  return w;
}

}  // namespace

MlpModel train_classifier(const MatrixXd& features, std::span<const int> labels,
                          const TrainingOptions& options, std::uint64_t seed,
                          TrainingReport* report) {
  options.validate();
  const Index n = features.rows();
  require(n > 0 && features.cols() > 0, "train_classifier: empty feature matrix");
  require(static_cast<std::size_t>(n) == labels.size(), "train_classifier: label count mismatch");
  require(features.allFinite(), "train_classifier: non-finite feature value");

  const int max_label = *std::max_element(labels.begin(), labels.end());
  require(*std::min_element(labels.begin(), labels.end()) >= 0, "train_classifier: negative label");
  const int n_classes = max_label + 1;
  require(n >= n_classes, "train_classifier: fewer rows than classes");
  std::vector<int> count(static_cast<std::size_t>(n_classes), 0);
  for (int y : labels) ++count[static_cast<std::size_t>(y)];
  for (int c = 0; c < n_classes; ++c)
    if (count[static_cast<std::size_t>(c)] == 0)
      fail(ErrorKind::InvalidArgument, "train_classifier: class " + std::to_string(c) + " has no rows");

  // Canonical row order: by label, then lexicographically by features.
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    const int la = labels[static_cast<std::size_t>(a)];
    const int lb = labels[static_cast<std::size_t>(b)];
    if (la != lb) return la < lb;
    for (Index j = 0; j < features.cols(); ++j)
      if (features(a, j) != features(b, j)) return features(a, j) < features(b, j);
    return false;
  });
  MatrixXd x(n, features.cols());
  std::vector<int> y(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    x.row(i) = features.row(order[static_cast<std::size_t>(i)]);
    y[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
  }

  TrainingReport rep;
  MlpModel model = MlpModel::zeros(static_cast<int>(features.cols()), options.hidden_dim, n_classes);
  model.norm = mlp::fit_normalization(x, &rep.warnings);
  const MatrixXd xn = mlp::normalize(model.norm, x);

  std::mt19937_64 rng(derive_seed(seed, 0, Stream::Weights));
  auto init = [&rng](auto& block, double fan_in) {
    std::uniform_real_distribution<double> u(-1.0 / std::sqrt(fan_in), 1.0 / std::sqrt(fan_in));
    for (Index i = 0; i < block.size(); ++i) block.data()[i] = u(rng);
  };
  init(model.w1, model.input_dim);
  init(model.b1, model.input_dim);
  init(model.w2, model.hidden_dim);
  init(model.b2, model.hidden_dim);

  const Objective objective{model, xn, y};
  VectorXd w = mlp::pack(model);
  w = options.optimizer == Optimizer::ScaledConjugateGradient
          ? train_scg(objective, std::move(w), options, rep)
          : train_momentum(objective, std::move(w), options, rep);
  mlp::unpack(model, w);
  rep.reached_target = rep.final_error <= options.target_error;
  if (!model.w1.allFinite() || !model.w2.allFinite())
    fail(ErrorKind::EstimationFailure, "train_classifier: training diverged");
  if (report) *report = std::move(rep);
  return model;
}

namespace {

Prediction argmax(const VectorXd& p) {
  Prediction out;
  for (Index i = 1; i < p.size(); ++i)
    if (p(i) > p(out.class_id)) out.class_id = static_cast<int>(i);
  out.confidence = p(out.class_id);
  return out;
}

}  // namespace

VectorXd predict_proba(const MlpModel& m, std::span<const double> x) {
  require(static_cast<Index>(x.size()) == m.input_dim, "predict: dimension mismatch");
  const VectorXd in = (Eigen::Map<const VectorXd>(x.data(), m.input_dim) - m.norm.mean)
                          .cwiseQuotient(m.norm.scale);
  const VectorXd h = (m.w1 * in + m.b1).array().tanh().matrix();
  VectorXd z = m.w2 * h + m.b2;
  z.array() = (z.array() - z.maxCoeff()).exp();
  return z / z.sum();
}

Prediction predict(const MlpModel& m, std::span<const double> x) {
  return argmax(predict_proba(m, x));
}

Prediction predict(const MlpModel& m, const FeatureVector& fv) {
  return predict(m, std::span<const double>(fv.values));
}

std::vector<Prediction> predict(const MlpModel& m, const MatrixXd& rows) {
  require(rows.cols() == m.input_dim, "predict: dimension mismatch");
  const MatrixXd xn = mlp::normalize(m.norm, rows);
  const MatrixXd h = ((m.w1 * xn.transpose()).colwise() + m.b1).array().tanh().matrix();
  MatrixXd z = (m.w2 * h).colwise() + m.b2;
  std::vector<Prediction> out(static_cast<std::size_t>(rows.rows()));
  for (Index c = 0; c < z.cols(); ++c) {
    VectorXd col = z.col(c);
    col.array() = (col.array() - col.maxCoeff()).exp();
    out[static_cast<std::size_t>(c)] = argmax(col / col.sum());
  }
  return out;
}

void check_rejection_rate(const LabeledFeatures& set, std::string_view what) {
  if (set.total() == 0) fail(ErrorKind::InsufficientData, std::string(what) + ": no frames");
  const double rate = static_cast<double>(set.rejected()) / static_cast<double>(set.total());
  if (rate > kMaxRejectionRate) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.*s: %zu of %zu frames rejected (%.1f%% > %.0f%%)",
                  static_cast<int>(what.size()), what.data(), set.rejected(), set.total(),
                  100.0 * rate, 100.0 * kMaxRejectionRate);
    fail(ErrorKind::FrameRejected, buf);
  }
}

LabeledFeatures build_training_set(std::span<const TxProfile> fleet, std::size_t n_iterations,
                                   const PipelineConfig& cfg, std::uint64_t seed,
                                   const RxProfile& rx, ChallengeMode challenge) {
  require(n_iterations >= 1, "n_iterations must be >= 1");
  require(!fleet.empty(), "build_training_set: empty fleet");
  const BatchSpec spec{n_iterations, challenge, BatchRole::Training};
  const RxProfile receivers[] = {rx};
  LabeledFeatures set = collect(simulate_batch(fleet, spec, cfg, seed, receivers));
  check_rejection_rate(set, "training set");
  return set;
}

// --- persistence -----------------------------------------------------------

namespace {

constexpr std::string_view kModelMagic = "rfpuf-mlp";

void write_values(std::ostream& os, std::string_view key, const double* v, Index n) {
  os << key;
  char buf[32];
  for (Index i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, " %.17g", v[i]);
    os << buf;
  }
  os << '\n';
}

void write_matrix(std::ostream& os, std::string_view key, const MatrixXd& m) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  write_values(os, key, rm.data(), rm.size());
}

std::vector<double> read_values(std::istream& is, std::string_view key, Index n) {
  std::string line;
  if (!std::getline(is, line)) fail(ErrorKind::Parse, "model: missing '" + std::string(key) + "'");
  std::istringstream ls(line);
  std::string k;
  ls >> k;
  if (k != key) fail(ErrorKind::Parse, "model: expected '" + std::string(key) + "', got '" + k + "'");
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(n));
  std::string tok;
  while (ls >> tok) {
    char* end = nullptr;
    const double d = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) fail(ErrorKind::Parse, "model: bad number '" + tok + "'");
    v.push_back(d);
  }
  if (static_cast<Index>(v.size()) != n)
    fail(ErrorKind::Parse, "model: '" + std::string(key) + "' has " + std::to_string(v.size()) +
                               " values, expected " + std::to_string(n));
  return v;
}

MatrixXd read_matrix(std::istream& is, std::string_view key, Index rows, Index cols) {
  const std::vector<double> v = read_values(is, key, rows * cols);
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      v.data(), rows, cols);
}

}  // namespace

void save_model(std::ostream& os, const MlpModel& m) {
  m.validate();
  os << kModelMagic << " 1\n";
  os << "dims " << m.input_dim << ' ' << m.hidden_dim << ' ' << m.output_dim << '\n';
  write_values(os, "norm_mean", m.norm.mean.data(), m.norm.mean.size());
  write_values(os, "norm_scale", m.norm.scale.data(), m.norm.scale.size());
  write_matrix(os, "w1", m.w1);
  write_values(os, "b1", m.b1.data(), m.b1.size());
  write_matrix(os, "w2", m.w2);
  write_values(os, "b2", m.b2.data(), m.b2.size());
  if (!os) fail(ErrorKind::Io, "model: write failed");
}

MlpModel load_model(std::istream& is) {
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != kModelMagic || version != 1) fail(ErrorKind::Parse, "model: bad header");
  std::string key;
  int in = 0, hid = 0, out = 0;
  is >> key >> in >> hid >> out;
  if (!is || key != "dims" || in <= 0 || hid <= 0 || out <= 0)
    fail(ErrorKind::Parse, "model: bad dims line");
  is.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
  MlpModel m = MlpModel::zeros(in, hid, out);
  auto vec = [&](std::string_view k, Index n) {
    const std::vector<double> v = read_values(is, k, n);
    return VectorXd(Eigen::Map<const VectorXd>(v.data(), n));
  };
  m.norm.mean = vec("norm_mean", in);
  m.norm.scale = vec("norm_scale", in);
  m.w1 = read_matrix(is, "w1", hid, in);
  m.b1 = vec("b1", hid);
  m.w2 = read_matrix(is, "w2", out, hid);
  m.b2 = vec("b2", out);
  try {
    m.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Parse, std::string("model: ") + e.what());
  }
  return m;
}

}  // namespace rfpuf
