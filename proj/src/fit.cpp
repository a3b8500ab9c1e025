// SPDX-License-Identifier: Apache-2.0
#include "maft/fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numbers>
#include <random>

#include "fft.hpp"
#include "json_util.hpp"
#include "maft/error.hpp"

namespace maft {

FitResult fit_linear_scale(std::span<const LinearSample> samples) {
  require(samples.size() >= 2, ErrorCode::InvalidArgument, "linear fit needs at least 2 samples");
  double sxy = 0.0, sxx = 0.0;
  std::vector<double> ideal_all, meas_all;
  for (const auto& s : samples) {
    require(s.w.cols == static_cast<std::int64_t>(s.x.size()) && s.w.rows == static_cast<std::int64_t>(s.y.size()),
            ErrorCode::InvalidArgument, "linear fit sample has inconsistent shapes");
    const auto ideal = s.w.apply(s.x);
    for (std::size_t i = 0; i < ideal.size(); ++i) {
      require(std::isfinite(s.y[i]), ErrorCode::InvalidArgument, "measured values must be finite");
      sxy += ideal[i] * s.y[i];
      sxx += ideal[i] * ideal[i];
      ideal_all.push_back(ideal[i]);
      meas_all.push_back(s.y[i]);
    }
  }
  require(sxx > 0.0, ErrorCode::Validation, "degenerate design: every ideal product is zero");
  const double c = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < ideal_all.size(); ++i) {
    const double e = meas_all[i] - c * ideal_all[i];
    rss += e * e;
  }
  const auto n = static_cast<double>(ideal_all.size());
  FitResult r;
  r.names = {"scale"};
  r.params = {c};
  r.std_errors = {n > 1 ? std::sqrt(rss / (n - 1.0) / sxx) : 0.0};
  r.residual_rms = std::sqrt(rss / n);
  return r;
}

std::vector<std::int64_t> default_probe_indices(const MultiToneSignal& drive) {
  require(!drive.empty(), ErrorCode::InvalidArgument, "drive has no tones");
  std::vector<std::int64_t> idx;
  for (const auto& [k, c] : drive.tones()) idx.push_back(k);
  const auto second = 2 * drive.tones().begin()->first;
  if (drive.grid().representable(second) && std::find(idx.begin(), idx.end(), second) == idx.end()) {
    idx.push_back(second);
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

namespace {

using Vec4 = std::array<double, 4>;

// Residuals (model - measured) and their Jacobian for all samples. Rows per
// sample: DC, then Re and Im of each probe.
class SineModel {
 public:
  explicit SineModel(const NonlinearFitProblem& p) : p_(p), v_(synthesize(p.drive).samples) {
    P_ = v_.size();
    for (auto k : p.probe_indices) {
      require(k >= 1 && p.drive.grid().representable(k), ErrorCode::InvalidArgument,
              "probe index " + std::to_string(k) + " outside the drive grid");
    }
    for (const auto& s : p.samples) {
      require(s.tones.size() == p.probe_indices.size(), ErrorCode::InvalidArgument,
              "each sample needs one coefficient per probe index");
      require(std::isfinite(s.scale) && std::isfinite(s.dc), ErrorCode::InvalidArgument,
              "sample values must be finite");
    }
  }

  std::size_t rows() const { return p_.samples.size() * (1 + 2 * p_.probe_indices.size()); }

  double peak_drive() const {
    double vmax = 0.0, amax = 0.0;
    for (double x : v_) vmax = std::max(vmax, std::abs(x));
    for (const auto& s : p_.samples) amax = std::max(amax, std::abs(s.scale));
    return vmax * amax;
  }

  // Fills r (rows) and, if given, J (rows x 4).
  void eval(const Vec4& x, Eigen::VectorXd& r, Eigen::MatrixXd* J) const {
    const auto& fft = detail::FftPlan::get(P_);
    const auto K = p_.probe_indices.size();
    const auto per = 1 + 2 * K;
    r.resize(static_cast<Eigen::Index>(rows()));
    if (J) J->setZero(static_cast<Eigen::Index>(rows()), 4);
    std::vector<Complex> a(P_), b(P_), c(P_);
    const double Pd = static_cast<double>(P_);
    auto project = [&](std::vector<Complex>& w, std::size_t row0, Eigen::Index col, Eigen::VectorXd* out,
                       Eigen::MatrixXd* Jm) {
      fft.forward(w);
      auto put = [&](std::size_t row, double val) {
        if (out) (*out)(static_cast<Eigen::Index>(row)) = val;
        else (*Jm)(static_cast<Eigen::Index>(row), col) = val;
      };
      put(row0, w[0].real() / Pd);
      for (std::size_t q = 0; q < K; ++q) {
        const Complex ck = 2.0 * Complex(0.0, 1.0) * w[static_cast<std::size_t>(p_.probe_indices[q])] / Pd;
        put(row0 + 1 + 2 * q, ck.real());
        put(row0 + 2 + 2 * q, ck.imag());
      }
    };
    for (std::size_t i = 0; i < p_.samples.size(); ++i) {
      const auto& s = p_.samples[i];
      const auto row0 = i * per;
      for (std::size_t m = 0; m < P_; ++m) {
        const double u = s.scale * v_[m];
        const double ph = x[2] * u + x[3];
        const double sn = std::sin(ph), cs = std::cos(ph);
        a[m] = x[0] + x[1] * sn;
        b[m] = sn;
        c[m] = x[1] * cs * u;
      }
      project(a, row0, 0, &r, nullptr);
      r(static_cast<Eigen::Index>(row0)) -= s.dc;
      for (std::size_t q = 0; q < K; ++q) {
        r(static_cast<Eigen::Index>(row0 + 1 + 2 * q)) -= s.tones[q].real();
        r(static_cast<Eigen::Index>(row0 + 2 + 2 * q)) -= s.tones[q].imag();
      }
      if (!J) continue;
      (*J)(static_cast<Eigen::Index>(row0), 0) = 1.0;
      project(b, row0, 1, nullptr, J);
      project(c, row0, 2, nullptr, J);
      for (std::size_t m = 0; m < P_; ++m) c[m] = x[1] * std::cos(x[2] * s.scale * v_[m] + x[3]);
      project(c, row0, 3, nullptr, J);
    }
  }

 private:
  const NonlinearFitProblem& p_;
  std::vector<double> v_;
  std::size_t P_ = 0;
};

struct LmOutcome {
  Vec4 x{};
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

LmOutcome levenberg_marquardt(const SineModel& model, Vec4 x, int max_iterations) {
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  model.eval(x, r, &J);
  double cost = 0.5 * r.squaredNorm();
  double lambda = 1e-3;
  LmOutcome out;
  for (int it = 1; it <= max_iterations; ++it) {
    out.iterations = it;
    const Eigen::Matrix4d A = J.transpose() * J;
    const Eigen::Vector4d g = J.transpose() * r;
    if (g.cwiseAbs().maxCoeff() <= 1e-15 * std::max(1.0, cost) || cost <= 1e-32) {
      out.converged = true;
      break;
    }
    bool accepted = false;
    Eigen::Vector4d step;
    while (lambda < 1e20) {
      Eigen::Matrix4d M = A;
      for (int d = 0; d < 4; ++d) M(d, d) += lambda * std::max(A(d, d), 1e-12);
      step = M.ldlt().solve(-g);
      Vec4 trial{x[0] + step(0), x[1] + step(1), x[2] + step(2), x[3] + step(3)};
      Eigen::VectorXd rt;
      model.eval(trial, rt, nullptr);
      const double ct = 0.5 * rt.squaredNorm();
      if (std::isfinite(ct) && ct < cost) {
        const double gain = cost - ct;
        x = trial;
        cost = ct;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        model.eval(x, r, &J);
        if (gain <= 1e-16 * cost || step.norm() <= 1e-13 * (1.0 + std::abs(x[2]) + std::abs(x[1]))) {
          out.converged = true;
        }
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) {
      // No downhill step at any damping: a (numerically) stationary point.
      out.converged = true;
      break;
    }
    if (out.converged) break;
  }
  out.x = x;
  out.cost = cost;
  return out;
}

Vec4 canonical(Vec4 x) {
  if (x[2] < 0.0) {
    // sin(-a u + c) = -sin(a u - c)
    x[2] = -x[2];
    x[1] = -x[1];
    x[3] = -x[3];
  }
  if (x[1] < 0.0) {
    x[1] = -x[1];
    x[3] += std::numbers::pi;
  }
  x[3] = std::fmod(x[3], 2.0 * std::numbers::pi);
  if (x[3] < 0.0) x[3] += 2.0 * std::numbers::pi;
  if (x[3] >= 2.0 * std::numbers::pi) x[3] = 0.0;
  return x;
}

}  // namespace

FitResult fit_nonlinearity(const NonlinearFitProblem& problem, const NonlinearFitOptions& options) {
  require(problem.samples.size() >= 8, ErrorCode::InvalidArgument,
          "nonlinear fit needs at least 8 amplitude points, got " + std::to_string(problem.samples.size()));
  require(!problem.probe_indices.empty(), ErrorCode::InvalidArgument, "no probe indices");
  require(options.max_iterations >= 1, ErrorCode::InvalidArgument, "max_iterations must be >= 1");
  const SineModel model(problem);
  const double peak = model.peak_drive();
  require(peak > 0.0, ErrorCode::Validation, "all drive scales are zero");

  // Starts: chi3 on the four quadrants, chi2 spread over phase excursions
  // from the linear regime to deep saturation; chi0, chi1 solved linearly.
  std::vector<std::pair<double, Vec4>> starts;
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  for (double c3 : {0.0, 0.5 * std::numbers::pi, std::numbers::pi, 1.5 * std::numbers::pi}) {
    for (double excursion : {0.1, 0.3, 0.6, 1.0, 1.4, 1.8, 2.4, 3.0, 4.0, 5.5, 7.5}) {
      Vec4 x{0.0, 1.0, excursion / peak, c3};
      model.eval(x, r, &J);
      // r is linear in (chi0, chi1): r = r0 + J(:,0:1) d.
      const Eigen::MatrixXd A = J.leftCols(2);
      const Eigen::Vector2d d = A.colPivHouseholderQr().solve(-r);
      x[0] += d(0);
      x[1] += d(1);
      model.eval(x, r, nullptr);
      starts.emplace_back(0.5 * r.squaredNorm(), x);
    }
  }
  std::sort(starts.begin(), starts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  LmOutcome best;
  best.cost = std::numeric_limits<double>::infinity();
  const std::size_t tries = std::min<std::size_t>(starts.size(), 12);
  for (std::size_t i = 0; i < tries; ++i) {
    const auto o = levenberg_marquardt(model, starts[i].second, options.max_iterations);
    if (o.cost < best.cost) best = o;
  }

  FitResult res;
  res.names = {"chi0", "chi1", "chi2", "chi3"};
  const auto x = canonical(best.x);
  res.params.assign(x.begin(), x.end());
  res.iterations = best.iterations;
  res.converged = best.converged;
  model.eval(x, r, &J);
  const auto m = static_cast<double>(r.size());
  res.residual_rms = std::sqrt(r.squaredNorm() / m);

  Eigen::MatrixXd Js = J;
  for (int c = 0; c < 4; ++c) {
    const double n = Js.col(c).norm();
    if (n > 0.0) Js.col(c) /= n;
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(Js);
  const auto& sv = svd.singularValues();
  const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
  // Below ~0.3 rad of phase excursion the sine is a line to within about 1.5%
  // and only the product chi1 chi2 is determined by the data.
  const double excursion = x[2] * peak;
  res.identifiable = cond <= options.condition_limit && excursion >= 0.3;

  const double dof = m - 4.0;
  const double s2 = dof > 0.0 ? r.squaredNorm() / dof : 0.0;
  const Eigen::Matrix4d A = J.transpose() * J;
  const Eigen::Matrix4d cov = A.completeOrthogonalDecomposition().pseudoInverse() * s2;
  for (int c = 0; c < 4; ++c) res.std_errors.push_back(std::sqrt(std::max(0.0, cov(c, c))));

  if (!res.identifiable) {
    res.warning = "chi1 and chi2 are nearly unidentifiable (Jacobian condition number " + std::to_string(cond) +
                  ", peak phase excursion " + std::to_string(excursion) + " rad); extend the drive amplitudes into the saturated regime";
  }
  if (!res.converged) {
    res.warning += std::string(res.warning.empty() ? "" : "; ") + "no convergence after " +
                   std::to_string(options.max_iterations) + " iterations, best estimate returned";
  }
  return res;
}

NonlinearFitProblem synthesize_nonlinear_data(const MultiToneSignal& drive, const NonlinearityParams& truth,
                                              std::span<const double> scales, std::vector<std::int64_t> probes,
                                              double noise_sigma, std::uint64_t seed) {
  require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), ErrorCode::InvalidArgument, "noise sigma must be >= 0");
  NonlinearFitProblem p{drive, probes.empty() ? default_probe_indices(drive) : std::move(probes), {}};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
  auto noise = [&] { return noise_sigma > 0.0 ? nd(rng) : 0.0; };
  for (double a : scales) {
    const auto field = modulate_nonlinear_ssb(synthesize(drive.scaled(a)), truth, HarmonicGuard::Skip);
    NonlinearSample s;
    s.scale = a;
    s.dc = field.carrier.real() + noise();
    for (auto k : p.probe_indices) {
      const auto it = field.envelope.find(k);
      const Complex c = it == field.envelope.end() ? Complex{} : it->second;
      s.tones.push_back(c + Complex(noise(), noise()));
    }
    p.samples.push_back(std::move(s));
  }
  return p;
}

// ---------------------------------------------------------------------------

std::string fit_result_to_json(const FitResult& r) {
  detail::json j;
  j["names"] = r.names;
  j["params"] = r.params;
  j["std_errors"] = r.std_errors;
  j["residual_rms"] = r.residual_rms;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["identifiable"] = r.identifiable;
  if (!r.warning.empty()) j["warning"] = r.warning;
  return j.dump(1);
}

std::string nonlinear_problem_to_json(const NonlinearFitProblem& p) {
  detail::json j;
  j["drive"] = detail::json::parse(to_json(p.drive));
  j["probe_indices"] = p.probe_indices;
  auto rows = detail::json::array();
  for (const auto& s : p.samples) {
    auto tones = detail::json::array();
    for (const auto& c : s.tones) tones.push_back({c.real(), c.imag()});
    rows.push_back({{"scale", s.scale}, {"dc", s.dc}, {"tones", std::move(tones)}});
  }
  j["samples"] = std::move(rows);
  return j.dump(1);
}

NonlinearFitProblem nonlinear_problem_from_json(std::string_view text) {
  return detail::guarded_parse("nonlinear fit JSON", [&] {
    const auto j = detail::json::parse(text);
    NonlinearFitProblem p{signal_from_json(j.at("drive").dump()), {}, {}};
    if (j.contains("probe_indices")) {
      p.probe_indices = j["probe_indices"].get<std::vector<std::int64_t>>();
    } else {
      p.probe_indices = default_probe_indices(p.drive);
    }
    for (const auto& row : j.at("samples")) {
      NonlinearSample s;
      s.scale = row.at("scale").get<double>();
      s.dc = row.value("dc", 0.0);
      for (const auto& t : row.at("tones")) s.tones.emplace_back(t.at(0).get<double>(), t.at(1).get<double>());
      p.samples.push_back(std::move(s));
    }
    return p;
  });
}

std::string linear_samples_to_json(std::span<const LinearSample> samples) {
  auto rows = detail::json::array();
  for (const auto& s : samples) {
    auto w = detail::json::array();
    for (std::int64_t r = 0; r < s.w.rows; ++r) {
      w.push_back(std::vector<double>(s.w.data.begin() + r * s.w.cols, s.w.data.begin() + (r + 1) * s.w.cols));
    }
    rows.push_back({{"x", s.x}, {"w", std::move(w)}, {"y", s.y}});
  }
  detail::json j;
  j["samples"] = std::move(rows);
  return j.dump(1);
}

std::vector<LinearSample> linear_samples_from_json(std::string_view text) {
  return detail::guarded_parse("linear fit JSON", [&] {
    const auto j = detail::json::parse(text);
    std::vector<LinearSample> out;
    for (const auto& row : j.at("samples")) {
      LinearSample s;
      s.x = row.at("x").get<std::vector<double>>();
      s.y = row.at("y").get<std::vector<double>>();
      const auto w = row.at("w").get<std::vector<std::vector<double>>>();
      std::vector<double> flat;
      for (const auto& r : w) {
        require(r.size() == s.x.size(), ErrorCode::InvalidArgument, "weight rows must match the length of x");
        flat.insert(flat.end(), r.begin(), r.end());
      }
      s.w = Matrix(static_cast<std::int64_t>(w.size()), static_cast<std::int64_t>(s.x.size()), std::move(flat));
      out.push_back(std::move(s));
    }
    return out;
  });
}

}  // namespace maft
