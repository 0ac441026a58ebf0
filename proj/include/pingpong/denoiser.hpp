// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pingpong/latent.hpp"
#include "pingpong/schedule.hpp"
#include "pingpong/semantics.hpp"

namespace pingpong {

/// Isotropic Gaussian mixture standing in for the image distribution.
struct GMMWorld {
  Points means;                // K x D
  std::vector<double> scales;  // per-component std, > 0

  std::size_t components() const { return means.rows(); }
  std::size_t dims() const { return means.dims(); }
  void validate() const;
  /// Index of the mean closest to the point (lowest index on ties).
  int nearest_component(std::span<const double> point) const;
};

void to_json(nlohmann::json& j, const GMMWorld& w);
void from_json(const nlohmann::json& j, GMMWorld& w);

/// Noise-prediction backend: returns an epsilon estimate with the shape of x.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Points predict(const LatentState& x, const Condition& cond) const = 0;
};

/// Per-point posterior quantities of the analytic denoiser, exposed for checks.
struct PosteriorTerms {
  std::vector<double> responsibilities;  // M x K, row-major
  Points posterior_mean;                 // M x D
};

/// Exact noise prediction for a Gaussian-mixture data distribution.
class AnalyticDenoiser final : public Denoiser {
 public:
  AnalyticDenoiser(GMMWorld world, std::shared_ptr<const NoiseSchedule> schedule, double lambda = 1.0);

  Points predict(const LatentState& x, const Condition& cond) const override;
  PosteriorTerms posterior(const LatentState& x, const Condition& cond) const;

  const GMMWorld& world() const { return world_; }

 private:
  GMMWorld world_;
  std::shared_ptr<const NoiseSchedule> schedule_;
  double lambda_;
};

Points analytic_eps(const GMMWorld& world, const Condition& cond, const LatentState& x, const NoiseSchedule& s,
                    double lambda = 1.0);

enum class PerturbationMode { kConstantDirection, kRandomPerCall };

PerturbationMode parse_perturbation_mode(const std::string& name);
std::string to_string(PerturbationMode mode);

/// Adds a perturbation of norm exactly delta to every point of the base prediction.
///
/// Constant mode uses one fixed unit vector; random mode draws a fresh unit
/// direction per point per call from the perturbation stream.
class PerturbedDenoiser final : public Denoiser {
 public:
  PerturbedDenoiser(std::shared_ptr<const Denoiser> base, double delta, PerturbationMode mode, std::uint64_t seed = 0,
                    std::vector<double> direction = {});

  Points predict(const LatentState& x, const Condition& cond) const override;
  std::uint64_t calls() const { return calls_.load(); }

 private:
  std::shared_ptr<const Denoiser> base_;
  double delta_;
  PerturbationMode mode_;
  Philox rng_;
  std::vector<double> direction_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

std::shared_ptr<Denoiser> perturbed_eps(std::shared_ptr<const Denoiser> base, double delta, PerturbationMode mode,
                                        std::uint64_t seed = 0);

/// Counts predictions; used for model-call accounting.
class CountingDenoiser final : public Denoiser {
 public:
  explicit CountingDenoiser(std::shared_ptr<const Denoiser> base) : base_(std::move(base)) {}
  Points predict(const LatentState& x, const Condition& cond) const override;
  std::uint64_t calls() const { return calls_.load(); }

 private:
  std::shared_ptr<const Denoiser> base_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

/// Returns zeros; the degenerate backend used by operator and protocol tests.
class ZeroDenoiser final : public Denoiser {
 public:
  Points predict(const LatentState& x, const Condition&) const override { return Points(x.x.rows(), x.x.dims()); }
};

// Wire format of the /denoise sidecar endpoint.
std::string denoise_request_body(const LatentState& x, double alpha_bar, const Condition& cond);
Points parse_denoise_response(const std::string& body, std::size_t rows, std::size_t dims);

/// Splits "http://host:port[/prefix]" into scheme+authority and path prefix.
struct Endpoint {
  std::string base;    // e.g. http://127.0.0.1:8080
  std::string prefix;  // e.g. "" or "/v1"
  static Endpoint parse(const std::string& uri);
};

/// Client for an external denoiser speaking the /denoise protocol.
class RemoteDenoiser final : public Denoiser {
 public:
  RemoteDenoiser(std::string endpoint, std::shared_ptr<const NoiseSchedule> schedule,
                 std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));
  Points predict(const LatentState& x, const Condition& cond) const override;

 private:
  std::string endpoint_;
  Endpoint parsed_;
  std::shared_ptr<const NoiseSchedule> schedule_;
  std::chrono::milliseconds timeout_;
};

std::shared_ptr<Denoiser> remote_eps(const std::string& endpoint, std::shared_ptr<const NoiseSchedule> schedule,
                                     std::chrono::milliseconds timeout);

}  // namespace pingpong
