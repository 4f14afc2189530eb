// Copyright 2026 The hearshape Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Local HTTP service behind the web control panel.
//
//   GET  /health           {status, version}
//   POST /synth            JSON shape in user units -> audio/wav
//   POST /predict          WAV body -> {theta_hat, per_dim}
//   GET  /modal?omega_hz=  modal grid of a shape as JSON
//
// Errors are JSON {error, message, field}: 400 for invalid input, 413 for
// oversized uploads, 503 for /predict without a checkpoint.

#pragma once

#include <httplib.h>

#include <memory>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "hearshape/core/error.hpp"
#include "hearshape/dsp/wav.hpp"
#include "hearshape/nn/predictor.hpp"
#include "hearshape/synth/modal.hpp"
#include "hearshape/synth/synthesize.hpp"

namespace hearshape::service {

inline constexpr const char* kVersion = "0.1.0";

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path checkpoint;  // empty: /predict answers 503
  std::size_t max_upload_bytes = std::size_t(8) << 20;
  SynthConfig synth{std::size_t(1) << 15, 22050.0, 10, true};
  StrikeConfig strike;
};

/// Shape fields are named as users see them; omega is given in Hz.
inline std::string user_field(const std::string& field) { return field == "omega" ? "omega_hz" : field; }

inline nlohmann::json error_body(const Error& e) {
  return {{"error", std::string(to_string(e.code()))}, {"message", e.what()}, {"field", user_field(e.field())}};
}

/// Parses {omega_hz, tau, p, D, alpha, strike?, pickup?}; unknown keys are
/// rejected.
inline std::pair<ShapeVector, StrikeConfig> parse_synth_request(const nlohmann::json& j, StrikeConfig strike) {
  require(j.is_object(), Errc::invalid_argument, "request body must be a JSON object");
  static const std::set<std::string> known = {"omega_hz", "tau", "p", "D", "alpha", "strike", "pickup"};
  for (const auto& [key, value] : j.items())
    require(known.count(key) > 0, Errc::invalid_argument, "unknown field", key);
  auto number = [&](const char* key) {
    require(j.contains(key), Errc::invalid_argument, "missing field", key);
    require(j.at(key).is_number(), Errc::invalid_argument, "must be a number", key);
    return j.at(key).get<double>();
  };
  auto position = [&](const char* key, std::array<double, 2>& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    require(v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number(), Errc::invalid_argument,
            "must be [u1, u2]", key);
    out = {v[0].get<double>(), v[1].get<double>()};
  };
  const ShapeVector theta =
      ShapeVector::from_hz(number("omega_hz"), number("tau"), number("p"), number("D"), number("alpha"));
  validate(theta);
  position("strike", strike.strike_pos);
  position("pickup", strike.pickup_pos);
  validate(strike);
  return {theta, strike};
}

/// The exact bytes the CLI writes for the same shape and settings.
inline std::string render_wav(const ShapeVector& theta, const StrikeConfig& strike, const SynthConfig& cfg) {
  const auto wave = synthesize(theta, strike, cfg);
  return wav::encode(wave, static_cast<std::uint32_t>(cfg.sample_rate));
}

inline nlohmann::json modal_json(const ShapeVector& theta, int M) {
  const ModalGrid grid = modal_grid(theta, M);
  nlohmann::json j = to_json(grid);
  std::vector<double> hz(grid.size());
  for (std::size_t i = 0; i < hz.size(); ++i) hz[i] = grid.omega_m[i] / (2.0 * std::numbers::pi);
  j["frequency_hz"] = hz;
  j["theta"] = nn::user_units(theta);
  return j;
}

class Service {
 public:
  explicit Service(ServiceConfig cfg) : cfg_(std::move(cfg)) {
    if (!cfg_.checkpoint.empty()) predictor_ = std::make_unique<nn::Predictor>(cfg_.checkpoint);
    mount();
  }

  httplib::Server& server() { return server_; }
  bool has_model() const { return predictor_ != nullptr; }

  /// Binds to cfg.port (0: any free port) and returns the bound port.
  int bind() {
    const int port = cfg_.port == 0 ? server_.bind_to_any_port(cfg_.host)
                                    : (server_.bind_to_port(cfg_.host, cfg_.port) ? cfg_.port : -1);
    require(port > 0, Errc::io_error, "cannot bind " + cfg_.host + ":" + std::to_string(cfg_.port));
    return port;
  }
  bool serve() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }

 private:
  static void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  void mount() {
    server_.set_payload_max_length(cfg_.max_upload_bytes);
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                 {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                 {"Access-Control-Allow-Headers", "Content-Type"}});
    server_.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const Error& e) {
        send_json(res, 400, error_body(e));
      } catch (const nlohmann::json::exception& e) {
        send_json(res, 400, {{"error", "InvalidArgument"}, {"message", e.what()}, {"field", ""}});
      } catch (const std::exception& e) {
        send_json(res, 500, {{"error", "Internal"}, {"message", e.what()}, {"field", ""}});
      }
    });
    server_.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      if (res.status == 413)
        send_json(res, 413, {{"error", "PayloadTooLarge"}, {"message", "upload exceeds the size limit"}, {"field", ""}});
      else if (res.status == 404)
        send_json(res, 404, {{"error", "NotFound"}, {"message", "no such endpoint"}, {"field", ""}});
    });

    server_.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"status", "ok"}, {"version", kVersion}, {"model_loaded", has_model()}});
    });

    server_.Post("/synth", [this](const httplib::Request& req, httplib::Response& res) {
      const auto body = nlohmann::json::parse(req.body);
      const auto [theta, strike] = parse_synth_request(body, cfg_.strike);
      res.set_content(render_wav(theta, strike, cfg_.synth), "audio/wav");
    });

    server_.Post("/predict", [this](const httplib::Request& req, httplib::Response& res) {
      if (!predictor_) {
        send_json(res, 503, {{"error", "NoModel"}, {"message", "the service was started without a checkpoint"},
                             {"field", ""}});
        return;
      }
      if (req.body.size() > cfg_.max_upload_bytes) {
        send_json(res, 413, {{"error", "PayloadTooLarge"}, {"message", "upload exceeds the size limit"}, {"field", ""}});
        return;
      }
      const wav::Audio audio = wav::decode(req.body);
      require(double(audio.sample_rate) == predictor_->grid().sample_rate, Errc::invalid_argument,
              "sample rate must be " + std::to_string(int(predictor_->grid().sample_rate)) + " Hz", "sample_rate");
      const nn::Prediction p = predictor_->predict(audio.samples);
      nlohmann::json per_dim = nlohmann::json::object();
      for (std::size_t d = 0; d < 5; ++d) per_dim[dataset::kAxisNames[d]] = p.unit[d];
      send_json(res, 200, {{"theta_hat", nn::user_units(p.theta)}, {"per_dim", per_dim}});
    });

    server_.Get("/modal", [](const httplib::Request& req, httplib::Response& res) {
      auto number = [&](const char* key) {
        require(req.has_param(key), Errc::invalid_argument, "missing query parameter", key);
        const std::string s = req.get_param_value(key);
        std::size_t used = 0;
        double v = 0;
        try {
          v = std::stod(s, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        require(used == s.size() && used > 0, Errc::invalid_argument, "must be a number", key);
        return v;
      };
      const ShapeVector theta =
          ShapeVector::from_hz(number("omega_hz"), number("tau"), number("p"), number("D"), number("alpha"));
      int M = 10;
      if (req.has_param("M")) M = int(number("M"));
      require(M >= 1 && M <= 64, Errc::invalid_argument, "M must lie in [1, 64]", "M");
      send_json(res, 200, modal_json(theta, M));
    });
  }

  ServiceConfig cfg_;
  std::unique_ptr<nn::Predictor> predictor_;
  httplib::Server server_;
};

}  // namespace hearshape::service
