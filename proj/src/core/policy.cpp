#include "policy.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "rng.hpp"

namespace gasopt {

int PolicyParams::params_per_subnet() const {
  int n = 0;
  int in = input_dim;
  for (std::size_t l = 0; l <= hidden.size(); ++l) {
    int out = l < hidden.size() ? hidden[l] : output_dim;
    n += out * (in + 1);
    in = out;
  }
  return n;
}

PolicyParams init_policy(ModelKind model, const StorageSpec& spec, std::vector<int> hidden,
                         std::uint64_t seed) {
  for (int h : hidden)
    require(h >= 1 && h <= 1024, errc::invalid_argument, "hidden widths must be in [1, 1024]");

  PolicyParams p;
  p.model = model;
  p.input_dim = model == ModelKind::smod ? 3 : 4;
  p.output_dim = model == ModelKind::smod ? 1 : 2;
  p.hidden = std::move(hidden);
  p.subnet_count = static_cast<int>(spec.month_starts.size());
  p.day_to_subnet.resize(spec.days);
  for (int k = 0; k < spec.days; ++k) p.day_to_subnet[k] = spec.month_of(k);

  p.values.assign(static_cast<std::size_t>(p.param_count()), 0.0);
  double* out = p.values.data();
  for (int s = 0; s < p.subnet_count; ++s) {
    int in = p.input_dim;
    for (std::size_t l = 0; l <= p.hidden.size(); ++l) {
      int rows = l < p.hidden.size() ? p.hidden[l] : p.output_dim;
      Rng rng(substream_seed(seed, static_cast<std::uint64_t>(s) * 131 + l));
      double bound = 1.0 / std::sqrt(static_cast<double>(in));
      for (int r = 0; r < rows * in; ++r) *out++ = rng.uniform(-bound, bound);
      for (int r = 0; r < rows; ++r) *out++ = 0.0;  // biases
      in = rows;
    }
  }
  return p;
}

NormStats fit_norm_stats(const ScenarioSet& s, const StorageSpec& spec, ModelKind model,
                         std::int64_t train_count) {
  require(train_count >= 1 && train_count <= s.count(), errc::invalid_argument,
          "train_count out of range");
  require(spec.days == s.days(), errc::invalid_argument,
          "storage horizon must match scenario days");

  auto mean_std = [](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    double sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
    if (!(sd > 1e-12)) sd = 1.0;
    return std::pair<double, double>(mean, sd);
  };

  NormStats norm;
  norm.shift = {0.0, 0.0};
  norm.scale = {static_cast<double>(std::max<std::int64_t>(s.days() - 1, 1)), spec.capacity};

  std::vector<double> prices;
  prices.reserve(static_cast<std::size_t>(train_count * s.days()));
  for (std::int64_t i = 0; i < train_count; ++i) {
    auto row = s.spot_row(i);
    prices.insert(prices.end(), row.begin(), row.end());
  }
  auto [spot_mean, spot_std] = mean_std(prices);
  norm.shift.push_back(spot_mean);
  norm.scale.push_back(spot_std);

  if (model == ModelKind::sfmod) {
    require(s.has_forwards(), errc::invalid_argument,
            "sfmod normalization needs forward curves in the scenario set");
    std::vector<double> quotes;
    int last_start = s.month_starts().back();
    quotes.reserve(static_cast<std::size_t>(train_count) * last_start);
    for (std::int64_t i = 0; i < train_count; ++i)
      for (int k = 0; k < last_start; ++k) quotes.push_back(s.rolling_front_month(i, k)->price);
    auto [fwd_mean, fwd_std] = mean_std(quotes);
    norm.shift.push_back(fwd_mean);
    norm.scale.push_back(fwd_std);
  }
  return norm;
}

template <class Real>
void policy_forward(const PolicyParams& p, std::span<const Real> values, int day,
                    std::span<const Real> features, std::span<Real> out,
                    PolicyScratch<Real>& scratch) {
  int subnet = p.day_to_subnet[day];
  const Real* block = values.data() + static_cast<std::size_t>(subnet) * p.params_per_subnet();

  std::span<const Real> cur = features;
  int in = p.input_dim;
  for (std::size_t l = 0; l <= p.hidden.size(); ++l) {
    bool last = l == p.hidden.size();
    int rows = last ? p.output_dim : p.hidden[l];
    auto& dst = (l % 2 == 0) ? scratch.a : scratch.b;
    dst.resize(static_cast<std::size_t>(rows), cur[0]);
    for (int r = 0; r < rows; ++r) {
      std::span<const Real> w(block + static_cast<std::size_t>(r) * in, static_cast<std::size_t>(in));
      const Real& bias = block[static_cast<std::size_t>(rows) * in + r];
      dst[static_cast<std::size_t>(r)] = ad::sigmoid(ad::affine_row(w, cur, bias));
    }
    block += static_cast<std::size_t>(rows) * (in + 1);
    if (last) {
      for (int r = 0; r < rows; ++r) out[static_cast<std::size_t>(r)] = dst[static_cast<std::size_t>(r)];
      return;
    }
    cur = dst;
    in = rows;
  }
}

template void policy_forward<double>(const PolicyParams&, std::span<const double>, int,
                                     std::span<const double>, std::span<double>,
                                     PolicyScratch<double>&);
template void policy_forward<ad::Rev>(const PolicyParams&, std::span<const ad::Rev>, int,
                                      std::span<const ad::Rev>, std::span<ad::Rev>,
                                      PolicyScratch<ad::Rev>&);

namespace {

ModelKind model_from_string(const std::string& s) {
  if (s == "smod") return ModelKind::smod;
  if (s == "sfmod") return ModelKind::sfmod;
  fail(errc::parse, "unknown model kind: " + s);
}

}  // namespace

void save_policy(const PolicyParams& p, const std::string& path) {
  nlohmann::json j;
  j["format"] = "gasopt-policy";
  j["version"] = 1;
  j["model"] = to_string(p.model);
  j["input_dim"] = p.input_dim;
  j["output_dim"] = p.output_dim;
  j["hidden"] = p.hidden;
  j["subnet_count"] = p.subnet_count;
  j["day_to_subnet"] = p.day_to_subnet;
  j["norm_shift"] = p.norm.shift;
  j["norm_scale"] = p.norm.scale;
  j["values"] = p.values;

  std::ofstream out(path);
  require(out.good(), errc::io, "cannot open checkpoint for writing: " + path);
  out << j.dump(2) << '\n';
  require(out.good(), errc::io, "failed writing checkpoint: " + path);
}

PolicyParams load_policy(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), errc::io, "cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(errc::parse, std::string("checkpoint is not valid json: ") + e.what());
  }

  try {
    require(j.at("format") == "gasopt-policy", errc::parse, "not a policy checkpoint");
    require(j.at("version") == 1, errc::parse, "unsupported checkpoint version");
    PolicyParams p;
    p.model = model_from_string(j.at("model"));
    p.input_dim = j.at("input_dim");
    p.output_dim = j.at("output_dim");
    p.hidden = j.at("hidden").get<std::vector<int>>();
    p.subnet_count = j.at("subnet_count");
    p.day_to_subnet = j.at("day_to_subnet").get<std::vector<int>>();
    p.norm.shift = j.at("norm_shift").get<std::vector<double>>();
    p.norm.scale = j.at("norm_scale").get<std::vector<double>>();
    p.values = j.at("values").get<std::vector<double>>();

    require(p.input_dim == (p.model == ModelKind::smod ? 3 : 4), errc::parse,
            "checkpoint input_dim inconsistent with model");
    require(p.output_dim == (p.model == ModelKind::smod ? 1 : 2), errc::parse,
            "checkpoint output_dim inconsistent with model");
    for (int h : p.hidden) require(h >= 1, errc::parse, "checkpoint hidden width invalid");
    require(p.subnet_count >= 1, errc::parse, "checkpoint subnet_count invalid");
    for (int sn : p.day_to_subnet)
      require(sn >= 0 && sn < p.subnet_count, errc::parse, "checkpoint day_to_subnet invalid");
    require(static_cast<int>(p.norm.shift.size()) == p.input_dim &&
                static_cast<int>(p.norm.scale.size()) == p.input_dim,
            errc::parse, "checkpoint normalization size mismatch");
    require(static_cast<int>(p.values.size()) == p.param_count(), errc::parse,
            "checkpoint parameter count mismatch");
    return p;
  } catch (const nlohmann::json::exception& e) {
    fail(errc::parse, std::string("checkpoint missing or mistyped field: ") + e.what());
  }
}

}  // namespace gasopt
