#include "occsp/instgen.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "occsp/rng.hpp"

namespace occsp::instgen {

void ScenarioSpec::validate() const {
  horizon.validate();
  if (n_evs < 1) throw Error("scenario: n_evs must be >= 1");
  if (arrival.components.empty()) throw Error("scenario: arrival distribution has no components");
  double total = 0.0;
  for (const auto& c : arrival.components) {
    if (c.stddev <= 0.0) throw Error("scenario: arrival stddev must be > 0");
    if (c.weight < 0.0) throw Error("scenario: mixture weights must be non-negative");
    total += c.weight;
  }
  if (total <= 0.0) throw Error("scenario: mixture weights sum to zero");
  if (departure.stddev <= 0.0) throw Error("scenario: departure stddev must be > 0");
  if (l_max < 1 || l_max > horizon.T) throw Error("scenario: l_max must lie in [1, T]");
}

ScenarioSpec builtin_scenario(int id) {
  ScenarioSpec s;
  s.id = std::to_string(id);
  switch (id) {
    case 1:
      s.n_evs = 200;
      s.arrival.components = {{1.0, 24.0, 12.0}};
      break;
    case 2:
      s.n_evs = 300;
      s.arrival.components = {{1.0, 24.0, 12.0}};
      break;
    case 3:
      s.n_evs = 200;
      s.arrival.components = {{1.0, 24.0, 6.0}};
      break;
    case 4:
      s.n_evs = 200;
      s.arrival.components = {{0.5, 16.0, 3.0}, {0.5, 32.0, 3.0}};
      break;
    default:
      throw Error("unknown scenario id " + std::to_string(id) + " (expected 1..4)");
  }
  return s;
}

ScenarioSpec desk_scenario(int id, int T, int n_evs) {
  ScenarioSpec s = builtin_scenario(id);
  const double k = static_cast<double>(T) / s.horizon.T;
  for (auto& c : s.arrival.components) {
    c.mean *= k;
    c.stddev *= k;
  }
  s.departure.mean *= k;
  s.departure.stddev *= k;
  s.l_max = std::clamp(static_cast<int>(std::lround(s.l_max * k)), 1, T);
  s.horizon.T = T;
  s.horizon.slot_minutes = std::max(1, static_cast<int>(std::lround(s.horizon.slot_minutes / k)));
  s.n_evs = n_evs;
  s.id = "desk" + std::to_string(id) + "_T" + std::to_string(T) + "_N" + std::to_string(n_evs);
  s.validate();
  return s;
}

std::optional<std::pair<int, int>> discretize(double ar_cont, double d_cont, int T) {
  const double hi = static_cast<double>(T);
  const int ar = static_cast<int>(std::ceil(std::clamp(ar_cont, 1.0, hi)));
  const int d = static_cast<int>(std::floor(std::clamp(d_cont, 1.0, hi)));
  if (ar > d) return std::nullopt;
  return std::make_pair(ar, d);
}

int block_length(double soc_ar, double soc_d, double per_slot) {
  if (per_slot <= 0.0) throw Error("block_length: per-slot energy must be > 0");
  if (soc_d < soc_ar) throw Error("block_length: departure SoC below arrival SoC");
  // tolerate representation error on exact multiples
  return static_cast<int>(std::ceil((soc_d - soc_ar) / per_slot - 1e-9));
}

namespace {

double sample_arrival(const ArrivalDist& dist, CounterRng& rng) {
  const auto& comps = dist.components;
  if (comps.size() == 1) return rng.normal(comps[0].mean, comps[0].stddev);
  double total = 0.0;
  for (const auto& c : comps) total += c.weight;
  double u = rng.uniform() * total;
  for (const auto& c : comps) {
    if (u < c.weight) return rng.normal(c.mean, c.stddev);
    u -= c.weight;
  }
  return rng.normal(comps.back().mean, comps.back().stddev);
}

}  // namespace

Instance sample_instance(const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  const int T = spec.horizon.T;
  struct Draw {
    int ar, d, l, order;
  };
  std::vector<Draw> draws;
  draws.reserve(static_cast<std::size_t>(spec.n_evs));
  for (int k = 0; k < spec.n_evs; ++k) {
    CounterRng rng(seed, static_cast<std::uint64_t>(k));
    std::optional<std::pair<int, int>> window;
    for (int attempt = 0; attempt < kMaxRetries && !window; ++attempt) {
      const double ar_c = std::clamp(sample_arrival(spec.arrival, rng), 1.0, static_cast<double>(T));
      const double d_c = rng.normal(spec.departure.mean, spec.departure.stddev);
      // departures are truncated by rejection: neither before arrival nor past T
      if (d_c < ar_c || std::floor(d_c) > T) continue;
      window = discretize(ar_c, d_c, T);
    }
    if (!window) {
      std::ostringstream os;
      os << "instance generation: EV draw " << k << " exceeded " << kMaxRetries << " retries (seed " << seed << ")";
      throw Error(os.str());
    }
    const auto [ar, d] = *window;
    int l = rng.uniform_int(1, spec.l_max);
    l = std::max(1, std::min(l, d - ar + 1));
    draws.push_back({ar, d, l, k});
  }
  std::stable_sort(draws.begin(), draws.end(), [](const Draw& a, const Draw& b) { return a.ar < b.ar; });
  std::vector<Ev> evs;
  evs.reserve(draws.size());
  int id = 1;
  for (const auto& dr : draws) evs.push_back({id++, dr.ar, dr.d, dr.l});
  return make_instance(spec.horizon, std::move(evs), 0, spec.id, seed);
}

ScenarioSpec perturb_spec(const ScenarioSpec& spec, double band, unsigned targets, std::uint64_t seed) {
  if (band < 0.0 || band >= 1.0) throw Error("perturb_spec: band must lie in [0, 1)");
  ScenarioSpec out = spec;
  Perturbation p;
  p.band = band;
  auto factor = [&](std::uint64_t stream) {
    CounterRng rng(hash_combine(seed, 0x9e3779b9ULL), stream);
    return rng.uniform(1.0 - band, 1.0 + band);
  };
  if (targets & kMean) p.mean_factor = factor(0);
  if (targets & kStd) p.std_factor = factor(1);
  if (targets & kCount) p.count_factor = factor(2);
  for (auto& c : out.arrival.components) {
    c.mean *= p.mean_factor;
    c.stddev *= p.std_factor;
  }
  out.n_evs = std::max(1, static_cast<int>(std::lround(spec.n_evs * p.count_factor)));
  out.perturbation = p;
  return out;
}

unsigned parse_targets(const std::string& text) {
  unsigned mask = 0;
  std::istringstream is(text);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    if (tok == "mean") mask |= kMean;
    else if (tok == "std") mask |= kStd;
    else if (tok == "count") mask |= kCount;
    else if (tok == "all") mask |= kAll;
    else if (!tok.empty()) throw Error("unknown perturbation target '" + tok + "'");
  }
  return mask;
}

}  // namespace occsp::instgen
