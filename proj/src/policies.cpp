#include "occsp/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "occsp/io.hpp"

namespace occsp::policies {

namespace {

constexpr const char* kModelFormat = "occsp-policy";
constexpr int kModelVersion = 1;

// Seed-derivation tags.
constexpr std::uint64_t kTagInit = 0x1a17;
constexpr std::uint64_t kTagSplit = 0x5b11;
constexpr std::uint64_t kTagShuffle = 0x5f1e;
constexpr std::uint64_t kTagDropout = 0xd0d0;
constexpr std::uint64_t kTagExpert = 0xe0;
constexpr std::uint64_t kTagAgent = 0xa0;
constexpr std::uint64_t kTagValid = 0xf0;
constexpr std::uint64_t kTagTrain = 0x70;
constexpr std::uint64_t kTagRandom = 0x7a;

std::uint64_t derive(std::uint64_t seed, std::uint64_t tag, std::uint64_t k) {
  return hash_combine(hash_combine(seed, tag), k);
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::I2M: return "I2M";
    case Variant::I2S: return "I2S";
    case Variant::V2M: return "V2M";
    case Variant::V2S: return "V2S";
  }
  return "?";
}

Variant variant_from_string(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (t == "I2M") return Variant::I2M;
  if (t == "I2S") return Variant::I2S;
  if (t == "V2M") return Variant::V2M;
  if (t == "V2S") return Variant::V2S;
  throw Error("unknown policy variant '" + text + "'");
}

bool is_image(Variant v) { return v == Variant::I2M || v == Variant::I2S; }
bool is_movement(Variant v) { return v == Variant::I2M || v == Variant::V2M; }

EncoderConfig encoder_for(const Instance& instance, int l_max) {
  EncoderConfig e;
  e.T = instance.T();
  e.rows = std::max(1, instance.cap);
  if (l_max <= 0) {
    l_max = 1;
    for (const auto& ev : instance.evs) l_max = std::max(l_max, ev.l);
  }
  e.l_max = l_max;
  return e;
}

EncoderConfig encoder_for(const instgen::ScenarioSpec& spec) {
  EncoderConfig e;
  e.T = spec.horizon.T;
  e.rows = std::max(1, spec.n_evs);
  e.l_max = spec.l_max;
  return e;
}

nlohmann::json to_json(const EncoderConfig& e) { return {{"T", e.T}, {"rows", e.rows}, {"l_max", e.l_max}}; }

EncoderConfig encoder_from_json(const nlohmann::json& j) {
  EncoderConfig e;
  e.T = j.at("T");
  e.rows = j.at("rows");
  e.l_max = j.at("l_max");
  if (e.T < 1 || e.rows < 1 || e.l_max < 1) throw Error("encoder config: T, rows and l_max must be >= 1");
  return e;
}

nlohmann::json to_json(const ArchConfig& a) {
  return {{"conv_channels", a.conv_channels}, {"kernel", a.kernel},           {"cnn_hidden", a.cnn_hidden},
          {"cnn_dropout", a.cnn_dropout},     {"mlp_hidden", a.mlp_hidden}, {"mlp_dropout", a.mlp_dropout}};
}

ArchConfig arch_from_json(const nlohmann::json& j) {
  ArchConfig a;
  a.conv_channels = j.value("conv_channels", a.conv_channels);
  a.kernel = j.value("kernel", a.kernel);
  a.cnn_hidden = j.value("cnn_hidden", a.cnn_hidden);
  a.cnn_dropout = j.value("cnn_dropout", a.cnn_dropout);
  a.mlp_hidden = j.value("mlp_hidden", a.mlp_hidden);
  a.mlp_dropout = j.value("mlp_dropout", a.mlp_dropout);
  if (a.cnn_hidden.size() != a.cnn_dropout.size()) throw Error("arch config: cnn_hidden and cnn_dropout differ in length");
  return a;
}

Observation observe(const engine::EpisodeState& state, Variant variant, const EncoderConfig& enc) {
  if (is_image(variant)) return engine::render_image(state, enc.rows);
  return engine::encode_vector(state, enc.l_max, variant == Variant::V2M);
}

std::vector<double> features(const Observation& obs, const EncoderConfig& enc) {
  if (const auto* img = std::get_if<engine::ImageObs>(&obs)) {
    const int H = enc.image_height(), W = enc.image_width();
    if (img->rows > H || img->cols > W) throw Error("features: image larger than the encoder grid");
    std::vector<double> x(static_cast<std::size_t>(img->channels) * H * W, 0.0);
    for (int c = 0; c < img->channels; ++c)
      for (int r = 0; r < img->rows; ++r)
        for (int k = 0; k < img->cols; ++k)
          x[(static_cast<std::size_t>(c) * H + r) * W + k] = img->at(c, r, k);
    return x;
  }
  const auto& v = std::get<engine::VectorObs>(obs);
  std::vector<double> x(v.values.begin(), v.values.end());
  // Loads are counts; put them on the same scale as the 0/1 blocks.
  const double scale = 1.0 / enc.rows;
  for (int j = 0; j < enc.T; ++j) x[static_cast<std::size_t>(v.l_max + j)] *= scale;
  return x;
}

std::vector<int> input_shape(Variant variant, const EncoderConfig& enc) {
  if (is_image(variant)) return {3, enc.image_height(), enc.image_width()};
  return {enc.l_max + enc.T + (variant == Variant::V2M ? enc.T : 0)};
}

int head_size(Variant variant, const EncoderConfig& enc) { return is_movement(variant) ? engine::kNumActions : enc.T; }

PolicyModel build_network(Variant variant, const EncoderConfig& enc, std::uint64_t seed, const ArchConfig& arch) {
  PolicyModel m;
  m.variant = variant;
  m.encoder = enc;
  m.arch = arch;
  m.seed = seed;
  CounterRng rng(seed, kTagInit);
  const int head = head_size(variant, enc);
  int width;
  if (is_image(variant)) {
    int ch = 3, H = enc.image_height(), W = enc.image_width();
    for (int c : arch.conv_channels) {
      m.network.add(std::make_unique<nn::Conv2d>(ch, c, arch.kernel, rng));
      m.network.add(std::make_unique<nn::BatchNorm>(c));
      m.network.add(std::make_unique<nn::ReLU>());
      m.network.add(std::make_unique<nn::MaxPool2d>());
      ch = c;
      H /= 2;
      W /= 2;
      if (H < 1 || W < 1) throw Error("build_network: too many pooling stages for the image size");
    }
    m.network.add(std::make_unique<nn::Flatten>());
    width = ch * H * W;
    for (std::size_t k = 0; k < arch.cnn_hidden.size(); ++k) {
      m.network.add(std::make_unique<nn::Dense>(width, arch.cnn_hidden[k], rng));
      m.network.add(std::make_unique<nn::ReLU>());
      m.network.add(std::make_unique<nn::Dropout>(arch.cnn_dropout[k], 0));
      width = arch.cnn_hidden[k];
    }
  } else {
    width = input_shape(variant, enc)[0];
    for (int h : arch.mlp_hidden) {
      m.network.add(std::make_unique<nn::Dense>(width, h, rng));
      m.network.add(std::make_unique<nn::ReLU>());
      m.network.add(std::make_unique<nn::Dropout>(arch.mlp_dropout, 0));
      width = h;
    }
  }
  m.network.add(std::make_unique<nn::Dense>(width, head, rng));
  m.network.reseed_dropout(hash_combine(seed, kTagDropout));
  return m;
}

namespace {

nn::Tensor batch_of(const std::vector<const std::vector<double>*>& rows, const std::vector<int>& shape) {
  std::vector<int> s{static_cast<int>(rows.size())};
  s.insert(s.end(), shape.begin(), shape.end());
  nn::Tensor t(s);
  std::size_t off = 0;
  for (const auto* r : rows) {
    std::copy(r->begin(), r->end(), t.data.begin() + static_cast<std::ptrdiff_t>(off));
    off += r->size();
  }
  return t;
}

}  // namespace

std::vector<double> PolicyModel::logits(const Observation& obs) {
  const auto x = features(obs, encoder);
  auto out = network.forward(batch_of({&x}, input_shape(variant, encoder)), nn::Mode::Eval);
  return out.data;
}

std::vector<double> PolicyModel::probabilities(const Observation& obs) {
  const auto z = logits(obs);
  return nn::softmax(nn::Tensor({1, static_cast<int>(z.size())}, z)).data;
}

nlohmann::json to_json(const PolicyModel& m) {
  return {{"format", kModelFormat},  {"version", kModelVersion},  {"variant", to_string(m.variant)},
          {"encoder", to_json(m.encoder)}, {"arch", to_json(m.arch)}, {"seed", m.seed},
          {"network", m.network.to_json()}};
}

PolicyModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != kModelFormat) throw Error("not a policy model file");
    if (j.at("version").get<int>() != kModelVersion) throw Error("unsupported model version");
    PolicyModel m;
    m.variant = variant_from_string(j.at("variant"));
    m.encoder = encoder_from_json(j.at("encoder"));
    m.arch = arch_from_json(j.at("arch"));
    m.seed = j.at("seed");
    m.network = nn::Network::from_json(j.at("network"));
    m.network.reseed_dropout(hash_combine(m.seed, kTagDropout));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw Error(std::string("malformed model: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const PolicyModel& m) { io::write_text(path, io::canonical(to_json(m))); }

PolicyModel load_model(const std::filesystem::path& path) {
  try {
    return model_from_json(nlohmann::json::parse(io::read_text(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("malformed model file " + path.string() + ": " + e.what());
  }
}

// ----------------------------------------------------------- demonstrations

int label_class(Variant variant, int label) { return is_movement(variant) ? label : label - 1; }

nlohmann::json to_json(const Demonstration& d) {
  nlohmann::json obs;
  if (const auto* img = std::get_if<engine::ImageObs>(&d.observation)) {
    obs = {{"kind", "image"}, {"channels", img->channels}, {"rows", img->rows}, {"cols", img->cols}, {"pixels", img->pixels}};
  } else {
    const auto& v = std::get<engine::VectorObs>(d.observation);
    obs = {{"kind", "vector"}, {"l_max", v.l_max}, {"with_position", v.with_position}, {"values", v.values}};
  }
  return {{"episode_id", d.episode_id}, {"ev_id", d.ev_id}, {"label", d.label}, {"observation", obs}};
}

Demonstration demonstration_from_json(const nlohmann::json& j) {
  Demonstration d;
  d.episode_id = j.at("episode_id");
  d.ev_id = j.at("ev_id");
  d.label = j.at("label");
  const auto& o = j.at("observation");
  if (o.at("kind") == "image") {
    engine::ImageObs img;
    img.channels = o.at("channels");
    img.rows = o.at("rows");
    img.cols = o.at("cols");
    img.pixels = o.at("pixels").get<std::vector<std::uint8_t>>();
    if (img.pixels.size() != static_cast<std::size_t>(img.channels) * img.rows * img.cols)
      throw Error("demonstration: pixel count does not match the image shape");
    d.observation = std::move(img);
  } else if (o.at("kind") == "vector") {
    engine::VectorObs v;
    v.l_max = o.at("l_max");
    v.with_position = o.at("with_position");
    v.values = o.at("values").get<std::vector<int>>();
    d.observation = std::move(v);
  } else {
    throw Error("demonstration: unknown observation kind");
  }
  return d;
}

std::string write_dataset(const std::vector<Demonstration>& demos) {
  std::string out;
  for (const auto& d : demos) out += to_json(d).dump() + "\n";
  return out;
}

std::vector<Demonstration> read_dataset(const std::string& text) {
  std::vector<Demonstration> out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(demonstration_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

engine::Action extract_expert_action(int candidate, int target) {
  if (candidate > target) return engine::Action::Left;
  if (candidate < target) return engine::Action::Right;
  return engine::Action::Down;
}

namespace {

// Plays `target` for the active block from the current state, appending the
// demonstrations for each visited observation.
engine::EpisodeState demonstrate_block(engine::EpisodeState s, int target, Variant variant, const EncoderConfig& enc,
                                       int episode_id, std::vector<Demonstration>& out) {
  const int ev_id = s.active().id;
  if (!is_movement(variant)) out.push_back({observe(s, variant, enc), target, episode_id, ev_id});
  for (engine::Action a : engine::path_to(s.candidate, target)) {
    if (is_movement(variant)) out.push_back({observe(s, variant, enc), static_cast<int>(a), episode_id, ev_id});
    auto r = engine::step(s, a);
    s = std::move(r.state);
    if (r.committed || s.terminal) break;
  }
  return s;
}

}  // namespace

DemoSet expert_demonstrations(const std::vector<Instance>& instances, Variant variant, const EncoderConfig& enc,
                              solver::Budget budget, int first_episode_id) {
  DemoSet set;
  for (std::size_t k = 0; k < instances.size(); ++k) {
    const Instance& inst = instances[k];
    const auto r = solver::solve_oracle(inst, budget);
    set.statuses.push_back(r.status);
    if (!r.found)
      throw Error("expert_demonstrations: oracle found no schedule (" + solver::to_string(r.status) + ")");
    auto s = engine::reset(inst);
    const int episode = first_episode_id + static_cast<int>(k);
    while (!s.terminal) {
      const int id = s.active().id;
      auto it = r.schedule.starts.find(id);
      const int target = it == r.schedule.starts.end() ? s.candidate : it->second;
      s = demonstrate_block(std::move(s), target, variant, enc, episode, set.demos);
    }
  }
  return set;
}

// ----------------------------------------------------------------- training

void TrainConfig::validate() const {
  if (learning_rate <= 0) throw Error("train config: learning_rate must be > 0");
  if (max_iterations < 1) throw Error("train config: max_iterations must be >= 1");
  if (patience < 1) throw Error("train config: patience must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw Error("train config: train_fraction must be in (0, 1]");
  if (batch_size < 0) throw Error("train config: batch_size must be >= 0");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"max_iterations", c.max_iterations}, {"patience", c.patience},
          {"train_fraction", c.train_fraction}, {"batch_size", c.batch_size},       {"restore_best", c.restore_best}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.patience = j.value("patience", c.patience);
  c.train_fraction = j.value("train_fraction", c.train_fraction);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.restore_best = j.value("restore_best", c.restore_best);
  c.validate();
  return c;
}

nlohmann::json to_json(const TrainLog& log) {
  return {{"initial_loss", log.initial_loss}, {"train_loss", log.train_loss},
          {"eval_loss", log.eval_loss},       {"best_iteration", log.best_iteration},
          {"stopped_early", log.stopped_early}, {"single_class", log.single_class},
          {"class_weights", log.class_weights}, {"train_size", log.train_size},
          {"eval_size", log.eval_size}};
}

namespace {

struct Samples {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
};

double dataset_loss(nn::Network& net, const Samples& s, const std::vector<std::size_t>& idx,
                    const std::vector<int>& shape, const std::vector<double>& w) {
  if (idx.empty()) return 0.0;
  // Weighted mean over the whole split, evaluated in chunks.
  double num = 0.0, den = 0.0;
  constexpr std::size_t kChunk = 256;
  for (std::size_t b = 0; b < idx.size(); b += kChunk) {
    std::vector<const std::vector<double>*> rows;
    std::vector<int> labels;
    for (std::size_t k = b; k < std::min(idx.size(), b + kChunk); ++k) {
      rows.push_back(&s.x[idx[k]]);
      labels.push_back(s.y[idx[k]]);
    }
    auto out = net.forward(batch_of(rows, shape), nn::Mode::Eval);
    double chunk_w = 0.0;
    for (int l : labels) chunk_w += w[static_cast<std::size_t>(l)];
    if (chunk_w <= 0) continue;
    num += nn::weighted_cross_entropy(out, labels, w).loss * chunk_w;
    den += chunk_w;
  }
  return den > 0 ? num / den : 0.0;
}

template <class T>
void seeded_shuffle(std::vector<T>& v, CounterRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

TrainLog fit(PolicyModel& model, const std::vector<Demonstration>& demos, const TrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (demos.empty()) throw Error("train: empty demonstration set");
  const int K = model.head_size();
  const auto shape = input_shape(model.variant, model.encoder);

  Samples s;
  for (const auto& d : demos) {
    const int c = label_class(model.variant, d.label);
    if (c < 0 || c >= K) throw Error("train: label " + std::to_string(d.label) + " outside the head range");
    s.x.push_back(features(d.observation, model.encoder));
    s.y.push_back(c);
  }

  std::vector<std::size_t> order(demos.size());
  std::iota(order.begin(), order.end(), 0);
  CounterRng split_rng(seed, kTagSplit);
  seeded_shuffle(order, split_rng);
  auto n_train = static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(order.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, order.size());
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> eval(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  if (eval.empty()) eval = train;

  TrainLog log;
  log.train_size = train.size();
  log.eval_size = eval.size();
  // w_c = n / (K_present * count_c) from the training split.
  std::vector<long> counts(static_cast<std::size_t>(K), 0);
  for (auto i : train) ++counts[static_cast<std::size_t>(s.y[i])];
  const long present = std::count_if(counts.begin(), counts.end(), [](long c) { return c > 0; });
  log.single_class = present <= 1;
  log.class_weights.assign(static_cast<std::size_t>(K), 0.0);
  for (int c = 0; c < K; ++c)
    if (counts[c] > 0)
      log.class_weights[c] = static_cast<double>(train.size()) / (static_cast<double>(present) * counts[c]);
  // Eval labels absent from training get unit weight so they still count.
  std::vector<double> eval_w = log.class_weights;
  for (auto& w : eval_w)
    if (w == 0.0) w = 1.0;

  const int batch = cfg.batch_size > 0 ? cfg.batch_size : (is_image(model.variant) ? 256 : 512);
  nn::Adam opt(cfg.learning_rate);
  CounterRng shuffle_rng(seed, kTagShuffle);

  log.initial_loss = dataset_loss(model.network, s, train, shape, log.class_weights);
  nn::Network best = model.network;
  double best_eval = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    model.network.reseed_dropout(derive(seed, kTagDropout, static_cast<std::uint64_t>(it)));
    seeded_shuffle(train, shuffle_rng);
    double loss_sum = 0.0, weight_sum = 0.0;
    for (std::size_t b = 0; b < train.size(); b += static_cast<std::size_t>(batch)) {
      std::vector<const std::vector<double>*> rows;
      std::vector<int> labels;
      for (std::size_t k = b; k < std::min(train.size(), b + static_cast<std::size_t>(batch)); ++k) {
        rows.push_back(&s.x[train[k]]);
        labels.push_back(s.y[train[k]]);
      }
      model.network.zero_grad();
      auto out = model.network.forward(batch_of(rows, shape), nn::Mode::Train);
      auto lr = nn::weighted_cross_entropy(out, labels, log.class_weights);
      model.network.backward(lr.grad);
      opt.step(model.network.params());
      double bw = 0.0;
      for (int l : labels) bw += log.class_weights[static_cast<std::size_t>(l)];
      loss_sum += lr.loss * bw;
      weight_sum += bw;
    }
    log.train_loss.push_back(weight_sum > 0 ? loss_sum / weight_sum : 0.0);
    const double ev = dataset_loss(model.network, s, eval, shape, eval_w);
    log.eval_loss.push_back(ev);
    if (ev < best_eval) {
      best_eval = ev;
      best = model.network;
      log.best_iteration = it;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      log.stopped_early = true;
      break;
    }
  }
  if (cfg.restore_best && log.best_iteration >= 0) model.network = best;
  return log;
}

TrainResult train_sl(const std::vector<Demonstration>& demos, Variant variant, const EncoderConfig& enc,
                     const TrainConfig& cfg, std::uint64_t seed, const ArchConfig& arch) {
  TrainResult r{build_network(variant, enc, seed, arch), {}};
  r.log = fit(r.model, demos, cfg, hash_combine(seed, kTagTrain));
  return r;
}

// ----------------------------------------------------------------- rollouts

namespace {

std::size_t argmax_first(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] > v[best]) best = k;
  return best;
}

}  // namespace

Rollout rollout(PolicyModel& model, const Instance& instance, bool record_states) {
  if (instance.T() != model.encoder.T) throw Error("rollout: instance horizon does not match the model");
  Rollout out;
  auto s = engine::reset(instance);
  auto play = [&](engine::Action a, const Observation* obs) {
    if (record_states) out.visited.push_back({*obs, s.active().id, s.candidate, a, s});
    const int ev = s.active().id;
    auto r = engine::step(s, a);
    out.actions.push_back(a);
    out.trace.push_back({ev, a, r.committed ? r.committed_start : r.state.candidate, r.reward});
    if (r.reward) out.score += *r.reward;
    const bool done = r.committed || r.state.next_ev_index != s.next_ev_index || r.state.terminal;
    s = std::move(r.state);
    return done;
  };

  while (!s.terminal) {
    const Observation obs = observe(s, model.variant, model.encoder);
    if (is_movement(model.variant)) {
      play(engine::action_from_index(static_cast<int>(argmax_first(model.logits(obs)))), &obs);
      continue;
    }
    const Ev& e = s.active();
    const auto z = model.logits(obs);
    int target = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int st = e.ar; st <= e.last_start(); ++st)
      if (engine::cap_allows(s, st) && (target == 0 || z[static_cast<std::size_t>(st - 1)] > best)) {
        best = z[static_cast<std::size_t>(st - 1)];
        target = st;
      }
    if (target == 0) target = s.candidate;  // nothing fits; the engine leaves it unplaced
    for (engine::Action a : engine::path_to(s.candidate, target))
      if (play(a, &obs)) break;
  }
  out.schedule = s.committed;
  return out;
}

Schedule random_policy(const Instance& instance, std::uint64_t seed) {
  CounterRng rng(seed, kTagRandom);
  Schedule out;
  LoadProfile profile(instance.T());
  for (const auto& e : instance.evs) {
    std::vector<int> ok;
    for (int st = e.ar; st <= e.last_start(); ++st) {
      bool fits = true;
      for (int j = st; j < st + e.l && fits; ++j) fits = profile.at(j) + 1 <= instance.cap;
      if (fits) ok.push_back(st);
    }
    if (ok.empty()) continue;
    const int st = ok[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(ok.size()) - 1))];
    out.starts[e.id] = st;
    profile.add_block(st, e.l);
  }
  return out;
}

double mean_max_min(PolicyModel& model, const std::vector<Instance>& instances) {
  if (instances.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& inst : instances) sum += max_min(load_of(rollout(model, inst).schedule, inst));
  return sum / static_cast<double>(instances.size());
}

// ------------------------------------------------------------------- DAgger

void DaggerConfig::validate() const {
  if (eta0 < 1 || eta < 1 || xi < 1) throw Error("dagger config: eta0, eta and xi must be >= 1");
  if (max_outer < 0) throw Error("dagger config: max_outer must be >= 0");
}

nlohmann::json to_json(const DaggerConfig& c) {
  nlohmann::json j = {{"eta0", c.eta0}, {"eta", c.eta}, {"xi", c.xi}, {"max_outer", c.max_outer}};
  if (c.expert_budget.time_limit_s) j["expert_time_limit_s"] = *c.expert_budget.time_limit_s;
  if (c.expert_budget.node_limit) j["expert_node_limit"] = *c.expert_budget.node_limit;
  return j;
}

DaggerConfig dagger_config_from_json(const nlohmann::json& j) {
  DaggerConfig c;
  c.eta0 = j.value("eta0", c.eta0);
  c.eta = j.value("eta", c.eta);
  c.xi = j.value("xi", c.xi);
  c.max_outer = j.value("max_outer", c.max_outer);
  if (j.contains("expert_time_limit_s")) c.expert_budget.time_limit_s = j.at("expert_time_limit_s").get<double>();
  if (j.contains("expert_node_limit")) c.expert_budget.node_limit = j.at("expert_node_limit").get<long>();
  c.validate();
  return c;
}

nlohmann::json to_json(const DaggerIteration& it) {
  return {{"iteration", it.iteration},
          {"dataset_size", it.dataset_size},
          {"corrections", it.corrections},
          {"skipped_episodes", it.skipped_episodes},
          {"validation_max_min", it.validation_max_min},
          {"improved", it.improved},
          {"train_iterations", it.train_iterations}};
}

bool collect_corrections(PolicyModel& model, const Instance& instance, int episode_id, solver::Budget budget,
                         std::vector<Demonstration>& out) {
  const Rollout r = rollout(model, instance, true);
  std::vector<Demonstration> local;
  int cached_ev = -1, target = 0;
  for (const auto& step : r.visited) {
    if (step.ev_id != cached_ev) {
      // The committed prefix is fixed while a block is in play, so one
      // completion per block serves every state visited for it.
      solver::SolveRequest req;
      req.instance = instance;
      req.fixed = step.state.committed;
      for (std::size_t k = step.state.next_ev_index; k < instance.evs.size(); ++k)
        req.decide.push_back(instance.evs[k].id);
      req.budget = budget;
      const auto res = solver::solve_completion(req);
      if (!res.found) return false;
      target = res.schedule.starts.at(step.ev_id);
      cached_ev = step.ev_id;
      if (!is_movement(model.variant)) local.push_back({step.observation, target, episode_id, step.ev_id});
    }
    if (is_movement(model.variant))
      local.push_back({step.observation, static_cast<int>(extract_expert_action(step.candidate, target)), episode_id,
                       step.ev_id});
  }
  out.insert(out.end(), local.begin(), local.end());
  return true;
}

namespace {

std::vector<Instance> draw(const instgen::ScenarioSpec& spec, std::uint64_t seed, std::uint64_t tag, int first, int n) {
  std::vector<Instance> out;
  for (int k = 0; k < n; ++k) out.push_back(instgen::sample_instance(spec, derive(seed, tag, static_cast<std::uint64_t>(first + k))));
  return out;
}

}  // namespace

std::vector<Instance> dagger_validation_set(const DaggerConfig& config, const instgen::ScenarioSpec& scenario,
                                            std::uint64_t seed) {
  return draw(scenario, seed, kTagValid, 0, config.xi);
}

DaggerResult run_dagger(const DaggerConfig& config, const TrainConfig& train_cfg, const instgen::ScenarioSpec& scenario,
                        Variant variant, std::uint64_t seed, const ArchConfig& arch) {
  config.validate();
  train_cfg.validate();
  const EncoderConfig enc = encoder_for(scenario);
  const auto validation = dagger_validation_set(config, scenario, seed);

  DaggerResult res;
  res.dataset = expert_demonstrations(draw(scenario, seed, kTagExpert, 0, config.eta0), variant, enc,
                                      config.expert_budget)
                    .demos;
  auto sl = train_sl(res.dataset, variant, enc, train_cfg, seed, arch);
  res.initial_model = sl.model;
  res.initial_validation = mean_max_min(res.initial_model, validation);
  res.model = res.initial_model;
  res.best_validation = res.initial_validation;
  res.history.push_back({0, res.dataset.size(), res.dataset.size(), 0, res.initial_validation, true,
                         static_cast<int>(sl.log.eval_loss.size())});

  PolicyModel current = res.initial_model;
  int episode_id = config.eta0;
  for (int outer = 1; outer <= config.max_outer; ++outer) {
    DaggerIteration it;
    it.iteration = outer;
    const auto fresh = draw(scenario, seed, kTagAgent, (outer - 1) * config.eta, config.eta);
    std::vector<Demonstration> corrections;
    for (const auto& inst : fresh)
      if (!collect_corrections(current, inst, episode_id++, config.expert_budget, corrections)) ++it.skipped_episodes;
    it.corrections = corrections.size();
    res.dataset.insert(res.dataset.end(), corrections.begin(), corrections.end());
    it.dataset_size = res.dataset.size();

    const auto log = fit(current, res.dataset, train_cfg, derive(seed, kTagTrain, static_cast<std::uint64_t>(outer)));
    it.train_iterations = static_cast<int>(log.eval_loss.size());
    it.validation_max_min = mean_max_min(current, validation);
    it.improved = it.validation_max_min < res.best_validation;
    res.history.push_back(it);
    if (!it.improved) break;
    res.best_validation = it.validation_max_min;
    res.model = current;
  }
  return res;
}

}  // namespace occsp::policies
