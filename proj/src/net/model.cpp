#include "amc/net/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "amc/contrast/margin_loss.hpp"
#include "amc/geom/neighbors.hpp"
#include "amc/random.hpp"
#include "amc/refine/masked_refine.hpp"

namespace amc::net {
namespace {

Model::Unit make_unit(std::size_t in, std::size_t out, Rng& rng) {
  Model::Unit u;
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  u.weight = ad::Tensor({out, in});
  for (double& w : u.weight.data) {
    w = rng.uniform(-limit, limit);
  }
  u.bias = ad::Tensor({out}, 0.0);
  u.gamma = ad::Tensor({out}, 1.0);
  u.beta = ad::Tensor({out}, 0.0);
  u.stats = ad::BatchNormStats(out);
  return u;
}

void append_unit(std::vector<ad::Tensor*>& out, Model::Unit& u) {
  out.insert(out.end(), {&u.weight, &u.bias, &u.gamma, &u.beta});
}

void append_unit_names(std::vector<std::string>& out, const std::string& prefix) {
  for (const char* name : {"weight", "bias", "bn_gamma", "bn_beta"}) {
    out.push_back(prefix + "." + name);
  }
}

}  // namespace

Model::Model(ModelConfig cfg, std::size_t in_features, std::size_t num_classes)
    : cfg_(std::move(cfg)), in_features_(in_features), num_classes_(num_classes) {
  cfg_.validate();
  if (num_classes < 2) {
    throw std::invalid_argument("Model: at least two classes required");
  }
  Rng rng(cfg_.seed);
  const std::size_t stages = cfg_.stages;
  stem_ = make_unit(3 + in_features_, level_dim(0), rng);
  for (std::size_t s = 1; s <= stages; ++s) {
    encoders_.push_back(make_unit(3 + level_dim(s - 1), level_dim(s), rng));
  }
  for (std::size_t s = 0; s < stages; ++s) {
    decoders_.push_back(make_unit(level_dim(s) + level_dim(s + 1), level_dim(s), rng));
  }
  const Unit head = make_unit(level_dim(0), num_classes_, rng);
  head_w_ = head.weight;
  head_b_ = head.bias;
  for (std::size_t s = 1; s <= stages; ++s) {
    apm_.emplace_back(s, level_dim(s), rng.next(), cfg_.apm_widths);
  }
}

std::size_t Model::level_dim(std::size_t level) const {
  if (level > cfg_.stages) {
    throw std::out_of_range("Model::level_dim: level " + std::to_string(level));
  }
  return level == 0 ? cfg_.dims[0] : cfg_.dims[level - 1];
}

std::vector<ad::Tensor*> Model::parameters() {
  std::vector<ad::Tensor*> out;
  append_unit(out, stem_);
  for (auto& u : encoders_) append_unit(out, u);
  for (auto& u : decoders_) append_unit(out, u);
  out.push_back(&head_w_);
  out.push_back(&head_b_);
  for (auto& block : apm_) {
    const auto p = block.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<std::string> Model::parameter_names() const {
  std::vector<std::string> out;
  append_unit_names(out, "stem");
  for (std::size_t s = 1; s <= encoders_.size(); ++s) append_unit_names(out, "encoder" + std::to_string(s));
  for (std::size_t s = 0; s < decoders_.size(); ++s) append_unit_names(out, "decoder" + std::to_string(s));
  out.push_back("head.weight");
  out.push_back("head.bias");
  for (const auto& block : apm_) {
    const auto names = block.parameter_names("apm" + std::to_string(block.stage()) + ".");
    out.insert(out.end(), names.begin(), names.end());
  }
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const ad::Tensor* t : const_cast<Model*>(this)->parameters()) n += t->size();
  return n;
}

std::vector<double> Model::flat_parameters() const {
  std::vector<double> flat;
  for (const ad::Tensor* t : const_cast<Model*>(this)->parameters()) {
    flat.insert(flat.end(), t->data.begin(), t->data.end());
  }
  return flat;
}

void Model::set_flat_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw std::invalid_argument("Model::set_flat_parameters: expected " + std::to_string(parameter_count()) +
                                " values, got " + std::to_string(flat.size()));
  }
  std::size_t at = 0;
  for (ad::Tensor* t : parameters()) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(at), t->size(), t->data.begin());
    at += t->size();
  }
}

std::vector<std::pair<std::string, ad::BatchNormStats*>> Model::running_stats() {
  std::vector<std::pair<std::string, ad::BatchNormStats*>> out;
  out.emplace_back("stem", &stem_.stats);
  for (std::size_t s = 0; s < encoders_.size(); ++s) out.emplace_back("encoder" + std::to_string(s + 1), &encoders_[s].stats);
  for (std::size_t s = 0; s < decoders_.size(); ++s) out.emplace_back("decoder" + std::to_string(s), &decoders_[s].stats);
  for (auto& block : apm_) {
    for (std::size_t t = 0; t < block.layer_count(); ++t) {
      out.emplace_back("apm" + std::to_string(block.stage()) + ".layer" + std::to_string(t + 1),
                       &block.layers()[t].stats);
    }
  }
  return out;
}

std::vector<NamedTensor> Model::state() const {
  auto& self = const_cast<Model&>(*this);
  std::vector<NamedTensor> out;
  out.push_back({"meta.in_features", ad::Tensor::scalar(static_cast<double>(in_features_))});
  out.push_back({"meta.num_classes", ad::Tensor::scalar(static_cast<double>(num_classes_))});
  const auto names = parameter_names();
  const auto params = self.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    out.push_back({names[i], *params[i]});
  }
  for (const auto& [name, stats] : self.running_stats()) {
    out.push_back({name + ".bn_running_mean", ad::Tensor::vector(stats->mean)});
    out.push_back({name + ".bn_running_var", ad::Tensor::vector(stats->var)});
  }
  return out;
}

Model Model::from_state(const ModelConfig& cfg, std::span<const NamedTensor> state) {
  std::map<std::string, const ad::Tensor*> by_name;
  for (const auto& nt : state) {
    if (!by_name.emplace(nt.name, &nt.value).second) {
      throw std::invalid_argument("model state: duplicate tensor '" + nt.name + "'");
    }
  }
  auto take = [&](const std::string& name) -> const ad::Tensor& {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw std::invalid_argument("model state: missing tensor '" + name + "'");
    }
    const ad::Tensor* t = it->second;
    by_name.erase(it);
    return *t;
  };
  auto meta = [&](const std::string& name) {
    const ad::Tensor& t = take(name);
    if (!t.is_scalar() || t.data[0] < 0.0 || t.data[0] != std::floor(t.data[0])) {
      throw std::invalid_argument("model state: '" + name + "' must be a non-negative integer scalar");
    }
    return static_cast<std::size_t>(t.data[0]);
  };
  const std::size_t in_features = meta("meta.in_features");
  const std::size_t classes = meta("meta.num_classes");
  Model model(cfg, in_features, classes);
  auto assign = [&](const std::string& name, std::vector<double>& dst, const std::vector<std::size_t>& shape) {
    const ad::Tensor& t = take(name);
    if (t.shape != shape) {
      throw std::invalid_argument("model state: tensor '" + name + "' has the wrong shape");
    }
    dst = t.data;
  };
  const auto names = model.parameter_names();
  const auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    assign(names[i], params[i]->data, params[i]->shape);
  }
  for (const auto& [name, stats] : model.running_stats()) {
    const std::vector<std::size_t> shape{stats->mean.size()};
    assign(name + ".bn_running_mean", stats->mean, shape);
    assign(name + ".bn_running_var", stats->var, shape);
  }
  if (!by_name.empty()) {
    throw std::invalid_argument("model state: unexpected tensor '" + by_name.begin()->first + "'");
  }
  return model;
}

std::vector<geom::Label> mine_labels(std::span<const geom::Label> parent, std::span<const std::size_t> indices) {
  std::vector<geom::Label> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= parent.size()) {
      throw std::invalid_argument("mine_labels: index " + std::to_string(i) + " outside the parent level");
    }
    out.push_back(parent[i]);
  }
  return out;
}

ScenePlan plan_scene(const geom::PointCloud& cloud, const ModelConfig& cfg, bool labeled) {
  cfg.validate();
  ScenePlan plan;
  const std::size_t n = cloud.size();
  plan.labels = cloud.labels();
  plan.num_classes = cloud.num_classes();
  plan.labeled = labeled;
  plan.features = cloud.has_features() ? *cloud.features() : Matrix(n, 0);

  geom::Vec3 centroid{0.0, 0.0, 0.0};
  for (const auto& p : cloud.positions()) {
    for (int a = 0; a < 3; ++a) centroid[a] += p[a];
  }
  for (int a = 0; a < 3; ++a) centroid[a] /= static_cast<double>(n);
  plan.positions.reserve(n);
  for (const auto& p : cloud.positions()) {
    plan.positions.push_back({p[0] - centroid[0], p[1] - centroid[1], p[2] - centroid[2]});
  }

  const std::vector<geom::Vec3>* parent_pos = &plan.positions;
  const std::vector<geom::Label>* parent_labels = &plan.labels;
  for (std::size_t s = 1; s <= cfg.stages; ++s) {
    StagePlan st;
    const std::size_t np = parent_pos->size();
    const std::size_t m = (np + cfg.ratio - 1) / cfg.ratio;
    st.indices = geom::farthest_point_sampling(*parent_pos, m, 0);
    st.positions.reserve(m);
    for (std::size_t i : st.indices) st.positions.push_back((*parent_pos)[i]);

    st.group_size = std::min(cfg.group_k, np);
    const auto groups = geom::knn_queries(*parent_pos, st.positions, st.group_size);
    st.group.reserve(m * st.group_size);
    st.relative.reserve(3 * m * st.group_size);
    for (std::size_t c = 0; c < m; ++c) {
      for (std::size_t j : groups[c]) {
        st.group.push_back(j);
        for (int a = 0; a < 3; ++a) st.relative.push_back((*parent_pos)[j][a] - st.positions[c][a]);
      }
    }
    for (const auto& nn : geom::knn_queries(st.positions, *parent_pos, 1)) {
      st.upsample.push_back(nn[0]);
    }

    st.labels = mine_labels(*parent_labels, st.indices);
    if (labeled) {
      const aef::AefConfig acfg = cfg.aef(m);
      st.partitions = aef::partition_all(st.positions, st.labels, acfg.k);
      st.ambiguity = aef::ambiguity_from_partitions(st.partitions, acfg, s);
      st.margins = contrast::margin_map(st.ambiguity, cfg.margin()).values;
    }
    plan.stages.push_back(std::move(st));
    parent_pos = &plan.stages.back().positions;
    parent_labels = &plan.stages.back().labels;
  }
  return plan;
}

LossReport loss_joint(double l_ce, std::vector<double> l_am, std::vector<double> l_reg, double lambda, double omega) {
  if (!(omega >= 0.0)) {
    throw std::invalid_argument("loss_joint: omega must be non-negative");
  }
  LossReport r;
  r.l_ce = l_ce;
  r.l_seg = contrast::loss_seg(l_ce, l_am, lambda);
  double reg = 0.0;
  for (double v : l_reg) reg += v;
  r.l_total = r.l_seg + omega * reg;
  r.l_am = std::move(l_am);
  r.l_reg = std::move(l_reg);
  return r;
}

namespace {

struct Graph {
  ad::Var scores;
  std::vector<ad::Var> encoded;          // levels 0..S
  std::vector<ad::Var> embedded;         // stage embeddings before refinement, stages 1..S
  std::vector<ad::Var> refined;          // after refinement
  std::vector<std::vector<double>> predicted;
};

ad::Var constant_matrix(ad::Tape& tape, std::size_t rows, std::size_t cols, std::vector<double> values) {
  return tape.constant(ad::Tensor::matrix(rows, cols, std::move(values)));
}

ad::Var positions_var(ad::Tape& tape, std::span<const geom::Vec3> positions) {
  std::vector<double> flat;
  flat.reserve(3 * positions.size());
  for (const auto& p : positions) flat.insert(flat.end(), p.begin(), p.end());
  return constant_matrix(tape, positions.size(), 3, std::move(flat));
}

ad::Var unit_forward(ad::Var x, std::span<const ad::Var> p, Model::Unit& unit, ad::Mode mode, bool update_stats,
                     bool activate = true) {
  ad::Var h = ad::affine(x, p[0], p[1]);
  h = ad::batch_norm(h, p[2], p[3], unit.stats, mode, ad::kBatchNormEps, ad::kBatchNormMomentum, update_stats);
  return activate ? ad::relu(h) : h;
}

void check_plan(const Model& model, const ScenePlan& plan) {
  const ModelConfig& cfg = model.config();
  if (plan.stages.size() != cfg.stages) {
    throw std::invalid_argument("scene plan has " + std::to_string(plan.stages.size()) + " stages, model has " +
                                std::to_string(cfg.stages));
  }
  if (plan.features.cols != model.in_features()) {
    throw std::invalid_argument("scene has " + std::to_string(plan.features.cols) + " features per point, model expects " +
                                std::to_string(model.in_features()));
  }
  if (plan.positions.empty()) {
    throw std::invalid_argument("scene is empty");
  }
}

Graph build_graph(ad::Tape& tape, Model& model, const ScenePlan& plan, std::span<const ad::Var> params,
                  ad::Mode mode, bool update_stats) {
  check_plan(model, plan);
  const ModelConfig& cfg = model.config();
  const std::size_t stages = cfg.stages;
  auto unit_params = [&](std::size_t first) { return params.subspan(first, 4); };
  const std::size_t enc0 = 4;
  const std::size_t dec0 = enc0 + 4 * stages;
  const std::size_t head0 = dec0 + 4 * stages;

  Graph g;
  ad::Var p0 = positions_var(tape, plan.positions);
  ad::Var in0 = p0;
  if (plan.features.cols > 0) {
    in0 = ad::concat(p0, constant_matrix(tape, plan.features.rows, plan.features.cols, plan.features.data));
  }
  g.encoded.push_back(unit_forward(in0, unit_params(0), model.stem(), mode, update_stats));

  for (std::size_t s = 1; s <= stages; ++s) {
    const StagePlan& st = plan.stages[s - 1];
    ad::Var rel = constant_matrix(tape, st.group.size(), 3, st.relative);
    ad::Var grouped = ad::gather_rows(g.encoded[s - 1], st.group);
    ad::Var h = unit_forward(ad::concat(rel, grouped), unit_params(enc0 + 4 * (s - 1)), model.encoders()[s - 1], mode,
                             update_stats);
    g.encoded.push_back(ad::group_max(h, st.group_size));
  }

  const refine::RefineConfig rcfg = cfg.refine();
  g.embedded.resize(stages);
  g.refined.resize(stages);
  g.predicted.resize(stages);
  // Stage embeddings below the bottleneck are taken before the ReLU: a row
  // that rectifies to zero has no direction for the cosine similarity.
  ad::Var dec = g.encoded[stages];
  for (std::size_t s = stages; s >= 1; --s) {
    const StagePlan& st = plan.stages[s - 1];
    const ad::Tensor& xs = g.encoded[s].value();
    const Matrix z = apm::concat_inputs(st.positions, Matrix(xs.rows(), xs.cols(), xs.data));
    g.predicted[s - 1] = apm::block_forward(z, model.apm()[s - 1], ad::Mode::Infer, false).values;
    g.embedded[s - 1] = dec;
    if (cfg.use_refine) {
      const refine::MaskSet masks = refine::build_masks(st.positions, g.predicted[s - 1], rcfg);
      dec = ad::mix_rows(dec, refine::refine_plan(masks, rcfg.gamma));
    }
    g.refined[s - 1] = dec;
    ad::Var up = ad::gather_rows(s == stages ? dec : ad::relu(dec), st.upsample);
    dec = unit_forward(ad::concat(g.encoded[s - 1], up), unit_params(dec0 + 4 * (s - 1)), model.decoders()[s - 1], mode,
                       update_stats, s == 1);
  }
  g.scores = ad::affine(dec, params[head0], params[head0 + 1]);
  return g;
}

std::vector<ad::Var> bind_all(ad::Tape& tape, Model& model, bool requires_grad) {
  std::vector<ad::Var> vars;
  for (ad::Tensor* t : model.parameters()) vars.push_back(tape.leaf(*t, requires_grad));
  return vars;
}

Matrix to_matrix(const ad::Tensor& t) { return Matrix(t.rows(), t.cols(), t.data); }

}  // namespace

ForwardResult forward(Model& model, const ScenePlan& plan, ad::Mode mode, bool update_stats) {
  ad::Tape tape;
  const auto params = bind_all(tape, model, false);
  const Graph g = build_graph(tape, model, plan, params, mode, update_stats);
  ForwardResult out;
  out.scores = to_matrix(g.scores.value());
  for (std::size_t s = 1; s <= plan.stages.size(); ++s) {
    const StagePlan& st = plan.stages[s - 1];
    StageState state;
    state.stage = s;
    state.indices = st.indices;
    state.positions = st.positions;
    state.encoded = to_matrix(g.encoded[s].value());
    state.features = to_matrix(g.refined[s - 1].value());
    state.labels = st.labels;
    state.ambiguity = st.ambiguity.values;
    state.margins = st.margins;
    state.predicted = g.predicted[s - 1];
    out.stages.push_back(std::move(state));
  }
  return out;
}

GradientResult compute_gradients(Model& model, const ScenePlan& plan, bool update_stats) {
  if (!plan.labeled) {
    throw std::invalid_argument("compute_gradients: scene plan has no labels");
  }
  const ModelConfig& cfg = model.config();
  for (geom::Label l : plan.labels) {
    if (l >= model.num_classes()) {
      throw std::invalid_argument("compute_gradients: label " + std::to_string(l) + " is not below the model's " +
                                  std::to_string(model.num_classes()) + " classes");
    }
  }
  ad::Tape tape;
  const auto params = bind_all(tape, model, true);
  const Graph g = build_graph(tape, model, plan, params, ad::Mode::Train, update_stats);

  const std::vector<std::size_t> labels(plan.labels.begin(), plan.labels.end());
  ad::Var ce = ad::softmax_cross_entropy(g.scores, labels);

  // APM parameters follow the backbone ones.
  std::size_t apm_first = 4 + 8 * cfg.stages + 2;
  std::vector<double> l_am;
  std::vector<double> l_reg;
  ad::Var am_sum;
  ad::Var reg_sum;
  for (std::size_t s = 1; s <= cfg.stages; ++s) {
    const StagePlan& st = plan.stages[s - 1];
    ad::Var feat = g.embedded[s - 1];
    const contrast::ContrastBatch batch{to_matrix(feat.value()), st.partitions, st.margins};
    const contrast::LossResult am = contrast::loss_am(batch, cfg.margin());
    const ad::Var inputs[] = {feat};
    ad::Var am_var =
        ad::external_scalar(inputs, am.loss, {ad::Tensor(feat.value().shape, am.grad.data)});
    am_sum = s == 1 ? am_var : ad::add(am_sum, am_var);
    l_am.push_back(am.loss);

    apm::ApmBlock& block = model.apm()[s - 1];
    const std::size_t count = 4 * block.layer_count();
    ad::Var xs = cfg.apm_detach ? ad::detach(g.encoded[s]) : g.encoded[s];
    ad::Var z = ad::concat(positions_var(tape, st.positions), xs);
    ad::Var pred = apm::block_forward(z, std::span(params).subspan(apm_first, count), block, ad::Mode::Train,
                                      update_stats);
    apm_first += count;
    ad::Var reg = apm::loss_reg(pred, st.ambiguity.values);
    reg_sum = s == 1 ? reg : ad::add(reg_sum, reg);
    l_reg.push_back(reg.value().item());
  }

  ad::Var total = ad::add(ad::add(ad::scale(ce, cfg.lambda), ad::scale(am_sum, 1.0 - cfg.lambda)),
                          ad::scale(reg_sum, cfg.omega));
  tape.backward(total);

  GradientResult out;
  out.report = loss_joint(ce.value().item(), std::move(l_am), std::move(l_reg), cfg.lambda, cfg.omega);
  out.grads.reserve(params.size());
  for (const ad::Var& p : params) out.grads.push_back(p.grad());
  return out;
}

Prediction predict(Model& model, const geom::PointCloud& cloud) {
  const ScenePlan plan = plan_scene(cloud, model.config(), false);
  const ForwardResult fr = forward(model, plan, ad::Mode::Infer, false);
  Prediction out;
  out.labels.reserve(cloud.size());
  for (std::size_t i = 0; i < fr.scores.rows; ++i) {
    const auto row = fr.scores.row(i);
    out.labels.push_back(static_cast<geom::Label>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  const auto& stage1 = fr.stages.front().predicted;
  out.ambiguity.reserve(cloud.size());
  for (std::size_t j : plan.stages.front().upsample) out.ambiguity.push_back(stage1[j]);
  return out;
}

}  // namespace amc::net
